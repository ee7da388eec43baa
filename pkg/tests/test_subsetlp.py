import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from batchlearn.adversary import PerBatchRandom, PointMass, make_rng
from batchlearn.core import binomial_pmf, subset_mass, tv_distance
from batchlearn.harness import simulate, trial_seeds
from batchlearn.lp import lp_feasible
from batchlearn.subsetlp import (
    BinomialEstParams,
    ConstantsWarning,
    binomial_est_counts,
    consistent_distribution,
    count_in_subset,
    effective_eta,
    empirical_count_distribution,
    error_radius,
    learn_subset_lp,
    required_batches,
    subset_counts,
    subset_members,
    window_lp,
)

from conftest import distributions
from oracles import binomial_est_scipy, window_feasible_scipy


def test_count_in_subset():
    batch = np.array([0, 1, 0])
    assert count_in_subset(batch, 0b11) == 3
    assert count_in_subset(batch, 0) == 0
    assert count_in_subset(batch, 0b01) == 2
    np.testing.assert_array_equal(subset_members(0b101, 3), [1, 0, 1])


def test_empirical_count_distribution():
    same = np.tile([0, 1, 1, 0], (5, 1))
    np.testing.assert_array_equal(empirical_count_distribution(same, 0b01, 4), [0, 0, 1, 0, 0])
    split = np.array([[1, 1, 1], [0, 0, 0]])
    np.testing.assert_array_equal(empirical_count_distribution(split, 0b01, 3), [0.5, 0, 0, 0.5])


def test_count_distribution_is_binomial_without_adversary():
    rng = make_rng(0)
    p = np.array([0.3, 0.5, 0.2])
    batches = rng.choice(3, size=(100_000, 6), p=p)
    f = empirical_count_distribution(batches, 0b101, 6)
    assert tv_distance(f, binomial_pmf(6, 0.5)) < 0.01


@pytest.mark.parametrize("theta,expected", [(0.05, 0.2), (0.2, 0.2), (0.37, 0.2), (0.5, 0.3),
                                            (0.8, 0.6), (0.95, 0.8)])
def test_binomial_est_exact_input(theta, expected):
    params = BinomialEstParams(0.01, 0.1, 20)
    est = binomial_est_counts(binomial_pmf(20, theta), params)
    assert est.estimate == pytest.approx(expected, abs=1e-12)
    assert abs(est.estimate - theta) <= error_radius(0.01, 0.1, 20)
    assert est.estimate == pytest.approx(binomial_est_scipy(binomial_pmf(20, theta), 0.1, 0.01, 20))


def test_binomial_est_first_window_for_037():
    est = binomial_est_counts(binomial_pmf(20, 0.37), BinomialEstParams(0.01, 0.1, 20))
    assert est.feasible_i == 0
    assert BinomialEstParams(0.01, 0.1, 20).grid(0)[740] == pytest.approx(0.37)


def test_binomial_est_uniform_fails():
    params = BinomialEstParams(0.001, 0.1, 20)
    est = binomial_est_counts(np.full(21, 1 / 21), params)
    assert est.failed and est.estimate is None
    assert binomial_est_scipy(np.full(21, 1 / 21), 0.1, 0.001, 20) is None


@pytest.mark.parametrize("seed", range(12))
def test_window_lp_matches_scipy(seed):
    rng = make_rng(seed)
    k = int(rng.integers(3, 15))
    eps = float(rng.uniform(0.005, 0.06))
    eta = float(rng.uniform(0.05, 0.2))
    params = BinomialEstParams(eps, eta, k)
    # Noisy binomial mixtures, sometimes far from any window.
    thetas = rng.uniform(0, 1, size=3)
    f = rng.dirichlet(np.ones(3)) @ binomial_pmf(k, thetas)
    f = 0.9 * f + 0.1 * rng.dirichlet(np.ones(k + 1))
    for i in range(params.last_window + 1):
        ours = lp_feasible(window_lp(f, i, params)).feasible
        assert ours == window_feasible_scipy(f, i, eta, eps, k), (i, eps, eta, k)


@given(st.floats(0.0, 1.0), st.integers(2, 30))
def test_exact_binomial_within_radius(theta, k):
    eps, eta = 0.02, 0.1
    est = binomial_est_counts(binomial_pmf(k, theta), BinomialEstParams(eps, eta, k))
    assert not est.failed
    assert abs(est.estimate - theta) <= error_radius(eps, eta, k)


def test_params_validation():
    with pytest.raises(ValueError):
        BinomialEstParams(0.0, 0.1, 10)
    with pytest.raises(ValueError):
        BinomialEstParams(0.07, 0.1, 10)
    with pytest.raises(ValueError):
        BinomialEstParams(0.01, 0.3, 10)
    with pytest.warns(ConstantsWarning):
        BinomialEstParams(0.01, 0.1, 10)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConstantsWarning)
        BinomialEstParams(0.001, 0.1, 10)


def test_grid_drops_points_above_one():
    g = BinomialEstParams(0.05, 0.2, 4).grid(1)
    assert g.max() <= 1.0 and g[0] == pytest.approx(0.2)


def test_sizing_helpers():
    assert required_batches(2, 10, 0.1, 0.1) == math.ceil(40 * (12 + math.log(10)) / 0.01)
    assert required_batches(2, 10, 0.001, 0.1) == 10**6
    assert effective_eta(0.04, 0.0, 16) == pytest.approx(0.01)
    assert effective_eta(0.04, 0.1, 16) == 0.1


@given(distributions(2, 6))
def test_consistency_with_exact_estimates_recovers_p(p):
    n = p.size
    est = {s: subset_mass(p, s) for s in range(1 << n)}
    q, dev = consistent_distribution(est, n, 0.01)
    assert dev <= 1e-7
    assert tv_distance(p, q) <= 1e-6


def test_consistency_minimax_deviation():
    # Contradictory singletons: both claim 0.7, so the best q has deviation 0.2.
    q, dev = consistent_distribution({1: 0.7, 2: 0.7}, 2, 0.1)
    np.testing.assert_allclose(q, [0.5, 0.5], atol=1e-9)
    assert dev == pytest.approx(0.2, abs=1e-9)


def test_learn_single_element():
    res = learn_subset_lp(np.zeros((3, 4), dtype=np.int64), 1, 4, 0.01, 0.1)
    np.testing.assert_array_equal(res.q, [1.0])


def test_learn_rejects_bad_input():
    with pytest.raises(ValueError):
        learn_subset_lp(np.zeros((0, 4), dtype=np.int64), 2, 4, 0.01, 0.1)
    with pytest.raises(ValueError):
        learn_subset_lp(np.zeros((3, 4), dtype=np.int64), 13, 4, 0.01, 0.1)
    with pytest.raises(ValueError):
        learn_subset_lp(np.zeros((3, 4), dtype=np.int64), 2, 4, 0.01, 0.1, delta=1.5)


def test_learn_degraded_on_garbage():
    # Half the batches all-ones, half all-twos: no binomial window fits.
    batches = np.repeat([[0] * 10, [1] * 10], 50, axis=0)
    res = learn_subset_lp(batches, 2, 10, 0.001, 0.1)
    assert res.degraded
    assert res.failed_subsets
    assert res.q.sum() == pytest.approx(1.0)


def test_two_element_monte_carlo():
    p = np.array([0.3, 0.7])
    eps, eta, k, m = 0.01, 0.05, 25, 20_000
    bound = 6 * eta + 120 * eps / math.sqrt(k)
    assert bound == pytest.approx(0.54)
    seeds = trial_seeds(2024, 100)
    ok = 0
    for s in seeds:
        data, truth = simulate(p, 2, k, m, eps, eta, PointMass(0), PerBatchRandom(), s)
        res = learn_subset_lp(data.batches, 2, k, eps, eta)
        ok += tv_distance(truth, res.q) <= bound
    assert ok >= 95


def test_complement_counts_reverse():
    rng = make_rng(4)
    batches = rng.integers(0, 4, size=(300, 7))
    f = empirical_count_distribution(batches, 0b0101, 7)
    g = empirical_count_distribution(batches, 0b1010, 7)
    np.testing.assert_array_equal(f, g[::-1])
    assert np.all(subset_counts(batches, 0b0101) + subset_counts(batches, 0b1010) == 7)


def test_estimate_invariant_to_permutations():
    rng = make_rng(6)
    p = np.array([0.35, 0.65])
    data, _ = simulate(p, 2, 12, 4000, 0.02, 0.05, PointMass(1), PerBatchRandom(), 3)
    params = BinomialEstParams(0.02, 0.05, 12)
    base = binomial_est_counts(empirical_count_distribution(data.batches, 1, 12), params).estimate
    shuffled = data.batches[rng.permutation(len(data.batches))]
    shuffled = np.take_along_axis(shuffled, rng.permuted(np.tile(np.arange(12), (len(shuffled), 1)), axis=1), axis=1)
    again = binomial_est_counts(empirical_count_distribution(shuffled, 1, 12), params).estimate
    assert base == again


@pytest.mark.parametrize("seed", range(6))
def test_window_feasibility_carries_forward(seed):
    # A mixture supported inside [(i+1) eta, (i+3) eta] fits windows i and i+1.
    rng = make_rng(seed)
    eta, eps, k = 0.1, 0.02, 15
    params = BinomialEstParams(eps, eta, k)
    i = int(rng.integers(0, params.last_window))
    thetas = rng.uniform((i + 1) * eta, (i + 3) * eta, size=3)
    f = rng.dirichlet(np.ones(3)) @ binomial_pmf(k, thetas)
    assert lp_feasible(window_lp(f, i, params)).feasible
    assert lp_feasible(window_lp(f, i + 1, params)).feasible
