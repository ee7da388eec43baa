"""Exact numeric checks of the inequalities the error bounds rest on.

Each check returns a :class:`LemmaCheckReport` whose ``worst_margin`` is the
smallest value of (lhs - rhs) over its grid, oriented so that a nonnegative
margin means the inequality held everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import binomial_pmf, tensor_power, tv_distance, tv_distance_tensor

MARGIN_TOL = 1e-9


@dataclass
class LemmaCheckReport:
    lemma_id: str
    grid_size: int
    worst_margin: float
    worst_point: tuple

    @property
    def passed(self) -> bool:
        return self.worst_margin >= -MARGIN_TOL

    @classmethod
    def from_margins(cls, lemma_id, margins, points):
        margins = np.asarray(margins, dtype=float)
        j = int(np.argmin(margins))
        return cls(lemma_id, int(margins.size), float(margins[j]), tuple(points[j]))

    @classmethod
    def merge(cls, lemma_id, reports):
        reports = list(reports)
        worst = min(reports, key=lambda r: r.worst_margin)
        return cls(lemma_id, sum(r.grid_size for r in reports), worst.worst_margin, worst.worst_point)


def tv_binomial(k: int, theta1: float, theta2: float) -> float:
    """Exact total variation between Binomial(k, theta1) and Binomial(k, theta2)."""
    return tv_distance(binomial_pmf(k, theta1), binomial_pmf(k, theta2))


def kl_bernoulli(eps: float) -> float:
    """KL divergence between Bernoulli means (1-eps)/2 and (1+eps)/2."""
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    return eps * math.log((1 + eps) / (1 - eps))


def _bernoulli_pair_tv(k: int, eps: float) -> tuple[float, float]:
    lo, hi = (1 - eps) / 2, (1 + eps) / 2
    return abs(hi - lo), tv_binomial(k, lo, hi)


def check_tensorization_upper(k: int, eps: float) -> LemmaCheckReport:
    """``TV(P^k, Q^k) <= eps*sqrt(2k)`` for Bernoulli means ``(1 -+ eps)/2``.

    By sufficiency of the count, the product-measure distance equals the
    binomial one. The margin also folds in the single-sample distance
    ``TV(P, Q) = eps`` and the intermediate Pinsker step.
    """
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    single, multi = _bernoulli_pair_tv(k, eps)
    pinsker = math.sqrt(k * kl_bernoulli(eps) / 2)
    margin = min(eps * math.sqrt(2 * k) - multi, pinsker - multi, eps * math.sqrt(2 * k) - pinsker)
    if abs(single - eps) > 1e-12:
        margin = min(margin, -abs(single - eps))
    return LemmaCheckReport("tensor-upper", 1, margin, (k, eps))


def check_tensorization_lower(k: int, eps: float) -> LemmaCheckReport:
    """``TV(P^k, Q^k) >= eps*sqrt(k)/15`` for ``eps < 1/(15 sqrt(k))``."""
    if not 0 < eps < 1 / (15 * math.sqrt(k)):
        raise ValueError(f"eps must lie in (0, 1/(15 sqrt(k))), got {eps}")
    _, multi = _bernoulli_pair_tv(k, eps)
    return LemmaCheckReport("tensor-lower", 1, multi - eps * math.sqrt(k) / 15, (k, eps))


def check_tensorization_lower_multi(n: int, k: int, fraction: float = 0.9, trials: int = 20,
                                    seed: int = 0) -> LemmaCheckReport:
    """Lower bound ``eps*sqrt(k)/15`` for random pairs on ``n > 2`` symbols.

    Uses the full ``n^k`` tensors, so it is limited to small ``k``. Each
    pair is built by moving mass ``eps = fraction/(15 sqrt(k))`` from a
    random set of symbols to the rest.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    eps = fraction / (15 * math.sqrt(k))
    margins, points = [], []
    for trial in range(trials):
        P = rng.dirichlet(np.ones(n))
        donors = rng.permutation(n)[: int(rng.integers(1, n))]
        take = np.zeros(n)
        take[donors] = P[donors] / P[donors].sum()
        give = np.where(take > 0, 0.0, rng.dirichlet(np.ones(n)))
        give /= give.sum()
        scale = min(eps, P[donors].sum())
        Q = P - scale * take + scale * give
        d = tv_distance_tensor(tensor_power(P, k), tensor_power(Q, k))
        margins.append(d - scale * math.sqrt(k) / 15)
        points.append((n, k, trial, float(scale)))
    return LemmaCheckReport.from_margins("tensor-lower-multi", margins, points)


def separation_witness(k: int, p_hi: float, eps: float) -> float:
    """``f(p) - f(p + eps)`` where ``f(x) = P[Binomial(k, x) <= floor(p (k-1))]``."""
    t = math.floor(p_hi * (k - 1))
    f = binomial_pmf(k, np.array([p_hi, min(p_hi + eps, 1.0)]))[:, : t + 1].sum(axis=1)
    return float(f[0] - f[1])


def check_mixture_separation(k: int, p_hi: float, q_lo: float, eps: float,
                             trials: int = 20, seed: int = 0) -> LemmaCheckReport:
    """Binomial mixtures on ``[0, p_hi]`` vs ``[q_lo, 1]`` are ``eps*sqrt(k)/15`` apart."""
    if q_lo - p_hi < eps - 1e-15:
        raise ValueError("need q_lo - p_hi >= eps")
    if not 0 < eps < 1 / (15 * math.sqrt(k)):
        raise ValueError(f"eps must lie in (0, 1/(15 sqrt(k))), got {eps}")
    bound = eps * math.sqrt(k) / 15
    margins, points = [], []
    if k < 10:
        margins.append(tv_binomial(k, p_hi, q_lo) - bound)
        points.append(("pair", k, p_hi, q_lo))
    else:
        # The witness argument takes p <= 1/2; otherwise reflect both ends.
        lo = p_hi if p_hi <= 0.5 else 1 - q_lo
        margins.append(separation_witness(k, lo, eps) - bound)
        points.append(("witness", k, lo, eps))
    rng = np.random.Generator(np.random.PCG64(seed))
    left = np.linspace(0.0, p_hi, 5)
    right = np.linspace(q_lo, 1.0, 5)
    P = binomial_pmf(k, left)
    Q = binomial_pmf(k, right)
    for trial in range(trials):
        wp = rng.dirichlet(np.ones(5))
        wq = rng.dirichlet(np.ones(5))
        margins.append(tv_distance(wp @ P, wq @ Q) - bound)
        points.append(("mixture", k, p_hi, q_lo, trial))
    return LemmaCheckReport.from_margins("mixture-separation", margins, points)


# -- grids ------------------------------------------------------------------

def upper_grid(ks=range(1, 201), epss=None) -> LemmaCheckReport:
    epss = np.round(np.arange(0.01, 0.4501, 0.02), 10) if epss is None else epss
    return LemmaCheckReport.merge("tensor-upper", (check_tensorization_upper(k, float(e)) for k in ks for e in epss))


def lower_grid(ks=range(1, 201), fraction: float = 0.9) -> LemmaCheckReport:
    return LemmaCheckReport.merge(
        "tensor-lower", (check_tensorization_lower(k, fraction / (15 * math.sqrt(k))) for k in ks))


def lower_multi_grid(ns=(3, 4), ks=range(1, 6)) -> LemmaCheckReport:
    return LemmaCheckReport.merge("tensor-lower-multi", (check_tensorization_lower_multi(n, k, seed=10 * n + k)
                                           for n in ns for k in ks))


def separation_grid(ks=(1, 5, 9, 10, 25, 50, 100, 200), p_his=(0.05, 0.3, 0.5, 0.7),
                    fraction: float = 0.9) -> LemmaCheckReport:
    reports = []
    for k in ks:
        eps = fraction / (15 * math.sqrt(k))
        for p in p_his:
            if p + eps <= 1:
                reports.append(check_mixture_separation(k, p, p + eps, eps))
    return LemmaCheckReport.merge("mixture-separation", reports)


def check_power_floor(step: float = 0.01) -> LemmaCheckReport:
    """``(1 - eps)^a >= 1 - 2 a eps`` on ``[0, 1/2] x [0, 1]``."""
    eps = np.linspace(0, 0.5, int(round(0.5 / step)) + 1)
    alpha = np.linspace(0, 1, int(round(1 / step)) + 1)
    E, Al = np.meshgrid(eps, alpha, indexing="ij")
    margin = (1 - E) ** Al - (1 - 2 * Al * E)
    j = np.unravel_index(np.argmin(margin), margin.shape)
    return LemmaCheckReport("power-floor", margin.size, float(margin[j]), (float(E[j]), float(Al[j])))


def check_limit_monotone(points: int = 1000, span: float = 100.0, avals=(0.5, 1.0, 2.0)) -> LemmaCheckReport:
    """``(1 - a/x)^x`` increases on ``(a, inf)``, sampled on ``(a, a + span]``."""
    margins, where = [], []
    for a in avals:
        x = a + np.linspace(span / points, span, points)
        f = np.exp(x * np.log1p(-a / x))
        d = np.diff(f)
        j = int(np.argmin(d))
        margins.append(d[j])
        where.append((a, float(x[j])))
    j = int(np.argmin(margins))
    return LemmaCheckReport("limit-monotone", len(avals) * (points - 1), float(margins[j]), where[j])


def check_product_floor(n_max: int = 50, m_max: int = 100, alpha_points: int = 50) -> LemmaCheckReport:
    """``(1 + a/n)^n (1 - a/m)^m >= 1/7`` for ``m >= max(n, 2)``, ``a <= 1.1 sqrt(n)``."""
    worst = math.inf
    where = None
    size = 0
    for n in range(1, n_max + 1):
        alpha = np.linspace(0, 1.1 * math.sqrt(n), alpha_points)
        m = np.arange(max(n, 2), m_max + 1)
        A, M = np.meshgrid(alpha, m, indexing="ij")
        val = np.exp(n * np.log1p(A / n) + M * np.log1p(-A / M)) - 1 / 7
        size += val.size
        j = np.unravel_index(np.argmin(val), val.shape)
        if val[j] < worst:
            worst = float(val[j])
            where = (n, int(M[j]), float(A[j]))
    return LemmaCheckReport("product-floor", size, worst, where)


def check_binomial_peak(k_max: int = 300) -> LemmaCheckReport:
    """``C(k, t) (t/k)^t ((k-t)/k)^(k-t) >= 1/(3 sqrt(t))`` for ``1 <= t < k <= k_max``."""
    margins, points = [], []
    for k in range(2, k_max + 1):
        t = np.arange(1, k)
        log_choose = np.array([math.lgamma(k + 1) - math.lgamma(j + 1) - math.lgamma(k - j + 1) for j in t])
        lhs = np.exp(log_choose + t * np.log(t / k) + (k - t) * np.log((k - t) / k))
        margin = lhs - 1 / (3 * np.sqrt(t))
        j = int(np.argmin(margin))
        margins.append(margin[j])
        points.append((k, int(t[j])))
    rep = LemmaCheckReport.from_margins("binomial-peak", margins, points)
    rep.grid_size = (k_max - 1) * k_max // 2
    return rep


def check_elementary_inequalities(dense: bool = False) -> list[LemmaCheckReport]:
    if dense:
        return [check_power_floor(0.001), check_limit_monotone(10000), check_product_floor(alpha_points=200), check_binomial_peak(1000)]
    return [check_power_floor(), check_limit_monotone(), check_product_floor(), check_binomial_peak()]


LEMMA_CHECKS = {
    "power-floor": lambda dense: check_power_floor(0.001 if dense else 0.01),
    "limit-monotone": lambda dense: check_limit_monotone(10000 if dense else 1000),
    "product-floor": lambda dense: check_product_floor(alpha_points=200 if dense else 50),
    "binomial-peak": lambda dense: check_binomial_peak(1000 if dense else 300),
    "tensor-upper": lambda dense: upper_grid(range(1, 501 if dense else 201)),
    "tensor-lower": lambda dense: lower_grid(range(1, 501 if dense else 201)),
    "tensor-lower-multi": lambda dense: lower_multi_grid(),
    "mixture-separation": lambda dense: separation_grid(),
}


def run_lemma_checks(lemma: str | None = None, dense: bool = False) -> list[LemmaCheckReport]:
    """Run one named check (``"power-floor"`` ... ``"mixture-separation"``, ``"tensor-lower-multi"`` for many symbols) or all of them."""
    if lemma is not None:
        if lemma not in LEMMA_CHECKS:
            raise KeyError(f"unknown lemma id {lemma!r}; choose from {sorted(LEMMA_CHECKS)}")
        return [LEMMA_CHECKS[lemma](dense)]
    return [fn(dense) for fn in LEMMA_CHECKS.values()]
