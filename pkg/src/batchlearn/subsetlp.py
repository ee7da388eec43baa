"""Subset-mass learner.

For every subset ``S`` of the domain, the count distribution of ``S`` across
batches is matched against mixtures of binomials whose success
probabilities lie in a sliding window ``[i*eta, (i+4)*eta]``; the first
window admitting a mixture within total variation ``2*eps`` gives the
estimate ``(i+2)*eta``. A distribution consistent with all subset
estimates is then recovered by a second LP.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import binomial_pmf, check_distribution
from .lp import EQ, GE, LE, LPProblem, lp_feasible, lp_minimize

PROVED_EPS_CAP = 1 / 900
EPS_CAP = 1 / 15
MAX_SUBSET_N = 12


class ConstantsWarning(UserWarning):
    """Parameters are outside the range where the proved constants apply."""


class EstimationError(RuntimeError):
    pass


def subset_members(subset: int, n: int) -> np.ndarray:
    return (subset >> np.arange(n)) & 1


def count_in_subset(batch, subset: int) -> int:
    """Number of samples of one batch (0-based indices) that fall in ``subset``."""
    batch = np.asarray(batch, dtype=np.int64)
    return int(((subset >> batch) & 1).sum())


def subset_counts(batches, subset: int) -> np.ndarray:
    batches = np.asarray(batches, dtype=np.int64)
    return ((subset >> batches) & 1).sum(axis=1)


def empirical_count_distribution(batches, subset: int, k: int) -> np.ndarray:
    """Fraction of batches with exactly ``c`` samples in ``subset``, for ``c = 0..k``."""
    counts = subset_counts(batches, subset)
    if counts.size == 0:
        raise ValueError("need at least one batch")
    return np.bincount(counts, minlength=k + 1)[: k + 1] / counts.size


@dataclass(frozen=True)
class BinomialEstParams:
    eps: float
    eta: float
    k: int

    def __post_init__(self):
        if not 0 < self.eps < EPS_CAP:
            raise ValueError(f"eps must lie in (0, 1/15), got {self.eps}")
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.last_window < 0:
            raise ValueError(f"eta = {self.eta} is too large: no window [i eta, (i+4) eta] fits in [0, 1]")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.eps >= PROVED_EPS_CAP:
            warnings.warn(f"eps = {self.eps} >= 1/900: the proved error constants do not apply",
                          ConstantsWarning, stacklevel=3)

    @property
    def tot(self) -> int:
        return max(1, math.ceil(4 * self.eta * self.k / self.eps - 1e-9))

    @property
    def last_window(self) -> int:
        return math.floor(1 / self.eta + 1e-9) - 4

    def grid(self, i: int) -> np.ndarray:
        """Success probabilities ``i*eta + j*eps/k`` inside ``[0, 1]``."""
        theta = i * self.eta + np.arange(self.tot + 1) * self.eps / self.k
        return np.minimum(theta[theta <= 1 + 1e-12], 1.0)


@dataclass
class SubsetEstimate:
    subset: int
    estimate: float | None
    feasible_i: int | None = None
    lp_solves: int = 0
    lp_solve_ms: float = 0.0

    @property
    def failed(self) -> bool:
        return self.estimate is None


def window_lp(f, i: int, params: BinomialEstParams) -> LPProblem:
    """Mixture weights over window ``i`` whose binomial mixture is ``2*eps``-close to ``f``.

    Variables are the weights ``alpha_j`` followed by slacks ``s_t`` with
    ``s_t >= |sum_j alpha_j B_j(t) - f_t|`` and ``sum_t s_t <= 4*eps``.
    """
    f = np.asarray(f, dtype=float)
    k = params.k
    B = binomial_pmf(k, params.grid(i)).T  # (k+1) x J
    J = B.shape[1]
    eye = np.eye(k + 1)
    prob = LPProblem(J + k + 1)
    prob.add_rows(np.hstack([-B, eye]), GE, -f)
    prob.add_rows(np.hstack([B, eye]), GE, f)
    prob.add(np.concatenate([np.zeros(J), np.ones(k + 1)]), LE, 4 * params.eps)
    prob.add(np.concatenate([np.ones(J), np.zeros(k + 1)]), EQ, 1.0)
    return prob


def _window_excluded(mean_rate: float, grid: np.ndarray, eps: float) -> bool:
    # Counts lie in [0, k], so two count laws within TV 2 eps have mean rates within 2 eps.
    slack = 2 * eps + 1e-6
    return mean_rate < grid[0] - slack or mean_rate > grid[-1] + slack


def binomial_est_counts(f, params: BinomialEstParams, subset: int = 0) -> SubsetEstimate:
    """Run the window sweep on an explicit count distribution ``f`` over ``0..k``."""
    f = np.asarray(f, dtype=float)
    if f.size != params.k + 1:
        raise ValueError(f"count distribution has {f.size} entries, expected {params.k + 1}")
    mean_rate = float(f @ np.arange(params.k + 1)) / params.k
    solves = 0
    start = time.perf_counter()
    for i in range(params.last_window + 1):
        if _window_excluded(mean_rate, params.grid(i), params.eps):
            continue
        solves += 1
        if lp_feasible(window_lp(f, i, params)).feasible:
            ms = 1000 * (time.perf_counter() - start)
            return SubsetEstimate(subset, (i + 2) * params.eta, i, solves, ms)
    return SubsetEstimate(subset, None, None, solves, 1000 * (time.perf_counter() - start))


def binomial_est(batches, subset: int, params: BinomialEstParams) -> SubsetEstimate:
    """Estimate ``p(S)`` from batches for the subset bitmask ``subset``."""
    f = empirical_count_distribution(batches, subset, params.k)
    return binomial_est_counts(f, params, subset)


def required_batches(n: int, k: int, eps: float, delta: float, multiplier: float = 40.0,
                     cap: int = 10**6) -> int:
    """Batch count ``multiplier * (n + k + ln(1/delta)) / eps^2``, capped."""
    return min(cap, math.ceil(multiplier * (n + k + math.log(1 / delta)) / eps ** 2))


def error_radius(eps: float, eta: float, k: int) -> float:
    """Per-subset error bound ``3*eta + 60*eps/sqrt(k)``."""
    return 3 * eta + 60 * eps / math.sqrt(k)


def effective_eta(eps: float, eta: float, k: int) -> float:
    """Window width used by the learner; ``eta = 0`` is replaced by ``eps/sqrt(k)``."""
    return eta if eta > 0 else eps / math.sqrt(k)


@dataclass
class SubsetLPResult:
    q: np.ndarray
    estimates: dict = field(default_factory=dict)
    radius: float = 0.0
    max_deviation: float = 0.0
    degraded: bool = False
    failed_subsets: list = field(default_factory=list)
    conflicting_subsets: list = field(default_factory=list)


def consistent_distribution(estimates: dict, n: int, radius: float):
    """Distribution ``q`` minimizing ``max_S |q(S) - estimate(S)|`` over the given subsets.

    Returns ``(q, max_deviation)``. ``q`` satisfies every constraint
    ``|q(S) - estimate(S)| <= radius`` exactly when ``max_deviation <= radius``,
    so this also decides feasibility of that system. Subset rows are added
    lazily (most violated first), which keeps the LP small for large ``n``.
    """
    masks = np.array(sorted(estimates), dtype=np.int64)
    targets = np.array([estimates[s] for s in masks], dtype=float)
    members = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    active = list(np.flatnonzero(members.sum(axis=1) == 1))  # singletons first
    if not active:
        active = list(range(min(len(masks), 2 * n)))
    while True:
        prob = LPProblem(n + 1, objective=np.concatenate([np.zeros(n), [1.0]]))
        rows = members[active]
        col_t = np.ones((len(active), 1))
        if len(active):
            prob.add_rows(np.hstack([rows, -col_t]), LE, targets[active])
            prob.add_rows(np.hstack([rows, col_t]), GE, targets[active])
        prob.add(np.concatenate([np.ones(n), [0.0]]), EQ, 1.0)
        sol = lp_minimize(prob)
        q = np.clip(sol.x[:n], 0.0, None)
        q = q / q.sum()
        t = sol.x[n]
        dev = np.abs(members @ q - targets)
        worst = np.argsort(-dev, kind="stable")
        fresh = [j for j in worst[: 4 * n] if dev[j] > t + 1e-9 and j not in set(active)]
        if not fresh:
            return q, float(dev.max()) if dev.size else 0.0
        active.extend(fresh)


def learn_subset_lp(batches, n: int, k: int, eps: float, eta: float, delta: float = 0.1,
                    max_n: int = MAX_SUBSET_N) -> SubsetLPResult:
    """Estimate every subset mass and return a distribution consistent with them.

    ``eta = 0`` is handled by running with ``eta = eps / sqrt(k)``. If some
    subset estimate fails or the consistency system is infeasible, the
    closest (minimax) distribution is returned with ``degraded=True``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if n > max_n:
        raise ValueError(f"n = {n} exceeds the subset-enumeration cap {max_n}")
    batches = np.asarray(batches, dtype=np.int64)
    if batches.ndim != 2 or batches.shape[0] == 0 or batches.shape[1] != k:
        raise ValueError(f"batches must be a non-empty (m, {k}) array")
    eta_run = effective_eta(eps, eta, k)
    radius = error_radius(eps, eta_run, k)
    if n == 1:
        return SubsetLPResult(np.ones(1), {}, radius)
    params = BinomialEstParams(eps, eta_run, k)
    full = (1 << n) - 1
    estimates = {0: SubsetEstimate(0, 0.0), full: SubsetEstimate(full, 1.0)}
    for s in range(1, full):
        estimates[s] = binomial_est(batches, s, params)
    usable = {s: e.estimate for s, e in estimates.items() if not e.failed}
    failed = [s for s, e in estimates.items() if e.failed]
    q, dev = consistent_distribution(usable, n, radius)
    q = check_distribution(q)
    conflicting = [s for s, v in usable.items()
                   if abs(float(subset_members(s, n) @ q) - v) > radius + 1e-9]
    degraded = bool(failed) or dev > radius + 1e-9
    return SubsetLPResult(q, estimates, radius, dev, degraded, failed, conflicting)
