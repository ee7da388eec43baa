"""Good-batch sampling, adversarial batch generation, and the two-point
lower-bound instance whose contaminated mixtures coincide exactly.

All randomness goes through :func:`make_rng`, a PCG64 ``numpy`` generator,
which is bit-reproducible across platforms for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    PROB_TOL,
    check_distribution,
    check_tensor,
    subset_mass,
    tensor_power,
    tv_distance,
)


def make_rng(seed) -> np.random.Generator:
    """Seeded PCG64 generator; passes an existing Generator through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def num_bad_batches(m: int, eps: float) -> int:
    """``round(m * eps)`` with exact halves rounded down."""
    return max(0, math.ceil(m * eps - 0.5 - 1e-9))


# -- good batches -----------------------------------------------------------

@dataclass(frozen=True)
class NoPerturbation:
    pass


@dataclass(frozen=True)
class FixedShift:
    """Every good batch uses ``p`` with ``eta`` mass moved donor -> receiver (0-based)."""
    donor: int
    receiver: int


@dataclass(frozen=True)
class PerBatchRandom:
    """Each batch moves ``eta`` mass between a random donor/receiver pair."""


@dataclass
class GoodBatchSpec:
    target: np.ndarray
    eta: float = 0.0
    perturbation: object = field(default_factory=NoPerturbation)

    def __post_init__(self):
        self.target = check_distribution(self.target)
        if not 0 <= self.eta < 1:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")


def shifted(p, eta: float, donor: int, receiver: int) -> np.ndarray:
    """``p`` with ``eta`` mass moved from ``donor`` to ``receiver``."""
    p = np.array(p, dtype=float)
    if donor == receiver:
        raise ValueError("donor and receiver must differ")
    if p[donor] < eta - 1e-12:
        raise ValueError(f"donor {donor + 1} has mass {p[donor]!r} < eta = {eta!r}")
    p[donor] = max(p[donor] - eta, 0.0)
    p[receiver] += eta
    return p


def _draw(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    # Inverse-CDF draw; cdf has shape (n,) or (rows, n), u has shape (rows, k).
    cdf = cdf.copy()
    cdf[..., -1] = np.inf
    if cdf.ndim == 1:
        return np.searchsorted(cdf, u, side="right")
    return (u[:, :, None] >= cdf[:, None, :]).sum(axis=2)


def sample_iid_batches(p, k: int, count: int, rng) -> np.ndarray:
    """``count`` batches of ``k`` i.i.d. draws from ``p`` (0-based indices)."""
    rng = make_rng(rng)
    p = np.asarray(p, dtype=float)
    u = rng.random((count, k))
    return _draw(np.cumsum(p), u).astype(np.int64)


def sample_tensor_batches(N, count: int, rng) -> np.ndarray:
    """``count`` batches drawn as whole tuples from an ``n^k`` probability tensor."""
    rng = make_rng(rng)
    N = np.asarray(N, dtype=float)
    n, k = N.shape[0], N.ndim
    flat = np.clip(N.reshape(-1), 0.0, None)
    cdf = np.cumsum(flat) / flat.sum()
    idx = _draw(cdf, rng.random((count, 1)))[:, 0]
    return np.stack(np.unravel_index(idx, (n,) * k), axis=1).astype(np.int64)


def sample_good_batches(spec: GoodBatchSpec, k: int, count: int, seed) -> np.ndarray:
    """Good batches: each is ``k`` i.i.d. draws from some ``p~`` within ``eta`` of the target."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = make_rng(seed)
    p, eta = spec.target, spec.eta
    n = p.size
    if count == 0:
        return np.zeros((0, k), dtype=np.int64)
    pert = spec.perturbation
    if eta == 0 or isinstance(pert, NoPerturbation):
        return sample_iid_batches(p, k, count, rng)
    if isinstance(pert, FixedShift):
        return sample_iid_batches(shifted(p, eta, pert.donor, pert.receiver), k, count, rng)
    if isinstance(pert, PerBatchRandom):
        donors = np.flatnonzero(p >= eta - 1e-12)
        if donors.size == 0 or n < 2:
            raise ValueError(f"no element has the eta = {eta} mass needed for a shift")
        d = donors[rng.integers(0, donors.size, size=count)]
        r = rng.integers(0, n - 1, size=count)
        r = r + (r >= d)  # uniform over the other n - 1 elements
        per_batch = np.tile(p, (count, 1))
        rows = np.arange(count)
        per_batch[rows, d] = np.maximum(per_batch[rows, d] - eta, 0.0)
        per_batch[rows, r] += eta
        u = rng.random((count, k))
        return _draw(np.cumsum(per_batch, axis=1), u).astype(np.int64)
    raise TypeError(f"unknown perturbation {pert!r}")


# -- lower-bound instance ---------------------------------------------------

def bernoulli(mean: float) -> np.ndarray:
    """Two-point distribution ``(1 - mean, mean)``; element 2 plays the role of outcome 1."""
    return np.array([1.0 - mean, mean])


@dataclass
class LowerBoundInstance:
    """Two contaminated models on ``[2]`` that produce the same batch distribution."""

    eps: float
    eta: float
    k: int
    p: np.ndarray
    q: np.ndarray
    p_prime: np.ndarray
    q_prime: np.ndarray
    N_p: np.ndarray
    N_q: np.ndarray
    alpha: float

    def mixture(self, side: str = "p") -> np.ndarray:
        if side == "p":
            return (1 - self.eps) * tensor_power(self.p_prime, self.k) + self.eps * self.N_p
        return (1 - self.eps) * tensor_power(self.q_prime, self.k) + self.eps * self.N_q

    def check(self, tol: float = 1e-12) -> dict:
        """Deviation of each defining property (all should be within ``tol``)."""
        gap = 2 * self.eta + self.eps / math.sqrt(2 * self.k)
        report = {
            "separation": abs(tv_distance(self.p, self.q) - gap),
            "closeness_p": abs(tv_distance(self.p, self.p_prime) - self.eta),
            "closeness_q": abs(tv_distance(self.q, self.q_prime) - self.eta),
            "mixture": float(np.abs(self.mixture("p") - self.mixture("q")).max()),
            "min_entry": float(min(self.N_p.min(), self.N_q.min())),
            "sum_p": abs(float(self.N_p.sum()) - 1.0),
            "sum_q": abs(float(self.N_q.sum()) - 1.0),
        }
        report["ok"] = (max(report["separation"], report["closeness_p"], report["closeness_q"],
                            report["mixture"]) <= tol
                        and report["min_entry"] >= -tol
                        and max(report["sum_p"], report["sum_q"]) <= PROB_TOL)
        return report


def lower_bound_instance(eps: float, eta: float, k: int) -> LowerBoundInstance:
    """Build the indistinguishable pair for ``eps in (0, 1/2)``, ``eta in [0, 1/4)``."""
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    if not 0 <= eta < 0.25:
        raise ValueError(f"eta must lie in [0, 1/4), got {eta}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    half_gap = eps / math.sqrt(2 * k) / 2
    p_prime = bernoulli(0.5 - half_gap)
    q_prime = bernoulli(0.5 + half_gap)
    p = bernoulli(0.5 - half_gap - eta)
    q = bernoulli(0.5 + half_gap + eta)
    Pk = tensor_power(p_prime, k)
    Qk = tensor_power(q_prime, k)
    upper = np.maximum(Pk, Qk)
    alpha = float(upper.sum())
    common = upper / alpha
    N_p = (common - (1 - eps) * Pk) / eps
    N_q = (common - (1 - eps) * Qk) / eps
    return LowerBoundInstance(eps, eta, k, p, q, p_prime, q_prime, N_p, N_q, alpha)


# -- adversaries ------------------------------------------------------------

@dataclass(frozen=True)
class PointMass:
    """Every bad batch is ``(t, t, ..., t)`` (0-based ``target``)."""
    target: int = 0


@dataclass(frozen=True)
class MassShift:
    """Bad batches are i.i.d. draws from ``toward``."""
    toward: tuple


@dataclass(frozen=True)
class ReplayWorst:
    """Copies the good batch whose count on ``subset`` strays furthest from ``k p(S)``."""
    subset: int = 1


@dataclass(frozen=True)
class IndistinguishableAdversary:
    """Draws from the lower-bound instance's bad tensor for the chosen side."""
    eta: float = 0.0
    side: str = "p"


def generate_adversarial_batches(strategy, good_batches, p, eps: float, k: int, count: int, seed) -> np.ndarray:
    """Bad batches, chosen after seeing the realized ``good_batches``."""
    rng = make_rng(seed)
    p = np.asarray(p, dtype=float)
    n = p.size
    if count < 0:
        raise ValueError("count must be nonnegative")
    if isinstance(strategy, PointMass):
        if not 0 <= strategy.target < n:
            raise ValueError(f"point-mass target {strategy.target + 1} outside [1, {n}]")
        return np.full((count, k), strategy.target, dtype=np.int64)
    if isinstance(strategy, MassShift):
        q = check_distribution(strategy.toward)
        if q.size != n:
            raise ValueError("mass-shift distribution has the wrong support size")
        return sample_iid_batches(q, k, count, rng)
    if isinstance(strategy, ReplayWorst):
        good = np.asarray(good_batches, dtype=np.int64)
        if good.shape[0] == 0:
            raise ValueError("replay_worst needs at least one good batch")
        members = (strategy.subset >> np.arange(n)) & 1
        counts = members[good].sum(axis=1)
        worst = int(np.argmax(np.abs(counts - k * subset_mass(p, strategy.subset))))
        return np.repeat(good[worst:worst + 1], count, axis=0)
    if isinstance(strategy, IndistinguishableAdversary):
        if n != 2:
            raise ValueError("the indistinguishable adversary is only defined for n = 2")
        inst = lower_bound_instance(eps, strategy.eta, k)
        N = inst.N_p if strategy.side == "p" else inst.N_q
        check_tensor(np.clip(N, 0.0, None))
        return sample_tensor_batches(N, count, rng)
    raise TypeError(f"unknown adversary strategy {strategy!r}")


def parse_adversary(text: str, eta: float = 0.0):
    """Parse ``point_mass:t`` (1-based), ``mass_shift:q1,q2,...``, ``replay_worst[:mask]``,
    ``indistinguishable[:p|q]`` (also spelled ``lemma1`` or ``lemma1_optimal``) or ``none``.

    ``mass_shift`` also accepts the path of a file holding one probability
    per line.
    """
    name, _, arg = text.partition(":")
    if name == "point_mass":
        return PointMass(int(arg) - 1 if arg else 0)
    if name == "mass_shift":
        try:
            values = [float(v) for v in arg.split(",")]
        except ValueError:
            try:
                values = [float(v) for v in Path(arg).read_text().split()]
            except OSError as exc:
                raise ValueError(f"mass_shift target {arg!r} is neither a vector nor a readable file") from exc
        return MassShift(tuple(values))
    if name == "replay_worst":
        return ReplayWorst(int(arg) if arg else 1)
    if name in ("indistinguishable", "lemma1", "lemma1_optimal"):
        return IndistinguishableAdversary(eta, arg or "p")
    if name in ("none", ""):
        return None
    raise ValueError(f"unknown adversary {text!r}")


# -- datasets ---------------------------------------------------------------

@dataclass
class Dataset:
    """Batches (0-based, shape ``(m, k)``) plus simulation-only provenance."""

    batches: np.ndarray
    good: np.ndarray
    n: int
    eta: float = 0.0

    @property
    def m(self) -> int:
        return self.batches.shape[0]

    @property
    def k(self) -> int:
        return self.batches.shape[1]

    @property
    def eps(self) -> float:
        return float(np.sum(~self.good)) / self.m if self.m else 0.0


def assemble_dataset(good, bad, n: int, seed, eta: float = 0.0) -> Dataset:
    """Concatenate good and bad batches and shuffle them deterministically."""
    good = np.asarray(good, dtype=np.int64)
    bad = np.asarray(bad, dtype=np.int64)
    if good.size and bad.size and good.shape[1] != bad.shape[1]:
        raise ValueError("good and bad batches have different k")
    k = good.shape[1] if good.ndim == 2 and good.shape[0] else bad.shape[1]
    good = good.reshape(-1, k)
    bad = bad.reshape(-1, k)
    batches = np.vstack([good, bad])
    if batches.size and (batches.min() < 0 or batches.max() >= n):
        raise ValueError(f"batch entries must lie in [0, {n})")
    flags = np.concatenate([np.ones(len(good), bool), np.zeros(len(bad), bool)])
    order = make_rng(seed).permutation(len(batches))
    return Dataset(batches[order], flags[order], n, eta)
