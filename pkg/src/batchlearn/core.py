"""Distributions, tensor powers, marginals, slices and total variation.

Conventions used throughout the package:

* A distribution over ``[n]`` is a 1-d float array of length ``n``.
* An ``n^k`` tensor is a float array of shape ``(n,) * k``.
* A count distribution over ``{0, ..., k}`` is a 1-d array of length ``k + 1``.
* Batches are integer arrays of shape ``(m, k)`` holding *0-based* element
  indices. Text files on disk use 1-based indices (see :mod:`batchlearn.files`).
"""

from __future__ import annotations

import math

import numpy as np

PROB_TOL = 1e-9
MAX_TENSOR_ENTRIES = 10**7

# Above this many trials the binomial pmf switches to log space.
_RECURRENCE_MAX_K = 100


class DistributionError(ValueError):
    """A vector or tensor is not a valid probability object."""


class TensorTooLargeError(ValueError):
    """Dense ``n^k`` storage would exceed the configured cap."""


def check_distribution(probs, tol: float = PROB_TOL) -> np.ndarray:
    """Validate a probability vector and return it as a float array.

    Nothing is renormalized: a sum off by more than ``tol`` is an error.
    """
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise DistributionError(f"expected a non-empty 1-d vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise DistributionError("distribution has non-finite entries")
    if p.min() < -tol or p.max() > 1 + tol:
        raise DistributionError(f"entries outside [0, 1]: min={p.min()!r}, max={p.max()!r}")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise DistributionError(f"entries sum to {total!r}, not 1")
    return p


def check_tensor(A, tol: float = PROB_TOL) -> np.ndarray:
    """Validate a probability tensor (nonnegative within ``tol``, sums to 1)."""
    A = np.asarray(A, dtype=float)
    if A.ndim < 1 or len(set(A.shape)) != 1:
        raise DistributionError(f"expected an n^k tensor, got shape {A.shape}")
    if A.min() < -tol:
        raise DistributionError(f"tensor has negative entry {A.min()!r}")
    total = A.sum()
    if abs(total - 1.0) > tol:
        raise DistributionError(f"tensor entries sum to {total!r}, not 1")
    return A


def check_tensor_size(n: int, k: int, cap: int = MAX_TENSOR_ENTRIES) -> None:
    if n ** k > cap:
        raise TensorTooLargeError(f"n^k = {n}^{k} = {n ** k} exceeds the dense cap {cap}")


def subset_mass(p, subset: int) -> float:
    """Mass ``p(S)`` of the subset encoded as a bitmask (bit ``i`` is element ``i+1``)."""
    p = np.asarray(p, dtype=float)
    members = (subset >> np.arange(p.size)) & 1
    return float(p @ members)


def tv_distance(u, v) -> float:
    """Total variation distance: half the l1 distance between two vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    return 0.5 * float(np.abs(u - v).sum())


def tv_distance_tensor(A, B) -> float:
    """Total variation distance between two ``n^k`` tensors (all entries)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return 0.5 * float(np.abs(A - B).sum())


def tensor_power(p, k: int, cap: int = MAX_TENSOR_ENTRIES) -> np.ndarray:
    """The ``k``-fold product distribution ``p ⊗ ... ⊗ p`` as a dense tensor."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    p = np.asarray(p, dtype=float)
    check_tensor_size(p.size, k, cap)
    out = p
    for _ in range(k - 1):
        out = np.multiply.outer(out, p)
    return out


def marginal(A) -> np.ndarray:
    """Distribution of the first coordinate of a probability tensor."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        return A.copy()
    return A.reshape(A.shape[0], -1).sum(axis=1)


def slice_tensor(A, i: int) -> tuple[float, np.ndarray | None]:
    """Mass and normalized ``i``-th slice (0-based) of a tensor with ``k >= 2``.

    Returns ``(0.0, None)`` for a zero-mass slice, since the conditional
    distribution is undefined there.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim < 2:
        raise ValueError("slices need a tensor of order k >= 2")
    if not 0 <= i < A.shape[0]:
        raise IndexError(f"slice index {i} outside [0, {A.shape[0]})")
    raw = A[i]
    mass = float(raw.sum())
    if mass <= 0.0:
        return 0.0, None
    return mass, raw / mass


def _binomial_recurrence(k: int, theta: np.ndarray) -> np.ndarray:
    # theta <= 1/2 here, so (1 - theta)^k >= 2^-100 never underflows.
    t = np.arange(k)
    ratios = ((k - t) / (t + 1.0))[None, :] * (theta / (1.0 - theta))[:, None]
    head = (1.0 - theta) ** k
    out = np.empty((theta.size, k + 1))
    out[:, 0] = head
    out[:, 1:] = head[:, None] * np.cumprod(ratios, axis=1)
    return out


def _binomial_logspace(k: int, theta: np.ndarray) -> np.ndarray:
    t = np.arange(k + 1)
    log_choose = np.array([math.lgamma(k + 1) - math.lgamma(j + 1) - math.lgamma(k - j + 1) for j in t])
    with np.errstate(divide="ignore"):
        logp = (log_choose[None, :]
                + t[None, :] * np.log(theta)[:, None]
                + (k - t)[None, :] * np.log1p(-theta)[:, None])
    return np.exp(logp)


def binomial_pmf(k: int, theta) -> np.ndarray:
    """Binomial(k, theta) pmf over counts ``0..k``.

    ``theta`` may be a scalar (result shape ``(k+1,)``) or an array
    (result shape ``theta.shape + (k+1,)``). Uses the multiplicative
    recurrence for ``k <= 100`` and log space above that.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(theta_arr)) or np.any(theta_arr < 0) or np.any(theta_arr > 1):
        raise ValueError("success probability must lie in [0, 1]")
    flat = theta_arr.reshape(-1)
    # Evaluate at min(theta, 1 - theta) and mirror, so the recurrence never underflows.
    flip = flat > 0.5
    base = np.where(flip, 1.0 - flat, flat)
    out = np.zeros((flat.size, k + 1))
    interior = base > 0
    out[~interior, 0] = 1.0
    if interior.any():
        if k <= _RECURRENCE_MAX_K:
            out[interior] = _binomial_recurrence(k, base[interior])
        else:
            out[interior] = _binomial_logspace(k, base[interior])
    out[flip] = out[flip, ::-1]
    return out.reshape(theta_arr.shape + (k + 1,))


def binomial_cdf(k: int, theta: float, t: int) -> float:
    """``P[Binomial(k, theta) <= t]``, summed from the pmf."""
    if t < 0:
        return 0.0
    return float(binomial_pmf(k, theta)[: t + 1].sum())


def mixture(weights, components) -> np.ndarray:
    """Convex combination of count distributions sharing the same ``k``."""
    w = np.asarray(weights, dtype=float)
    comps = np.asarray(components, dtype=float)
    if comps.ndim != 2 or comps.shape[0] != w.size:
        raise ValueError("need one weight per component, all components of equal length")
    if np.any(w < 0):
        raise ValueError("mixture weights must be nonnegative")
    if abs(w.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"mixture weights sum to {w.sum()!r}, not 1")
    return w @ comps


def flat_batch_index(batches, n: int) -> np.ndarray:
    """Row-major flat index of each batch tuple in an ``n^k`` tensor."""
    batches = np.asarray(batches, dtype=np.int64)
    k = batches.shape[1]
    weights = n ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return batches @ weights


def frequency_tensor(batches, n: int, cap: int = MAX_TENSOR_ENTRIES) -> np.ndarray:
    """Fraction of batches equal to each ordered tuple ``(i_1, ..., i_k)``."""
    batches = np.asarray(batches, dtype=np.int64)
    if batches.ndim != 2 or batches.shape[0] < 1:
        raise ValueError("need at least one batch, given as an (m, k) array")
    m, k = batches.shape
    check_tensor_size(n, k, cap)
    if batches.min() < 0 or batches.max() >= n:
        raise ValueError(f"batch entries must lie in [0, {n})")
    counts = np.bincount(flat_batch_index(batches, n), minlength=n ** k)
    return (counts / m).reshape((n,) * k)
