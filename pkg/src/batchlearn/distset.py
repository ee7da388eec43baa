"""Rank-1 tensor learner for the ``eta = 0`` regime.

Candidates are the marginal of the frequency tensor plus, recursively, the
candidates of every normalized slice. The estimate is the candidate whose
``k``-th tensor power is closest to the frequency tensor in l1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    MAX_TENSOR_ENTRIES,
    PROB_TOL,
    check_tensor,
    frequency_tensor,
    marginal,
    slice_tensor,
    tensor_power,
    tv_distance_tensor,
)

DEDUP_TOL = 1e-12


@dataclass
class CandidateSet:
    candidates: list = field(default_factory=list)
    origins: list = field(default_factory=list)  # slice path (0-based) leading to each candidate
    raw_count: int = 0
    renormalized: list = field(default_factory=list)

    def __len__(self):
        return len(self.candidates)

    def add(self, vector: np.ndarray, origin: tuple) -> None:
        self.raw_count += 1
        total = vector.sum()
        if abs(total - 1.0) > PROB_TOL:
            vector = vector / total
            self.renormalized.append(origin)
        if self.candidates:
            kept = np.asarray(self.candidates)
            if np.any(np.abs(kept - vector).max(axis=1) <= DEDUP_TOL):
                return
        self.candidates.append(vector)
        self.origins.append(origin)


def _collect(A: np.ndarray, path: tuple, out: CandidateSet) -> None:
    if A.ndim == 1:
        out.add(A, path)
        return
    for i in range(A.shape[0]):
        mass, normalized = slice_tensor(A, i)
        if normalized is not None:
            _collect(normalized, path + (i,), out)
    out.add(marginal(A), path + ("marginal",))


def dist_set(n: int, k: int, A) -> CandidateSet:
    """Candidate distributions: slices in index order (depth first), marginal last."""
    A = np.asarray(A, dtype=float)
    if A.shape != (n,) * k:
        raise ValueError(f"tensor shape {A.shape} is not ({n},)*{k}")
    check_tensor(A)
    out = CandidateSet()
    _collect(A, (), out)
    return out


@dataclass
class TensorResult:
    q: np.ndarray
    candidates: CandidateSet
    objectives: np.ndarray
    index: int

    @property
    def objective(self) -> float:
        return float(self.objectives[self.index])


def select_rank1(n: int, k: int, A, cap: int = MAX_TENSOR_ENTRIES) -> TensorResult:
    """Pick the candidate ``q`` minimizing ``TV(A, q^{⊗k})``; ties go to the earliest."""
    A = np.asarray(A, dtype=float)
    cands = dist_set(n, k, A)
    objectives = np.array([tv_distance_tensor(A, tensor_power(q, k, cap)) for q in cands.candidates])
    best = int(np.argmin(objectives))
    return TensorResult(cands.candidates[best], cands, objectives, best)


def dist_set_tensor_input(n: int, k: int, A, cap: int = MAX_TENSOR_ENTRIES):
    """Run the learner on an explicit tensor; returns ``(candidates, q0)``."""
    res = select_rank1(n, k, A, cap)
    return res.candidates, res.q


def learn_tensor(batches, n: int, k: int, cap: int = MAX_TENSOR_ENTRIES) -> TensorResult:
    """Rank-1 learner on raw batches (0-based ``(m, k)`` array)."""
    batches = np.asarray(batches, dtype=np.int64)
    if batches.ndim != 2 or batches.shape[0] == 0:
        raise ValueError("learn_tensor needs a non-empty dataset")
    if batches.shape[1] != k:
        raise ValueError(f"batches have size {batches.shape[1]}, expected k = {k}")
    return select_rank1(n, k, frequency_tensor(batches, n, cap), cap)
