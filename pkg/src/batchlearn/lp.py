"""Small dense two-phase simplex solver.

Written for the modest LPs built by the estimators (tens of rows, up to a
few thousand columns). Equalities get their own artificial variable, all
variables are shifted to be nonnegative, and rows are equilibrated before
phase 1. Runs are deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-10

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = (LE, EQ, GE)


class LPError(Exception):
    pass


class InfeasibleError(LPError):
    pass


class UnboundedError(LPError):
    pass


@dataclass
class LPProblem:
    """Linear constraints ``A[r] @ x  (rel[r])  b[r]`` over ``num_vars`` reals.

    Variables default to ``0 <= x < inf``; use ``lower``/``upper`` to change
    that (``-np.inf`` gives a free variable).
    """

    num_vars: int
    A: np.ndarray = None
    relations: list = field(default_factory=list)
    b: np.ndarray = None
    objective: np.ndarray | None = None
    maximize: bool = False
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("an LP needs at least one variable")
        if self.A is None:
            self.A = np.zeros((0, self.num_vars))
            self.b = np.zeros(0)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.relations = list(self.relations)
        if self.lower is None:
            self.lower = np.zeros(self.num_vars)
        if self.upper is None:
            self.upper = np.full(self.num_vars, np.inf)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.validate()

    def add(self, coeffs, relation: str, rhs: float) -> None:
        """Append one constraint."""
        self.add_rows(np.asarray(coeffs, dtype=float)[None, :], relation, [rhs])

    def add_rows(self, A, relation: str, b) -> None:
        """Append a block of constraints sharing one relation."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if relation not in _RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        if A.shape[1] != self.num_vars or A.shape[0] != b.size:
            raise ValueError(f"constraint block shape {A.shape} does not match {b.size} rhs and {self.num_vars} vars")
        self.A = np.vstack([self.A, A])
        self.b = np.concatenate([self.b, b])
        self.relations.extend([relation] * b.size)

    def validate(self) -> None:
        rows = self.A.shape[0]
        if self.A.shape[1] != self.num_vars:
            raise ValueError(f"coefficient rows have length {self.A.shape[1]}, expected {self.num_vars}")
        if self.b.size != rows or len(self.relations) != rows:
            raise ValueError("constraint, relation and rhs counts differ")
        if any(r not in _RELATIONS for r in self.relations):
            raise ValueError("unknown constraint relation")
        if not np.all(np.isfinite(self.A)) or not np.all(np.isfinite(self.b)):
            raise ValueError("constraint coefficients and rhs must be finite")
        if self.lower.size != self.num_vars or self.upper.size != self.num_vars:
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lower > self.upper) or np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise ValueError("inconsistent variable bounds")
        if self.objective is not None:
            self.objective = np.asarray(self.objective, dtype=float)
            if self.objective.size != self.num_vars:
                raise ValueError("objective length differs from num_vars")

    def violation(self, x) -> float:
        """Largest constraint or bound violation of the point ``x``."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.b.size:
            resid = self.A @ x - self.b
            rel = np.asarray(self.relations)
            over = np.where(rel == LE, resid, np.where(rel == GE, -resid, np.abs(resid)))
            worst = max(worst, float(over.max()))
        worst = max(worst, float(np.max(self.lower - x)), float(np.max(x - self.upper)))
        return max(worst, 0.0)


@dataclass
class LPSolution:
    status: str  # "feasible", "infeasible", "optimal", "unbounded"
    x: np.ndarray | None = None
    max_violation: float = float("nan")
    objective: float | None = None
    pivots: int = 0

    @property
    def feasible(self) -> bool:
        return self.status in ("feasible", "optimal")


class _Revised:
    """Revised simplex over ``A z = b, z >= 0`` with an explicit basis.

    The basis is refactored from the original columns at every iteration,
    so rounding error never accumulates across pivots. Pricing is Dantzig's
    rule with a Harris ratio test; after a run of degenerate pivots it
    switches to Bland's rule, which cannot cycle, until progress resumes.
    """

    STALL = 25

    def __init__(self, A, b, basis, pivot_tol, max_iter):
        self.A = A
        self.b = b
        self.basis = basis
        self.pivot_tol = pivot_tol
        self.max_iter = max_iter
        self.pivots = 0

    def values(self):
        return np.linalg.solve(self.A[:, self.basis], self.b)

    def run(self, cost, allowed, opt_tol, harris=1e-9):
        """Minimize ``cost @ z``; returns 'optimal' or 'unbounded'."""
        stalled = 0
        last = np.inf
        while True:
            if self.pivots > self.max_iter:
                raise LPError(f"simplex did not terminate within {self.max_iter} pivots")
            B = self.A[:, self.basis]
            xB = np.linalg.solve(B, self.b)
            obj = float(cost[self.basis] @ xB)
            if obj < last - 1e-12:
                stalled = 0
            else:
                stalled += 1
            last = min(last, obj)
            y = np.linalg.solve(B.T, cost[self.basis])
            reduced = cost - y @ self.A
            reduced[self.basis] = 0.0
            eligible = (reduced < -opt_tol) & allowed
            if not eligible.any():
                return "optimal"
            bland = stalled >= self.STALL
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                q = int(np.argmin(np.where(eligible, reduced, 0.0)))
            w = np.linalg.solve(B, self.A[:, q])
            rows = np.flatnonzero(w > self.pivot_tol)
            if rows.size == 0:
                return "unbounded"
            level = np.maximum(xB[rows], 0.0)
            if bland:
                ratios = level / w[rows]
                best = ratios.min()
                tied = rows[ratios <= best + 1e-12 * max(1.0, best)]
                r = int(tied[np.argmin(self.basis[tied])])
            else:
                bound = ((level + harris) / w[rows]).min()
                ok = rows[level / w[rows] <= bound]
                r = int(ok[np.argmax(w[ok])])
            if log.isEnabledFor(logging.DEBUG):
                log.debug("pivot %d: enter %d leave %d obj %.3e%s", self.pivots, q,
                          self.basis[r], obj, " (bland)" if bland else "")
            self.basis[r] = q
            self.pivots += 1


def _standardize(problem: LPProblem):
    """Rewrite bounds so every variable is ``y >= 0``; ``x = shift + M @ y``."""
    n = problem.num_vars
    shift = np.zeros(n)
    extra_A, extra_b = [], []
    mapping = []
    for j in range(n):
        lo, hi = problem.lower[j], problem.upper[j]
        if np.isfinite(lo):
            shift[j] = lo
            mapping.append((j, 1.0))
            if np.isfinite(hi):
                row = np.zeros(n)
                row[j] = 1.0
                extra_A.append(row)
                extra_b.append(hi)
        elif np.isfinite(hi):
            shift[j] = hi
            mapping.append((j, -1.0))
        else:
            mapping.append((j, 1.0))
            mapping.append((j, -1.0))
    M = np.zeros((n, len(mapping)))
    for col, (j, sign) in enumerate(mapping):
        M[j, col] = sign
    A = problem.A
    b = problem.b
    rel = list(problem.relations)
    if extra_A:
        A = np.vstack([A, np.array(extra_A)])
        b = np.concatenate([b, np.array(extra_b)])
        rel += [LE] * len(extra_A)
    # Upper bounds were recorded in x-space; move everything to y-space.
    b = b - A @ shift
    A = A @ M
    return A, b, rel, shift, M


def _solve(problem: LPProblem, cost_x, feas_tol, pivot_tol):
    problem.validate()
    A, b, rel, shift, M = _standardize(problem)
    ny = A.shape[1]

    # Equilibrate rows; a positive row scale leaves the feasible set unchanged.
    keep = []
    for r in range(A.shape[0]):
        scale = np.abs(A[r]).max()
        if scale <= pivot_tol:
            ok = (rel[r] == LE and b[r] >= -feas_tol) or (rel[r] == GE and b[r] <= feas_tol) \
                or (rel[r] == EQ and abs(b[r]) <= feas_tol)
            if not ok:
                return LPSolution("infeasible")
            continue
        A[r] /= scale
        b[r] /= scale
        keep.append(r)
    A = A[keep]
    b = b[keep]
    rel = [rel[r] for r in keep]
    rel = np.array(rel, dtype=object)
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    flipped = rel.copy()
    flipped[neg & (rel == LE)] = GE
    flipped[neg & (rel == GE)] = LE
    rel = flipped

    m = A.shape[0]
    n_slack = int(np.sum(rel != EQ))
    n_art = int(np.sum(rel != LE))
    width = ny + n_slack + n_art
    full = np.zeros((m, width))
    full[:, :ny] = A
    basis = np.empty(m, dtype=np.int64)
    s = ny
    a = ny + n_slack
    for r in range(m):
        if rel[r] == LE:
            full[r, s] = 1.0
            basis[r] = s
            s += 1
        elif rel[r] == GE:
            full[r, s] = -1.0
            s += 1
            full[r, a] = 1.0
            basis[r] = a
            a += 1
        else:
            full[r, a] = 1.0
            basis[r] = a
            a += 1
    is_art = np.zeros(width, dtype=bool)
    is_art[ny + n_slack:] = True
    solver = _Revised(full, b.astype(float), basis, pivot_tol, max_iter=50 * (m + width))

    if m and n_art:
        cost1 = is_art.astype(float)
        solver.run(cost1, np.ones(width, dtype=bool), 1e-12)
        if float(cost1[solver.basis] @ solver.values()) > feas_tol:
            return LPSolution("infeasible", pivots=solver.pivots)
        # Pivot zero-level artificials out of the basis; rows where that is
        # impossible are linear combinations of the others and are dropped.
        r = 0
        while r < solver.basis.size:
            if is_art[solver.basis[r]]:
                B = solver.A[:, solver.basis]
                row = np.linalg.solve(B.T, np.eye(B.shape[0])[r]) @ solver.A
                nz = np.flatnonzero((np.abs(row) > 1e-9) & ~is_art)
                nz = nz[~np.isin(nz, solver.basis)]
                if nz.size:
                    solver.basis[r] = nz[np.argmax(np.abs(row[nz]))]
                else:
                    keep_rows = np.arange(solver.basis.size) != r
                    solver.A = solver.A[keep_rows]
                    solver.b = solver.b[keep_rows]
                    solver.basis = solver.basis[keep_rows]
                    continue
            r += 1

    status = "feasible"
    if cost_x is not None and solver.basis.size:
        cost = np.zeros(width)
        cost[:ny] = M.T @ cost_x
        status = solver.run(cost, ~is_art, 1e-10)
        if status == "unbounded":
            return LPSolution("unbounded", pivots=solver.pivots)
    elif cost_x is not None and np.any(M.T @ cost_x < 0):
        return LPSolution("unbounded", pivots=solver.pivots)
    z = np.zeros(width)
    if solver.basis.size:
        z[solver.basis] = np.maximum(solver.values(), 0.0)
    x = shift + M @ z[:ny]
    objective = float(cost_x @ x) if cost_x is not None else None
    return LPSolution(status, x, problem.violation(x), objective, solver.pivots)


def lp_feasible(problem: LPProblem, feas_tol: float = FEAS_TOL, pivot_tol: float = PIVOT_TOL) -> LPSolution:
    """Phase-1 simplex: a witness point if the constraints are satisfiable."""
    return _solve(problem, None, feas_tol, pivot_tol)


def lp_minimize(problem: LPProblem, feas_tol: float = FEAS_TOL, pivot_tol: float = PIVOT_TOL) -> LPSolution:
    """Optimize ``problem.objective`` (minimized unless ``maximize`` is set).

    Raises :class:`InfeasibleError` or :class:`UnboundedError`.
    """
    if problem.objective is None:
        raise ValueError("lp_minimize needs an objective")
    sign = -1.0 if problem.maximize else 1.0
    sol = _solve(problem, sign * problem.objective, feas_tol, pivot_tol)
    if sol.status == "infeasible":
        raise InfeasibleError("constraints are infeasible")
    if sol.status == "unbounded":
        raise UnboundedError("objective is unbounded")
    sol.status = "optimal"
    sol.objective = float(problem.objective @ sol.x)
    return sol
