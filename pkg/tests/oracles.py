"""Independent reference computations used only by the tests."""

import itertools
import math

import numpy as np
from scipy.optimize import linprog
from scipy.stats import binom

from batchlearn.lp import EQ, GE, LE


def random_lp(rng, max_vars=4, max_rows=8):
    """Small integer LP over ``x >= 0``: returns (A, relations, b)."""
    nv = int(rng.integers(1, max_vars + 1))
    nr = int(rng.integers(1, max_rows + 1))
    A = rng.integers(-5, 6, size=(nr, nv)).astype(float)
    b = rng.integers(-6, 10, size=nr).astype(float)
    rel = list(rng.choice([LE, GE, EQ], size=nr, p=[0.45, 0.4, 0.15]))
    return A, rel, b


def _as_inequalities(A, rel, b, upper=None):
    """All constraints (bounds included) as ``G x <= h`` plus an equality mask."""
    nv = A.shape[1]
    G, h, eq = [], [], []
    for row, r, rhs in zip(A, rel, b):
        if r == GE:
            G.append(-row), h.append(-rhs), eq.append(False)
        else:
            G.append(row), h.append(rhs), eq.append(r == EQ)
    for j in range(nv):
        e = np.zeros(nv)
        e[j] = -1.0
        G.append(e), h.append(0.0), eq.append(False)
        if upper is not None:
            G.append(-e), h.append(upper), eq.append(False)
    return np.array(G), np.array(h), np.array(eq)


def vertices(A, rel, b, upper=None, tol=1e-9):
    """Every feasible basic solution, by brute force over row subsets."""
    G, h, eq = _as_inequalities(A, rel, b, upper)
    nv = A.shape[1]
    out = []
    for rows in itertools.combinations(range(G.shape[0]), nv):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        resid = G @ x - h
        if np.all(resid <= tol) and np.all(np.abs(resid[eq]) <= tol):
            out.append(x)
    return out


def vertex_feasible(A, rel, b):
    # With x >= 0 the polyhedron has no lines, so it is nonempty iff it has a vertex.
    return bool(vertices(A, rel, b))


def vertex_minimum(A, rel, b, c, upper):
    pts = vertices(A, rel, b, upper)
    if not pts:
        return None
    return min(float(c @ x) for x in pts)


def window_feasible_scipy(f, i, eta, eps, k):
    """Feasibility of the sliding-window mixture LP, solved with HiGHS."""
    tot = max(1, math.ceil(4 * eta * k / eps - 1e-9))
    theta = i * eta + np.arange(tot + 1) * eps / k
    theta = np.minimum(theta[theta <= 1 + 1e-12], 1.0)
    B = binom.pmf(np.arange(k + 1)[:, None], k, theta[None, :])
    J = theta.size
    # variables: alpha (J), slack (k+1)
    eye = np.eye(k + 1)
    A_ub = np.vstack([
        np.hstack([B, -eye]),
        np.hstack([-B, -eye]),
        np.concatenate([np.zeros(J), np.ones(k + 1)])[None, :],
    ])
    b_ub = np.concatenate([f, -f, [4 * eps]])
    A_eq = np.concatenate([np.ones(J), np.zeros(k + 1)])[None, :]
    res = linprog(np.zeros(J + k + 1), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=(0, None), method="highs")
    return res.status == 0


def binomial_est_scipy(f, eta, eps, k):
    """Reference window sweep: ``(i + 2) * eta`` for the first feasible window, else None."""
    for i in range(math.floor(1 / eta + 1e-9) - 3):
        if window_feasible_scipy(f, i, eta, eps, k):
            return (i + 2) * eta
    return None
