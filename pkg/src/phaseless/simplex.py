"""Dense two-phase tableau simplex for small equality-form linear programs.

    minimize c @ x  subject to  A @ x = b,  x >= 0

Bland's rule is used for both the entering and the leaving variable, which rules
out cycling on degenerate vertices. Intended for problems with a few dozen
variables; every pivot is a full dense tableau update.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    x: np.ndarray
    objective: float
    pivots: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    piv = T[row]
    colv = T[:, col].copy()
    colv[row] = 0.0
    T -= np.outer(colv, piv)
    T[:, col] = 0.0
    T[row, col] = 1.0


def _run(T: np.ndarray, basis: list, allowed: np.ndarray, tol: float, max_pivots: int) -> tuple:
    """Minimise the objective held in the last row of T over the allowed columns."""
    m = T.shape[0] - 1
    pivots = 0
    while pivots < max_pivots:
        reduced = T[-1, :-1]
        candidates = np.flatnonzero(allowed & (reduced < -tol))
        if candidates.size == 0:
            return OPTIMAL, pivots
        col = int(candidates[0])
        column = T[:m, col]
        pos = np.flatnonzero(column > tol)
        if pos.size == 0:
            return UNBOUNDED, pivots
        ratios = T[pos, -1] / column[pos]
        best = ratios.min()
        ties = pos[ratios <= best + tol * max(1.0, abs(best))]
        row = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, row, col)
        basis[row] = col
        pivots += 1
    raise RuntimeError("simplex pivot limit reached")


def simplex(c, A, b, *, tol: float = 1e-11, feas_tol: float = 1e-9, max_pivots: int = 10_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1
    bscale = max(1.0, float(np.abs(b).max(initial=0.0)))

    # phase 1 on [A | I | b] with artificial objective sum(artificials)
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    allowed = np.ones(n + m, dtype=bool)
    status, piv1 = _run(T, basis, allowed, tol, max_pivots)
    if -T[-1, -1] > feas_tol * bscale * max(1, m):
        return LPResult(INFEASIBLE, np.full(n, np.nan), np.nan, piv1)

    # drive artificials out of the basis; rows where that fails are redundant
    keep = []
    for i in range(m):
        if basis[i] >= n:
            nz = np.flatnonzero(np.abs(T[i, :n]) > 1e-9)
            if nz.size:
                _pivot(T, i, int(nz[0]))
                basis[i] = int(nz[0])
                keep.append(i)
        else:
            keep.append(i)
    T = np.vstack([T[keep][:, list(range(n)) + [n + m]], np.zeros((1, n + 1))])
    basis = [basis[i] for i in keep]

    # phase 2 reduced costs
    T[-1, :n] = c
    for i, j in enumerate(basis):
        T[-1] -= c[j] * T[i]
    status, piv2 = _run(T, basis, np.ones(n, dtype=bool), tol, max_pivots)
    x = np.zeros(n)
    for i, j in enumerate(basis):
        x[j] = T[i, -1]
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, x, -np.inf, piv1 + piv2)
    x = np.maximum(x, 0.0)
    return LPResult(OPTIMAL, x, float(c @ x), piv1 + piv2)
