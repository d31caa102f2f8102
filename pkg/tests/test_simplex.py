import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from phaseless.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, simplex


def _vertex_oracle(c, A, b):
    # enumerate basic solutions of {Ax = b, x >= 0}; valid when the LP is bounded
    m, n = A.shape
    best = None
    for cols in itertools.combinations(range(n), m):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.all(xb >= -1e-10):
            x = np.zeros(n)
            x[list(cols)] = xb
            val = c @ x
            best = val if best is None else min(best, val)
    return best


def test_small_known_lp():
    # min x1 + x2 s.t. x1 + 2 x2 = 2, x >= 0 -> x = (0, 1)
    r = simplex([1, 1], [[1, 2]], [2])
    assert r.status == OPTIMAL
    assert r.objective == pytest.approx(1.0)
    assert np.allclose(r.x, [0, 1])


def test_infeasible_and_unbounded():
    assert simplex([1, 1], [[1, 1]], [-1]).status == INFEASIBLE
    assert simplex([-1, 0], [[1, -1]], [0]).status == UNBOUNDED


def test_redundant_rows():
    A = np.array([[1.0, 1, 0], [2, 2, 0], [0, 1, 1]])
    b = np.array([1.0, 2, 1])
    r = simplex([1, 2, 3], A, b)
    assert r.status == OPTIMAL
    assert r.objective == pytest.approx(2.0)


def test_degenerate_no_cycling():
    # a classic cycling example for Dantzig's rule
    c = np.array([-0.75, 150, -0.02, 6, 0, 0, 0])
    A = np.array([[0.25, -60, -0.04, 9, 1, 0, 0],
                  [0.5, -90, -0.02, 3, 0, 1, 0],
                  [0, 0, 1, 0, 0, 0, 1]])
    b = np.array([0, 0, 1.0])
    r = simplex(c, A, b)
    assert r.status == OPTIMAL
    assert r.objective == pytest.approx(-0.05)


def test_against_vertex_enumeration(rng):
    for _ in range(200):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(m, 7))
        A = rng.standard_normal((m, n))
        x0 = rng.uniform(0, 1, n) * (rng.random(n) < 0.6)
        b = A @ x0
        c = rng.uniform(0.1, 2, n)  # positive costs: bounded
        r = simplex(c, A, b)
        assert r.status == OPTIMAL
        assert r.objective == pytest.approx(_vertex_oracle(c, A, b), rel=1e-8, abs=1e-9)
        assert np.allclose(A @ r.x, b, atol=1e-9)
        assert np.all(r.x >= 0)


def test_against_scipy(rng):
    names = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}
    for t in range(200):
        m, n = int(rng.integers(1, 6)), int(rng.integers(1, 8))
        A = rng.standard_normal((m, n))
        b = rng.standard_normal(m)
        c = rng.standard_normal(n) + 2 * (t % 2)
        ours = simplex(c, A, b)
        ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        assert ours.status == names[ref.status]
        if ref.status == 0:
            assert ours.objective == pytest.approx(ref.fun, rel=1e-8, abs=1e-9)
