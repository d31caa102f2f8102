import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseless.bilipschitz import beta0, estimate_bilipschitz
from phaseless.bounds import (
    BoundConstants,
    bound_rhs,
    check_instance_bound,
    constants_from_estimate,
    closed_form_p1,
    gaussian_r_margin,
    min_r,
    r_margin,
    select_r,
    theorem_constants,
)
from phaseless.decoders import oracle_decode_real
from phaseless.errors import InputError
from phaseless.signal_model import Field, SignalVector, gaussian_matrix, make_rng, phaseless_measure, sample_signal

P_GRID = (0.1, 0.25, 0.5, 0.75, 1.0)


def random_valid(rng, p=1.0):
    while True:
        L = rng.uniform(0.1, 3)
        U = L * rng.uniform(1, 3)
        r = rng.uniform(1, 400)
        if r_margin(L, U, r, p) > 0:
            return L, U, r


def test_margin_examples():
    assert r_margin(1, 1.659, 2, 1) == pytest.approx(-0.659, abs=1e-12)
    assert r_margin(1, 1e-12, 5, 0.5) == pytest.approx(1.0, abs=1e-9)
    assert gaussian_r_margin(Field.COMPLEX, 10, 1) == pytest.approx(1 - 2.168655 * math.sqrt(0.2), abs=1e-5)
    assert gaussian_r_margin(Field.COMPLEX, 10, 1) == pytest.approx(0.030, abs=1e-3)
    assert gaussian_r_margin(Field.REAL, 1e12, 0.5) == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("fld", [Field.REAL, Field.COMPLEX])
@pytest.mark.parametrize("p", P_GRID)
def test_r10_margin_positive(fld, p):
    assert gaussian_r_margin(fld, 10, p) > 0


def test_min_r_is_threshold(rng):
    for _ in range(200):
        L, U, p = rng.uniform(0.2, 2), rng.uniform(0.2, 5), rng.uniform(0.1, 1)
        r0 = min_r(L, U, p)
        assert r_margin(L, U, r0 * (1 + 1e-9), p) > 0 > r_margin(L, U, r0 * (1 - 1e-9), p)


def test_documented_constants():
    c = theorem_constants(1, 1.669, 10, 1, 1)
    assert c.C_tilde2 == pytest.approx(8.66, abs=5e-3)
    assert c.D_tilde2 == pytest.approx(7.89, abs=5e-3)
    assert c.C2 == pytest.approx(13.9, abs=5e-2)


def _reference_constants(L, U, r, p):
    # straight transcription at 60 digits, separate from the module's evaluation
    with mpmath.workdps(60):
        L, U, r, p = (mpmath.mpf(str(v)) for v in (L, U, r, p))
        e = 1 / p - mpmath.mpf("0.5")
        c = 2 ** (1 / p - 1)
        den = L - U * c * (2 / r) ** e
        Ct2 = U * (c / r ** e + 1) / den
        Dt2 = 2 / den
        Ct1 = (2 + r) ** (1 - p / 2) * Ct2 ** p
        Dt1 = (2 + r) ** (1 - p / 2) * Dt2 ** p
        g = 1 + c / (r / 2) ** e
        return {"C_tilde1": Ct1, "C_tilde2": Ct2, "D_tilde1": Dt1, "D_tilde2": Dt2,
                "C1": c * (2 * Ct1 + 2) ** (1 / p), "D1": c * Dt1 ** (1 / p),
                "C2": g * Ct2 + c / r ** e + 1, "D2": g * Dt2}


def test_theorem_constants_match_reference(rng):
    for _ in range(200):
        p = float(rng.choice(P_GRID))
        L, U, r = random_valid(rng, p)
        got = theorem_constants(L, U, r, p, 3)
        for name, ref in _reference_constants(L, U, r, p).items():
            assert getattr(got, name) == pytest.approx(float(ref), rel=1e-12)


def test_p1_closed_form_reduction(rng):
    for _ in range(1000):
        L, U, r = random_valid(rng)
        got = theorem_constants(L, U, r, 1.0, 2)
        closed = closed_form_p1(L, U, r)
        for name in ("C1", "C2", "D1", "D2"):
            assert abs(getattr(got, name) - closed[name]) <= 1e-12 * abs(closed[name])


@pytest.mark.parametrize("t", [0.5, 3.0])
def test_ratio_dependence(t, rng):
    for _ in range(100):
        p = float(rng.choice(P_GRID))
        L, U, r = random_valid(rng, p)
        a = theorem_constants(L, U, r, p, 2)
        b = theorem_constants(t * L, t * U, r, p, 2)
        for name in ("C1", "C2", "C_tilde1", "C_tilde2"):
            assert getattr(b, name) == pytest.approx(getattr(a, name), rel=1e-10)
        for name in ("D1", "D2", "D_tilde2"):
            assert getattr(b, name) == pytest.approx(getattr(a, name) / t, rel=1e-10)


def test_monotone_in_margin():
    # raising L grows the margin with U, r, p fixed
    for p in P_GRID:
        U, r = 1.2, 60.0
        L0 = r_margin(1.0, U, r, p)
        Ls = np.linspace(1 - L0 + 1e-3, 3, 60)
        ct = [theorem_constants(L, U, r, p, 1) for L in Ls]
        margins = [r_margin(L, U, r, p) for L in Ls]
        assert all(b > a for a, b in zip(margins, margins[1:]))
        assert all(b.C_tilde2 < a.C_tilde2 for a, b in zip(ct, ct[1:]))
        assert all(b.D_tilde2 < a.D_tilde2 for a, b in zip(ct, ct[1:]))


@settings(max_examples=300, deadline=None)
@given(st.floats(0.05, 5), st.floats(1, 4), st.floats(1, 1e4), st.sampled_from(P_GRID),
       st.integers(1, 50))
def test_positivity(L, q, r, p, k):
    U = L * q
    if r_margin(L, U, r, p) <= 0:
        with pytest.raises(InputError, match="r-constraint"):
            theorem_constants(L, U, r, p, k)
        return
    try:
        c = theorem_constants(L, U, r, p, k)
    except InputError as exc:
        assert "overflow" in str(exc)
        return
    vals = [c.C_tilde1, c.C_tilde2, c.D_tilde1, c.D_tilde2, c.C1, c.C2, c.D1, c.D2]
    assert all(math.isfinite(v) and v > 0 for v in vals)


def test_invalid_inputs_rejected():
    with pytest.raises(InputError, match="r-constraint"):
        theorem_constants(1, 1.659, 2, 1, 1)
    for args in ((0, 1, 10, 1, 1), (1, 1, 10, 0, 1), (1, 1, 10, 1.5, 1), (1, 1, -1, 1, 1), (1, 1, 10, 1, 0)):
        with pytest.raises(InputError):
            theorem_constants(*args)


def test_constants_serialization_and_table():
    c = theorem_constants(1, 1.669, 10, 1, 1)
    assert BoundConstants.from_dict(c.to_dict()) == c
    table = c.table()
    for name in ("C1", "C2", "D1", "D2", "margin"):
        assert name in table


def test_select_r_admissible_and_optimal():
    L, U = 1.0, 1.669
    for target in ("C1", "C2", "D1", "D2"):
        r = select_r(L, U, 1.0, 2, target=target, r_max=500)
        assert r_margin(L, U, r, 1.0) > 0 and r <= 500
        best = getattr(theorem_constants(L, U, r, 1.0, 2), target)
        for other in np.geomspace(min_r(L, U, 1.0) * 1.01, 500, 37):
            assert best <= getattr(theorem_constants(L, U, float(other), 1.0, 2), target) * (1 + 1e-3)
    with pytest.raises(InputError):
        select_r(L, U, 1.0, 2, r_max=1.0)
    with pytest.raises(InputError):
        select_r(L, U, 1.0, 2, target="E1")


def test_constants_from_estimate_modes():
    A = gaussian_matrix(Field.REAL, 40, 6, 0)
    est = estimate_bilipschitz(A, 6, n_random_pairs=20, refine_steps=2, seed=0)
    root = math.sqrt(40)
    emp = constants_from_estimate(est, 1.0, 1, mode="empirical", kappa=2)
    strict = constants_from_estimate(est, 1.0, 1, mode="strict", r=emp.r)
    assert strict.L == pytest.approx(est.L_hat * root)
    assert strict.U == pytest.approx(est.U_hat * root)
    assert emp.L == pytest.approx(strict.L / 2) and emp.U == pytest.approx(strict.U * 2)
    assert emp.mode == "empirical" and strict.mode == "strict"
    assert emp.C1 > strict.C1
    sparse = estimate_bilipschitz(A, 5, n_random_pairs=5, refine_steps=0)
    with pytest.raises(InputError):
        constants_from_estimate(sparse, 1.0, 1, mode="strict", r=50)
    with pytest.raises(InputError):
        constants_from_estimate((1, 2), 1.0, 1, mode="loose")
    with pytest.raises(InputError):
        constants_from_estimate((1, 2), 1.0, 1, kappa=0.5)


def test_check_bound_exact_recovery():
    consts = theorem_constants(1, 1.669, 10, 1, 1)
    x = SignalVector(Field.REAL, [0.0, 2.0, 0.0])
    rec = check_instance_bound(x, x, consts, 0.0)
    assert rec.lhs == 0 and rec.rhs == 0 and rec.ratio == 0 and rec.satisfied
    rec = check_instance_bound(SignalVector(Field.REAL, [0.0, 2.0 + 1e-12, 0.0]), x, consts, 0.0, atol=1e-9)
    assert rec.ratio == 0 and rec.satisfied
    rec = check_instance_bound(SignalVector(Field.REAL, [0.0, 2.5, 0.0]), x, consts, 0.0)
    assert rec.ratio == math.inf and not rec.satisfied


def test_check_bound_phase_invariant():
    consts = theorem_constants(1, 1.669, 10, 1, 2)
    x = SignalVector(Field.COMPLEX, [1, 0.5j, 0.1, 0.02])
    z = SignalVector(Field.COMPLEX, [1.01, 0.5j, 0, 0.01])
    a = check_instance_bound(z, x, consts, 0.1, "2p")
    b = check_instance_bound(z.scaled(1j), x, consts, 0.1, (2, "p"))
    assert a.lhs == pytest.approx(b.lhs) and a.rhs == b.rhs and a.norm_pair == b.norm_pair == "2p"


def test_rhs_linear_in_eta():
    for p in P_GRID:
        consts = theorem_constants(1, 1.669, 1e3, p, 3)
        kf = 3 ** (1 / p - 0.5)
        etas = np.linspace(0, 2, 9)
        for pair, slope in (("pp", consts.D1 * kf), ("2p", consts.D2)):
            vals = [bound_rhs(consts, 0.7, e, pair) for e in etas]
            diffs = np.diff(vals) / np.diff(etas)
            assert np.allclose(diffs, slope, rtol=1e-9)


def test_check_bound_errors():
    consts = theorem_constants(1, 1.669, 10, 1, 2)
    x = SignalVector(Field.REAL, [1.0, 0.0, 0.0])
    with pytest.raises(InputError):
        check_instance_bound(np.zeros(4), x, consts, 0.0)
    with pytest.raises(InputError):
        check_instance_bound(np.zeros(3, dtype=complex), x, consts, 0.0)
    with pytest.raises(InputError):
        check_instance_bound(x, x, consts, 0.0, "22")
    with pytest.raises(InputError):
        check_instance_bound(x, x, consts, -1.0)
    with pytest.raises(InputError):
        check_instance_bound(SignalVector(Field.REAL, [1.0]), SignalVector(Field.REAL, [1.0]), consts, 0.0)


def test_bound_sanity_on_oracle_instances():
    # generous (L/2, 2U) built from estimates over all of R^n
    for s in range(30):
        rng = make_rng(s, 0xB0)
        n = int(rng.integers(3, 6))
        m = int(rng.integers(2 * n, 13))
        A = gaussian_matrix(Field.REAL, m, n, s)
        x = sample_signal("flat_tail", n, 1, Field.REAL, s)
        res = oracle_decode_real(A, phaseless_measure(A, x))
        est = estimate_bilipschitz(A, n, n_random_pairs=50, refine_steps=10, seed=s)
        consts = constants_from_estimate(est, 1.0, 1, mode="empirical", kappa=2)
        for pair in ("pp", "2p"):
            assert check_instance_bound(res, x, consts, 0.0, pair).satisfied
