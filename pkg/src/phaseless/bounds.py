"""Instance-optimality constants for phaseless l_p decoders and bound checks.

With bi-Lipschitz constants (L, U) on the (r + 4)k-sparse set, the decoder error obeys

    dist_p(z, x) <= C1 * sigma_k(x)_p + D1 * k**(1/p - 1/2) * eta                (p, p)
    dist_2(z, x) <= C2 * sigma_k(x)_p / k**(1/p - 1/2) + D2 * eta                (2, p)

provided the margin  L - U * 2**(1/p - 1) * (2/r)**(1/p - 1/2)  is positive. The
constants are evaluated with 50-digit mpmath arithmetic and rounded once to float.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Union

import mpmath
import numpy as np

from .bilipschitz import BiLipschitzEstimate, beta0
from .errors import InputError
from .signal_model import Field, SignalVector, as_signal, dist_p, sigma_k

_DPS = 50
NORM_PAIRS = ("pp", "2p")
MARGIN_CONSTRAINT = "L - U * 2^(1/p - 1) * (2/r)^(1/p - 1/2) > 0"


def _check_lurp(L, U, r, p):
    if not (L > 0 and U > 0 and r > 0):
        raise InputError(f"L, U and r must be positive, got L={L}, U={U}, r={r}")
    if not 0 < p <= 1:
        raise InputError(f"p must lie in (0, 1], got {p}")


def _margin_mp(L, U, r, p):
    a = 1 / p - mpmath.mpf(1) / 2
    return L - U * mpmath.power(2, 1 / p - 1) * mpmath.power(2 / r, a)


def r_margin(L: float, U: float, r: float, p: float) -> float:
    """L - U * 2**(1/p - 1) * (2/r)**(1/p - 1/2); the r-constraint holds iff this is > 0."""
    _check_lurp(L, U, r, p)
    with mpmath.workdps(_DPS):
        return float(_margin_mp(mpmath.mpf(L), mpmath.mpf(U), mpmath.mpf(r), mpmath.mpf(p)))


def gaussian_r_margin(field: Union[Field, str], r: float, p: float) -> float:
    """Margin with L = 1 and U = beta0 + 0.01, the ratio Gaussian matrices attain."""
    return r_margin(1.0, beta0(Field.parse(field)) + 0.01, r, p)


def min_r(L: float, U: float, p: float) -> float:
    """Infimum of the r for which the margin is positive."""
    _check_lurp(L, U, 1.0, p)
    with mpmath.workdps(_DPS):
        p_ = mpmath.mpf(p)
        a = 1 / p_ - mpmath.mpf(1) / 2
        return float(2 * mpmath.power(mpmath.mpf(U) * mpmath.power(2, 1 / p_ - 1) / mpmath.mpf(L), 1 / a))


@dataclass(frozen=True)
class BoundConstants:
    p: float
    r: float
    L: float
    U: float
    k: int
    C_tilde1: float
    C_tilde2: float
    D_tilde1: float
    D_tilde2: float
    C1: float
    C2: float
    D1: float
    D2: float
    mode: str = "strict"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "BoundConstants":
        return cls(**d)

    def table(self) -> str:
        rows = [("p", self.p), ("r", self.r), ("L", self.L), ("U", self.U), ("k", self.k),
                ("margin", r_margin(self.L, self.U, self.r, self.p)),
                ("C~1", self.C_tilde1), ("C~2", self.C_tilde2), ("D~1", self.D_tilde1),
                ("D~2", self.D_tilde2), ("C1", self.C1), ("C2", self.C2), ("D1", self.D1),
                ("D2", self.D2)]
        return "\n".join(f"{name:<8}{value:.12g}" for name, value in rows)


def theorem_constants(L: float, U: float, r: float, p: float, k: int, *, mode: str = "strict") -> BoundConstants:
    """All eight constants for (L, U, r, p, k); rejects a nonpositive margin."""
    _check_lurp(L, U, r, p)
    if int(k) < 1:
        raise InputError(f"k must be a positive integer, got {k}")
    with mpmath.workdps(_DPS):
        L_, U_, r_, p_ = (mpmath.mpf(v) for v in (L, U, r, p))
        margin = _margin_mp(L_, U_, r_, p_)
        if margin <= 0:
            raise InputError(f"r-constraint violated: {MARGIN_CONSTRAINT} fails "
                             f"(margin {float(margin):.6g} for L={L}, U={U}, r={r}, p={p})")
        one = mpmath.mpf(1)
        a = 1 / p_ - one / 2
        c = mpmath.power(2, 1 / p_ - 1)
        lift = mpmath.power(2 + r_, 1 - p_ / 2)
        Ct2 = U_ * (c / mpmath.power(r_, a) + 1) / margin
        Ct1 = lift * mpmath.power(Ct2, p_)
        Dt2 = 2 / margin
        Dt1 = lift * mpmath.power(Dt2, p_)
        C1 = c * mpmath.power(2 * Ct1 + 2, 1 / p_)
        D1 = c * mpmath.power(Dt1, 1 / p_)
        head = 1 + c / mpmath.power(r_ / 2, a)
        C2 = head * Ct2 + c / mpmath.power(r_, a) + 1
        D2 = head * Dt2
        vals = [float(v) for v in (Ct1, Ct2, Dt1, Dt2, C1, C2, D1, D2)]
    if not all(math.isfinite(v) and v > 0 for v in vals):
        raise InputError("constants overflow double precision for these inputs")
    return BoundConstants(float(p), float(r), float(L), float(U), int(k), *vals, mode=mode)


def closed_form_p1(L: float, U: float, r: float) -> dict:
    """Closed forms at p = 1, evaluated independently of :func:`theorem_constants`."""
    with mpmath.workdps(_DPS):
        L_, U_, r_ = (mpmath.mpf(v) for v in (L, U, r))
        q = U_ / L_
        den = 1 - q * mpmath.sqrt(2 / r_)
        s = 1 / mpmath.sqrt(r_) + 1
        t = 1 + 1 / mpmath.sqrt(r_ / 2)
        return {
            "C1": float(2 * q * s * mpmath.sqrt(2 + r_) / den + 2),
            "D1": float(2 * mpmath.sqrt(2 + r_) / (L_ * den)),
            "C2": float(q * s * t / den + s),
            "D2": float(2 * t / (L_ * den)),
        }


def select_r(L: float, U: float, p: float, k: int, *, target: str = "C1",
             r_max: Optional[float] = None, grid: int = 400) -> float:
    """The r on a log grid above :func:`min_r` that minimises the ``target`` constant."""
    if target not in ("C1", "C2", "D1", "D2"):
        raise InputError(f"unknown target constant {target!r}")
    lo = min_r(L, U, p) * (1 + 1e-6)
    hi = max(lo * 1e4, 1e3) if r_max is None else float(r_max)
    if hi <= lo:
        raise InputError(f"no admissible r: need r > {lo:.6g} but r_max = {hi:.6g}")
    best_r, best = None, math.inf
    for r in np.geomspace(lo * (1 + 1e-3), hi, grid):
        try:
            val = getattr(theorem_constants(L, U, float(r), p, k), target)
        except InputError:
            continue
        if val < best:
            best_r, best = float(r), val
    if best_r is None:
        raise InputError("no admissible r found on the search grid")
    return best_r


def constants_from_estimate(estimate: Union[BiLipschitzEstimate, tuple], p: float, k: int, *,
                            mode: str = "empirical", kappa: float = 2.0, r: Optional[float] = None,
                            target: str = "C1") -> BoundConstants:
    """Constants from an estimate (or an (L, U) pair) in strict or empirical mode.

    An estimate's normalized values are multiplied back by sqrt(m), because the bounds are
    stated for the unnormalized map. ``strict`` uses (L, U) as given. ``empirical``
    dilates to (L/kappa, kappa*U), since sampled extrema overstate L and understate U. When r is not given it is chosen by
    :func:`select_r`, capped so that (r + 4)k stays within the estimate's sparsity level
    unless the estimate already covers all of F^n.
    """
    if mode not in ("strict", "empirical"):
        raise InputError(f"mode must be 'strict' or 'empirical', got {mode!r}")
    if not kappa >= 1:
        raise InputError("kappa must be at least 1")
    r_max = None
    if isinstance(estimate, BiLipschitzEstimate):
        scale = math.sqrt(estimate.m) if estimate.m else 1.0
        L, U = estimate.L_hat * scale, estimate.U_hat * scale
        s, n = estimate.sparsity_level, estimate.n
        if s < n:
            r_max = s / k - 4
            if r_max <= 0:
                raise InputError(f"sparsity level {s} is below 4k = {4 * k}: no admissible r")
    else:
        L, U = estimate
    if mode == "empirical":
        L, U = L / kappa, U * kappa
    if r is None:
        r = select_r(L, U, p, k, target=target, r_max=r_max)
    elif r_max is not None and r > r_max:
        raise InputError(f"(r + 4)k = {(r + 4) * k:g} exceeds the estimate's sparsity level")
    return theorem_constants(L, U, r, p, k, mode=mode)


@dataclass(frozen=True)
class BoundRecord:
    norm_pair: str
    lhs: float
    rhs: float
    ratio: float
    satisfied: bool
    sigma: float

    def to_dict(self) -> dict:
        return asdict(self)


def _norm_pair(norm_pair) -> str:
    if isinstance(norm_pair, (tuple, list)):
        norm_pair = "".join("p" if v == "p" else str(int(v)) for v in norm_pair)
    norm_pair = str(norm_pair).replace(",", "").replace("(", "").replace(")", "").replace(" ", "")
    if norm_pair not in NORM_PAIRS:
        raise InputError(f"norm_pair must be (p,p) or (2,p), got {norm_pair!r}")
    return norm_pair


def bound_rhs(constants: BoundConstants, sigma: float, eta: float, norm_pair="pp") -> float:
    k, p = constants.k, constants.p
    kf = k ** (1 / p - 0.5)
    if _norm_pair(norm_pair) == "pp":
        return constants.C1 * sigma + constants.D1 * kf * eta
    return constants.C2 * sigma / kf + constants.D2 * eta


def check_instance_bound(result, x_true, constants: BoundConstants, eta: float,
                         norm_pair="pp", *, atol: float = 0.0) -> BoundRecord:
    """Evaluate one error bound for a decoded point.

    ``result`` is a DecodeResult or a vector. lhs is dist_p (for (p,p)) or dist_2 (for
    (2,p)) between the decoded point and ``x_true``; the bound is satisfied when
    lhs <= rhs + atol. The ratio lhs/rhs is 0 when lhs is 0, or within atol of a zero
    rhs, and inf when only rhs is 0.
    """
    pair = _norm_pair(norm_pair)
    z = result.solution if hasattr(result, "solution") else as_signal(result)
    x = as_signal(x_true)
    if z.n != x.n or z.field is not x.field:
        raise InputError("decoded and true signals differ in length or field")
    if not eta >= 0:
        raise InputError("eta must be nonnegative")
    p = constants.p
    if constants.k > x.n:
        raise InputError(f"k = {constants.k} exceeds n = {x.n}")
    sigma = sigma_k(x, constants.k, p)
    lhs = dist_p(z, x, p if pair == "pp" else 2.0)
    rhs = bound_rhs(constants, sigma, eta, pair)
    if lhs == 0 or (rhs == 0 and lhs <= atol):
        ratio = 0.0
    elif rhs == 0:
        ratio = math.inf
    else:
        ratio = lhs / rhs
    return BoundRecord(pair, float(lhs), float(rhs), float(ratio), bool(lhs <= rhs + atol), float(sigma))
