"""Signals, sensing ensembles, phase-invariant distances and the phaseless forward map.

Every vector and matrix carries a :class:`Field` tag. Operations that combine two
objects require the tags to agree; there is no implicit real-to-complex promotion.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Union

import numpy as np

from .errors import InputError

__all__ = [
    "Field",
    "SignalVector",
    "MeasurementEnsemble",
    "PhaselessObservation",
    "NoiseSpec",
    "as_signal",
    "gaussian_matrix",
    "phaseless_measure",
    "lp_norm",
    "dist_p",
    "sigma_k",
    "sample_signal",
    "unimodular",
    "make_rng",
]

VARIANCE_CONVENTION = {
    "real": "i.i.d. N(0,1) entries",
    "complex": "i.i.d. N(0,1/2) + i N(0,1/2) entries (unit second moment)",
}


class Field(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def dtype(self):
        return np.float64 if self is Field.REAL else np.complex128

    @classmethod
    def parse(cls, value: Union[str, "Field"]) -> "Field":
        if isinstance(value, Field):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"unknown field {value!r}; expected 'real' or 'complex'") from None

    @classmethod
    def of_array(cls, a: np.ndarray) -> "Field":
        return cls.COMPLEX if np.iscomplexobj(a) else cls.REAL


def make_rng(*seed_parts: int) -> np.random.Generator:
    """PCG64 generator keyed by a tuple of non-negative integers."""
    for s in seed_parts:
        if int(s) < 0:
            raise InputError(f"seeds must be non-negative, got {s}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(s) for s in seed_parts])))


def _coerce_entries(entries, fld: Field, ndim: int, what: str) -> np.ndarray:
    arr = np.asarray(entries)
    if arr.ndim != ndim:
        raise InputError(f"{what} must be {ndim}-dimensional, got shape {arr.shape}")
    if fld is Field.REAL and np.iscomplexobj(arr):
        raise InputError(f"{what} is tagged real but has complex entries")
    if not (np.issubdtype(arr.dtype, np.number) or arr.dtype == bool):
        raise InputError(f"{what} entries must be numeric")
    arr = np.array(arr, dtype=fld.dtype, copy=True)
    if arr.size == 0 or any(d < 1 for d in arr.shape):
        raise InputError(f"{what} must have positive dimensions, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{what} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SignalVector:
    """A length-n vector over a declared field."""

    field: Field
    entries: np.ndarray

    def __post_init__(self):
        fld = Field.parse(self.field)
        object.__setattr__(self, "field", fld)
        object.__setattr__(self, "entries", _coerce_entries(self.entries, fld, 1, "signal"))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def scaled(self, c) -> "SignalVector":
        if self.field is Field.REAL and np.iscomplexobj(c) and np.imag(c) != 0:
            raise InputError("cannot scale a real signal by a complex factor")
        c = np.real(c) if self.field is Field.REAL else c
        return SignalVector(self.field, self.entries * c)

    def norm(self, p: float = 2.0) -> float:
        return lp_norm(self.entries, p)

    def __eq__(self, other):
        if not isinstance(other, SignalVector):
            return NotImplemented
        return self.field is other.field and np.array_equal(self.entries, other.entries)

    __hash__ = None


def as_signal(x, field: Optional[Union[str, Field]] = None) -> SignalVector:
    """Wrap an array as a :class:`SignalVector`; the field is inferred from the dtype if omitted."""
    if isinstance(x, SignalVector):
        if field is not None and Field.parse(field) is not x.field:
            raise InputError(f"field mismatch: signal is {x.field.value}, expected {Field.parse(field).value}")
        return x
    fld = Field.parse(field) if field is not None else Field.of_array(np.asarray(x))
    return SignalVector(fld, x)


@dataclass(frozen=True)
class MeasurementEnsemble:
    """An m x n sensing matrix plus the metadata needed to regenerate it."""

    field: Field
    entries: np.ndarray
    seed: Optional[int] = None
    variance_convention: str = ""

    def __post_init__(self):
        fld = Field.parse(self.field)
        object.__setattr__(self, "field", fld)
        object.__setattr__(self, "entries", _coerce_entries(self.entries, fld, 2, "measurement matrix"))
        if not self.variance_convention:
            object.__setattr__(self, "variance_convention", VARIANCE_CONVENTION[fld.value])

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def __eq__(self, other):
        if not isinstance(other, MeasurementEnsemble):
            return NotImplemented
        return (self.field is other.field and self.seed == other.seed
                and np.array_equal(self.entries, other.entries))

    __hash__ = None


def as_ensemble(A, field: Optional[Union[str, Field]] = None) -> MeasurementEnsemble:
    if isinstance(A, MeasurementEnsemble):
        if field is not None and Field.parse(field) is not A.field:
            raise InputError("field mismatch between matrix and expected field")
        return A
    fld = Field.parse(field) if field is not None else Field.of_array(np.asarray(A))
    return MeasurementEnsemble(fld, A)


@dataclass(frozen=True)
class PhaselessObservation:
    """Magnitude measurements y = |Ax| (+ e).

    Noisy observations are not clamped, so ``noisy=True`` lifts the nonnegativity
    requirement.
    """

    values: np.ndarray
    noisy: bool = False
    eta: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise InputError("observations must be real")
        v = _coerce_entries(v, Field.REAL, 1, "observation")
        if not self.noisy and np.any(v < 0):
            raise InputError("noiseless observations must be nonnegative")
        if self.eta < 0 or not math.isfinite(self.eta):
            raise InputError("eta must be a finite nonnegative number")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def as_observation(y) -> PhaselessObservation:
    if isinstance(y, PhaselessObservation):
        return y
    y = np.asarray(y, dtype=float)
    return PhaselessObservation(y, noisy=bool(np.any(y < 0)))


@dataclass(frozen=True)
class NoiseSpec:
    """An l2 noise budget ``eta`` and optionally a concrete realisation ``e``."""

    eta: float
    e: Optional[np.ndarray] = dc_field(default=None)

    def __post_init__(self):
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise InputError("eta must be a finite nonnegative number")
        if self.e is not None:
            e = _coerce_entries(self.e, Field.REAL, 1, "noise vector")
            if np.linalg.norm(e) > self.eta * (1 + 1e-12):
                raise InputError(f"noise norm {np.linalg.norm(e):.6g} exceeds eta = {self.eta:.6g}")
            object.__setattr__(self, "e", e)

    @classmethod
    def on_sphere(cls, m: int, eta: float, seed: int) -> "NoiseSpec":
        """Noise drawn uniformly from the sphere of radius ``eta`` in R^m."""
        if m < 1:
            raise InputError("m must be positive")
        if eta == 0:
            return cls(0.0, np.zeros(m))
        g = make_rng(seed, 0x6E6F).standard_normal(m)
        e = g * (eta / np.linalg.norm(g))
        # keep ||e|| <= eta after rounding
        nrm = np.linalg.norm(e)
        if nrm > eta:
            e = e * (eta / nrm)
        return cls(float(eta), e)


def gaussian_matrix(field: Union[str, Field], m: int, n: int, seed: int) -> MeasurementEnsemble:
    """Standard Gaussian sensing matrix.

    Real entries are N(0, 1); complex entries have independent N(0, 1/2) real and
    imaginary parts, so every entry has unit second moment in both cases.
    """
    fld = Field.parse(field)
    if int(m) < 1 or int(n) < 1:
        raise InputError(f"matrix dimensions must be positive, got m={m}, n={n}")
    if int(seed) < 0 or int(seed) >= 2 ** 64:
        raise InputError("seed must be a 64-bit unsigned integer")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    m, n = int(m), int(n)
    if fld is Field.REAL:
        a = rng.standard_normal((m, n))
    else:
        re = rng.standard_normal((m, n))
        im = rng.standard_normal((m, n))
        a = (re + 1j * im) * math.sqrt(0.5)
    return MeasurementEnsemble(fld, a, seed=int(seed))


def _check_pair(a: SignalVector, b: SignalVector):
    if a.field is not b.field:
        raise InputError(f"field mismatch: {a.field.value} vs {b.field.value}")
    if a.n != b.n:
        raise InputError(f"dimension mismatch: {a.n} vs {b.n}")


def phaseless_measure(A, x, noise: Optional[NoiseSpec] = None) -> PhaselessObservation:
    """Return |Ax|, or |Ax| + e when a noise realisation is supplied."""
    A = as_ensemble(A)
    x = as_signal(x)
    if A.field is not x.field:
        raise InputError(f"field mismatch: matrix is {A.field.value}, signal is {x.field.value}")
    if A.n != x.n:
        raise InputError(f"dimension mismatch: matrix has n={A.n}, signal has n={x.n}")
    y = np.abs(A.entries @ x.entries)
    if noise is None:
        return PhaselessObservation(y)
    if noise.e is None:
        return PhaselessObservation(y, noisy=True, eta=noise.eta)
    if noise.e.shape[0] != A.m:
        raise InputError(f"noise vector has length {noise.e.shape[0]}, expected {A.m}")
    return PhaselessObservation(y + noise.e, noisy=True, eta=noise.eta)


def lp_norm(v, p: float) -> float:
    """(sum |v_i|^p)^(1/p); a quasi-norm for p < 1."""
    a = np.abs(np.asarray(v))
    if p == 2:
        return float(np.linalg.norm(a))
    if p == 1:
        return float(a.sum())
    return float(np.sum(a ** p) ** (1.0 / p))


def _check_p(p: float, upper: float = 2.0):
    if not (0 < p <= upper):
        raise InputError(f"p must lie in (0, {upper:g}], got {p}")


def unimodular(z):
    """z/|z| with the convention unimodular(0) = 1."""
    z = np.asarray(z)
    a = np.abs(z)
    out = np.ones_like(z)
    nz = a > 0
    out[nz] = z[nz] / a[nz]
    return out


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _phase_objective(x: np.ndarray, y: np.ndarray, theta: np.ndarray, p: float) -> np.ndarray:
    rot = np.exp(1j * np.asarray(theta))[..., None]
    return np.sum(np.abs(x - rot * y) ** p, axis=-1)


def _complex_dist_p(x: np.ndarray, y: np.ndarray, p: float, grid: int, width: float) -> float:
    # minimise sum |x_i - e^{it} y_i|^p over t: uniform grid, then golden-section refinement
    h = 2 * math.pi / grid
    thetas = np.arange(grid) * h
    vals = _phase_objective(x, y, thetas, p)
    best = float(vals.min())

    # each term is smallest where e^{it} y_i is aligned with x_i
    nz = (np.abs(x) > 0) & (np.abs(y) > 0)
    aligned = np.mod(np.angle(x[nz]) - np.angle(y[nz]), 2 * math.pi)
    if aligned.size:
        best = min(best, float(_phase_objective(x, y, aligned, p).min()))

    is_local = (vals <= np.roll(vals, 1)) & (vals <= np.roll(vals, -1))
    local = np.flatnonzero(is_local)
    local = local[np.argsort(vals[local], kind="stable")][:4]
    centres = np.concatenate([thetas[local], aligned])
    lo = centres - h
    hi = centres + h
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc = _phase_objective(x, y, c, p)
    fd = _phase_objective(x, y, d, p)
    best = min(best, float(fc.min()), float(fd.min()))
    while np.max(hi - lo) > width:
        left = fc < fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        c_new = np.where(left, hi - _GOLDEN * (hi - lo), d)
        d_new = np.where(left, c, lo + _GOLDEN * (hi - lo))
        fnew = _phase_objective(x, y, np.where(left, c_new, d_new), p)
        fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        c, d = c_new, d_new
        best = min(best, float(fnew.min()))
    return best ** (1.0 / p)


def dist_p(x, y, p: float = 2.0, *, grid: int = 1024, width: float = 1e-10) -> float:
    """Distance between x and y modulo a global unimodular factor.

    ``min_{|c| = 1} ||x - c y||_p``. Exact for the real field and for complex p = 2; for
    complex p != 2 the phase angle is located on a ``grid``-point sweep and refined by
    golden-section search down to an interval of ``width`` radians.
    """
    x = as_signal(x)
    y = as_signal(y)
    _check_pair(x, y)
    _check_p(p)
    if grid < 8:
        raise InputError("grid must have at least 8 points")
    xv, yv = x.entries, y.entries
    if x.field is Field.REAL:
        return min(lp_norm(xv - yv, p), lp_norm(xv + yv, p))
    if p == 2:
        c = unimodular(np.vdot(yv, xv))
        return lp_norm(xv - c * yv, 2)
    if not np.any(yv):
        return lp_norm(xv, p)
    if not np.any(xv):
        return lp_norm(yv, p)
    return _complex_dist_p(xv, yv, p, grid, width)


def top_k_support(v: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest-magnitude entries; ties go to the lowest index."""
    order = np.argsort(-np.abs(v), kind="stable")
    return np.sort(order[:k])


def sigma_k(x, k: int, q: float = 1.0) -> float:
    """Best k-term approximation error of x in the l_q (quasi-)norm."""
    x = as_signal(x)
    _check_p(q)
    if not (0 <= int(k) <= x.n) or int(k) != k:
        raise InputError(f"k must be an integer in [0, {x.n}], got {k}")
    mask = np.ones(x.n, dtype=bool)
    mask[top_k_support(x.entries, int(k))] = False
    return lp_norm(x.entries[mask], q) if mask.any() else 0.0


def _field_normal(rng: np.random.Generator, fld: Field, size) -> np.ndarray:
    if fld is Field.REAL:
        return rng.standard_normal(size)
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (re + 1j * im) * math.sqrt(0.5)


def _random_unimodular(rng: np.random.Generator, fld: Field, size) -> np.ndarray:
    if fld is Field.REAL:
        return rng.choice(np.array([-1.0, 1.0]), size=size)
    return np.exp(2j * math.pi * rng.random(size))


SIGNAL_KINDS = ("exactly_sparse", "power_decay", "flat_tail")


def sample_signal(kind: str, n: int, k: int, field: Union[str, Field], seed: int, **params) -> SignalVector:
    """Draw a test signal.

    kinds:
      exactly_sparse: uniformly random size-k support with i.i.d. field-Gaussian values.
      power_decay: sorted magnitudes j**(-alpha) (``alpha`` param, default 1), random
        signs or phases, randomly permuted.
      flat_tail: k entries of magnitude ``head`` (default 1) plus n - k entries of
        magnitude ``eps`` (default 0.1), random signs or phases, random positions.

    ``scale`` (default 1) multiplies the result.
    """
    fld = Field.parse(field)
    n, k = int(n), int(k)
    if n < 1:
        raise InputError("n must be positive")
    if not 1 <= k <= n:
        raise InputError(f"k must lie in [1, n={n}], got {k}")
    scale = float(params.pop("scale", 1.0))
    rng = make_rng(seed, 0x5367)
    if kind == "exactly_sparse":
        _no_extra(params, kind)
        x = np.zeros(n, dtype=fld.dtype)
        support = rng.choice(n, size=k, replace=False)
        x[support] = _field_normal(rng, fld, k)
    elif kind == "power_decay":
        alpha = float(params.pop("alpha", 1.0))
        _no_extra(params, kind)
        if not alpha > 0:
            raise InputError(f"alpha must be positive, got {alpha}")
        mags = np.arange(1, n + 1, dtype=float) ** (-alpha)
        x = np.zeros(n, dtype=fld.dtype)
        x[rng.permutation(n)] = mags * _random_unimodular(rng, fld, n)
    elif kind == "flat_tail":
        eps = float(params.pop("eps", 0.1))
        head = float(params.pop("head", 1.0))
        _no_extra(params, kind)
        if not (0 <= eps < head):
            raise InputError(f"flat_tail needs 0 <= eps < head, got eps={eps}, head={head}")
        mags = np.full(n, eps)
        perm = rng.permutation(n)
        mags[perm[:k]] = head
        x = mags * _random_unimodular(rng, fld, n)
    else:
        raise InputError(f"unknown signal kind {kind!r}; expected one of {SIGNAL_KINDS}")
    return SignalVector(fld, x * scale)


def _no_extra(params: dict, kind: str):
    if params:
        raise InputError(f"unexpected parameters for {kind}: {sorted(params)}")
