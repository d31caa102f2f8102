"""Empirical phaseless bi-Lipschitz bounds on sparse sets.

For a sensing matrix A and the set of s-sparse vectors we look for L, U with

    L * dist(x, y) <= || |Ax| - |Ay| ||_2 <= U * dist(x, y)

by sampling pairs and refining the extremal ones with a local search. Observed
extrema are inner approximations (L_hat >= L, U_hat <= U), never certificates.
Reported values are divided by sqrt(m).

Probe families:
    random      independent supports and values
    colinear    (x, t x) with t in {0.5, 2}: ratio = ||Ax|| / ||x|| exactly
    near        y = x + eps * e on the support of x, eps = 1e-3
    orthogonal  unit x, y with <x, y> = 0, the analytic minimiser for Gaussian A
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, ReportError
from .signal_model import (
    Field,
    _field_normal,
    as_ensemble,
    as_signal,
    dist_p,
    make_rng,
)

PROBE_KINDS = ("random", "colinear", "near", "orthogonal")
NEAR_EPS = 1e-3
COLINEAR_T = (0.5, 2.0)
REFINE_DELTA = 1e-2
REFINE_DECAY = 0.7


def beta0(field: Field) -> float:
    """Optimal lower bound on U/L for Gaussian ensembles over ``field``."""
    if Field.parse(field) is Field.REAL:
        return math.sqrt(math.pi / (math.pi - 2.0))
    return math.sqrt(4.0 / (4.0 - math.pi))


def lipschitz_ratio(A, x, y) -> float:
    """|| |Ax| - |Ay| ||_2 / dist_2(x, y), unnormalized."""
    A = as_ensemble(A)
    x, y = as_signal(x), as_signal(y)
    if x.field is not A.field or y.field is not A.field:
        raise InputError("matrix and vectors must share one field")
    if x.n != A.n or y.n != A.n:
        raise InputError(f"vectors must have length n={A.n}")
    d = dist_p(x, y, 2.0)
    if d == 0:
        raise InputError("lipschitz ratio undefined for dist(x, y) = 0")
    a = A.entries
    return float(np.linalg.norm(np.abs(a @ x.entries) - np.abs(a @ y.entries))) / d


def _ratio(a: np.ndarray, x: np.ndarray, y: np.ndarray, fld: Field) -> Optional[float]:
    d = dist_p(x, y, 2.0) if fld is Field.COMPLEX else min(np.linalg.norm(x - y), np.linalg.norm(x + y))
    if not d > 1e-14 * max(np.linalg.norm(x), np.linalg.norm(y), 1e-300):
        return None
    return float(np.linalg.norm(np.abs(a @ x) - np.abs(a @ y))) / d


@dataclass
class BiLipschitzEstimate:
    L_hat: float
    U_hat: float
    n_pairs: int
    probe_breakdown: dict
    sparsity_level: int
    seed: int
    field: str = "real"
    m: int = 0
    n: int = 0
    n_random_pairs: int = 0
    refine_steps: int = 0
    skipped: int = 0
    extremal_pairs: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.L_hat <= self.U_hat):
            raise InputError(f"invalid estimate: need 0 < L_hat <= U_hat, got {self.L_hat}, {self.U_hat}")
        if self.n_pairs < 1:
            raise InputError("estimate must rest on at least one pair")

    @property
    def ratio(self) -> float:
        return self.U_hat / self.L_hat

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "BiLipschitzEstimate":
        try:
            return cls(**d)
        except TypeError as exc:
            raise ReportError(f"malformed bi-Lipschitz estimate: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "BiLipschitzEstimate":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ReportError(f"malformed JSON: {exc}") from None
        return cls.from_dict(d)


def _pack(v: np.ndarray):
    if np.iscomplexobj(v):
        return [[float(z.real), float(z.imag)] for z in v]
    return [float(z) for z in v]


def _sparse(rng, fld: Field, n: int, s: int) -> np.ndarray:
    v = np.zeros(n, dtype=fld.dtype)
    supp = np.sort(rng.choice(n, size=s, replace=False))
    v[supp] = _field_normal(rng, fld, s)
    return v


def _unit(v: np.ndarray) -> np.ndarray:
    nv = np.linalg.norm(v)
    return v / nv if nv > 0 else v


def _probe(kind: str, rng, fld: Field, n: int, s: int, i: int):
    x = _unit(_sparse(rng, fld, n, s))
    if kind == "random":
        return x, _unit(_sparse(rng, fld, n, s)) * abs(rng.standard_normal() + 1.0)
    if kind == "colinear":
        return x, COLINEAR_T[i % 2] * x
    if kind == "near":
        e = np.zeros_like(x)
        supp = np.flatnonzero(x)
        e[supp] = _field_normal(rng, fld, supp.size)
        return x, x + NEAR_EPS * _unit(e)
    if kind == "orthogonal":
        if 2 * s <= n:
            # disjoint supports
            perm = rng.permutation(n)
            x = np.zeros(n, dtype=fld.dtype)
            y = np.zeros(n, dtype=fld.dtype)
            x[perm[:s]] = _field_normal(rng, fld, s)
            y[perm[s:2 * s]] = _field_normal(rng, fld, s)
            return _unit(x), _unit(y)
        # overlapping supports: orthogonalize y against x on the union
        if s == n or n < 2:
            y = _field_normal(rng, fld, n)
        else:
            y = np.zeros(n, dtype=fld.dtype)
            y[np.flatnonzero(x)] = _field_normal(rng, fld, s)
        y = y - np.vdot(x, y) * x
        return x, _unit(y)
    raise InputError(f"unknown probe kind {kind!r}")


def _refine(a, x, y, fld: Field, sign: float, steps: int, rng) -> tuple:
    """Coordinate-wise multiplicative local search; sign = +1 maximises, -1 minimises.

    Zeros stay zero, so pairs keep their sparsity pattern.
    """
    best = _ratio(a, x, y, fld)
    delta = REFINE_DELTA
    coords = [(0, j) for j in np.flatnonzero(x)] + [(1, j) for j in np.flatnonzero(y)]
    for _ in range(steps):
        improved = False
        for which, j in coords:
            if fld is Field.COMPLEX:
                f = 1.0 + delta * complex(np.exp(2j * math.pi * rng.random()))
            else:
                f = 1.0 + delta * (1.0 if rng.random() < 0.5 else -1.0)
            cand = (x.copy(), y.copy())
            cand[which][j] *= f
            r = _ratio(a, cand[0], cand[1], fld)
            if r is not None and sign * (r - best) > 0:
                x, y = cand
                best = r
                improved = True
        if not improved:
            delta *= REFINE_DECAY
    return best, x, y


def estimate_bilipschitz(A, sparsity_level: int, n_random_pairs: int = 200, refine_steps: int = 50,
                         seed: int = 0, probes: Sequence[str] = PROBE_KINDS) -> BiLipschitzEstimate:
    """Monte Carlo (L_hat, U_hat) over ``sparsity_level``-sparse vectors, normalized by sqrt(m).

    Each of the ``n_random_pairs`` rounds draws one pair per probe family from a sub-seed
    of (seed, round), so a larger ``n_random_pairs`` samples a superset of pairs. The
    overall extremal pairs are then refined for ``refine_steps`` rounds.
    """
    A = as_ensemble(A)
    fld = A.field
    n, m = A.n, A.m
    s = int(sparsity_level)
    if not 1 <= s <= n:
        raise InputError(f"sparsity_level must lie in [1, {n}], got {sparsity_level}")
    if n_random_pairs < 1:
        raise InputError("n_random_pairs must be at least 1")
    if refine_steps < 0:
        raise InputError("refine_steps must be nonnegative")
    for kind in probes:
        if kind not in PROBE_KINDS:
            raise InputError(f"unknown probe kind {kind!r}; expected one of {PROBE_KINDS}")
    a = A.entries
    root_m = math.sqrt(m)
    lo = {kind: (math.inf, None) for kind in probes}
    hi = {kind: (-math.inf, None) for kind in probes}
    skipped = 0
    count = 0
    for i in range(n_random_pairs):
        for kind in probes:
            rng = make_rng(seed, 0x626C, i, PROBE_KINDS.index(kind))
            x, y = _probe(kind, rng, fld, n, s, i)
            r = _ratio(a, x, y, fld)
            if r is None:
                skipped += 1
                continue
            count += 1
            if r < lo[kind][0]:
                lo[kind] = (r, (x, y))
            if r > hi[kind][0]:
                hi[kind] = (r, (x, y))
    if count == 0:
        raise InputError("every sampled pair was degenerate")
    kind_lo = min((k for k in probes if lo[k][1] is not None), key=lambda k: lo[k][0])
    kind_hi = max((k for k in probes if hi[k][1] is not None), key=lambda k: hi[k][0])
    L, (xl, yl) = lo[kind_lo]
    U, (xu, yu) = hi[kind_hi]
    breakdown = {k: {"min": lo[k][0] / root_m, "max": hi[k][0] / root_m}
                 for k in probes if lo[k][1] is not None}
    if refine_steps:
        rng = make_rng(seed, 0x7266)
        L2, xl, yl = _refine(a, xl, yl, fld, -1.0, refine_steps, rng)
        U2, xu, yu = _refine(a, xu, yu, fld, +1.0, refine_steps, rng)
        count += 2
        breakdown["refined"] = {"min": L2 / root_m, "max": U2 / root_m}
        L, U = min(L, L2), max(U, U2)
    return BiLipschitzEstimate(
        L_hat=L / root_m, U_hat=U / root_m, n_pairs=count, probe_breakdown=breakdown,
        sparsity_level=s, seed=int(seed), field=fld.value, m=m, n=n,
        n_random_pairs=int(n_random_pairs), refine_steps=int(refine_steps), skipped=skipped,
        extremal_pairs={"min": {"x": _pack(xl), "y": _pack(yl), "origin": kind_lo},
                        "max": {"x": _pack(xu), "y": _pack(yu), "origin": kind_hi}},
    )


def merge_estimates(*estimates: BiLipschitzEstimate) -> BiLipschitzEstimate:
    """Union of samples: the min of the L_hat values and the max of the U_hat values."""
    if not estimates:
        raise InputError("nothing to merge")
    first = estimates[0]
    for e in estimates[1:]:
        if (e.field, e.m, e.n, e.sparsity_level) != (first.field, first.m, first.n, first.sparsity_level):
            raise InputError("estimates describe different matrices or sparsity levels")
    lo = min(estimates, key=lambda e: e.L_hat)
    hi = max(estimates, key=lambda e: e.U_hat)
    breakdown = {}
    for e in estimates:
        for k, v in e.probe_breakdown.items():
            cur = breakdown.setdefault(k, dict(v))
            cur["min"] = min(cur["min"], v["min"])
            cur["max"] = max(cur["max"], v["max"])
    return BiLipschitzEstimate(
        L_hat=lo.L_hat, U_hat=hi.U_hat, n_pairs=sum(e.n_pairs for e in estimates),
        probe_breakdown=breakdown, sparsity_level=first.sparsity_level, seed=first.seed,
        field=first.field, m=first.m, n=first.n,
        n_random_pairs=sum(e.n_random_pairs for e in estimates),
        refine_steps=max(e.refine_steps for e in estimates),
        skipped=sum(e.skipped for e in estimates),
        extremal_pairs={"min": lo.extremal_pairs.get("min"), "max": hi.extremal_pairs.get("max")},
    )


def check_separation(estimate: BiLipschitzEstimate, field: Optional[Field] = None) -> dict:
    """Compare U_hat/L_hat with beta0 and beta0 + 0.01.

    CONSISTENT when the ratio does not exceed beta0 + 0.05. Because the estimate is an
    inner approximation this is a sanity signal only.
    """
    fld = Field.parse(field if field is not None else estimate.field)
    b = beta0(fld)
    ratio = estimate.U_hat / estimate.L_hat
    return {
        "field": fld.value,
        "ratio": ratio,
        "L_hat": estimate.L_hat,
        "U_hat": estimate.U_hat,
        "beta0": b,
        "beta0_plus_0.01": b + 0.01,
        "consistent": bool(ratio <= b + 0.05),
        "flag": "CONSISTENT" if ratio <= b + 0.05 else "INCONSISTENT",
    }
