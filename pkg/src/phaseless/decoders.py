"""Phaseless l_p-minimization decoders.

All of them approximate

    argmin ||z||_p   subject to   || |Az| - y ||_2 <= eta

which is nonconvex because of the modulus. ``decode_l1`` and ``decode_lp`` are
heuristics (alternating direction splitting, iterative reweighting, random restarts);
``oracle_decode_real`` is an exact global solver for tiny real noiseless instances,
used as ground truth in tests.

The heuristics run in normalized coordinates, A/sqrt(m) and y/||y||_2, and map the
answer back, so the result scales exactly with the data.
"""
from __future__ import annotations

import copy
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InputError
from .signal_model import (
    Field,
    SignalVector,
    as_ensemble,
    as_observation,
    lp_norm,
    make_rng,
    unimodular,
)
from .simplex import OPTIMAL, simplex

__all__ = [
    "DecoderConfig",
    "DecodeResult",
    "decode_l1",
    "decode_lp",
    "oracle_decode_real",
    "multi_restart",
    "project_modulus_ball",
]


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder settings.

    ``penalty_rho`` is the splitting penalty in normalized units (A/sqrt(m), y/||y||).
    ``feasibility_tol`` is relative to ||y||_2: a point is feasible when
    ``|| |Az| - y ||_2 <= eta + feasibility_tol * ||y||_2``.
    """

    p: float = 1.0
    eta: float = 0.0
    max_outer_iters: int = 500
    max_inner_iters: int = 10
    penalty_rho: float = 15.0
    feasibility_tol: float = 1e-9
    objective_tol: float = 1e-12
    restarts: int = 10
    seed: int = 0
    irls_epsilon0: float = 0.1
    irls_epsilon_decay: float = 0.5
    reweight_iters: int = 6
    stall_window: int = 25
    stall_ratio: float = 0.97
    refine: bool = True
    refine_iters: int = 2000
    fallback_rho_factors: tuple = (1 / 3, 3.0)

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise InputError(f"decoder p must lie in (0, 1], got {self.p}")
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise InputError("eta must be finite and nonnegative")
        for name in ("penalty_rho", "feasibility_tol", "objective_tol", "irls_epsilon0"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        for name in ("max_outer_iters", "max_inner_iters", "restarts", "stall_window"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name} must be at least 1")
        if self.reweight_iters < 0 or self.refine_iters < 0:
            raise InputError("iteration counts must be nonnegative")
        if not 0 < self.irls_epsilon_decay < 1:
            raise InputError("irls_epsilon_decay must lie in (0, 1)")
        if not 0 < self.stall_ratio <= 1:
            raise InputError("stall_ratio must lie in (0, 1]")
        if any(not f > 0 for f in self.fallback_rho_factors):
            raise InputError("fallback_rho_factors must be positive")
        if int(self.seed) < 0:
            raise InputError("seed must be nonnegative")

    def replace(self, **changes) -> "DecoderConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class DecodeResult:
    solution: SignalVector
    objective: float
    residual: float
    outer_iters: int
    converged: bool
    restart_index: int = 0
    info: dict = field(default_factory=dict, compare=False)

    def __eq__(self, other):
        if not isinstance(other, DecodeResult):
            return NotImplemented
        return (self.solution == other.solution and self.objective == other.objective
                and self.residual == other.residual and self.outer_iters == other.outer_iters
                and self.converged == other.converged and self.restart_index == other.restart_index)

    __hash__ = None

    def to_dict(self) -> dict:
        z = self.solution.entries
        if self.solution.field is Field.COMPLEX:
            entries = [[float(v.real), float(v.imag)] for v in z]
        else:
            entries = [float(v) for v in z]
        return {
            "field": self.solution.field.value,
            "solution": entries,
            "objective": self.objective,
            "residual": self.residual,
            "outer_iters": self.outer_iters,
            "converged": self.converged,
            "restart_index": self.restart_index,
            "info": _jsonable(self.info),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecodeResult":
        fld = Field.parse(d["field"])
        if fld is Field.COMPLEX:
            z = np.array([complex(a, b) for a, b in d["solution"]])
        else:
            z = np.array(d["solution"], dtype=float)
        return cls(SignalVector(fld, z), float(d["objective"]), float(d["residual"]),
                   int(d["outer_iters"]), bool(d["converged"]), int(d["restart_index"]),
                   dict(d.get("info", {})))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def _pnorm_p(z: np.ndarray, p: float) -> float:
    a = np.abs(z)
    return float(a.sum()) if p == 1 else float(np.sum(a ** p))


def _soft(v: np.ndarray, t) -> np.ndarray:
    a = np.abs(v)
    return v * (np.maximum(a - t, 0.0) / np.where(a > 0, a, 1.0))


def project_modulus_ball(a: np.ndarray, y: np.ndarray, eta: float) -> np.ndarray:
    """Euclidean projection of a >= 0 onto {r >= 0 : ||r - y||_2 <= eta}.

    The projection has the form max(0, (1 - t) a + t y) for some t in [0, 1]; t is
    found exactly by walking the breakpoints where clamped coordinates switch on.
    """
    d = a - y
    dn = float(np.linalg.norm(d))
    if dn <= eta:
        return a.copy()
    if eta == 0:
        return y.copy()
    neg = np.flatnonzero(y < 0)
    if neg.size == 0:
        t = 1.0 - eta / dn
        return (1.0 - t) * a + t * y
    # coordinate i is clamped to 0 once t >= a_i / (a_i - y_i)
    bps = a[neg] / (a[neg] - y[neg])
    order = np.argsort(bps, kind="stable")
    bps, neg = bps[order], neg[order]
    d2 = d * d
    active = float(d2.sum())
    clamped = 0.0
    lo = 0.0
    for j in range(neg.size + 1):
        hi = bps[j] if j < neg.size else 1.0
        # on [lo, hi]: dist^2(t) = (1 - t)^2 * active + clamped
        if active > 0 and eta * eta >= clamped:
            t = 1.0 - math.sqrt((eta * eta - clamped) / active)
            if t <= hi:
                t = max(t, lo)
                return np.maximum(0.0, (1.0 - t) * a + t * y)
        if j < neg.size:
            i = neg[j]
            active -= d2[i]
            clamped += y[i] * y[i]
            lo = hi
    if clamped > eta * eta * (1 + 1e-12):
        raise InputError("observation is inconsistent with eta: the feasible set is empty")
    return np.maximum(0.0, y)


class _Problem:
    """Normalized problem data shared by every restart of one decode call."""

    def __init__(self, A, y, cfg: DecoderConfig):
        self.A = as_ensemble(A)
        self.obs = as_observation(y)
        if self.obs.m != self.A.m:
            raise InputError(f"observation has length {self.obs.m}, matrix has m={self.A.m}")
        self.cfg = cfg
        self.field = self.A.field
        m, n = self.A.m, self.A.n
        self.m, self.n = m, n
        y = self.obs.values
        self.ynorm = float(np.linalg.norm(y))
        self.trivial = self.ynorm <= cfg.eta
        if self.trivial:
            return
        self.root_m = math.sqrt(m)
        self.Ah = self.A.entries / self.root_m
        self.AhH = self.Ah.conj().T
        self.lip = float(np.linalg.norm(self.Ah, 2)) ** 2
        self.yh = y / self.ynorm
        self.etah = cfg.eta / self.ynorm
        if float(np.linalg.norm(np.minimum(self.yh, 0.0))) > self.etah * (1 + 1e-12):
            raise InputError("observation has negative part larger than eta: no feasible point")
        self._pinv = None

    def to_original(self, zh: np.ndarray) -> np.ndarray:
        return zh * (self.ynorm / self.root_m)

    def to_normalized(self, z: np.ndarray) -> np.ndarray:
        return z * (self.root_m / self.ynorm)

    def project(self, v: np.ndarray) -> np.ndarray:
        r = project_modulus_ball(np.abs(v), self.yh, self.etah)
        return r * unimodular(v)

    def residual_h(self, zh: np.ndarray) -> float:
        return float(np.linalg.norm(np.abs(self.Ah @ zh) - self.yh))

    def feasible_h(self, zh: np.ndarray) -> bool:
        return self.residual_h(zh) <= self.etah + self.cfg.feasibility_tol

    @property
    def pinv(self):
        if self._pinv is None:
            P = np.linalg.pinv(self.Ah)
            rank = np.linalg.matrix_rank(self.Ah)
            null = None if rank >= self.n else np.eye(self.n) - P @ self.Ah
            self._pinv = (P, null)
        return self._pinv


def _lasso_fista(prob: _Problem, v: np.ndarray, z: np.ndarray, thresh, iters: int) -> np.ndarray:
    # min 0.5 ||Ah z - v||^2 + sum thresh_i |z_i|, warm-started at z
    step = 1.0 / prob.lip
    zk = z
    yk = z
    tk = 1.0
    for _ in range(iters):
        g = prob.AhH @ (prob.Ah @ yk - v)
        zn = _soft(yk - step * g, step * thresh)
        tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        yk = zn + ((tk - 1.0) / tn) * (zn - zk)
        zk, tk = zn, tn
    return zk


def _admm(prob: _Problem, zh: np.ndarray, weights) -> tuple:
    """Alternating direction splitting Ah z = w; returns (z, iterations, split residual)."""
    cfg = prob.cfg
    thresh = weights / cfg.penalty_rho
    Az = prob.Ah @ zh
    u = np.zeros_like(Az)
    w = prob.project(Az)
    hist = []
    rn = float("inf")
    for it in range(1, cfg.max_outer_iters + 1):
        zh = _lasso_fista(prob, w - u, zh, thresh, cfg.max_inner_iters)
        Az = prob.Ah @ zh
        w = prob.project(Az + u)
        r = Az - w
        u = u + r
        rn = float(np.linalg.norm(r))
        hist.append(rn)
        if rn <= cfg.feasibility_tol:
            break
        # the split residual is not monotone, so compare best values across windows
        win = cfg.stall_window
        if it > 2 * win and rn > 100 * cfg.feasibility_tol and \
                min(hist[-win:]) > cfg.stall_ratio * min(hist[:-win]):
            break
    return zh, it, rn


def _refine(prob: _Problem, zh: np.ndarray, weights) -> Optional[np.ndarray]:
    """Weighted l1 minimization over the affine set selected by the phases of Ah z.

    The target t keeps the phases of Ah z with moduli projected onto the constraint,
    so every point of {z : Ah z = t} is feasible; the minimum is then polished by a
    least-squares solve on its support.
    """
    cfg = prob.cfg
    if prob.etah > 0:
        return _refine_noisy(prob, zh, weights)
    t = prob.project(prob.Ah @ zh)
    P, null = prob.pinv
    x0 = P @ t
    if np.linalg.norm(prob.Ah @ x0 - t) > 1e-10 * max(1.0, float(np.linalg.norm(t))):
        return None
    if null is None:
        return x0
    scale = float(np.abs(x0).max())
    if scale == 0:
        return x0
    thresh = 0.1 * scale * weights / float(np.mean(weights))
    q = zh.astype(x0.dtype)
    u = np.zeros_like(q)
    last = np.inf
    x = x0
    for it in range(1, cfg.refine_iters + 1):
        x = x0 + null @ (q - u)
        q = _soft(x + u, thresh)
        u = u + x - q
        if it % 50 == 0:
            obj = float(np.sum(weights * np.abs(x)))
            if np.linalg.norm(x - q) <= 1e-13 * scale and abs(last - obj) <= cfg.objective_tol * obj:
                break
            last = obj
    support = np.abs(q) > 1e-9 * scale
    best = x
    k = int(support.sum())
    if 0 < k <= prob.m:
        sol, *_ = np.linalg.lstsq(prob.Ah[:, support], t, rcond=None)
        zs = np.zeros_like(x)
        zs[support] = sol
        if np.sum(weights * np.abs(zs)) <= np.sum(weights * np.abs(x)) and \
                np.linalg.norm(prob.Ah @ zs - t) <= 1e-10 * max(1.0, float(np.linalg.norm(t))):
            best = zs
    return best


def _refine_noisy(prob: _Problem, zh: np.ndarray, weights) -> Optional[np.ndarray]:
    """Weighted l1 minimization over a convex ball inside the constraint set.

    With the phases theta of Ah z fixed, c = max(y, 0) * e^{i theta} and radius
    eta - ||min(y, 0)||, every w with ||w - c|| <= radius has || |w| - y || <= eta.
    The ball problem is solved by the same splitting; the last iterate is then moved
    toward the least-squares point of Ah z = c just far enough to enter the ball.
    """
    cfg = prob.cfg
    yh = prob.yh
    rad = prob.etah - float(np.linalg.norm(np.minimum(yh, 0.0)))
    if rad <= 0:
        return None
    c = np.maximum(yh, 0.0) * unimodular(prob.Ah @ zh)
    P, _ = prob.pinv
    z_ls = P @ c
    if np.linalg.norm(prob.Ah @ z_ls - c) > rad:
        return None

    def to_ball(v):
        d = v - c
        dn = float(np.linalg.norm(d))
        return v if dn <= rad else c + d * (rad / dn)

    thresh = weights / cfg.penalty_rho
    z = zh
    Az = prob.Ah @ z
    u = np.zeros_like(Az)
    w = to_ball(Az)
    # the final segment search restores feasibility, so a loose split tolerance suffices
    for _ in range(min(cfg.max_outer_iters, 200)):
        z = _lasso_fista(prob, w - u, z, thresh, cfg.max_inner_iters)
        Az = prob.Ah @ z
        w = to_ball(Az + u)
        r = Az - w
        u = u + r
        if np.linalg.norm(r) <= 1e-6 * rad:
            break

    def inside(lam):
        v = (1 - lam) * z + lam * z_ls
        return np.linalg.norm(prob.Ah @ v - c) <= rad

    if inside(0.0):
        return z
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if inside(mid):
            hi = mid
        else:
            lo = mid
    return (1 - hi) * z + hi * z_ls


def _single_run(prob: _Problem, zh0: np.ndarray, weights) -> tuple:
    """One splitting run plus pattern refinement; returns (z, iters, feasible)."""
    zh, iters, _ = _admm(prob, zh0, weights)
    cands = [zh]
    if prob.cfg.refine:
        zr = _refine(prob, zh, weights)
        if zr is not None:
            cands.append(zr)
    best, best_key = None, None
    for c in cands:
        feas = prob.feasible_h(c)
        key = (0, float(np.sum(weights * np.abs(c)))) if feas else (1, prob.residual_h(c))
        if best_key is None or key < best_key:
            best, best_key = c, key
    return best, iters, best_key[0] == 0


def _result(prob: _Problem, zh: np.ndarray, iters: int, restart: int, **info) -> DecodeResult:
    z = prob.to_original(zh)
    y = prob.obs.values
    residual = float(np.linalg.norm(np.abs(prob.A.entries @ z) - y))
    feasible = prob.feasible_h(zh)
    return DecodeResult(SignalVector(prob.field, z), _pnorm_p(z, prob.cfg.p), residual, int(iters),
                        bool(feasible), int(restart), info)


def _trivial_result(prob: _Problem) -> DecodeResult:
    z = np.zeros(prob.n, dtype=prob.field.dtype)
    return DecodeResult(SignalVector(prob.field, z), 0.0, prob.ynorm, 0, True, 0, {"trivial": True})


def _initial_point(prob: _Problem, init) -> np.ndarray:
    z0 = np.asarray(init if not isinstance(init, SignalVector) else init.entries)
    if z0.shape != (prob.n,):
        raise InputError(f"initial point must have length {prob.n}")
    if prob.field is Field.REAL and np.iscomplexobj(z0):
        raise InputError("complex initial point for a real problem")
    return prob.to_normalized(z0.astype(prob.field.dtype))


def gaussian_start(A, y, seed: int, restart: int) -> np.ndarray:
    """Random field-Gaussian start scaled so that ||A z0|| = ||y||."""
    A = as_ensemble(A)
    yv = as_observation(y).values
    rng = make_rng(seed, 0x7273, restart)
    g = rng.standard_normal(A.n)
    if A.field is Field.COMPLEX:
        g = (g + 1j * rng.standard_normal(A.n)) * math.sqrt(0.5)
    ag = float(np.linalg.norm(A.entries @ g))
    return g * (float(np.linalg.norm(yv)) / ag) if ag > 0 else g


def _l1_run(prob: _Problem, init, restart: int) -> DecodeResult:
    zh, iters, _ = _single_run(prob, _initial_point(prob, init), np.ones(prob.n))
    return _result(prob, zh, iters, restart, method="admm-l1")


def _lp_run(prob: _Problem, init, restart: int) -> DecodeResult:
    cfg = prob.cfg
    p = cfg.p
    ones = np.ones(prob.n)
    zh, iters, feas = _single_run(prob, _initial_point(prob, init), ones)
    best = zh if feas else None
    best_obj = _pnorm_p(zh, p) if feas else np.inf
    history = [best_obj] if feas else []
    eps = cfg.irls_epsilon0
    current = zh
    total = iters
    for _ in range(cfg.reweight_iters):
        weights = (np.abs(current) + eps) ** (p - 1.0)
        cand, it, feas = _single_run(prob, current, weights)
        total += it
        current = cand
        eps *= cfg.irls_epsilon_decay
        if feas:
            obj = _pnorm_p(cand, p)
            if obj < best_obj:
                improvement = best_obj - obj
                best, best_obj = cand, obj
                history.append(obj)
                if improvement <= cfg.objective_tol * obj:
                    break
    if best is None:
        best = current if prob.residual_h(current) <= prob.residual_h(zh) else zh
    unit = (prob.ynorm / prob.root_m) ** p
    return _result(prob, best, total, restart, method="irl1-lp",
                   accepted_objectives=[h * unit for h in history])


def _select(results: list) -> DecodeResult:
    feasible = [r for r in results if r.converged]
    if feasible:
        return min(feasible, key=lambda r: (r.objective, r.restart_index))
    return min(results, key=lambda r: (r.residual, r.restart_index))


def multi_restart(decoder: Callable, A, y, cfg: DecoderConfig, *, workers: int = 1) -> DecodeResult:
    """Run ``decoder`` from ``cfg.restarts`` seeded Gaussian starts and keep the best.

    The best feasible result by objective wins, ties going to the lower restart index;
    with no feasible result the least infeasible one is returned. If a whole round of
    restarts is infeasible, further rounds run with the penalty scaled by each entry
    of ``cfg.fallback_rho_factors`` until one succeeds. Starts are derived
    from ``cfg.seed`` and the restart index, so the outcome does not depend on
    ``workers``.
    """
    if cfg.restarts < 1:
        raise InputError("restarts must be at least 1")
    rounds = [cfg] + [cfg.replace(penalty_rho=cfg.penalty_rho * f) for f in cfg.fallback_rho_factors]
    results = []
    for rnd, rcfg in enumerate(rounds):
        offset = rnd * cfg.restarts
        starts = [gaussian_start(A, y, cfg.seed, offset + j) for j in range(cfg.restarts)]

        def run(j, rcfg=rcfg, starts=starts, offset=offset):
            try:
                return decoder(A, y, rcfg, init=starts[j], restart_index=offset + j)
            except Exception as exc:  # reported only if every restart fails
                return exc

        if workers > 1 and cfg.restarts > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results += list(pool.map(run, range(cfg.restarts)))
        else:
            results += [run(j) for j in range(cfg.restarts)]
        if any(isinstance(r, DecodeResult) and r.converged for r in results):
            break
    ok = [r for r in results if isinstance(r, DecodeResult)]
    if not ok:
        raise results[0]
    best = _select(ok)
    info = dict(best.info)
    info["restart_objectives"] = [r.objective if isinstance(r, DecodeResult) and r.converged else None
                                  for r in results]
    if best.restart_index >= cfg.restarts:
        info["penalty_rho"] = rounds[best.restart_index // cfg.restarts].penalty_rho
    return DecodeResult(best.solution, best.objective, best.residual, best.outer_iters,
                        best.converged, best.restart_index, info)


def decode_l1(A, y, cfg: DecoderConfig = DecoderConfig(), *, init=None, restart_index: int = 0,
              workers: int = 1) -> DecodeResult:
    """Heuristic phaseless l1 decoder.

    Splits Az = w and alternates a soft-thresholded least-squares step in z (FISTA,
    ``max_inner_iters`` steps), projection of Az + u onto {w : || |w| - y || <= eta}
    keeping the phases, and a dual ascent step. Each run ends with an exact l1
    refinement over the affine set fixed by the final phases.

    With ``init`` given a single run is performed; otherwise ``cfg.restarts`` seeded
    starts are tried through :func:`multi_restart`.
    """
    if cfg.p != 1:
        raise InputError("decode_l1 requires cfg.p == 1; use decode_lp for p < 1")
    prob = _Problem(A, y, cfg)
    if prob.trivial:
        return _trivial_result(prob)
    if init is None:
        return multi_restart(_bind(decode_l1, prob), A, y, cfg, workers=workers)
    return _l1_run(prob, init, restart_index)


def decode_lp(A, y, cfg: DecoderConfig, *, init=None, restart_index: int = 0,
              workers: int = 1) -> DecodeResult:
    """Heuristic phaseless l_p decoder (0 < p < 1) by iteratively reweighted l1.

    Outer iteration t reweights with (|z_i| + eps_t)**(p - 1), eps shrinking by
    ``irls_epsilon_decay``; a reweighted point is accepted only if it is feasible and
    lowers ||z||_p^p.
    """
    if not 0 < cfg.p < 1:
        raise InputError("decode_lp requires 0 < cfg.p < 1")
    prob = _Problem(A, y, cfg)
    if prob.trivial:
        return _trivial_result(prob)
    if init is None:
        return multi_restart(_bind(decode_lp, prob), A, y, cfg, workers=workers)
    return _lp_run(prob, init, restart_index)


def _bind(public: Callable, prob: _Problem) -> Callable:
    # reuse the normalized problem (and its pseudo-inverse) across restarts
    run = _l1_run if public is decode_l1 else _lp_run

    def decoder(A, y, cfg, *, init, restart_index=0):
        if cfg is prob.cfg:
            return run(prob, init, restart_index)
        alt = copy.copy(prob)
        alt.cfg = cfg
        return run(alt, init, restart_index)

    return decoder


def decode(A, y, cfg: DecoderConfig = DecoderConfig(), **kw) -> DecodeResult:
    """Dispatch to :func:`decode_l1` or :func:`decode_lp` by ``cfg.p``."""
    return decode_l1(A, y, cfg, **kw) if cfg.p == 1 else decode_lp(A, y, cfg, **kw)


# --- exact oracle ---------------------------------------------------------------

ORACLE_MAX_M = 14
ORACLE_MAX_N = 10


def _vertex_min(z0: np.ndarray, V: np.ndarray, p: float) -> np.ndarray:
    """Minimise ||z0 + V t||_p^p over t (dim t <= 2) by enumerating arrangement vertices.

    The objective is concave on every cell of the arrangement {z_i = 0}, so the
    minimum sits at a vertex: a point where dim(t) coordinates of z vanish.
    """
    d = V.shape[1]
    n = V.shape[0]
    best, best_val = z0, _pnorm_p(z0, p)
    for rows in itertools.combinations(range(n), d):
        M = V[list(rows)]
        if abs(np.linalg.det(M)) <= 1e-12 * max(1.0, float(np.abs(M).max()) ** d):
            continue
        t = np.linalg.solve(M, -z0[list(rows)])
        z = z0 + V @ t
        z[list(rows)] = 0.0
        val = _pnorm_p(z, p)
        if val < best_val:
            best, best_val = z, val
    return best


def _snap_support(a: np.ndarray, b: np.ndarray, z: np.ndarray, tol: float) -> np.ndarray:
    """Zero round-off entries of z and re-solve Az = b on the remaining support.

    For p < 1 an entry of size 1e-17 still contributes 1e-8.5 to ||z||_p^p, so the
    cleaned point is kept whenever it solves the system as well as z does.
    """
    keep = np.abs(z) > 1e-10 * max(float(np.abs(z).max()), 1e-300)
    if keep.all():
        return z
    w = np.zeros_like(z)
    if keep.any():
        w[keep] = np.linalg.lstsq(a[:, keep], b, rcond=None)[0]
    return w if np.linalg.norm(a @ w - b) <= tol else z


def oracle_decode_real(A, y, p: float = 1.0, eta: float = 0.0) -> DecodeResult:
    """Exact global minimizer of ||z||_p subject to |Az| = y for tiny real instances.

    Enumerates the 2**(m-1) sign patterns D (the first sign is fixed because z and
    -z are equivalent). Patterns with D y outside the range of A are dropped; for the
    rest, p = 1 solves min ||z||_1 s.t. Az = Dy as a linear program (z = z+ - z-)
    with the simplex method, and p < 1 enumerates the vertices of the affine
    solution set, which requires its dimension n - rank(A) to be at most 2.
    """
    A = as_ensemble(A)
    obs = as_observation(y)
    if A.field is not Field.REAL:
        raise InputError("oracle_decode_real supports the real field only")
    m, n = A.m, A.n
    if obs.m != m:
        raise InputError(f"observation has length {obs.m}, matrix has m={m}")
    if m > ORACLE_MAX_M or n > ORACLE_MAX_N:
        raise InputError(f"oracle limited to m <= {ORACLE_MAX_M}, n <= {ORACLE_MAX_N}; got m={m}, n={n}")
    if eta != 0:
        raise InputError("oracle_decode_real handles eta = 0 (equality constraints) only")
    if not 0 < p <= 1:
        raise InputError(f"p must lie in (0, 1], got {p}")
    a = A.entries
    yv = obs.values
    rank = int(np.linalg.matrix_rank(a))
    null_dim = n - rank
    if p < 1 and null_dim > 2:
        raise InputError(f"oracle for p < 1 needs a solution set of dimension <= 2, got {null_dim}")
    ynorm = float(np.linalg.norm(yv))
    if ynorm == 0:
        z = np.zeros(n)
        return DecodeResult(SignalVector(Field.REAL, z), 0.0, 0.0, 1, True, 0,
                            {"method": "oracle", "patterns_feasible": 1})

    U, s, Vt = np.linalg.svd(a)
    Q = U[:, :rank]
    null_basis = Vt[rank:].T
    signs = np.array([(1.0,) + t for t in itertools.product((1.0, -1.0), repeat=m - 1)])
    B = signs * yv
    resid = np.linalg.norm(B - (B @ Q) @ Q.T, axis=1)
    tol = 1e-9 * max(1.0, ynorm)
    feasible = np.flatnonzero(resid <= tol)

    best_z, best_val = None, np.inf
    pinv = np.linalg.pinv(a)
    for idx in feasible:
        b = B[idx]
        if p == 1:
            lp = simplex(np.ones(2 * n), np.hstack([a, -a]), b)
            if lp.status != OPTIMAL:
                continue
            z = lp.x[:n] - lp.x[n:]
        else:
            z0 = pinv @ b
            z = z0 if null_dim == 0 else _vertex_min(z0, null_basis, p)
            z = _snap_support(a, b, z, 1e-9 * max(1.0, ynorm))
        if np.linalg.norm(a @ z - b) > 1e-7 * max(1.0, ynorm):
            continue
        val = _pnorm_p(z, p)
        if val < best_val:
            best_z, best_val = z, val
    if best_z is None:
        raise InputError("no sign pattern admits an exact solution; is y = |Ax| for some x?")
    residual = float(np.linalg.norm(np.abs(a @ best_z) - yv))
    return DecodeResult(SignalVector(Field.REAL, best_z), best_val, residual, int(len(signs)), True, 0,
                        {"method": "oracle", "patterns_feasible": int(feasible.size), "p": p})
