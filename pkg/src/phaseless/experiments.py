"""Seeded recovery campaigns and their persisted reports.

Every random object in a campaign comes from a sub-seed of (config seed, trial index,
purpose), so trials can run in any order or in parallel and records are reproducible
one by one. Reports are JSON with a versioned schema; aggregates are recomputed from
the records whenever a report is loaded.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field, fields
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .bilipschitz import estimate_bilipschitz
from .bounds import check_instance_bound, constants_from_estimate
from .decoders import DecoderConfig, decode, oracle_decode_real
from .errors import InputError, ReportError
from .signal_model import (
    SIGNAL_KINDS,
    Field,
    NoiseSpec,
    SignalVector,
    as_signal,
    dist_p,
    gaussian_matrix,
    make_rng,
    phaseless_measure,
    sample_signal,
    sigma_k,
)

SCHEMA_VERSION = 1
CAMPAIGN_KINDS = ("uniform", "noise_sweep", "nonuniform_22", "impossibility_22")
QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)
BOOTSTRAP_RESAMPLES = 1000

_PURPOSE = {"matrix": 0x41, "signal": 0x78, "noise": 0x65, "decoder": 0x64, "lipschitz": 0x6C,
            "bootstrap": 0x62}


def sub_seed(seed: int, trial: int, purpose: str) -> int:
    """Deterministic 63-bit seed for one purpose within one trial."""
    return int(make_rng(seed, _PURPOSE[purpose], trial).integers(0, 2 ** 63))


def default_m(k: int, n: int, gamma: float = 5.0) -> int:
    """ceil(gamma * k * log(e n / k))."""
    return int(math.ceil(gamma * k * math.log(math.e * n / k)))


def _decoder_from(d) -> DecoderConfig:
    if isinstance(d, DecoderConfig):
        return d
    d = dict(d)
    known = {f.name for f in fields(DecoderConfig)}
    bad = sorted(set(d) - known)
    if bad:
        raise InputError(f"unknown decoder keys: {', '.join(bad)}")
    if "fallback_rho_factors" in d:
        d["fallback_rho_factors"] = tuple(d["fallback_rho_factors"])
    return DecoderConfig(**d)


@dataclass(frozen=True)
class ExperimentConfig:
    """One campaign. ``m = 0`` means ceil(gamma * k * log(e n / k)).

    bound_mode ``strict`` needs explicit (L, U); ``empirical`` estimates them per trial
    and dilates by ``kappa``. With ``eta_relative`` the noise level is a fraction of
    || |Ax| ||_2 instead of an absolute radius.
    """

    field: str = "complex"
    n: int = 32
    m: int = 0
    k: int = 2
    p: float = 1.0
    eta: float = 0.0
    eta_relative: bool = False
    signal_kind: str = "exactly_sparse"
    signal_params: dict = dc_field(default_factory=dict)
    trials: int = 10
    seed: int = 0
    decoder: DecoderConfig = dc_field(default_factory=DecoderConfig)
    decoder_method: str = "heuristic"
    bound_mode: str = "empirical"
    kappa: float = 2.0
    L: Optional[float] = None
    U: Optional[float] = None
    r: Optional[float] = None
    lipschitz_sparsity: int = 0
    lipschitz_pairs: int = 50
    lipschitz_refine: int = 10
    gamma: float = 5.0
    success_tol: float = 1e-4
    workers: int = 1
    output_path: str = ""

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise InputError("invalid experiment config: " + "; ".join(problems))
        object.__setattr__(self, "decoder", _decoder_from(self.decoder))
        if self.m == 0:
            object.__setattr__(self, "m", default_m(self.k, self.n, self.gamma))

    def problems(self) -> list:
        out = []
        try:
            Field.parse(self.field)
        except InputError as exc:
            out.append(str(exc))
        if int(self.n) < 1:
            out.append("n must be at least 1")
        if int(self.m) < 0:
            out.append("m must be at least 1 (or 0 for the default rule)")
        if not 1 <= int(self.k) <= max(int(self.n), 1):
            out.append(f"k must lie in [1, n], got {self.k}")
        if not 0 < self.p <= 1:
            out.append(f"p must lie in (0, 1], got {self.p}")
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            out.append("eta must be finite and nonnegative")
        if self.signal_kind not in SIGNAL_KINDS:
            out.append(f"signal_kind must be one of {SIGNAL_KINDS}")
        if int(self.trials) < 1:
            out.append("trials must be at least 1")
        if int(self.seed) < 0:
            out.append("seed must be nonnegative")
        if self.decoder_method not in ("heuristic", "oracle"):
            out.append("decoder_method must be 'heuristic' or 'oracle'")
        if self.bound_mode not in ("strict", "empirical"):
            out.append("bound_mode must be 'strict' or 'empirical'")
        if self.bound_mode == "strict" and (self.L is None or self.U is None):
            out.append("strict bound_mode needs L and U")
        if not self.kappa >= 1:
            out.append("kappa must be at least 1")
        if not self.gamma > 0:
            out.append("gamma must be positive")
        if not self.success_tol > 0:
            out.append("success_tol must be positive")
        if int(self.workers) < 1:
            out.append("workers must be at least 1")
        if not 0 <= int(self.lipschitz_sparsity) <= max(int(self.n), 1):
            out.append("lipschitz_sparsity must lie in [0, n] (0 means n)")
        try:
            _decoder_from(self.decoder)
        except (InputError, TypeError) as exc:
            out.append(f"decoder: {exc}")
        return out

    @property
    def fld(self) -> Field:
        return Field.parse(self.field)

    def replace(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(changes)
        return ExperimentConfig.from_dict(d)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        dec = asdict(d["decoder"])
        dec["fallback_rho_factors"] = list(dec["fallback_rho_factors"])
        d["decoder"] = dec
        d["signal_params"] = dict(d["signal_params"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        bad = sorted(set(d) - known)
        if bad:
            raise InputError(f"unknown experiment config keys: {', '.join(bad)}")
        return cls(**d)


@dataclass
class CampaignReport:
    kind: str
    config: dict
    records: list
    aggregates: dict
    wall_clock: float = 0.0
    version: str = __version__
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def __eq__(self, other):
        if not isinstance(other, CampaignReport):
            return NotImplemented
        return _same(self.to_dict(), other.to_dict())

    def curves(self) -> dict:
        return _curves(self)


def _same(a, b) -> bool:
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_same(a[k], b[k]) for k in a)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b


def _vals(records, key):
    return [r[key] for r in records if r.get(key) is not None]


def _quantiles(v) -> dict:
    if not v:
        return {str(q): None for q in QUANTILES}
    arr = np.asarray(v, dtype=float)
    return {str(q): float(np.quantile(arr, q)) for q in QUANTILES}


def _rate(records, key) -> Optional[float]:
    v = _vals(records, key)
    return float(np.mean(v)) if v else None


def _max(v):
    return float(max(v)) if v else None


# --- trial machinery -----------------------------------------------------------

def _trial_data(cfg: ExperimentConfig, i: int):
    fld = cfg.fld
    A = gaussian_matrix(fld, cfg.m, cfg.n, sub_seed(cfg.seed, i, "matrix"))
    x = sample_signal_for(cfg, i)
    return A, x


def sample_signal_for(cfg: ExperimentConfig, i: int) -> SignalVector:
    return sample_signal(cfg.signal_kind, cfg.n, cfg.k, cfg.fld, sub_seed(cfg.seed, i, "signal"),
                         **dict(cfg.signal_params))


def _constants(cfg: ExperimentConfig, A, i: int, eta: float):
    if cfg.bound_mode == "strict":
        pair = (cfg.L, cfg.U)
        return (constants_from_estimate(pair, cfg.p, cfg.k, mode="strict", r=cfg.r),
                constants_from_estimate(pair, cfg.p, cfg.k, mode="strict", r=cfg.r, target="C2"))
    s = cfg.lipschitz_sparsity or cfg.n
    est = estimate_bilipschitz(A, s, cfg.lipschitz_pairs, cfg.lipschitz_refine,
                               sub_seed(cfg.seed, i, "lipschitz"))
    c_pp = constants_from_estimate(est, cfg.p, cfg.k, mode="empirical", kappa=cfg.kappa, r=cfg.r)
    c_2p = constants_from_estimate(est, cfg.p, cfg.k, mode="empirical", kappa=cfg.kappa, r=cfg.r,
                                   target="C2")
    return c_pp, c_2p


def _bound_tol(x: SignalVector, cfg: ExperimentConfig) -> float:
    # heuristic decoders stop at a relative tolerance, so exact recovery shows up as
    # a tiny positive error; allow it against a zero right-hand side
    return 0.0 if cfg.decoder_method == "oracle" else cfg.success_tol * x.norm(2)


def _decode(cfg: ExperimentConfig, A, y, eta: float, i: int):
    if cfg.decoder_method == "oracle":
        return oracle_decode_real(A, y, cfg.p, eta)
    dcfg = cfg.decoder.replace(p=cfg.p, eta=eta, seed=sub_seed(cfg.seed, i, "decoder"))
    return decode(A, y, dcfg)


def _bound_trial(cfg: ExperimentConfig, i: int, A, x: SignalVector, eta: float) -> dict:
    noise = NoiseSpec.on_sphere(cfg.m, eta, sub_seed(cfg.seed, i, "noise"))
    y = phaseless_measure(A, x, noise)
    rec = {
        "trial_index": i,
        "matrix_seed": int(A.seed),
        "eta": float(eta),
        "x_norm": x.norm(2),
        "sigma_k_p": sigma_k(x, cfg.k, cfg.p),
        "sigma_k_2": sigma_k(x, cfg.k, 2.0),
    }
    rec["exact_recovery_required"] = rec["sigma_k_p"] == 0 and eta == 0
    for key in ("lhs_pp", "lhs_2p", "rhs_pp", "rhs_2p", "ratio_pp", "ratio_2p", "satisfied_pp",
                "satisfied_2p", "success", "objective", "residual", "outer_iters", "converged",
                "restart_index", "error", "bound_error"):
        rec[key] = None
    try:
        res = _decode(cfg, A, y, eta, i)
    except Exception as exc:  # a failed trial is recorded, never fatal
        rec["error"] = f"{type(exc).__name__}: {exc}"
        return rec
    rec.update(objective=res.objective, residual=res.residual, outer_iters=res.outer_iters,
               converged=res.converged, restart_index=res.restart_index)
    rec["lhs_pp"] = dist_p(res.solution, x, cfg.p)
    rec["lhs_2p"] = dist_p(res.solution, x, 2.0)
    rec["success"] = bool(rec["lhs_2p"] <= cfg.success_tol * rec["x_norm"])
    try:
        c_pp, c_2p = _constants(cfg, A, i, eta)
    except InputError as exc:
        rec["bound_error"] = str(exc)
        return rec
    tol = _bound_tol(x, cfg)
    b_pp = check_instance_bound(res, x, c_pp, eta, "pp", atol=tol)
    b_2p = check_instance_bound(res, x, c_2p, eta, "2p", atol=tol)
    rec.update(rhs_pp=b_pp.rhs, rhs_2p=b_2p.rhs, ratio_pp=b_pp.ratio, ratio_2p=b_2p.ratio,
               satisfied_pp=b_pp.satisfied, satisfied_2p=b_2p.satisfied)
    return rec


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _bound_aggregates(records: list) -> dict:
    return {
        "trials": len(records),
        "failures": sum(1 for r in records if r["error"] is not None),
        "success_rate": _rate(records, "success"),
        "converged_rate": _rate(records, "converged"),
        "satisfied_rate_pp": _rate(records, "satisfied_pp"),
        "satisfied_rate_2p": _rate(records, "satisfied_2p"),
        "max_ratio_pp": _max(_vals(records, "ratio_pp")),
        "max_ratio_2p": _max(_vals(records, "ratio_2p")),
        "lhs_2p_quantiles": _quantiles(_vals(records, "lhs_2p")),
        "lhs_pp_quantiles": _quantiles(_vals(records, "lhs_pp")),
    }


def run_uniform_campaign(cfg: ExperimentConfig) -> CampaignReport:
    """Sample (A, x), measure, decode and evaluate both error bounds per trial."""
    t0 = time.perf_counter()

    def trial(i):
        A, x = _trial_data(cfg, i)
        eta = cfg.eta
        if cfg.eta_relative:
            eta = cfg.eta * float(np.linalg.norm(phaseless_measure(A, x).values))
        return _bound_trial(cfg, i, A, x, eta)

    records = _map(trial, list(range(cfg.trials)), cfg.workers)
    return CampaignReport("uniform", cfg.to_dict(), records, _bound_aggregates(records),
                          time.perf_counter() - t0)


def _fit_slope(xs, ys) -> Optional[float]:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if xs.size < 2 or np.ptp(xs) == 0:
        return None
    xc = xs - xs.mean()
    return float(np.dot(xc, ys - ys.mean()) / np.dot(xc, xc))


def _noise_aggregates(records: list, config: dict) -> dict:
    levels = sorted({r["eta_level"] for r in records})
    by_level = {lv: [r for r in records if r["eta_level"] == lv] for lv in levels}
    medians = []
    for lv in levels:
        v = _vals(by_level[lv], "lhs_2p")
        medians.append(float(np.median(v)) if v else None)
    good = [(lv, md) for lv, md in zip(levels, medians) if md is not None]
    slope = _fit_slope([g[0] for g in good], [g[1] for g in good]) if good else None
    # bootstrap over trials within each level
    rng = make_rng(int(config["seed"]), _PURPOSE["bootstrap"])
    boots = []
    arrays = [np.asarray(_vals(by_level[lv], "lhs_2p"), float) for lv in levels]
    if all(a.size for a in arrays) and len(levels) >= 2:
        for _ in range(BOOTSTRAP_RESAMPLES):
            meds = [float(np.median(a[rng.integers(0, a.size, a.size)])) for a in arrays]
            boots.append(_fit_slope(levels, meds))
    ci = [float(np.quantile(boots, 0.025)), float(np.quantile(boots, 0.975))] if boots else None
    agg = _bound_aggregates(records)
    agg.update({
        "eta_levels": levels,
        "median_lhs_2p": medians,
        "median_eta": [float(np.median([r["eta"] for r in by_level[lv]])) for lv in levels],
        "slope": slope,
        "slope_ci95": ci,
        "eta_relative": bool(config.get("eta_relative", False)),
    })
    return agg


def run_noise_sweep(cfg: ExperimentConfig, eta_list: Sequence[float]) -> CampaignReport:
    """The uniform campaign repeated over noise levels on the same (A, x) per trial.

    Each level draws its noise uniformly on the sphere of that radius (relative to
    || |Ax| ||_2 when ``cfg.eta_relative``). Aggregates give the median dist_2 error per
    level, its least-squares slope against the level, and a 95% bootstrap interval.
    """
    levels = [float(v) for v in eta_list]
    if not levels or any(not (v >= 0 and math.isfinite(v)) for v in levels):
        raise InputError("eta_list must hold finite nonnegative levels")
    if len(set(levels)) != len(levels):
        raise InputError("eta_list levels must be distinct")
    t0 = time.perf_counter()

    def trial(job):
        j, i = job
        A, x = _trial_data(cfg, i)
        lv = levels[j]
        eta = lv * float(np.linalg.norm(phaseless_measure(A, x).values)) if cfg.eta_relative else lv
        rec = _bound_trial(cfg, i, A, x, eta)
        rec["eta_level"] = lv
        return rec

    jobs = [(j, i) for j in range(len(levels)) for i in range(cfg.trials)]
    records = _map(trial, jobs, cfg.workers)
    config = cfg.to_dict()
    config["eta_list"] = levels
    return CampaignReport("noise_sweep", config, records, _noise_aggregates(records, config),
                          time.perf_counter() - t0)


def _nonuniform_aggregates(records: list) -> dict:
    ratios = _vals([r for r in records if not r["sigma_zero"]], "ratio")
    return {
        "trials": len(records),
        "failures": sum(1 for r in records if r["error"] is not None),
        "flagged_sigma_zero": sum(1 for r in records if r["sigma_zero"]),
        "median_ratio": float(np.median(ratios)) if ratios else None,
        "ratio_quantiles": _quantiles(ratios),
        "median_distance": float(np.median(_vals(records, "dist_2"))) if _vals(records, "dist_2") else None,
        "converged_rate": _rate(records, "converged"),
    }


def run_nonuniform_22_trial(x0, m: int, k: int, trials: int, seed: int,
                            decoder: DecoderConfig = DecoderConfig(), workers: int = 1) -> CampaignReport:
    """dist_2(decoded, x0) / sigma_k(x0)_2 for one fixed x0 over fresh Gaussian matrices.

    When sigma_k(x0)_2 = 0 the ratio is undefined; the raw distance is kept and the
    record is flagged.
    """
    x0 = as_signal(x0)
    if int(m) < 1 or int(trials) < 1 or not 1 <= int(k) <= x0.n:
        raise InputError("need m >= 1, trials >= 1 and 1 <= k <= n")
    dec = _decoder_from(decoder)
    t0 = time.perf_counter()
    sig = sigma_k(x0, k, 2.0)

    def trial(i):
        A = gaussian_matrix(x0.field, m, x0.n, sub_seed(seed, i, "matrix"))
        rec = {"trial_index": i, "matrix_seed": int(A.seed), "sigma_k_2": sig, "sigma_zero": sig == 0,
               "dist_2": None, "ratio": None, "objective": None, "converged": None, "error": None}
        try:
            res = decode(A, phaseless_measure(A, x0), dec.replace(eta=0.0, seed=sub_seed(seed, i, "decoder")))
        except Exception as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
            return rec
        d = dist_p(res.solution, x0, 2.0)
        rec.update(dist_2=d, objective=res.objective, converged=res.converged,
                   ratio=None if sig == 0 else d / sig)
        return rec

    records = _map(trial, list(range(int(trials))), workers)
    config = {"x0": _pack(x0), "field": x0.field.value, "n": x0.n, "m": int(m), "k": int(k),
              "trials": int(trials), "seed": int(seed), "decoder": _decoder_dict(dec)}
    return CampaignReport("nonuniform_22", config, records, _nonuniform_aggregates(records),
                          time.perf_counter() - t0)


def _decoder_dict(dec: DecoderConfig) -> dict:
    d = asdict(dec)
    d["fallback_rho_factors"] = list(d["fallback_rho_factors"])
    return d


def _pack(x: SignalVector):
    if x.field is Field.COMPLEX:
        return [[float(v.real), float(v.imag)] for v in x.entries]
    return [float(v) for v in x.entries]


def worst_null_concentration(A: np.ndarray, k: int, starts: int = 20, seed: int = 0,
                             max_sweeps: int = 50) -> tuple:
    """Largest ||v||_2 / ||v_{T^c}||_2 over null vectors v and index sets |T| = 2k found.

    The null space basis N (orthonormal columns) comes from a complete QR of A^H. For a
    fixed T the best v = N c maximises ||N_T c|| / ||c||, the top eigenvector of
    N_T^H N_T; T is then reset to the 2k largest entries of v, until T stops changing.
    Starts are the null-space projections of the coordinate vectors plus ``starts``
    random null vectors. Returns (ratio, null dimension).
    """
    m, n = A.shape
    Q, R = np.linalg.qr(A.conj().T, mode="complete")
    rank = int(np.sum(np.abs(np.diag(R)) > 1e-10 * max(1.0, float(np.abs(R).max()))))
    N = Q[:, rank:]
    d = N.shape[1]
    if d == 0:
        return 1.0, 0
    t = min(2 * k, n)
    rng = make_rng(seed, 0x6E75)
    best = 0.0
    # coordinate starts N N^H e_i aim at concentration directly; random starts add variety
    inits = [N[i].conj() for i in range(n)]
    for s in range(starts):
        c = rng.standard_normal(d)
        if np.iscomplexobj(N):
            c = c + 1j * rng.standard_normal(d)
        inits.append(c)
    for c in inits:
        v = N @ c
        T = None
        for _ in range(max_sweeps):
            newT = np.sort(np.argsort(-np.abs(v), kind="stable")[:t])
            if T is not None and np.array_equal(T, newT):
                break
            T = newT
            NT = N[T]
            w, V = np.linalg.eigh(NT.conj().T @ NT)
            v = N @ V[:, -1]
        conc = min(float(np.linalg.norm(v[T]) ** 2 / np.linalg.norm(v) ** 2), 1.0)
        best = max(best, conc)
    ratio = math.inf if best >= 1.0 else 1.0 / math.sqrt(1.0 - best)
    return ratio, d


def _probe_aggregates(records: list) -> dict:
    rs = sorted(records, key=lambda r: r["n"])
    ratios = [r["worst_ratio"] for r in rs]
    return {
        "n_values": [r["n"] for r in rs],
        "n_over_m": [r["n_over_m"] for r in rs],
        "worst_ratio": ratios,
        "nondecreasing": all(b >= a for a, b in zip(ratios, ratios[1:])),
        "regenerations": sum(r["regenerations"] for r in rs),
    }


def run_22_impossibility_probe(n_list: Sequence[int], m: int, k: int, seed: int = 0,
                               field: str = "real", starts: int = 20) -> CampaignReport:
    """Trend of the worst null-space concentration of Gaussian A as n grows at fixed m.

    A null vector concentrated on 2k coordinates makes (2,2) instance optimality with
    a small constant impossible; the worst ratio ||v|| / ||v_{T^c}|| is tabulated against
    n/m. Rank-deficient draws are replaced by the next sub-seed and counted.
    """
    ns = [int(v) for v in n_list]
    if not ns or int(m) < 1 or int(k) < 1:
        raise InputError("need a nonempty n_list, m >= 1 and k >= 1")
    if int(m) >= min(ns):
        raise InputError(f"m = {m} must be smaller than every n in n_list")
    fld = Field.parse(field)
    t0 = time.perf_counter()
    records = []
    for j, n in enumerate(ns):
        regen = 0
        while True:
            A = gaussian_matrix(fld, m, n, sub_seed(seed, 1000 * j + regen, "matrix"))
            if np.linalg.matrix_rank(A.entries) == m:
                break
            regen += 1
        ratio, d = worst_null_concentration(A.entries, k, starts, sub_seed(seed, j, "signal"))
        records.append({"n": n, "m": int(m), "k": int(k), "n_over_m": n / m, "null_dim": d,
                        "worst_ratio": ratio, "matrix_seed": int(A.seed), "regenerations": regen})
    config = {"n_list": ns, "m": int(m), "k": int(k), "seed": int(seed), "field": fld.value,
              "starts": int(starts)}
    return CampaignReport("impossibility_22", config, records, _probe_aggregates(records),
                          time.perf_counter() - t0)


# --- persistence ---------------------------------------------------------------

def recompute_aggregates(report: CampaignReport) -> dict:
    if report.kind == "uniform":
        return _bound_aggregates(report.records)
    if report.kind == "noise_sweep":
        return _noise_aggregates(report.records, report.config)
    if report.kind == "nonuniform_22":
        return _nonuniform_aggregates(report.records)
    if report.kind == "impossibility_22":
        return _probe_aggregates(report.records)
    raise ReportError(f"unknown campaign kind {report.kind!r}")


def _curves(report: CampaignReport) -> dict:
    a = report.aggregates
    if report.kind == "noise_sweep":
        pts = [(lv, md) for lv, md in zip(a["eta_levels"], a["median_lhs_2p"]) if md is not None]
        return {"median_lhs_2p_vs_eta": pts}
    if report.kind == "impossibility_22":
        return {"worst_ratio_vs_n_over_m": list(zip(a["n_over_m"], a["worst_ratio"]))}
    key = "ratio_quantiles" if report.kind == "nonuniform_22" else "lhs_2p_quantiles"
    return {key: [(float(q), v) for q, v in a[key].items() if v is not None]}


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def persist_report(report: CampaignReport, path) -> dict:
    """Write ``path`` (JSON), ``<stem>.csv`` (one row per record) and ``<stem>.<curve>.dat``.

    Returns the written paths by role.
    """
    path = Path(path)
    out = {"json": path, "csv": path.with_suffix(".csv")}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(report.to_json() + "\n")
        cols = sorted({k for r in report.records for k in r})
        with open(out["csv"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in report.records:
                w.writerow([_csv_cell(r.get(c)) for c in cols])
        for name, pts in report.curves().items():
            p = path.with_name(f"{path.stem}.{name}.dat")
            lines = [f"# {name}: x y"] + [f"{x!r} {y!r}" for x, y in pts]
            p.write_text("\n".join(lines) + "\n")
            out[name] = p
    except OSError as exc:
        raise ReportError(f"cannot write report to {path}: {exc}") from exc
    return out


def load_report(path) -> CampaignReport:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except OSError as exc:
        raise ReportError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(d, dict) or "schema_version" not in d:
        raise ReportError(f"{path}: missing schema_version")
    if d["schema_version"] != SCHEMA_VERSION:
        raise ReportError(f"{path}: schema version {d['schema_version']} unsupported (expected {SCHEMA_VERSION})")
    try:
        report = CampaignReport(**d)
    except TypeError as exc:
        raise ReportError(f"{path}: malformed report: {exc}") from exc
    if not _same(recompute_aggregates(report), report.aggregates):
        raise ReportError(f"{path}: aggregates do not match the records")
    return report
