"""Command-line front end: ``phaseless <subcommand> [options]``.

Subcommands are thin wrappers over the library; no numerics live here.

Exit codes::

    0  success
    1  input error (bad file, option or config key)
    2  decoder finished without a feasible point (best effort written)
    3  infeasible r-constraint for the requested constants

Config files (``--config``) are TOML or JSON with keys named like the long options
(dashes or underscores). Command-line options override config values. Unknown keys
are rejected, all of them listed at once.

Machine-readable output goes to files under ``--output`` (default: the
``PHASELESS_OUTPUT_DIR`` environment variable, else ./phaseless_out); stdout carries
human-readable tables only.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields
from importlib import resources
from pathlib import Path

from . import __version__
from .bilipschitz import BiLipschitzEstimate, check_separation, estimate_bilipschitz
from .bounds import MARGIN_CONSTRAINT, constants_from_estimate, r_margin
from .decoders import DecoderConfig, decode
from .errors import InputError, ReportError
from .experiments import (
    ExperimentConfig,
    load_report,
    persist_report,
    run_22_impossibility_probe,
    run_noise_sweep,
    run_nonuniform_22_trial,
    run_uniform_campaign,
)
from .io import load_matrix, load_vector, save_matrix, save_vector
from .signal_model import (
    SIGNAL_KINDS,
    NoiseSpec,
    PhaselessObservation,
    gaussian_matrix,
    phaseless_measure,
    sample_signal,
)

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_INFEASIBLE = 0, 1, 2, 3
OUTPUT_ENV = "PHASELESS_OUTPUT_DIR"
BUNDLED = {"tiny": ("tiny_matrix.csv", "tiny_observation.csv"), "smoke": "smoke.toml"}
CAMPAIGN_EXTRA = {"kind", "name", "eta_list", "n_list", "starts"}

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml


def data_path(name: str) -> Path:
    return Path(str(resources.files("phaseless") / "data" / name))


def read_config(path) -> dict:
    if str(path) in BUNDLED and isinstance(BUNDLED[str(path)], str):
        path = data_path(BUNDLED[str(path)])
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file {path} not found")
    text = path.read_text()
    try:
        if path.suffix == ".json":
            return json.loads(text)
        return _toml.loads(text)
    except (json.JSONDecodeError, _toml.TOMLDecodeError) as exc:
        raise InputError(f"{path}: cannot parse config: {exc}") from None


def _key(k: str) -> str:
    return k.replace("-", "_")


def _merge(args: argparse.Namespace, allowed: set) -> dict:
    """Config file values overlaid by explicit command-line options."""
    cfg = {}
    if args.config:
        raw = read_config(args.config)
        bad = sorted(_key(k) for k in raw if _key(k) not in allowed and _key(k) != "decoder")
        if bad:
            raise InputError(f"unknown config keys: {', '.join(bad)}")
        cfg = {_key(k): v for k, v in raw.items()}
    for k, v in vars(args).items():
        if v is not None and k in allowed:
            cfg[k] = v
    return cfg


def _output_dir(args) -> Path:
    return Path(args.output or os.environ.get(OUTPUT_ENV) or "phaseless_out")


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _decoder_config(cfg: dict) -> DecoderConfig:
    d = dict(cfg.get("decoder") or {})
    for name in ("p", "eta", "restarts", "max_outer_iters", "penalty_rho", "feasibility_tol"):
        if cfg.get(name) is not None:
            d[name] = cfg[name]
    if cfg.get("seed") is not None:
        d["seed"] = cfg["seed"]
    known = {f.name for f in fields(DecoderConfig)}
    bad = sorted(set(d) - known)
    if bad:
        raise InputError(f"unknown decoder keys: {', '.join(bad)}")
    if "fallback_rho_factors" in d:
        d["fallback_rho_factors"] = tuple(d["fallback_rho_factors"])
    return DecoderConfig(**d)


# --- subcommands -----------------------------------------------------------------

DECODE_KEYS = {"matrix", "observation", "example", "p", "eta", "restarts", "max_outer_iters",
               "penalty_rho", "feasibility_tol", "seed", "decoder"}


def cmd_decode(args) -> int:
    cfg = _merge(args, DECODE_KEYS)
    if cfg.get("example"):
        if cfg["example"] not in BUNDLED or not isinstance(BUNDLED[cfg["example"]], tuple):
            raise InputError(f"unknown bundled instance {cfg['example']!r}")
        mpath, ypath = (data_path(n) for n in BUNDLED[cfg["example"]])
    else:
        if not cfg.get("matrix") or not cfg.get("observation"):
            raise InputError("decode needs --matrix and --observation (or --example)")
        mpath, ypath = Path(cfg["matrix"]), Path(cfg["observation"])
    dcfg = _decoder_config(cfg)
    A = load_matrix(mpath)
    yv = load_vector(ypath, "real").entries
    y = PhaselessObservation(yv, noisy=bool((yv < 0).any()), eta=dcfg.eta)
    if args.dry_run:
        print(f"decode: A {A.m}x{A.n} ({A.field.value}), p={dcfg.p}, eta={dcfg.eta}, restarts={dcfg.restarts}")
        return EXIT_OK
    res = decode(A, y, dcfg, workers=args.threads or 1)
    out = _output_dir(args)
    _write_json(out / "decode.json", res.to_dict())
    if args.format == "csv":
        save_vector(out / "solution.csv", res.solution, "csv")
    print(f"objective {res.objective:.12g}  residual {res.residual:.3e}  converged {res.converged}  "
          f"restart {res.restart_index}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


MEASURE_KEYS = {"matrix", "signal", "field", "m", "n", "k", "signal_kind", "seed", "eta"}


def cmd_measure(args) -> int:
    cfg = _merge(args, MEASURE_KEYS)
    seed = int(cfg.get("seed", 0))
    if cfg.get("matrix"):
        A = load_matrix(cfg["matrix"])
    else:
        if cfg.get("m") is None or cfg.get("n") is None:
            raise InputError("measure needs --matrix or both --m and --n")
        A = gaussian_matrix(cfg.get("field", "real"), cfg["m"], cfg["n"], seed)
    if cfg.get("signal"):
        x = load_vector(cfg["signal"], A.field.value)
    else:
        x = sample_signal(cfg.get("signal_kind", "exactly_sparse"), A.n, int(cfg.get("k", 1)),
                          A.field, seed)
    eta = float(cfg.get("eta", 0.0))
    if args.dry_run:
        print(f"measure: A {A.m}x{A.n} ({A.field.value}), eta={eta}")
        return EXIT_OK
    y = phaseless_measure(A, x, NoiseSpec.on_sphere(A.m, eta, seed) if eta > 0 else None)
    out = _output_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    fmts = ("bin", "csv") if args.format == "csv" else ("bin",)
    for fmt in fmts:
        save_matrix(out / f"matrix.{fmt}", A, fmt)
        save_vector(out / f"signal.{fmt}", x, fmt)
        save_vector(out / f"observation.{fmt}", y.values, fmt)
    print(f"wrote {A.m}x{A.n} {A.field.value} instance to {out}  ||y||_2 = {y.norm():.6g}")
    return EXIT_OK


LIPSCHITZ_KEYS = {"matrix", "field", "m", "n", "seed", "sparsity", "pairs", "refine"}


def cmd_lipschitz(args) -> int:
    cfg = _merge(args, LIPSCHITZ_KEYS)
    seed = int(cfg.get("seed", 0))
    if cfg.get("matrix"):
        A = load_matrix(cfg["matrix"])
    else:
        if cfg.get("m") is None or cfg.get("n") is None:
            raise InputError("lipschitz needs --matrix or both --m and --n")
        A = gaussian_matrix(cfg.get("field", "real"), cfg["m"], cfg["n"], seed)
    s = int(cfg.get("sparsity", A.n))
    if args.dry_run:
        print(f"lipschitz: A {A.m}x{A.n} ({A.field.value}), sparsity {s}")
        return EXIT_OK
    est = estimate_bilipschitz(A, s, int(cfg.get("pairs", 200)), int(cfg.get("refine", 50)), seed)
    sep = check_separation(est)
    out = _output_dir(args)
    _write_json(out / "lipschitz.json", {"estimate": est.to_dict(), "separation": sep})
    if args.format == "csv":
        rows = ["probe,min,max"] + [f"{k},{v['min']!r},{v['max']!r}" for k, v in sorted(est.probe_breakdown.items())]
        (out / "lipschitz.csv").write_text("\n".join(rows) + "\n")
    print(f"L_hat {est.L_hat:.6f}  U_hat {est.U_hat:.6f}  U/L {sep['ratio']:.6f}  "
          f"beta0 {sep['beta0']:.6f}  beta0+0.01 {sep['beta0_plus_0.01']:.6f}  {sep['flag']}")
    for kind, v in sorted(est.probe_breakdown.items()):
        print(f"  {kind:<12} min {v['min']:.6f}  max {v['max']:.6f}")
    return EXIT_OK


CONSTANTS_KEYS = {"L", "U", "r", "p", "k", "estimate", "mode", "kappa"}


def cmd_constants(args) -> int:
    cfg = _merge(args, CONSTANTS_KEYS)
    p = float(cfg.get("p", 1.0))
    k = int(cfg.get("k", 1))
    mode = cfg.get("mode", "strict")
    if cfg.get("estimate"):
        raw = json.loads(Path(cfg["estimate"]).read_text())
        est = BiLipschitzEstimate.from_dict(raw.get("estimate", raw))
        source = est
    else:
        if cfg.get("L") is None or cfg.get("U") is None:
            raise InputError("constants needs --L and --U (or --estimate)")
        source = (float(cfg["L"]), float(cfg["U"]))
    r = cfg.get("r")
    if r is not None and not isinstance(source, BiLipschitzEstimate):
        L, U = source
        if mode == "empirical":
            kappa = float(cfg.get("kappa", 2.0))
            L, U = L / kappa, U * kappa
        margin = r_margin(L, U, float(r), p)
        if margin <= 0:
            print(f"infeasible: {MARGIN_CONSTRAINT} fails, margin = {margin:.6g}", file=sys.stderr)
            return EXIT_INFEASIBLE
    if args.dry_run:
        print("constants: inputs valid")
        return EXIT_OK
    try:
        c = constants_from_estimate(source, p, k, mode=mode, kappa=float(cfg.get("kappa", 2.0)),
                                    r=None if r is None else float(r))
    except InputError as exc:
        if "r-constraint" in str(exc) or "no admissible r" in str(exc):
            print(f"infeasible: {MARGIN_CONSTRAINT}: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        raise
    print(c.table())
    if args.output is not None or os.environ.get(OUTPUT_ENV):
        _write_json(_output_dir(args) / "constants.json", c.to_dict())
    return EXIT_OK


CAMPAIGN_KEYS = {f.name for f in fields(ExperimentConfig)} | CAMPAIGN_EXTRA


def campaign_from_config(raw: dict, seed=None, workers=None):
    """Validate a campaign config; returns (kind, name, runner) or raises listing every problem."""
    raw = {_key(k): v for k, v in raw.items()}
    problems = [f"unknown key {k!r}" for k in sorted(set(raw) - CAMPAIGN_KEYS)]
    kind = raw.pop("kind", "uniform")
    name = raw.pop("name", kind)
    eta_list = raw.pop("eta_list", None)
    n_list = raw.pop("n_list", None)
    starts = int(raw.pop("starts", 20))
    experiment_keys = {f.name for f in fields(ExperimentConfig)}
    raw = {k: v for k, v in raw.items() if k in experiment_keys}
    if seed is not None:
        raw["seed"] = seed
    if workers is not None:
        raw["workers"] = workers
    if kind not in ("uniform", "noise_sweep", "nonuniform_22", "impossibility_22"):
        problems.append(f"unknown campaign kind {kind!r}")
    if kind == "noise_sweep" and not eta_list:
        problems.append("noise_sweep needs eta_list")
    if kind == "impossibility_22" and not n_list:
        problems.append("impossibility_22 needs n_list")
    cfg = None
    if kind != "impossibility_22":
        try:
            cfg = ExperimentConfig.from_dict(raw)
        except (InputError, TypeError) as exc:
            problems.append(str(exc))
    if problems:
        raise InputError("invalid campaign config: " + "; ".join(problems))
    if kind == "uniform":
        return kind, name, lambda: run_uniform_campaign(cfg)
    if kind == "noise_sweep":
        return kind, name, lambda: run_noise_sweep(cfg, eta_list)
    if kind == "nonuniform_22":
        def run():
            x0 = sample_signal(cfg.signal_kind, cfg.n, cfg.k, cfg.field, cfg.seed, **dict(cfg.signal_params))
            return run_nonuniform_22_trial(x0, cfg.m, cfg.k, cfg.trials, cfg.seed, cfg.decoder, cfg.workers)
        return kind, name, run
    m = int(raw.get("m", 0))
    k = int(raw.get("k", 1))
    if m < 1 or m >= min(int(v) for v in n_list):
        raise InputError("invalid campaign config: impossibility_22 needs 1 <= m < min(n_list)")
    return kind, name, lambda: run_22_impossibility_probe(n_list, m, k, int(raw.get("seed", 0)),
                                                         raw.get("field", "real"), starts)


def cmd_campaign(args) -> int:
    if not args.config:
        raise InputError("campaign needs --config (a file path, or 'smoke' for the bundled config)")
    raw = read_config(args.config)
    kind, name, run = campaign_from_config(raw, args.seed, args.threads)
    if args.dry_run:
        print(f"campaign {name!r} ({kind}): config valid")
        return EXIT_OK
    report = run()
    paths = persist_report(report, _output_dir(args) / f"{name}.json")
    agg = report.aggregates
    print(f"campaign {name!r} ({kind}) finished in {report.wall_clock:.2f} s")
    for key in sorted(agg):
        if not isinstance(agg[key], (dict, list)):
            print(f"  {key:<20} {agg[key]}")
    for role, p in paths.items():
        print(f"  wrote {role}: {p}")
    return EXIT_OK


def cmd_report(args) -> int:
    report = load_report(args.path)
    print(f"{report.kind} report, schema {report.schema_version}, toolkit {report.version}, "
          f"{len(report.records)} records (aggregates verified)")
    for key in sorted(report.aggregates):
        print(f"  {key:<20} {json.dumps(report.aggregates[key], sort_keys=True)}")
    return EXIT_OK


# --- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help="TOML or JSON file with option values (keys as long option names)")
    g.add_argument("--seed", type=int, help="base seed (default 0)")
    g.add_argument("--output", help=f"output directory (default ${OUTPUT_ENV} or ./phaseless_out)")
    g.add_argument("--threads", type=int, help="worker cap for restarts or trials (default 1)")
    g.add_argument("--dry-run", action="store_true", help="validate inputs and config, then stop")
    g.add_argument("--format", choices=("json", "csv"), default="json",
                   help="machine output: json (with binary vectors) or additionally csv tables")

    parser = argparse.ArgumentParser(prog="phaseless", description="Compressive phase retrieval toolkit.",
                                     epilog="exit codes: 0 ok, 1 input error, 2 not converged, 3 infeasible r-constraint")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", parents=[common], help="run the phaseless l_p decoder")
    p.add_argument("--matrix", help="sensing matrix (CSV or binary)")
    p.add_argument("--observation", help="observation vector y (CSV or binary)")
    p.add_argument("--example", choices=["tiny"], help="use a bundled instance instead of files")
    p.add_argument("--p", type=float, help="exponent in (0, 1] (default 1)")
    p.add_argument("--eta", type=float, help="noise budget for the l2 constraint (default 0)")
    p.add_argument("--restarts", type=int, help="random restarts (default 10)")
    p.add_argument("--max-outer-iters", type=int, help="splitting iterations per run (default 500)")
    p.add_argument("--penalty-rho", type=float, help="splitting penalty, normalized units (default 15)")
    p.add_argument("--feasibility-tol", type=float, help="tolerance relative to ||y|| (default 1e-9)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("measure", parents=[common], help="generate A and x and write y = |Ax| (+ e)")
    p.add_argument("--matrix", help="existing matrix file (else Gaussian from --field/--m/--n/--seed)")
    p.add_argument("--signal", help="existing signal file (else sampled)")
    p.add_argument("--field", choices=("real", "complex"), help="field of a generated matrix (default real)")
    p.add_argument("--m", type=int, help="rows of a generated matrix")
    p.add_argument("--n", type=int, help="columns of a generated matrix")
    p.add_argument("--k", type=int, help="sparsity of a sampled signal (default 1)")
    p.add_argument("--signal-kind", choices=SIGNAL_KINDS, help="sampled signal family (default exactly_sparse)")
    p.add_argument("--eta", type=float, help="noise radius, drawn uniformly on the sphere (default 0)")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("lipschitz", parents=[common], help="estimate bi-Lipschitz bounds (L, U)")
    p.add_argument("--matrix", help="matrix file (else Gaussian from --field/--m/--n/--seed)")
    p.add_argument("--field", choices=("real", "complex"), help="field of a generated matrix (default real)")
    p.add_argument("--m", type=int, help="rows of a generated matrix")
    p.add_argument("--n", type=int, help="columns of a generated matrix")
    p.add_argument("--sparsity", type=int, help="sparsity level of the probed set (default n)")
    p.add_argument("--pairs", type=int, help="sampling rounds, one pair per probe family each (default 200)")
    p.add_argument("--refine", type=int, help="local-search rounds on the extremal pairs (default 50)")
    p.set_defaults(func=cmd_lipschitz)

    p = sub.add_parser("constants", parents=[common], help="print the instance-optimality constants")
    p.add_argument("--L", type=float, help="lower bi-Lipschitz constant")
    p.add_argument("--U", type=float, help="upper bi-Lipschitz constant")
    p.add_argument("--r", type=float, help="free parameter r (default: chosen to minimise C1)")
    p.add_argument("--p", type=float, help="exponent in (0, 1] (default 1)")
    p.add_argument("--k", type=int, help="sparsity order (default 1)")
    p.add_argument("--estimate", help="lipschitz JSON output to take (L, U) from")
    p.add_argument("--mode", choices=("strict", "empirical"), help="empirical dilates by kappa (default strict)")
    p.add_argument("--kappa", type=float, help="dilation for empirical mode (default 2)")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("campaign", parents=[common], help="run a campaign from --config ('smoke' is bundled)")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("report", parents=[common], help="load, verify and summarise a campaign report")
    p.add_argument("path", help="report JSON file")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, ReportError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
