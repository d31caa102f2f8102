import json
import subprocess
import sys
import time

import numpy as np
import pytest

from phaseless import cli
from phaseless.bilipschitz import estimate_bilipschitz
from phaseless.bounds import constants_from_estimate, theorem_constants
from phaseless.decoders import DecodeResult, DecoderConfig, decode, oracle_decode_real
from phaseless.experiments import load_report, run_uniform_campaign
from phaseless.io import load_matrix, load_vector, save_matrix, save_vector
from phaseless.signal_model import Field, SignalVector, dist_p, gaussian_matrix, phaseless_measure


def run(argv, capsys=None):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr() if capsys is not None else None
    return code, out


@pytest.fixture
def instance(tmp_path):
    A = gaussian_matrix(Field.COMPLEX, 24, 10, 3)
    x = SignalVector(Field.COMPLEX, np.r_[1.0, 0, 0, 0.5j, np.zeros(6)])
    save_matrix(tmp_path / "A.bin", A, "bin")
    y = phaseless_measure(A, x)
    save_vector(tmp_path / "y.csv", y.values, "csv")
    return A, x, y, tmp_path


def test_tiny_decode_matches_golden(tmp_path, capsys):
    code, out = run(["decode", "--example", "tiny", "--output", tmp_path], capsys)
    assert code == cli.EXIT_OK
    got = json.loads((tmp_path / "decode.json").read_text())
    golden = json.loads(cli.data_path("tiny_golden.json").read_text())
    z = SignalVector(Field.REAL, got["solution"])
    assert dist_p(z, SignalVector(Field.REAL, golden["solution"]), 2.0) <= 1e-6
    assert got["objective"] == pytest.approx(golden["objective"], abs=1e-6)
    assert "objective" in out.out


def test_golden_is_the_oracle_answer():
    A = load_matrix(cli.data_path("tiny_matrix.csv"))
    y = load_vector(cli.data_path("tiny_observation.csv"), "real")
    golden = json.loads(cli.data_path("tiny_golden.json").read_text())
    res = oracle_decode_real(A, y.entries)
    assert res.solution.entries.tolist() == golden["solution"]


def test_decode_shim_equals_library(instance, capsys):
    A, x, y, tmp = instance
    code, _ = run(["decode", "--matrix", tmp / "A.bin", "--observation", tmp / "y.csv", "--restarts", 3,
                   "--seed", 5, "--output", tmp / "out", "--format", "csv"], capsys)
    assert code == cli.EXIT_OK
    got = DecodeResult.from_dict(json.loads((tmp / "out" / "decode.json").read_text()))
    direct = decode(A, load_vector(tmp / "y.csv", "real").entries, DecoderConfig(restarts=3, seed=5))
    assert got == direct
    sol = load_vector(tmp / "out" / "solution.csv", "complex")
    assert np.array_equal(sol.entries, direct.solution.entries)


def test_decode_threads_identical(instance, capsys):
    A, x, y, tmp = instance
    outs = []
    for threads in (1, 3):
        code, _ = run(["decode", "--matrix", tmp / "A.bin", "--observation", tmp / "y.csv",
                       "--restarts", 3, "--threads", threads, "--output", tmp / f"t{threads}"], capsys)
        assert code == 0
        outs.append((tmp / f"t{threads}" / "decode.json").read_bytes())
    assert outs[0] == outs[1]


def test_decode_config_file(instance, capsys):
    A, x, y, tmp = instance
    (tmp / "dec.toml").write_text(f'matrix = "{tmp / "A.bin"}"\nobservation = "{tmp / "y.csv"}"\n'
                                  'restarts = 2\n[decoder]\nmax_inner_iters = 8\n')
    code, _ = run(["decode", "--config", tmp / "dec.toml", "--output", tmp / "c"], capsys)
    assert code == 0
    got = DecodeResult.from_dict(json.loads((tmp / "c" / "decode.json").read_text()))
    direct = decode(A, y.values, DecoderConfig(restarts=2, max_inner_iters=8))
    assert got == direct


def test_decode_errors(tmp_path, capsys):
    code, out = run(["decode", "--matrix", tmp_path / "no.csv", "--observation", tmp_path / "no2.csv"], capsys)
    assert code == cli.EXIT_INPUT and "error" in out.err
    code, _ = run(["decode"], capsys)
    assert code == cli.EXIT_INPUT
    (tmp_path / "bad.toml").write_text("restarts = 2\ncolour = 1\nshade = 2\n")
    code, out = run(["decode", "--example", "tiny", "--config", tmp_path / "bad.toml"], capsys)
    assert code == cli.EXIT_INPUT and "colour" in out.err and "shade" in out.err
    code, _ = run(["decode", "--example", "tiny", "--p", 3], capsys)
    assert code == cli.EXIT_INPUT


def test_decode_large_eta_gives_zero(tmp_path, capsys):
    code, _ = run(["decode", "--example", "tiny", "--eta", 5, "--output", tmp_path], capsys)
    assert code == cli.EXIT_OK
    got = json.loads((tmp_path / "decode.json").read_text())
    assert got["solution"] == [0.0, 0.0] and got["objective"] == 0


def test_decode_not_converged_exit(tmp_path, capsys):
    A = gaussian_matrix(Field.REAL, 8, 4, 0)
    save_matrix(tmp_path / "A.csv", A, "csv")
    # a moduli vector no real signal explains, with an iteration budget of one
    save_vector(tmp_path / "y.csv", np.abs(np.random.default_rng(0).standard_normal(8)), "csv")
    code, _ = run(["decode", "--matrix", tmp_path / "A.csv", "--observation", tmp_path / "y.csv",
                   "--restarts", 1, "--max-outer-iters", 1, "--output", tmp_path], capsys)
    assert code == cli.EXIT_NOT_CONVERGED
    assert (tmp_path / "decode.json").is_file()


def test_dry_run_writes_nothing(tmp_path, capsys):
    code, out = run(["decode", "--example", "tiny", "--dry-run", "--output", tmp_path / "d"], capsys)
    assert code == 0 and not (tmp_path / "d").exists()
    code, out = run(["campaign", "--config", "smoke", "--dry-run", "--output", tmp_path / "d"], capsys)
    assert code == 0 and "valid" in out.out and not (tmp_path / "d").exists()


def test_measure_shim(tmp_path, capsys):
    code, _ = run(["measure", "--field", "complex", "--m", 12, "--n", 5, "--k", 2, "--seed", 4,
                   "--output", tmp_path, "--format", "csv"], capsys)
    assert code == 0
    A = load_matrix(tmp_path / "matrix.bin")
    assert np.array_equal(A.entries, gaussian_matrix(Field.COMPLEX, 12, 5, 4).entries)
    y = load_vector(tmp_path / "observation.bin", "real").entries
    x = load_vector(tmp_path / "signal.bin", "complex")
    assert np.array_equal(y, phaseless_measure(A, x).values)
    assert np.array_equal(load_vector(tmp_path / "observation.csv", "real").entries, y)


def test_lipschitz_shim(tmp_path, capsys):
    code, out = run(["lipschitz", "--m", 30, "--n", 4, "--pairs", 10, "--refine", 2, "--seed", 1,
                     "--output", tmp_path], capsys)
    assert code == 0 and "beta0" in out.out
    got = json.loads((tmp_path / "lipschitz.json").read_text())
    direct = estimate_bilipschitz(gaussian_matrix(Field.REAL, 30, 4, 1), 4, 10, 2, 1)
    assert got["estimate"] == json.loads(direct.to_json())
    assert set(got["separation"]) >= {"beta0", "beta0_plus_0.01", "flag"}
    code, _ = run(["constants", "--estimate", tmp_path / "lipschitz.json", "--mode", "empirical",
                   "--output", tmp_path / "c"], capsys)
    assert code == 0
    c = json.loads((tmp_path / "c" / "constants.json").read_text())
    assert c == constants_from_estimate(direct, 1.0, 1, mode="empirical").to_dict()


def test_constants_table_and_exit_codes(tmp_path, capsys):
    code, out = run(["constants", "--L", 1, "--U", 1.669, "--r", 10, "--p", 1, "--k", 1,
                     "--output", tmp_path], capsys)
    assert code == 0
    expected = theorem_constants(1, 1.669, 10, 1, 1)
    assert out.out.strip() == expected.table()
    assert json.loads((tmp_path / "constants.json").read_text()) == expected.to_dict()
    code, out = run(["constants", "--L", 1, "--U", 1.659, "--r", 2, "--p", 1], capsys)
    assert code == cli.EXIT_INFEASIBLE and "L - U" in out.err
    code, _ = run(["constants", "--L", "abc", "--U", 1], capsys)
    assert code == cli.EXIT_INPUT
    code, _ = run(["constants", "--U", 1], capsys)
    assert code == cli.EXIT_INPUT


def test_help_lists_options(capsys):
    code, out = run(["constants", "--help"], capsys)
    assert code == 0
    for flag in ("--L", "--U", "--r", "--p", "--k", "--config", "--seed", "--output", "--threads",
                 "--dry-run", "--format"):
        assert flag in out.out
    code, out = run(["--help"], capsys)
    assert "exit codes" in out.out


def test_output_env_variable(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    code, _ = run(["decode", "--example", "tiny"], capsys)
    assert code == 0 and (tmp_path / "env" / "decode.json").is_file()


def test_smoke_campaign(tmp_path, capsys):
    t0 = time.perf_counter()
    code, out = run(["campaign", "--config", "smoke", "--output", tmp_path / "a", "--format", "csv"], capsys)
    assert time.perf_counter() - t0 < 60
    assert code == 0
    report = load_report(tmp_path / "a" / "smoke.json")
    assert report.aggregates["trials"] == 10
    code, _ = run(["campaign", "--config", "smoke", "--output", tmp_path / "b"], capsys)
    assert (tmp_path / "a" / "smoke.csv").read_bytes() == (tmp_path / "b" / "smoke.csv").read_bytes()
    # the shim runs exactly the library campaign
    kind, name, runner = cli.campaign_from_config(cli.read_config("smoke"))
    assert runner().records == report.records
    code, out = run(["report", tmp_path / "a" / "smoke.json"], capsys)
    assert code == 0 and "aggregates verified" in out.out


def test_campaign_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('kind = "uniform"\nn = 4\nk = 9\nwidth = 3\nheight = 2\n')
    code, out = run(["campaign", "--config", bad], capsys)
    assert code == cli.EXIT_INPUT
    for word in ("width", "height", "k must"):
        assert word in out.err
    (tmp_path / "sweep.json").write_text(json.dumps({"kind": "noise_sweep", "n": 8}))
    code, out = run(["campaign", "--config", tmp_path / "sweep.json"], capsys)
    assert code == cli.EXIT_INPUT and "eta_list" in out.err
    code, _ = run(["campaign"], capsys)
    assert code == cli.EXIT_INPUT


def test_campaign_kinds_run(tmp_path, capsys):
    cfgs = {
        "sweep": {"kind": "noise_sweep", "n": 10, "k": 1, "trials": 2, "eta_list": [0.0, 0.1],
                  "eta_relative": True, "lipschitz_pairs": 5, "lipschitz_refine": 0,
                  "decoder": {"restarts": 2}},
        "probe": {"kind": "impossibility_22", "n_list": [12, 20], "m": 8, "k": 1, "starts": 3},
        "nonuni": {"kind": "nonuniform_22", "n": 10, "k": 2, "m": 30, "trials": 2,
                   "signal_kind": "power_decay", "decoder": {"restarts": 2}},
    }
    for name, d in cfgs.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(dict(d, name=name)))
        code, _ = run(["campaign", "--config", path, "--output", tmp_path / "o"], capsys)
        assert code == 0, name
        assert load_report(tmp_path / "o" / f"{name}.json").kind == d["kind"]


def test_report_rejects_tampering(tmp_path, capsys):
    code, _ = run(["campaign", "--config", "smoke", "--output", tmp_path], capsys)
    path = tmp_path / "smoke.json"
    d = json.loads(path.read_text())
    d["records"][0]["success"] = not d["records"][0]["success"]
    path.write_text(json.dumps(d))
    code, out = run(["report", path], capsys)
    assert code == cli.EXIT_INPUT and "aggregates" in out.err


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "phaseless.cli", "constants", "--L", "1", "--U", "1.669",
                           "--r", "10"], capture_output=True, text=True)
    assert proc.returncode == 0 and "C1" in proc.stdout
