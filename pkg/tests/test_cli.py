"""Command-line interface: file outputs, exit codes, reproducibility."""

import json
import time

import numpy as np
import pytest

from gsgs import RngState, phantom, read_image_f64, simulate_data
from gsgs.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


SMALL = ["--rows", "16", "--cols", "16", "--n-dirs", "4", "--max-iters", "120",
         "--burn-in", "30", "--thinning", "30",
         "--alpha-n", "0.1", "--beta-n", "0.1", "--alpha-x", "0.1", "--beta-x", "0.1"]


def test_simulate_default_geometry(tmp_path):
    out = tmp_path / "sim"
    assert run_cli("simulate", "-o", out) == 0
    stacked = read_image_f64(out / "y.f64")
    assert stacked.size == 3 * 32 * 32
    meta = json.loads((out / "meta.json").read_text())
    assert meta["n_data"] == 3072
    assert meta["seed"] == 0
    assert meta["blur_anchor"] == "centered"
    assert (out / "resolved_config.json").exists()


def test_simulate_seed_reproducible_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli("simulate", "-o", out, "--seed", "7", *SMALL) == 0
    assert (a / "y.f64").read_bytes() == (b / "y.f64").read_bytes()
    assert (a / "truth.f64").read_bytes() == (b / "truth.f64").read_bytes()


def test_simulate_high_noise_residual_variance(tmp_path):
    out = tmp_path / "noisy"
    assert run_cli("simulate", "-o", out, "--gamma-n", "0.01", "--seed", "3") == 0
    data = read_image_f64(out / "y.f64").ravel()
    clean_model = simulate_data(
        phantom((64, 64)), 2, [(0, 0), (1, 0), (0, 1)], 5, float("inf"), RngState(3)
    )
    resid = data - clean_model.data
    assert abs(resid.var() / 100.0 - 1.0) < 0.1


def test_run_produces_outputs_and_report(tmp_path):
    sim, out = tmp_path / "sim", tmp_path / "run"
    assert run_cli("simulate", "-o", sim, "--seed", "5", *SMALL) == 0
    assert run_cli("run", "--data-dir", sim, "-o", out, "--seed", "5", *SMALL) == 0
    for name in ("pm.f64", "pm.pgm", "psd.f64", "psd.pgm", "chain.csv",
                 "report.json", "resolved_config.json"):
        assert (out / name).exists(), name
    pm = read_image_f64(out / "pm.f64")
    assert pm.shape == (16, 16)
    report = json.loads((out / "report.json").read_text())
    assert report["gamma_n_hat"] > 0
    assert "truth_rel_error" in report
    assert len(list(out.glob("snap_*.f64"))) == 3
    header = (out / "chain.csv").read_text().splitlines()[0]
    assert header == "t,gamma_n,gamma_x,J,wall_ms"


def test_run_is_seed_deterministic(tmp_path):
    sim = tmp_path / "sim"
    assert run_cli("simulate", "-o", sim, "--seed", "5", *SMALL) == 0
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert run_cli("run", "--data-dir", sim, "-o", out, "--seed", "9", *SMALL) == 0
        outs.append(read_image_f64(out / "pm.f64"))
    np.testing.assert_array_equal(outs[0], outs[1])


def test_run_warns_without_perturbation(tmp_path, capsys):
    sim, out = tmp_path / "sim", tmp_path / "run"
    assert run_cli("simulate", "-o", sim, "--seed", "5", *SMALL) == 0
    assert run_cli("run", "--data-dir", sim, "-o", out, "--perturbation", "none",
                   "--seed", "5", *SMALL) == 0
    assert "convergence is not guaranteed" in capsys.readouterr().err


def test_run_literal_shapes_flag_is_recorded_and_active(tmp_path):
    sim = tmp_path / "sim"
    assert run_cli("simulate", "-o", sim, "--seed", "5", *SMALL) == 0
    plain, literal = tmp_path / "plain", tmp_path / "literal"
    assert run_cli("run", "--data-dir", sim, "-o", plain, "--seed", "5", *SMALL) == 0
    assert run_cli("run", "--data-dir", sim, "-o", literal, "--seed", "5",
                   "--paper-literal-shapes", *SMALL) == 0
    cfg = json.loads((literal / "resolved_config.json").read_text())
    assert cfg["paper_literal_shapes"] is True
    a = json.loads((plain / "report.json").read_text())["gamma_x_hat"]
    b = json.loads((literal / "report.json").read_text())["gamma_x_hat"]
    assert a != b


def test_run_without_data_errors(tmp_path):
    assert run_cli("run", "-o", tmp_path / "nowhere") == 1


def test_config_file_with_flag_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"rows": 16, "cols": 16, "seed": 11}))
    out = tmp_path / "sim"
    assert run_cli("simulate", "--config", cfg_path, "-o", out, "--seed", "12") == 0
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved["rows"] == 16
    assert resolved["seed"] == 12  # flag wins over file


def test_unknown_config_key_is_usage_error(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"rowz": 8}))
    assert run_cli("simulate", "--config", cfg_path, "-o", tmp_path / "x") == 2


def test_multi_chain_fanout(tmp_path, monkeypatch):
    monkeypatch.setenv("GSGS_THREADS", "2")
    sim, out = tmp_path / "sim", tmp_path / "multi"
    assert run_cli("simulate", "-o", sim, "--seed", "5", *SMALL) == 0
    assert run_cli("run", "--data-dir", sim, "-o", out, "--chains", "2",
                   "--seed", "5", *SMALL) == 0
    merged = json.loads((out / "report.json").read_text())
    assert len(merged["chains"]) == 2
    assert (out / "chain_00" / "pm.f64").exists()
    assert (out / "chain_01" / "pm.f64").exists()
    seeds = {c["seed"] for c in merged["chains"]}
    assert seeds == {5, 6}


def test_diagnose_reads_chain(tmp_path):
    sim, out = tmp_path / "sim", tmp_path / "run"
    assert run_cli("simulate", "-o", sim, "--seed", "5", *SMALL) == 0
    assert run_cli("run", "--data-dir", sim, "-o", out, "--seed", "5", *SMALL) == 0
    report_path = tmp_path / "diag.json"
    assert run_cli("diagnose", "--chain", out / "chain.csv", "--burn-in", "30",
                   "--max-lag", "10", "--report", report_path) == 0
    report = json.loads(report_path.read_text())
    assert set(report["columns"]) == {"gamma_n", "gamma_x", "J"}
    assert report["columns"]["gamma_n"]["autocorrelation"][0] == 1.0


def test_diagnose_missing_chain_errors(tmp_path):
    assert run_cli("diagnose", "--chain", tmp_path / "absent.csv") == 1


def test_validate_unknown_suite_usage_error():
    with pytest.raises(SystemExit) as err:
        run_cli("validate", "not-a-suite")
    assert err.value.code == 2


def test_validate_operators_passes_quickly(tmp_path):
    report_path = tmp_path / "ops.json"
    start = time.perf_counter()
    code = run_cli("validate", "operators", "--report", report_path)
    elapsed = time.perf_counter() - start
    assert code == 0
    assert elapsed < 10.0
    report = json.loads(report_path.read_text())
    assert report["passed"] is True
    assert all(c["passed"] for c in report["checks"])
