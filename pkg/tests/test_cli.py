"""Command-line surface: config handling, artifacts, manifests, exit codes."""
import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from eikolab.asymptotics import predict_k_for_family
from eikolab.cli import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_PARTIAL,
    FIG1_A_VALUES,
    main,
    verify_manifest,
)
from eikolab.specfun import bessel_eval


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fig1_default_grid():
    assert FIG1_A_VALUES == pytest.approx([0.15 * m for m in (3, 5, 7, 9, 11, 13, 15, 17, 19)])


def test_special_explicit_values(tmp_path):
    out = tmp_path / "bessel.csv"
    assert main(["special", "--z", "0.5,5.0,20.0", "--out", str(out)]) == EXIT_OK
    rows = read_csv(out)
    assert len(rows) == 3
    for row in rows:
        ev = bessel_eval(float(row["z"]))
        # 17 significant digits round-trip doubles exactly
        assert float(row["k0"]) == ev.k0
        assert float(row["k1"]) == ev.k1
        assert row["regime"] == ev.regime


def test_special_default_grid(tmp_path):
    out = tmp_path / "grid.csv"
    assert main(["special", "--out", str(out)]) == EXIT_OK
    rows = read_csv(out)
    assert len(rows) == 200
    assert float(rows[0]["z"]) == pytest.approx(1e-3)
    assert float(rows[-1]["z"]) == pytest.approx(50.0)


def test_predict_payload(tmp_path):
    out = tmp_path / "pred.json"
    assert main(["predict", "--A", "1.5", "--p", "0.8", "--eps", "0.05",
                 "--out", str(out)]) == EXIT_OK
    payload = json.loads(out.read_text())
    fam = predict_k_for_family(1.5 * 0.05, 0.8)
    assert payload["a_sim"] == pytest.approx(fam.a_sim, rel=1e-12)
    assert payload["a_signed"] == -payload["a_sim"]
    assert payload["branch"] == "truncated"
    assert payload["k_shape"] == pytest.approx(fam.k_shape, rel=1e-12)
    assert payload["lambda"] == pytest.approx(1.23e-4, rel=5e-3)
    assert payload["omega"] == pytest.approx(payload["lambda"] ** 2, rel=1e-12)


def test_predict_stdout(capsys):
    assert main(["predict", "--A", "1.5", "--p", "1.5"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["branch"] == "closed_form"


def test_predict_out_of_regime_exit_code(capsys):
    assert main(["predict", "--A", "1.0", "--p", "0.4"]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_corrector_and_manifest_verification(tmp_path):
    out = tmp_path / "corr"
    assert main(["corrector", "--A", "1.0", "--p", "1.0", "--rmax", "50",
                 "--n", "1001", "--out", str(out)]) == EXIT_OK
    assert verify_manifest(out) == []
    meta = json.loads((out / "corrector.json").read_text())
    assert meta["a_sim"] == -meta["a_signed"]
    # tampering and deletion are both reported
    with open(out / "corrector.csv", "a") as fh:
        fh.write("tampered\n")
    problems = verify_manifest(out)
    assert any("corrector.csv" in p for p in problems)
    (out / "corrector.json").unlink()
    problems = verify_manifest(out)
    assert any("corrector.json" in p for p in problems)


def test_profile_split_columns(tmp_path):
    out = tmp_path / "prof"
    assert main(["profile", "--A", "1.5", "--p", "0.8", "--rmax", "20",
                 "--out", str(out)]) == EXIT_OK
    rows = read_csv(out / "defect_profile.csv")
    for row in rows[:: len(rows) // 7]:
        g = float(row["g"])
        assert float(row["g_core"]) + float(row["g_far"]) == pytest.approx(g, abs=1e-12)
    meta = json.loads((out / "defect_profile.json").read_text())
    assert meta["core_mass_integral"] > 0


def test_profile_chi_m_cutoff(tmp_path):
    out = tmp_path / "profm"
    assert main(["profile", "--cutoff", "chi_m", "--m", "6", "--rmax", "20",
                 "--out", str(out)]) == EXIT_OK
    rows = read_csv(out / "defect_profile.csv")
    tail = [r for r in rows if float(r["r"]) > 12.5]
    assert all(float(r["chi"]) == 0.0 for r in tail)  # falls back to 0 past 2m


def test_shoot_artifacts(tmp_path):
    out = tmp_path / "shoot"
    assert main(["shoot", "--out", str(out)]) == EXIT_OK
    meta = json.loads((out / "shoot.json").read_text())
    assert meta["slope_origin"] == pytest.approx(0.58319, abs=1e-4)
    assert verify_manifest(out) == []
    tail = read_csv(out / "tail_diagnostic.csv")
    last = tail[-1]
    assert float(last["r2_one_minus_rho_sq"]) == pytest.approx(1.0, abs=0.3)


def test_config_file_merge_and_cli_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"N": 128, "L": 60.0, "dt": 0.25}))
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--N", "64", "--dry-run",
                 "--out", str(out)]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["N"] == 64  # CLI beats file
    assert manifest["config"]["L"] == 60.0  # file beats default
    assert manifest["config"]["dt"] == 0.25
    assert manifest["command"] == "simulate"
    # dry run produced no artifacts beyond the manifest
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json"]


def test_config_file_toml(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('N = 64\nL = 50.0\neps = 0.75\n')
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--dry-run",
                 "--out", str(out)]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["N"] == 64
    assert manifest["config"]["eps"] == 0.75


def test_bad_config_file_exit_code(tmp_path, capsys):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("N: 64\n")
    assert main(["simulate", "--config", str(cfg), "--dry-run",
                 "--out", str(tmp_path / "x")]) == EXIT_CONFIG


def test_sweep_requires_exactly_one_axis(tmp_path, capsys):
    code = main(["sweep", "--a-values", "0.9", "--p-values", "0.8",
                 "--out", str(tmp_path / "s")])
    assert code == EXIT_CONFIG
    code = main(["sweep", "--out", str(tmp_path / "s2")])
    assert code == EXIT_CONFIG


def test_grid_validation_exit_code(tmp_path, capsys):
    assert main(["simulate", "--N", "48", "--t-max", "1",
                 "--out", str(tmp_path / "g")]) == EXIT_CONFIG


def test_sweep_dry_run_solves_eps_for_target_a(tmp_path):
    out = tmp_path / "plan"
    assert main(["sweep", "--a-values", "0.9,1.5", "--A", "1.0", "--p", "0.8",
                 "--dry-run", "--out", str(out)]) == EXIT_OK
    plan = json.loads((out / "plan.json").read_text())
    mass = 2.5 * (10.0**0.2 - 1.0)  # truncated mass of the unit-amplitude defect
    assert plan[0]["eps"] == pytest.approx(0.9 / mass, rel=1e-9)
    assert plan[1]["eps"] == pytest.approx(1.5 / mass, rel=1e-9)
    assert plan[0]["a_sim"] == 0.9


def test_blow_up_exit_code(tmp_path, capsys):
    code = main(["simulate", "--N", "64", "--L", "50", "--A", "1e300",
                 "--t-max", "10", "--out", str(tmp_path / "boom")])
    assert code == EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_unconverged_run_partial_exit(tmp_path):
    code = main(["simulate", "--N", "64", "--L", "50", "--p", "1.5",
                 "--t-max", "2", "--steady-tol", "1e-12",
                 "--out", str(tmp_path / "part")])
    assert code == EXIT_PARTIAL
    manifest = json.loads((tmp_path / "part" / "manifest.json").read_text())
    assert manifest["failures"]


@pytest.mark.slow
def test_simulate_measure_round_trip(tmp_path):
    out = tmp_path / "sim"
    code = main(["simulate", "--N", "64", "--L", "50", "--p", "1.5", "--eps", "1.0",
                 "--t-max", "2000", "--save-field", "--out", str(out)])
    assert code == EXIT_OK
    assert verify_manifest(out) == []
    runs = json.loads((out / "runs.json").read_text())
    k_run = runs[0]["report"]["k_measured"]
    m_out = tmp_path / "meas.json"
    assert main(["measure", "--field", str(out / "field"),
                 "--out", str(m_out)]) == EXIT_OK
    measured = json.loads(m_out.read_text())
    assert measured["k_measured"] == pytest.approx(k_run, rel=1e-12)
    assert main(["measure", "--field", str(out / "field"),
                 "--annulus", "1,2,3"]) == EXIT_CONFIG


@pytest.mark.slow
def test_sweep_determinism(tmp_path):
    args = ["sweep", "--eps-values", "0.8,1.2", "--p", "1.5", "--N", "64",
            "--L", "50", "--t-max", "2000"]
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(args + ["--out", str(out1)]) == EXIT_OK
    assert main(args + ["--out", str(out2)]) == EXIT_OK
    assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()
    assert (out1 / "runs.json").read_bytes() == (out2 / "runs.json").read_bytes()
    assert verify_manifest(out1) == []
    rows = read_csv(out1 / "sweep.csv")
    assert len(rows) == 2
    assert float(rows[1]["k"]) != float(rows[0]["k"])


def test_compare_on_synthetic_runs(tmp_path):
    c = 0.9
    entries = []
    for p in (1.2, 1.5, 2.0, 2.5):
        fam = predict_k_for_family(1.5, p)
        entries.append({
            "params": {"A": 1.5, "p": p, "eps": 1.0, "b": 1.0},
            "report": {"k_measured": c * fam.k_shape, "converged": True},
            "dir": f"run_p{p}",
        })
    runs_dir = tmp_path / "runs"
    runs_dir.mkdir()
    (runs_dir / "runs.json").write_text(json.dumps(entries))
    assert main(["compare", "--runs", str(runs_dir)]) == EXIT_OK
    summary = json.loads((runs_dir / "compare_summary.json").read_text())
    assert summary["c_fitted"] == pytest.approx(c, rel=1e-12)
    assert summary["rms_log_residual"] < 1e-12
    assert summary["log_k_vs_inv_a"]["pearson_r"] == pytest.approx(1.0, abs=1e-12)
    rows = read_csv(runs_dir / "compare.csv")
    assert len(rows) == 4


def test_compare_missing_runs_exit_code(tmp_path, capsys):
    assert main(["compare", "--runs", str(tmp_path / "nope")]) == EXIT_CONFIG


@pytest.mark.slow
def test_figure1_small_grid(tmp_path):
    out = tmp_path / "fig1"
    code = main(["figure1", "--a-values", "0.9,1.2,1.5,1.8", "--N", "128",
                 "--jobs", "2", "--out", str(out)])
    assert code == EXIT_OK
    assert verify_manifest(out) == []
    fit = json.loads((out / "fig1b_fit.json").read_text())
    assert fit["transform_fit"]["pearson_r"] < -0.95
    assert 0.5 < fit["log_k_vs_inv_a"]["slope"] < 1.5
    points = read_csv(out / "fig1b_points.csv")
    assert len(points) == 4
    ks = [float(r["k"]) for r in points]
    assert all(k2 > k1 for k1, k2 in zip(ks, ks[1:]))  # k grows with a
    profiles = read_csv(out / "fig1a_profiles.csv")
    assert {r["a"] for r in profiles} == {r["a"] for r in points}


@pytest.mark.slow
def test_figure2_small_grid(tmp_path):
    out = tmp_path / "fig2"
    code = main(["figure2", "--p-grid", "0.3,0.8,1.5", "--N", "64", "--L", "50",
                 "--t-max", "1500", "--jobs", "2", "--out", str(out)])
    assert code == EXIT_OK  # a p = 0.3 timeout would be expected, not a failure
    assert verify_manifest(out) == []
    summary = json.loads((out / "fig2_summary.json").read_text())
    # the subcritical growth verdict needs the full-size domain; here the
    # keys and types are what the small box can check
    assert set(summary["plateau"]) == {"0.3", "0.8", "1.5"}
    assert all(isinstance(v, bool) for v in summary["plateau"].values())
    assert summary["plateau"]["0.8"] is True
    rows = read_csv(out / "fig2a_k_vs_p.csv")
    ks = [float(r["k_measured"]) for r in rows]
    assert ks[0] > ks[1] > ks[2]  # selected wavenumber falls as the tail steepens
    prof_ps = {r["p"] for r in read_csv(out / "fig2b_profiles.csv")}
    assert len(prof_ps) == 3


def test_figure_dry_runs(tmp_path):
    for cmd in ("figure1", "figure2", "figure3"):
        out = tmp_path / cmd
        assert main([cmd, "--dry-run", "--out", str(out)]) == EXIT_OK
        names = sorted(p.name for p in out.iterdir())
        assert names == ["manifest.json"]


def test_figure3_outputs(tmp_path):
    out = tmp_path / "fig3"
    assert main(["figure3", "--out", str(out)]) == EXIT_OK
    assert verify_manifest(out) == []
    meta = json.loads((out / "fig3.json").read_text())
    assert meta["slope_origin"] == pytest.approx(0.58319, abs=1e-4)
    assert meta["bisections"] > 40
