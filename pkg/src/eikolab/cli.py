"""Command line front end: runs, sweeps, predictions, figure pipelines.

Every command writes into an output directory and finishes by emitting a
manifest (config snapshot, version, timestamps, sha256 of every output file,
convention flags).  All numeric CSV fields use 17 significant digits so two
invocations with the same config produce byte-identical data files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 partial
results (some sweep members unsteady).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from types import SimpleNamespace
from typing import Sequence

import numpy as np

from . import __version__
from .asymptotics import make_prediction, predict_k_for_family
from .asymptotics import compare_prediction_to_runs
from .errors import ConfigError, NumericalError
from .measure import fit_k_law, fit_log_k_vs_inv_a, measure_wavenumber
from .measure import radial_gradient_profile
from .profiles import CutoffSpec, InhomogeneitySpec, core_mass, evaluate_g
from .profiles import smooth_cutoff, split_defect
from .radial import RadialGrid, shoot_spiral_amplitude, solve_corrector_K
from .specfun import bessel_eval
from .spectral import (
    GridSpec2D,
    SimulationConfig,
    read_field_snapshot,
    run_to_steady,
    write_field_snapshot,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4

SUBCRITICAL_P = 0.5
PLATEAU_GROWTH_LIMIT = 0.20

# recorded in every manifest so downstream tooling never has to guess signs
CONVENTIONS = {
    "equation": "phi_t = lap(phi) - b|grad phi|^2 - eps*g",
    "mass_sign": "a_sim = +b*eps*integral(g r dr), a_signed = -a_sim",
    "wavenumber_law": "k = (2/b) exp(-euler_gamma) exp(-1/a_sim)",
    "frequency_route": "omega = lambda^2 / b",
    "truncation_radius": 3.0,
    "annulus_fractions": [0.35, 0.45],
    "dealias": "two_thirds",
    "transform": "y = 1/(log k - 1)",
}


def _fmt(x) -> str:
    """One CSV cell: 17 significant digits for floats, plain ints, 0/1 bools."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: Path, header: Sequence[str], rows) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path: Path, payload) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class RunManifest:
    """Config snapshot plus a hashed inventory of everything written."""

    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.started_at = _utcnow()
        self.failures: list[str] = []

    def flag_failure(self, message: str):
        self.failures.append(message)

    def finalize(self, out_dir: Path) -> Path:
        files = {}
        for p in sorted(out_dir.rglob("*")):
            if p.is_file() and p.name != "manifest.json":
                files[str(p.relative_to(out_dir))] = _sha256(p)
        payload = {
            "command": self.command,
            "version": __version__,
            "config": self.config,
            "conventions": CONVENTIONS,
            "started_at": self.started_at,
            "finished_at": _utcnow(),
            "files": files,
            "failures": self.failures,
        }
        return write_json(out_dir / "manifest.json", payload)


def verify_manifest(out_dir: Path) -> list[str]:
    """Names whose current hash disagrees with the manifest (empty = intact)."""
    manifest = json.loads((out_dir / "manifest.json").read_text())
    bad = []
    for rel, digest in manifest["files"].items():
        p = out_dir / rel
        if not p.is_file() or _sha256(p) != digest:
            bad.append(rel)
    return bad


# -------------------------------------------------------------- config merge


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    if p.suffix == ".json":
        data = json.loads(p.read_text())
    elif p.suffix == ".toml":
        try:
            import tomllib
        except ImportError:  # 3.10
            try:
                import tomli as tomllib
            except ImportError as exc:
                raise ConfigError(
                    "TOML config needs the tomli package on this interpreter"
                ) from exc
        data = tomllib.loads(p.read_text())
    else:
        raise ConfigError(f"config file must be .json or .toml, got {p.suffix}")
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat key/value table")
    return data


def _merge_config(args, defaults: dict) -> dict:
    """defaults < config file < explicitly passed CLI flags."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            cfg[key] = val
    return cfg


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


def _out_dir(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------- run primitives


def _branch_mass(amplitude: float, p: float, r_cut: float) -> float:
    """Unit-strength defect mass under the branch rule used for predictions."""
    spec = InhomogeneitySpec(amplitude, p, 1.0)
    if p > 1.0:
        return core_mass(spec, convention="closed_form")
    return core_mass(spec, convention="truncated", r_cut=r_cut)


def _eps_for_target_a(a_sim: float, amplitude: float, p: float, b: float,
                      r_cut: float) -> float:
    """Solve eps from a_sim = eps * b * mass (linear)."""
    mass = _branch_mass(amplitude, p, r_cut)
    if not mass > 0.0:
        raise ConfigError(f"defect mass is not positive (A={amplitude}, p={p})")
    return a_sim / (b * mass)


def _sim_config(cfg, eps: float, p: float) -> SimulationConfig:
    grid = GridSpec2D(int(cfg["N"]), float(cfg["L"]))
    defect = InhomogeneitySpec(float(cfg["A"]), float(p), float(eps))
    return SimulationConfig(
        grid=grid,
        dt=float(cfg["dt"]),
        b=float(cfg["b"]),
        defect=defect,
        t_max=float(cfg["t_max"]),
        steady_tol=float(cfg["steady_tol"]),
        check_interval=int(cfg["check_interval"]),
    )


def _run_member(cfg, eps: float, p: float, a_sim: float, member_dir: Path,
                save_field: bool):
    """One steady run plus its per-run artifacts; returns the runs.json entry."""
    member_dir.mkdir(parents=True, exist_ok=True)
    sim = _sim_config(cfg, eps, p)
    phi, report = run_to_steady(sim)
    write_json(member_dir / "report.json", report.as_dict())
    prof = report.radial_profile
    write_csv(
        member_dir / "profile.csv",
        ["r", "dphidr", "count", "interpolated"],
        zip(
            prof.grid.nodes,
            prof.values,
            np.asarray(prof.bin_counts),
            np.asarray(prof.interpolated, dtype=bool),
        ),
    )
    if save_field:
        write_field_snapshot(phi, member_dir / "field")
    params = {
        "A": float(cfg["A"]),
        "p": float(p),
        "eps": float(eps),
        "b": float(cfg["b"]),
        "a_sim": float(a_sim),
        "N": int(cfg["N"]),
        "L": float(cfg["L"]),
        "dt": float(cfg["dt"]),
    }
    return {"params": params, "report": report.as_dict(include_profile=False),
            "dir": member_dir.name}, report


def _run_members(cfg, members, out_dir: Path, save_field: bool, jobs: int):
    """members: list of (eps, p, a_sim, name). Order-preserving, jobs-bounded."""
    def work(m):
        eps, p, a_sim, name = m
        return _run_member(cfg, eps, p, a_sim, out_dir / name, save_field)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, members))
    return [work(m) for m in members]


def _transform_y(k: float) -> float:
    if 0.0 < k < 1.0:
        return 1.0 / (math.log(k) - 1.0)
    return math.nan


def _profile_growth(profile, l: float, r_core: float = 6.0) -> float:
    """Relative gradient growth from just outside the core to mid-annulus.

    A selected pattern has already locked its wavenumber by twice the mass
    truncation radius, so its gradient is flat-to-falling from there; a
    subcritical tail keeps feeding the gradient and shows up as growth.
    """
    f = profile.interpolator()
    v_in = float(f(r_core))
    v_out = float(f(0.40 * l))
    if v_in == 0.0:
        return math.inf
    return (v_out - v_in) / abs(v_in)


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    defaults = {
        "out": "sim_out", "N": 256, "L": 100.0, "dt": 0.5, "b": 1.0,
        "A": 1.0, "p": 0.8, "eps": 0.5, "t_max": 5000.0, "steady_tol": 1e-5,
        "check_interval": 20, "save_field": True, "dry_run": False,
    }
    cfg = _merge_config(args, defaults)
    out = _out_dir(cfg)
    manifest = RunManifest("simulate", cfg)
    if cfg["dry_run"]:
        manifest.finalize(out)
        return EXIT_OK
    a_sim = float(cfg["b"]) * core_mass(
        InhomogeneitySpec(float(cfg["A"]), float(cfg["p"]), float(cfg["eps"]))
    )
    entry, report = _run_member(
        cfg, float(cfg["eps"]), float(cfg["p"]), a_sim, out, bool(cfg["save_field"])
    )
    write_json(out / "runs.json", [entry])
    if not report.converged:
        manifest.flag_failure("run did not reach steadiness before t_max")
    manifest.finalize(out)
    return EXIT_OK if report.converged else EXIT_PARTIAL


def cmd_sweep(args) -> int:
    defaults = {
        "out": "sweep_out", "N": 256, "L": 100.0, "dt": 0.5, "b": 1.0,
        "A": 1.0, "p": 0.8, "eps": 0.5, "t_max": 5000.0, "steady_tol": 1e-5,
        "check_interval": 20, "a_values": None, "eps_values": None,
        "p_values": None, "r_cut": 3.0, "jobs": 1, "save_field": False,
        "dry_run": False,
    }
    cfg = _merge_config(args, defaults)
    chosen = [k for k in ("a_values", "eps_values", "p_values") if cfg[k]]
    if len(chosen) != 1:
        raise ConfigError("pass exactly one of --a-values, --eps-values, --p-values")
    out = _out_dir(cfg)
    manifest = RunManifest("sweep", cfg)

    b, amp, r_cut = float(cfg["b"]), float(cfg["A"]), float(cfg["r_cut"])
    members = []
    if cfg["a_values"]:
        for i, a in enumerate(_floats(cfg["a_values"])):
            eps = _eps_for_target_a(a, amp, float(cfg["p"]), b, r_cut)
            members.append((eps, float(cfg["p"]), a, f"run_{i:02d}_a{a:g}"))
    elif cfg["eps_values"]:
        mass = _branch_mass(amp, float(cfg["p"]), r_cut)
        for i, eps in enumerate(_floats(cfg["eps_values"])):
            members.append(
                (eps, float(cfg["p"]), eps * b * mass, f"run_{i:02d}_eps{eps:g}")
            )
    else:
        for i, p in enumerate(_floats(cfg["p_values"])):
            a = (
                float(cfg["eps"]) * b * _branch_mass(amp, p, r_cut)
                if p > SUBCRITICAL_P
                else math.nan
            )
            members.append((float(cfg["eps"]), p, a, f"run_{i:02d}_p{p:g}"))

    if cfg["dry_run"]:
        write_json(out / "plan.json", [
            {"eps": e, "p": p, "a_sim": a, "dir": name}
            for e, p, a, name in members
        ])
        manifest.finalize(out)
        return EXIT_OK

    results = _run_members(cfg, members, out, bool(cfg["save_field"]), int(cfg["jobs"]))
    entries = [entry for entry, _ in results]
    write_json(out / "runs.json", entries)
    rows = []
    n_bad = 0
    for (eps, p, a_sim, name), (entry, report) in zip(members, results):
        rows.append((a_sim, p, report.k_measured, report.omega_drift,
                     _transform_y(report.k_measured)))
        if not report.converged:
            if p > SUBCRITICAL_P:
                n_bad += 1
                manifest.flag_failure(f"{name} unsteady at t_max")
            else:
                manifest.flag_failure(f"{name} unsteady (expected: p <= 0.5)")
    write_csv(out / "sweep.csv", ["a", "p", "k", "omega", "y_transform"], rows)
    manifest.finalize(out)
    return EXIT_PARTIAL if n_bad else EXIT_OK


def cmd_measure(args) -> int:
    if not args.field:
        raise ConfigError("--field <snapshot prefix> is required")
    phi = read_field_snapshot(args.field)
    annulus = None
    if args.annulus:
        vals = _floats(args.annulus)
        if len(vals) != 2:
            raise ConfigError("--annulus takes r_in,r_out")
        annulus = (vals[0], vals[1])
    k = measure_wavenumber(phi, annulus)
    prof = radial_gradient_profile(phi, n_bins=int(args.n_bins))
    payload = {
        "k_measured": k,
        "annulus": list(annulus) if annulus else CONVENTIONS["annulus_fractions"],
        "y_transform": _transform_y(k),
        "radial_profile": {
            "r": prof.grid.nodes.tolist(),
            "dphidr": prof.values.tolist(),
        },
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_predict(args) -> int:
    amplitude = float(args.A) * float(args.eps)
    fam = predict_k_for_family(
        amplitude * float(args.b), float(args.p), convention_R=float(args.R)
    )
    pred = make_prediction(a_sim=fam.a_sim, b=float(args.b))
    payload = {
        "a_signed": pred.a_signed,
        "a_sim": pred.a_sim,
        "lambda": pred.decay_rate,
        "omega": pred.frequency,
        "k_shape": fam.k_shape,
        "branch": fam.branch,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _load_runs(path: str) -> list:
    p = Path(path)
    if p.is_dir():
        p = p / "runs.json"
    if not p.is_file():
        raise ConfigError(f"no runs.json found at {path}")
    entries = json.loads(p.read_text())
    sweep = []
    for entry in entries:
        report = SimpleNamespace(**entry["report"])
        sweep.append((entry["params"], report))
    return sweep


def cmd_compare(args) -> int:
    sweep = _load_runs(args.runs)
    table = compare_prediction_to_runs(sweep, convention_R=float(args.R))
    out = Path(args.out) if args.out else Path(args.runs)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(
        out / "compare.csv",
        ["p", "a_sim", "k_measured", "k_shape", "log_residual", "steady", "branch"],
        [
            (r.p, r.a_sim, r.k_measured, r.k_shape, r.log_residual, r.steady, r.branch)
            for r in table.rows
        ],
    )
    steady_pts = [(r.a_sim, r.k_measured) for r in table.rows if r.steady]
    summary = {
        "c_fitted": table.c_fitted,
        "rms_log_residual": table.rms_log_residual,
        "n_used": table.n_used,
        "n_excluded": table.n_excluded,
    }
    if len(steady_pts) >= 4:
        fit = fit_log_k_vs_inv_a(steady_pts)
        summary["log_k_vs_inv_a"] = {
            "slope": fit.slope, "intercept": fit.intercept, "pearson_r": fit.pearson_r,
        }
    write_json(out / "compare_summary.json", summary)
    return EXIT_OK


def cmd_shoot(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("shoot", {"rmax": float(args.rmax), "tol": float(args.tol)})
    sol = shoot_spiral_amplitude(r_max=float(args.rmax), tol=float(args.tol))
    r = sol.profile.grid.nodes
    rho = sol.profile.values
    write_csv(out / "amplitude_profile.csv", ["r", "rho"], zip(r, rho))
    sel = r > 0
    write_csv(
        out / "tail_diagnostic.csv",
        ["r", "r2_one_minus_rho_sq"],
        zip(r[sel], r[sel] ** 2 * (1.0 - rho[sel] ** 2)),
    )
    write_json(out / "shoot.json", {
        "slope_origin": sol.slope_origin,
        "tail_residual": sol.tail_residual,
        "bracket": list(sol.bracket),
        "bisections": sol.bisections,
        "r_max": float(args.rmax),
    })
    manifest.finalize(out)
    return EXIT_OK


def cmd_corrector(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("corrector", {
        "A": float(args.A), "p": float(args.p), "eps": float(args.eps),
        "b": float(args.b), "rmax": float(args.rmax), "n": int(args.n),
    })
    spec = InhomogeneitySpec(float(args.A), float(args.p), float(args.eps))
    grid = RadialGrid.uniform(float(args.rmax), int(args.n))
    split = split_defect(spec, grid, b=float(args.b))
    corr = solve_corrector_K(split.g_far, b=float(args.b), grid=grid)
    write_csv(
        out / "corrector.csv",
        ["r", "g_far", "K"],
        zip(grid.nodes, split.g_far.values, corr.values),
    )
    write_json(out / "corrector.json", {
        "a_signed": split.a_signed,
        "a_sim": split.a_sim,
        "core_mass_integral": split.core_mass_integral,
        "K_at_rmax": float(corr.values[-1]),
    })
    manifest.finalize(out)
    return EXIT_OK


def cmd_profile(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("profile", {
        "A": float(args.A), "p": float(args.p), "eps": float(args.eps),
        "b": float(args.b), "rmax": float(args.rmax), "n": int(args.n),
        "cutoff": args.cutoff, "m": float(args.m) if args.m else None,
    })
    spec = InhomogeneitySpec(float(args.A), float(args.p), float(args.eps))
    cutoff = CutoffSpec(args.cutoff, m=float(args.m)) if args.cutoff == "chi_m" \
        else CutoffSpec("chi")
    grid = RadialGrid.uniform(float(args.rmax), int(args.n))
    split = split_defect(spec, grid, cutoff=cutoff, b=float(args.b))
    chi = smooth_cutoff(cutoff, grid.nodes)
    write_csv(
        out / "defect_profile.csv",
        ["r", "g", "chi", "g_core", "g_far"],
        zip(grid.nodes, evaluate_g(spec, grid.nodes), chi,
            split.g_core.values, split.g_far.values),
    )
    write_json(out / "defect_profile.json", {
        "a_signed": split.a_signed,
        "a_sim": split.a_sim,
        "core_mass_integral": split.core_mass_integral,
        "truncated_at": split.truncated_at,
    })
    manifest.finalize(out)
    return EXIT_OK


def cmd_special(args) -> int:
    if args.z:
        zs = _floats(args.z)
    else:
        zs = np.geomspace(float(args.z_min), float(args.z_max), int(args.n)).tolist()
    rows = []
    for z in zs:
        ev = bessel_eval(z)
        rows.append((ev.z, ev.k0, ev.k1, ev.regime, ev.underflow))
    if args.out:
        write_csv(Path(args.out), ["z", "k0", "k1", "regime", "underflow"], rows)
    else:
        for row in rows:
            print(",".join(_fmt(c) for c in row))
    return EXIT_OK


FIG1_A_VALUES = [0.15 * m for m in range(3, 20, 2)]


def cmd_figure1(args) -> int:
    defaults = {
        "out": "fig1", "N": 512, "L": 100.0, "dt": 0.5, "b": 1.0, "A": 1.0,
        "p": 0.8, "t_max": 5000.0, "steady_tol": 1e-5, "check_interval": 20,
        "a_values": None, "r_cut": 3.0, "jobs": 1, "save_field": False,
        "dry_run": False,
    }
    cfg = _merge_config(args, defaults)
    a_values = _floats(cfg["a_values"]) if cfg["a_values"] else list(FIG1_A_VALUES)
    cfg["a_values"] = a_values
    out = _out_dir(cfg)
    manifest = RunManifest("figure1", cfg)
    if cfg["dry_run"]:
        manifest.finalize(out)
        return EXIT_OK

    b, amp, p, r_cut = (float(cfg["b"]), float(cfg["A"]), float(cfg["p"]),
                        float(cfg["r_cut"]))
    members = []
    for i, a in enumerate(a_values):
        eps = _eps_for_target_a(a, amp, p, b, r_cut)
        members.append((eps, p, a, f"run_{i:02d}_a{a:g}"))
    results = _run_members(cfg, members, out, bool(cfg["save_field"]), int(cfg["jobs"]))
    write_json(out / "runs.json", [entry for entry, _ in results])

    profile_rows = []
    point_rows = []
    n_bad = 0
    for (eps, _p, a, name), (entry, report) in zip(members, results):
        prof = report.radial_profile
        for r, v in zip(prof.grid.nodes, prof.values):
            profile_rows.append((a, r, v))
        point_rows.append((a, eps, report.k_measured, report.omega_drift,
                           _transform_y(report.k_measured)))
        if not report.converged:
            n_bad += 1
            manifest.flag_failure(f"{name} unsteady at t_max")
    write_csv(out / "fig1a_profiles.csv", ["a", "r", "dphidr"], profile_rows)
    write_csv(out / "fig1b_points.csv", ["a", "eps", "k", "omega", "y_transform"],
              point_rows)

    steady_pts = [
        (a, report.k_measured)
        for (eps, _p, a, name), (entry, report) in zip(members, results)
        if report.converged
    ]
    fits = {}
    if len(steady_pts) >= 4:
        f1 = fit_k_law(steady_pts)
        f2 = fit_log_k_vs_inv_a(steady_pts)
        fits = {
            "transform_fit": {"slope": f1.slope, "intercept": f1.intercept,
                              "pearson_r": f1.pearson_r},
            "log_k_vs_inv_a": {"slope": f2.slope, "intercept": f2.intercept,
                               "pearson_r": f2.pearson_r},
        }
    write_json(out / "fig1b_fit.json", fits)
    manifest.finalize(out)
    return EXIT_PARTIAL if n_bad else EXIT_OK


FIG2_P_GRID = [0.3, 0.5, 0.8, 1.0, 1.2, 1.5, 2.0, 2.5, 3.0]
FIG2_PROFILE_PS = (0.3, 0.8, 1.5)


def cmd_figure2(args) -> int:
    defaults = {
        "out": "fig2", "N": 512, "L": 100.0, "dt": 0.5, "b": 1.0, "A": 1.5,
        "eps": 1.0, "t_max": 5000.0, "steady_tol": 1e-5, "check_interval": 20,
        "p_grid": None, "r_cut": 3.0, "jobs": 1, "save_field": False,
        "dry_run": False,
    }
    cfg = _merge_config(args, defaults)
    p_grid = _floats(cfg["p_grid"]) if cfg["p_grid"] else list(FIG2_P_GRID)
    cfg["p_grid"] = p_grid
    out = _out_dir(cfg)
    manifest = RunManifest("figure2", cfg)
    if cfg["dry_run"]:
        manifest.finalize(out)
        return EXIT_OK

    b, amp, eps, r_cut = (float(cfg["b"]), float(cfg["A"]), float(cfg["eps"]),
                          float(cfg["r_cut"]))
    members = []
    for i, p in enumerate(p_grid):
        a = b * eps * _branch_mass(amp, p, r_cut) if p > SUBCRITICAL_P else math.nan
        members.append((eps, p, a, f"run_{i:02d}_p{p:g}"))
    results = _run_members(cfg, members, out, bool(cfg["save_field"]), int(cfg["jobs"]))
    write_json(out / "runs.json", [entry for entry, _ in results])

    eff = amp * eps * b
    k_rows = []
    profile_rows = []
    n_bad = 0
    for (eps_i, p, a, name), (entry, report) in zip(members, results):
        k_solid = (
            predict_k_for_family(eff, p, convention_R=r_cut).k_shape
            if p > 1.0 else math.nan
        )
        k_dashed = (
            math.exp(-1.0 / (eff * core_mass(
                InhomogeneitySpec(1.0, p, 1.0), "truncated", r_cut)))
            if p > SUBCRITICAL_P else math.nan
        )
        growth = _profile_growth(report.radial_profile, float(cfg["L"]),
                                 r_core=2.0 * r_cut)
        plateau = growth <= PLATEAU_GROWTH_LIMIT
        k_rows.append((p, a, report.k_measured, k_solid, k_dashed,
                       report.converged, plateau, growth))
        if any(abs(p - q) < 1e-9 for q in FIG2_PROFILE_PS):
            prof = report.radial_profile
            for r, v in zip(prof.grid.nodes, prof.values):
                profile_rows.append((p, r, v))
        if not report.converged:
            if p > SUBCRITICAL_P:
                n_bad += 1
                manifest.flag_failure(f"{name} unsteady at t_max")
            else:
                manifest.flag_failure(f"{name} unsteady (expected: p <= 0.5)")
    write_csv(
        out / "fig2a_k_vs_p.csv",
        ["p", "a_sim", "k_measured", "k_solid", "k_dashed", "converged",
         "plateau", "gradient_growth"],
        k_rows,
    )
    write_csv(out / "fig2b_profiles.csv", ["p", "r", "dphidr"], profile_rows)

    comparable = [
        (entry["params"], SimpleNamespace(**entry["report"]))
        for (eps_i, p, a, name), (entry, report) in zip(members, results)
        if p > SUBCRITICAL_P
    ]
    summary = {"plateau": {f"{row[0]:g}": bool(row[6]) for row in k_rows}}
    if len(comparable) >= 3:
        table = compare_prediction_to_runs(comparable, convention_R=r_cut)
        summary["c_fitted"] = table.c_fitted
        summary["rms_log_residual"] = table.rms_log_residual
        steady_pts = [(r.a_sim, r.k_measured) for r in table.rows if r.steady]
        if len(steady_pts) >= 4:
            fit = fit_log_k_vs_inv_a(steady_pts)
            summary["log_k_vs_inv_a_pearson"] = fit.pearson_r
    write_json(out / "fig2_summary.json", summary)
    manifest.finalize(out)
    return EXIT_PARTIAL if n_bad else EXIT_OK


def cmd_figure3(args) -> int:
    defaults = {"out": "fig3", "rmax": 20.0, "tol": 1e-8, "dry_run": False}
    cfg = _merge_config(args, defaults)
    out = _out_dir(cfg)
    manifest = RunManifest("figure3", cfg)
    if cfg["dry_run"]:
        manifest.finalize(out)
        return EXIT_OK
    sol = shoot_spiral_amplitude(r_max=float(cfg["rmax"]), tol=float(cfg["tol"]))
    r = sol.profile.grid.nodes
    rho = sol.profile.values
    write_csv(out / "fig3_profile.csv", ["r", "rho"], zip(r, rho))
    sel = r > 0
    write_csv(
        out / "fig3_tail.csv",
        ["r", "r2_one_minus_rho_sq"],
        zip(r[sel], r[sel] ** 2 * (1.0 - rho[sel] ** 2)),
    )
    write_json(out / "fig3.json", {
        "slope_origin": sol.slope_origin,
        "tail_residual": sol.tail_residual,
        "bracket": list(sol.bracket),
        "bisections": sol.bisections,
    })
    manifest.finalize(out)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _add_common_sim_flags(sp):
    sp.add_argument("--config", help="JSON or TOML file with flat config keys")
    sp.add_argument("--out")
    sp.add_argument("--N", type=int)
    sp.add_argument("--L", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--t-max", dest="t_max", type=float)
    sp.add_argument("--steady-tol", dest="steady_tol", type=float)
    sp.add_argument("--check-interval", dest="check_interval", type=int)
    sp.add_argument("--save-field", dest="save_field", action="store_true",
                    default=False)
    sp.add_argument("--dry-run", dest="dry_run", action="store_true", default=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eikolab",
        description="Target-pattern laboratory for the viscous eikonal equation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="one steady run")
    _add_common_sim_flags(sp)
    sp.add_argument("--A", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--eps", type=float)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="family sweep over a, eps, or p")
    _add_common_sim_flags(sp)
    sp.add_argument("--A", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--a-values", dest="a_values")
    sp.add_argument("--eps-values", dest="eps_values")
    sp.add_argument("--p-values", dest="p_values")
    sp.add_argument("--r-cut", dest="r_cut", type=float)
    sp.add_argument("--jobs", type=int)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("measure", help="observables from a stored snapshot")
    sp.add_argument("--field", required=True)
    sp.add_argument("--annulus")
    sp.add_argument("--n-bins", dest="n_bins", default=64)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_measure)

    sp = sub.add_parser("predict", help="asymptotic k/omega for a defect family")
    sp.add_argument("--A", type=float, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--b", type=float, default=1.0)
    sp.add_argument("--eps", type=float, default=1.0)
    sp.add_argument("--R", type=float, default=3.0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("compare", help="prediction vs stored sweep runs")
    sp.add_argument("--runs", required=True)
    sp.add_argument("--R", type=float, default=3.0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("shoot", help="amplitude BVP by shooting")
    sp.add_argument("--rmax", type=float, default=20.0)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--out", default="shoot_out")
    sp.set_defaults(func=cmd_shoot)

    sp = sub.add_parser("corrector", help="slow-tail corrector K")
    sp.add_argument("--A", type=float, default=1.0)
    sp.add_argument("--p", type=float, default=1.0)
    sp.add_argument("--eps", type=float, default=1.0)
    sp.add_argument("--b", type=float, default=1.0)
    sp.add_argument("--rmax", type=float, default=200.0)
    sp.add_argument("--n", type=int, default=4001)
    sp.add_argument("--out", default="corrector_out")
    sp.set_defaults(func=cmd_corrector)

    sp = sub.add_parser("profile", help="defect and cut-off profiles")
    sp.add_argument("--A", type=float, default=1.0)
    sp.add_argument("--p", type=float, default=0.8)
    sp.add_argument("--eps", type=float, default=1.0)
    sp.add_argument("--b", type=float, default=1.0)
    sp.add_argument("--cutoff", choices=["chi", "chi_m"], default="chi")
    sp.add_argument("--m", type=float, default=8.0)
    sp.add_argument("--rmax", type=float, default=20.0)
    sp.add_argument("--n", type=int, default=2001)
    sp.add_argument("--out", default="profile_out")
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("special", help="modified Bessel K0/K1 values")
    sp.add_argument("--z")
    sp.add_argument("--z-min", dest="z_min", type=float, default=1e-3)
    sp.add_argument("--z-max", dest="z_max", type=float, default=50.0)
    sp.add_argument("--n", type=int, default=200)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_special)

    sp = sub.add_parser("figure1", help="wavenumber-vs-a sweep reproduction")
    _add_common_sim_flags(sp)
    sp.add_argument("--A", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--a-values", dest="a_values")
    sp.add_argument("--r-cut", dest="r_cut", type=float)
    sp.add_argument("--jobs", type=int)
    sp.set_defaults(func=cmd_figure1)

    sp = sub.add_parser("figure2", help="wavenumber-vs-p sweep reproduction")
    _add_common_sim_flags(sp)
    sp.add_argument("--A", type=float)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--p-grid", dest="p_grid")
    sp.add_argument("--r-cut", dest="r_cut", type=float)
    sp.add_argument("--jobs", type=int)
    sp.set_defaults(func=cmd_figure2)

    sp = sub.add_parser("figure3", help="amplitude BVP reproduction")
    sp.add_argument("--config", help="JSON or TOML file with flat config keys")
    sp.add_argument("--out")
    sp.add_argument("--rmax", type=float)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--dry-run", dest="dry_run", action="store_true", default=False)
    sp.set_defaults(func=cmd_figure3)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
