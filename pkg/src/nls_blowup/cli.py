"""Command-line runner: config ingestion, experiments, CSV + manifest output.

Usage:
    nls-blowup-lab list [--json]
    nls-blowup-lab run CONFIG.yaml [--out DIR] [--workers N] [--seed S]

Configs are YAML mappings with an ``experiment`` key; every other key must
belong to that experiment's schema (unknown keys are hard errors, typos in
tolerance names must not pass silently).  Each run writes one or more CSV
files plus a ``manifest.json`` written atomically at the end; CSV bodies
are deterministic for a fixed config + seed, timestamps live only in the
manifest.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import tempfile
import time
from importlib import metadata

import numpy as np
import yaml

from .cases import NonlinearityCase, Quadratic, gauge_condition_holds
from .grids import FREQUENCY, Field, Grid
from .lifespan import (detune_experiment, gaussian_profile, sweep)
from .operators import identity_suite, w_decay_statistic

CASE_KINDS = {
    1: Quadratic.U2_SQUARED,
    2: Quadratic.U1_U2,
    3: Quadratic.CONJ_U1_U2,
    4: Quadratic.ABS_U2_U2,
}


class ConfigError(ValueError):
    pass


def _positive(x):
    x = float(x)
    if x <= 0:
        raise ConfigError("must be positive")
    return x


def _eps_value(x):
    x = float(x)
    if not 0.0 < x <= 1.0:
        raise ConfigError("eps values must lie in (0, 1]")
    return x


def _eps_list(xs):
    return [_eps_value(x) for x in xs]


def _case_number(x):
    x = int(x)
    if x not in CASE_KINDS:
        raise ConfigError("case must be one of 1, 2, 3, 4")
    return x


def _float_list(xs):
    return [float(x) for x in xs]


def _dims(xs):
    xs = [int(x) for x in (xs if isinstance(xs, (list, tuple)) else [xs])]
    if any(d not in (1, 2) for d in xs):
        raise ConfigError("dimensions must be 1 or 2")
    return xs


# schema: key -> (validator, default, description)
SCHEMAS = {
    "identities": {
        "t_decay_max": (_positive, 1.0e4, "largest t for the deformation-decay scan"),
        "n_decay_times": (lambda x: max(4, int(x)), 24, "log-spaced scan size"),
    },
    "chain_validate": {
        "case": (_case_number, 1, "nonlinearity case 1-4"),
        "eps": (_eps_value, 0.8, "data size"),
        "t_max": (_positive, 10.0, "largest comparison time"),
        "n_times": (lambda x: max(3, int(x)), 9, "comparison times, log-spaced in [1, t_max]"),
        "n_points": (lambda x: int(x), 2048, "physical grid size"),
        "box_length": (_positive, 120.0, "physical box length"),
        "tolerance": (_positive, 1e-6, "relative L2 pass bound"),
    },
    "lifespan_sweep": {
        "case": (_case_number, 1, "nonlinearity case 1-4"),
        "eps_list": (_eps_list, [float(round(x, 6)) for x in np.geomspace(0.4, 1.0, 5)],
                     "epsilon grid"),
        "slope_tol": (_positive, None, "allowed |slope - (-p)| (default 0.15 for p=4, 0.2 for p=6)"),
        "profile_width": (_positive, 4.0,
                          "frequency half-width of the Gaussian profile; wide "
                          "(low-peak) profiles keep every crossing inside the "
                          "scaling regime"),
        "horizon_margin": (_positive, 1e5, "search horizon = margin * eps^-p"),
    },
    "detune": {
        "case": (_case_number, 1, "nonlinearity case 1-4"),
        "eps": (_eps_value, 0.8, "data size"),
        "deltas": (_float_list, [-0.2, 0.0, 0.2], "relative detunings of m3"),
        "profile_width": (_positive, 1.0,
                          "frequency half-width of the Gaussian profile"),
        "profile_center": (lambda x: float(x), 2.0,
                           "frequency center of the Gaussian profile; data "
                           "away from the always-resonant zero mode makes "
                           "detuning destroy every resonant wave pair"),
        "horizon_margin": (_positive, 4000.0, "search horizon = margin * eps^-p"),
    },
    "full_validate": {
        "case": (_case_number, 1, "nonlinearity case 1-4"),
        "eps": (_eps_value, 0.8, "data size"),
        "sigma_cap": (_positive, 0.9, "halt when sup |sigma| reaches this"),
        "rel_tol": (_positive, 1e-8, "step-doubling error target"),
        "tolerance": (_positive, 1e-4, "relative L2 pass bound vs reconstruction"),
        "n_points": (lambda x: int(x), 2048, "physical grid size"),
        "box_length": (_positive, 160.0, "physical box length"),
    },
    "virial": {
        "dimensions": (_dims, [1, 2], "spatial dimensions to check"),
        "t_max": (_positive, 2.0, "trajectory length"),
        "dt": (_positive, 2e-3, "fixed step size"),
        "n_snapshots": (lambda x: max(9, int(x)), 65, "uniform snapshots"),
        "off_resonance_m3": (_positive, 2.4, "non-resonant third mass for the ablation"),
    },
}

RUNTIME_NOTES = {
    "identities": "seconds",
    "chain_validate": "tens of seconds",
    "lifespan_sweep": ("minutes for case 1/4; cases 2-3 scale like eps_min^-6 "
                       "(eps_min = 0.4 is the documented cost floor)"),
    "detune": "about a minute",
    "full_validate": "a few minutes",
    "virial": "about a minute",
}


def validate_config(raw: dict) -> tuple[str, dict]:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    if "experiment" not in raw:
        raise ConfigError("missing required key 'experiment'")
    name = raw["experiment"]
    if name not in SCHEMAS:
        raise ConfigError(f"unknown experiment '{name}'; choices: {sorted(SCHEMAS)}")
    schema = SCHEMAS[name]
    cfg = {}
    for key, value in raw.items():
        if key == "experiment":
            continue
        if key not in schema:
            raise ConfigError(f"unknown key '{key}' for experiment '{name}'; "
                              f"allowed: {sorted(schema)}")
        validator = schema[key][0]
        try:
            cfg[key] = validator(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for '{key}': {value!r} ({exc})") from exc
    for key, (_, default, _) in schema.items():
        cfg.setdefault(key, default)
    return name, cfg


def _write_csv(path: str, fieldnames: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in fieldnames})


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return v


def _case_from_config(cfg: dict) -> NonlinearityCase:
    return NonlinearityCase.resonant(CASE_KINDS[cfg["case"]])


# --- experiment bodies ----------------------------------------------------


def _run_identities(cfg, out_dir, seed, workers):
    residuals = identity_suite()
    checks = {
        "operator_identities_below_1e-10": all(
            v < 1e-10 for k, v in residuals.items() if k != "factorization"),
        "factorization_below_1e-8": residuals["factorization"] < 1e-8,
    }
    grid = Grid(512, 40.0)
    xi = grid.points()
    fields = [
        Field(grid, np.exp(-xi**2).astype(complex), FREQUENCY),
        Field(grid, (xi * np.exp(-xi**2 / 2)).astype(complex), FREQUENCY),
        Field(grid, np.exp(-((xi - 0.7)**2) + 0.3j * xi), FREQUENCY),
    ]
    ts = np.geomspace(1.0, cfg["t_decay_max"], cfg["n_decay_times"])
    rows = []
    for i, f in enumerate(fields):
        for t in ts:
            rows.append({"field": i, "t": float(t),
                         "decay_statistic": w_decay_statistic(f, 1.0, float(t))})
    first = [r["decay_statistic"] for r in rows if r["t"] == ts[0]]
    last = [r["decay_statistic"] for r in rows if r["t"] == ts[-1]]
    checks["deformation_decay_non_increasing"] = all(
        b <= a * (1 + 1e-6) for a, b in zip(first, last))
    _write_csv(os.path.join(out_dir, "identity_residuals.csv"),
               ["name", "residual"],
               [{"name": k, "residual": v} for k, v in sorted(residuals.items())])
    _write_csv(os.path.join(out_dir, "deformation_decay.csv"),
               ["field", "t", "decay_statistic"], rows)
    return ({"residuals": residuals}, checks,
            ["identity_residuals.csv", "deformation_decay.csv"])


def _run_chain_validate(cfg, out_dir, seed, workers):
    from .chain import ChainEvaluator
    from .lifespan import run_to_threshold

    case = _case_from_config(cfg)
    psi = gaussian_profile(m1=case.masses.m1, min_period=cfg["box_length"])
    grid = Grid(cfg["n_points"], cfg["box_length"])
    chain = ChainEvaluator(psi, cfg["eps"], case, grid, t_max=cfg["t_max"] * 1.001)
    traj = run_to_threshold(case, cfg["eps"], psi=psi, horizon=cfg["t_max"] * 1.01)
    times = np.geomspace(1.0, min(cfg["t_max"], traj.t_end), cfg["n_times"])
    rows = []
    window = 0.4 * cfg["box_length"]
    for t in times:
        x = grid.points()
        mask = np.abs(x) < window
        row = {"t": float(t)}
        for j, v_of_t in ((2, chain.v2), (3, chain.v3)):
            ref = v_of_t(float(t)).values[mask]
            rec = traj.reconstruct_values(j, float(t), x[mask])
            row[f"rel_err_v{j}"] = float(np.linalg.norm(rec - ref)
                                         / max(np.linalg.norm(ref), 1e-300))
        rows.append(row)
    worst = max(max(r["rel_err_v2"], r["rel_err_v3"]) for r in rows)
    checks = {"dual_representation_agrees": worst < cfg["tolerance"]}
    _write_csv(os.path.join(out_dir, "chain_validate.csv"),
               ["t", "rel_err_v2", "rel_err_v3"], rows)
    return ({"max_rel_err": worst, "case": cfg["case"]}, checks,
            ["chain_validate.csv"])


def _run_lifespan_sweep(cfg, out_dir, seed, workers):
    case = _case_from_config(cfg)
    psi = gaussian_profile(m1=case.masses.m1, width=cfg["profile_width"])
    result = sweep(case, cfg["eps_list"], psi=psi, workers=workers,
                   horizon_margin=cfg["horizon_margin"])
    p = float(case.lifespan_order())
    slope_tol = cfg["slope_tol"] if cfg["slope_tol"] is not None else (
        0.15 if p == 4 else 0.2)
    ts = [r.T_eps for r in result.records]
    checks = {
        "slope_matches_theory": abs(result.fit.exponent + p) < slope_tol,
        "lifespan_decreasing_in_eps": all(a > b for a, b in zip(ts, ts[1:])),
        "bracket_ratio_below_10": result.K_hat / result.kappa_hat < 10.0,
    }
    rows = [{"case": cfg["case"], "eps": r.eps, "T_eps": r.T_eps,
             "theta": r.theta, "x_star": r.x_star,
             "kappa_hat": result.kappa_hat, "K_hat": result.K_hat}
            for r in result.records]
    _write_csv(os.path.join(out_dir, "lifespan_sweep.csv"),
               ["case", "eps", "T_eps", "theta", "x_star", "kappa_hat", "K_hat"],
               rows)
    summary = {"slope": result.fit.exponent, "residual": result.fit.residual,
               "kappa_hat": result.kappa_hat, "K_hat": result.K_hat,
               "case": cfg["case"]}
    return summary, checks, ["lifespan_sweep.csv"]


def _run_detune(cfg, out_dir, seed, workers):
    case = _case_from_config(cfg)
    psi = gaussian_profile(m1=case.masses.m1, width=cfg["profile_width"],
                           center=cfg["profile_center"])
    rows_raw = detune_experiment(case, cfg["deltas"], cfg["eps"], psi=psi,
                                 horizon_margin=cfg["horizon_margin"])
    rows = [{"delta": r.delta, "max_sup_v3": r.max_sup_v3,
             "crossed": int(r.crossed),
             "crossing_time": r.crossing_time if r.crossing_time else ""}
            for r in rows_raw]
    resonant_crossed = all(r.crossed for r in rows_raw if r.delta == 0.0)
    detuned_low = all(r.max_sup_v3 < 0.5 for r in rows_raw if abs(r.delta) >= 0.2)
    truth_table_ok = all(
        gauge_condition_holds(NonlinearityCase.resonant(k)) and
        not gauge_condition_holds(NonlinearityCase.resonant(k).detuned(0.2))
        for k in CASE_KINDS.values())
    checks = {"resonant_case_crosses": resonant_crossed,
              "detuned_cases_stay_small": detuned_low,
              "gauge_truth_table": truth_table_ok}
    _write_csv(os.path.join(out_dir, "detune.csv"),
               ["delta", "max_sup_v3", "crossed", "crossing_time"], rows)
    return ({"rows": rows, "case": cfg["case"]}, checks, ["detune.csv"])


def _run_full_validate(cfg, out_dir, seed, workers):
    from .fullsolver import cross_validate

    case = _case_from_config(cfg)
    report = cross_validate(
        case, cfg["eps"], x_grid=Grid(cfg["n_points"], cfg["box_length"]),
        sigma_cap=cfg["sigma_cap"], rel_tol=cfg["rel_tol"])
    checks = {
        "direct_matches_reconstruction": report["max_rel_err"] < cfg["tolerance"],
        "u1_mass_conserved": report["l2_u1_drift"] < 1e-10,
    }
    _write_csv(os.path.join(out_dir, "full_validate.csv"),
               ["t", "rel_err_u1", "rel_err_u2", "rel_err_u3", "sup_sigma"],
               report["rows"])
    summary = {k: report[k] for k in
               ("T_eps", "theta", "halt_reason", "n_steps", "max_rel_err",
                "l2_u1_drift")}
    return summary, checks, ["full_validate.csv"]


def _run_virial(cfg, out_dir, seed, workers):
    from .cases import MassTriple
    from .virial import (WaveControls, check_identities, energy_E,
                         energy_sign_threshold, evolve_3wave, gaussian_triple)

    rows, checks = [], {}
    files = []
    for dim in cfg["dimensions"]:
        grid = Grid(256 if dim == 1 else 128, 30.0)
        phi = gaussian_triple(grid, dim, chirps=(0.1, -0.05, 0.08))
        controls = WaveControls(t_max=cfg["t_max"], dt=cfg["dt"],
                                n_snapshots=cfg["n_snapshots"])
        for tag, masses in (("resonant", MassTriple(1.0, 2.0, 3.0)),
                            ("off", MassTriple(1.0, 2.0, cfg["off_resonance_m3"]))):
            traj = evolve_3wave(phi, masses, controls)
            report = check_identities(traj, masses)
            for r in report.rows:
                rows.append({"dimension": dim, "masses": tag, **r})
            key = f"n{dim}_{tag}"
            checks[f"{key}_energy_conserved"] = report.dE_residual < 1e-6
            checks[f"{key}_variance_identity"] = report.variance_residual < 1e-4
            checks[f"{key}_dilation_identity"] = report.dV_residual < 1e-4
            if tag == "resonant":
                checks[f"{key}_cross_coefficient_zero"] = report.cross_coefficient == 0.0
            else:
                checks[f"{key}_cross_term_ablation_degrades"] = (
                    report.variance_residual_no_cross
                    > 10.0 * report.variance_residual)
        thresh = energy_sign_threshold(phi, MassTriple(1.0, 2.0, 3.0))
        eps_half = 0.5 * min(thresh, 1e6)
        scaled = tuple(f.with_values(eps_half * f.values) for f in phi)
        checks[f"n{dim}_energy_positive_below_threshold"] = (
            energy_E(scaled, MassTriple(1.0, 2.0, 3.0)) > 0.0)
    _write_csv(os.path.join(out_dir, "virial_residuals.csv"),
               ["dimension", "masses", "t", "dE_residual", "variance_residual",
                "dV_residual", "cross_term"], rows)
    files.append("virial_residuals.csv")
    return ({"n_rows": len(rows)}, checks, files)


RUNNERS = {
    "identities": _run_identities,
    "chain_validate": _run_chain_validate,
    "lifespan_sweep": _run_lifespan_sweep,
    "detune": _run_detune,
    "full_validate": _run_full_validate,
    "virial": _run_virial,
}


# --- orchestration --------------------------------------------------------


def _code_version() -> str:
    try:
        return metadata.version("nls-blowup-lab")
    except metadata.PackageNotFoundError:
        return "unreleased"


def _atomic_json(path: str, payload: dict) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    os.replace(tmp, path)


def run(config_path: str, out_dir: str = ".", workers: int = 1,
        seed: int = 0) -> int:
    with open(config_path) as fh:
        raw = yaml.safe_load(fh)
    name, cfg = validate_config(raw)
    os.makedirs(out_dir, exist_ok=True)
    np.random.seed(seed)
    started = time.time()
    summary, checks, files = RUNNERS[name](cfg, out_dir, seed, workers)
    manifest = {
        "schema_version": 1,
        "experiment": name,
        "config": {**cfg, "experiment": name},
        "config_sha256": hashlib.sha256(
            json.dumps({**cfg, "experiment": name}, sort_keys=True,
                       default=float).encode()).hexdigest(),
        "code_version": _code_version(),
        "seed": seed,
        "workers": workers,
        "wall_time_s": time.time() - started,
        "summary": summary,
        "checks": checks,
        "files": files,
        "all_passed": all(checks.values()),
    }
    _atomic_json(os.path.join(out_dir, "manifest.json"), manifest)
    status = "PASS" if manifest["all_passed"] else "FAIL"
    print(f"{name}: {status}")
    for key, ok in checks.items():
        print(f"  [{'ok' if ok else 'FAIL'}] {key}")
    return 0 if manifest["all_passed"] else 1


def list_experiments(as_json: bool = False) -> None:
    catalog = {}
    for name, schema in SCHEMAS.items():
        catalog[name] = {
            "expected_runtime": RUNTIME_NOTES[name],
            "keys": {k: {"default": d, "doc": doc}
                     for k, (_, d, doc) in schema.items()},
        }
    if as_json:
        print(json.dumps(catalog, indent=2, default=float))
        return
    for name, entry in catalog.items():
        print(f"{name}  (runtime: {entry['expected_runtime']})")
        for key, info in entry["keys"].items():
            print(f"    {key:<18} default={info['default']!r:<24} {info['doc']}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nls-blowup-lab",
        description="Simulation experiments for small-data blow-up in a "
                    "three-component quadratic derivative NLS system.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=0)
    p_list = sub.add_parser("list", help="describe available experiments")
    p_list.add_argument("--json", action="store_true")
    args = parser.parse_args(argv)
    if args.command == "list":
        list_experiments(as_json=args.json)
        return 0
    try:
        return run(args.config, out_dir=args.out, workers=args.workers,
                   seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
