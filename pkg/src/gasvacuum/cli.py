"""Command-line front end: ``python -m gasvacuum <subcommand> [--config F] [--out D]``."""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import dataclasses
import itertools
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance
from .barenblatt import DomainError, boundary_radius, density, derive_constants, velocity
from .corrector import CorrectorFailure, corrector_table, decay_report, phase_signature, solve_corrector
from .diagnostics import energy_levels, rate_report, sup_norm_report, vacuum_slope
from .lagrangian_solver import (
    InitialDataSpec,
    JacobianLoss,
    LagrangianSolver,
    Trajectory,
    trajectory_from_table,
    trajectory_table,
)
from .weighted_calculus import GRADINGS, build_grid

log = logging.getLogger("gasvacuum")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3
SUBCOMMANDS = ("barenblatt", "corrector", "simulate", "rates", "selftest", "sweep")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    gamma: float = 2.0
    mass: float = 1.0
    n_cells: int = 200
    grading: str = "boundary_graded"
    epsilon: float = 1e-3
    shape: tuple = (1.0, -1.0)
    velocity_amplitude: float = 0.0
    shape_t: tuple = (1.0,)
    horizon: float = 1000.0
    ode_tol: float = 1e-10
    cfl: float = 0.5
    sample_count: int = 60
    output_dir: str = "out"
    seed: int = 0
    fit_window: tuple | None = None
    sweep: dict = field(default_factory=dict)

    def initial_spec(self) -> InitialDataSpec:
        return InitialDataSpec(
            amplitude=self.epsilon,
            shape=tuple(self.shape),
            velocity_amplitude=self.velocity_amplitude,
            shape_t=tuple(self.shape_t),
        )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k in ("shape", "shape_t", "fit_window"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ConfigError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _number(name, v, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    if kind is int:
        if float(v) != int(v):
            raise ConfigError(f"{name} must be an integer, got {v!r}")
        return int(v)
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite")
    return v


def _validate(cfg: RunConfig) -> None:
    checks = [
        ("gamma", cfg.gamma > 1.0, "> 1"),
        ("mass", cfg.mass > 0.0, "> 0"),
        ("n_cells", cfg.n_cells >= 32, ">= 32"),
        ("cfl", 0.0 < cfg.cfl <= 0.9, "in (0, 0.9]"),
        ("horizon", cfg.horizon >= 1.0, ">= 1"),
        ("ode_tol", 0.0 < cfg.ode_tol < 1.0, "in (0, 1)"),
        ("sample_count", cfg.sample_count >= 2, ">= 2"),
        ("epsilon", cfg.epsilon >= 0.0, ">= 0"),
    ]
    for name, ok, bound in checks:
        if not ok:
            raise ConfigError(f"{name}={getattr(cfg, name)!r} violates bound {bound!r}")
    if cfg.grading not in GRADINGS:
        raise ConfigError(f"grading must be one of {GRADINGS}, got {cfg.grading!r}")
    if cfg.fit_window is not None and not (0.0 <= cfg.fit_window[0] < cfg.fit_window[1]):
        raise ConfigError("fit_window must be [t0, t1] with 0 <= t0 < t1")
    for key, values in cfg.sweep.items():
        if key not in _FIELDS or key in ("sweep", "output_dir"):
            raise ConfigError(f"cannot sweep over {key!r}")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep values for {key!r} must be a non-empty list")


def parse_config(text: str) -> RunConfig:
    """Parse a JSON object; omitted keys take their defaults."""
    if not text.strip():
        data = {}
    else:
        try:
            data = json.loads(text, object_pairs_hook=_reject_duplicates)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(data)


def config_from_dict(data: dict) -> RunConfig:
    kw = {}
    for key, val in data.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        if key in ("n_cells", "sample_count", "seed"):
            kw[key] = _number(key, val, int)
        elif key in ("shape", "shape_t", "fit_window"):
            if val is None and key == "fit_window":
                kw[key] = None
                continue
            if not isinstance(val, list) or not val:
                raise ConfigError(f"{key} must be a non-empty list of numbers")
            kw[key] = tuple(_number(key, v) for v in val)
            if key == "fit_window" and len(val) != 2:
                raise ConfigError("fit_window must have two entries")
        elif key in ("grading", "output_dir"):
            if not isinstance(val, str):
                raise ConfigError(f"{key} must be a string")
            kw[key] = val
        elif key == "sweep":
            if not isinstance(val, dict):
                raise ConfigError("sweep must be an object mapping keys to value lists")
            kw[key] = val
        else:
            kw[key] = _number(key, val)
    cfg = RunConfig(**kw)
    _validate(cfg)
    return cfg


# ------------------------------------------------------------------ output

def _write_csv(path: Path, header: list[str], rows: np.ndarray) -> None:
    np.savetxt(path, np.asarray(rows, dtype=float), delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def _read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _update_report(out: Path, section: str, payload: dict, cfg: RunConfig) -> None:
    path = out / "report.json"
    report = json.loads(path.read_text()) if path.exists() else {}
    report["config"] = cfg.to_dict()
    report[section] = payload
    path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")


def _prepare_out(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    return out


# -------------------------------------------------------------- scenarios

def cmd_barenblatt(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    p = derive_constants(cfg.gamma, cfg.mass)
    times = [t for t in (0.0, 1.0, 10.0, 100.0, 1000.0) if t <= cfg.horizon]
    rows = []
    for t in times:
        r = np.linspace(0.0, float(boundary_radius(p, t)), 101)
        rows.append(np.column_stack([r, np.full_like(r, t), density(p, r, t), velocity(p, r, t)]))
    _write_csv(out / "barenblatt.csv", ["r", "t", "rho", "u"], np.vstack(rows))
    _update_report(out, "barenblatt", dataclasses.asdict(p) | {"radius0": p.radius0}, cfg)
    return EXIT_OK


def cmd_corrector(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    path = solve_corrector(cfg.gamma, cfg.horizon, cfg.ode_tol)
    _write_csv(out / "corrector.csv", ["t", "h", "h_t", "eta_r_tilde"], corrector_table(path))
    payload = {"steps": int(path.t.size), "phase": dataclasses.asdict(phase_signature(path))}
    if cfg.horizon >= 100.0:
        payload["decay"] = dataclasses.asdict(decay_report(path))
    _update_report(out, "corrector", payload, cfg)
    return EXIT_OK


def _build_solver(cfg: RunConfig) -> LagrangianSolver:
    p = derive_constants(cfg.gamma, cfg.mass)
    path = solve_corrector(cfg.gamma, cfg.horizon, cfg.ode_tol)
    return LagrangianSolver(p, path, build_grid(p, cfg.n_cells, cfg.grading), cfg.cfl)


ENERGY_HEADER = ["t", "E_0", "E_1", "E_2", "E_total"]


def energy_rows(solver: LagrangianSolver, traj: Trajectory) -> tuple[list[str], np.ndarray]:
    rows, sup_keys = [], None
    for i in range(len(traj)):
        st = traj.state(i)
        en = energy_levels(solver, st)
        sup = sup_norm_report(solver, st)
        if sup_keys is None:
            sup_keys = sorted(sup)
        vb = vacuum_slope(solver, st)
        R = solver.reconstruct(st).R
        rows.append([st.t, *en.E_j, en.E_total, *(sup[k] for k in sup_keys), vb.slope_min, vb.slope_max, R])
    header = ENERGY_HEADER + [f"sup_{k}" for k in sup_keys] + ["slope_min", "slope_max", "R"]
    return header, np.array(rows)


def simulate(cfg: RunConfig, out: Path) -> dict:
    solver = _build_solver(cfg)
    init = solver.make_initial_data(cfg.initial_spec())
    traj = solver.run(init, cfg.horizon, cfg.sample_count)
    _write_csv(out / "corrector.csv", ["t", "h", "h_t", "eta_r_tilde"], corrector_table(solver.path))
    _write_csv(
        out / "trajectory.csv", ["t", "node", "r", "zeta", "zeta_t", "rho", "u"], trajectory_table(solver, traj)
    )
    header, rows = energy_rows(solver, traj)
    _write_csv(out / "energy.csv", header, rows)
    E = rows[:, header.index("E_total")]
    return {
        "n_steps": traj.n_steps,
        "n_samples": len(traj),
        "sup_zeta": float(np.max(np.abs(traj.zeta))),
        "final_sup_zeta": float(np.max(np.abs(traj.zeta[-1]))),
        "max_mass_residual": max(rec["mass_residual"] for rec in traj.records),
        "min_jacobian": min(min(rec["jacobian_min_ratio"], rec["jacobian_min_eta_r"]) for rec in traj.records),
        "E0": float(E[0]),
        "max_E_over_E0": float(E.max() / E[0]) if E[0] > 0 else (0.0 if E.max() == 0 else math.inf),
        "final_R": float(rows[-1, -1]),
    }


def cmd_simulate(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    payload = simulate(cfg, out)
    log.info("simulate: %d steps, sup|zeta| = %.3e", payload["n_steps"], payload["sup_zeta"])
    _update_report(out, "simulate", payload, cfg)
    return EXIT_OK


def cmd_rates(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    tfile = out / "trajectory.csv"
    if not tfile.exists():
        raise FileNotFoundError(f"no trajectory at {tfile}; run 'simulate' with the same config first")
    solver = _build_solver(cfg)
    _, table = _read_csv(tfile)
    traj = trajectory_from_table(table, solver.r.size)
    if not np.allclose(table[: solver.r.size, 2], solver.r, rtol=1e-12, atol=0.0):
        raise DomainError("trajectory grid does not match the configured grid")
    window = tuple(cfg.fit_window) if cfg.fit_window else None
    rep = rate_report(solver, traj, window)
    _update_report(out, "rates", rep, cfg)
    return EXIT_OK


def cmd_selftest(cfg: RunConfig) -> int:
    results = acceptance.run_acceptance(seed=cfg.seed)
    for res in results:
        print(res.line(), flush=True)
    summary = {
        "passed": sum(r.passed for r in results),
        "failed": [r.number for r in results if not r.passed],
        "criteria": [r.to_dict() for r in results],
    }
    out = _prepare_out(cfg)
    _update_report(out, "selftest", summary, cfg)
    print(json.dumps({"passed": summary["passed"], "total": len(results), "failed": summary["failed"]}))
    return EXIT_OK if not summary["failed"] else EXIT_ACCEPTANCE


def _sweep_one(args) -> dict:
    idx, data = args
    cfg = config_from_dict(data)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        payload = simulate(cfg, out)
        payload["status"] = "ok"
    except (JacobianLoss, CorrectorFailure, DomainError) as exc:
        payload = {"status": f"numerical failure: {exc}"}
    return {"index": idx} | payload


def cmd_sweep(cfg: RunConfig, jobs: int) -> int:
    out = _prepare_out(cfg)
    if not cfg.sweep:
        raise ConfigError("sweep needs a non-empty 'sweep' object, e.g. {\"gamma\": [1.5, 2, 3]}")
    keys = sorted(cfg.sweep)
    base = cfg.to_dict()
    base.pop("sweep")
    tasks = []
    for idx, combo in enumerate(itertools.product(*(cfg.sweep[k] for k in keys))):
        data = dict(base) | dict(zip(keys, combo)) | {"output_dir": str(out / f"run_{idx:03d}")}
        config_from_dict(data)  # fail fast on bad grid values
        tasks.append((idx, data))
    if jobs > 1:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]
    runs = [{k: data[k] for k in keys} | res for (_, data), res in zip(tasks, results)]
    _update_report(out, "sweep", {"keys": keys, "runs": runs}, cfg)
    return EXIT_OK if all(r["status"] == "ok" for r in runs) else EXIT_NUMERICAL


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gasvacuum", description=__doc__)
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("--config", type=Path, help="JSON config file (omitted keys take defaults)")
    ap.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    ap.add_argument("--seed", type=int, help="seed for randomized property suites (overrides seed)")
    ap.add_argument("--jobs", type=int, default=1, help="parallel runs for sweep")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text)
        overrides = {}
        if args.out is not None:
            overrides["output_dir"] = str(args.out)
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = dataclasses.replace(cfg, **overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "sweep":
            return cmd_sweep(cfg, args.jobs)
        handler = {
            "barenblatt": cmd_barenblatt,
            "corrector": cmd_corrector,
            "simulate": cmd_simulate,
            "rates": cmd_rates,
            "selftest": cmd_selftest,
        }[args.command]
        return handler(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (JacobianLoss, CorrectorFailure, DomainError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
