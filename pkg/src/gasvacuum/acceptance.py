"""Acceptance checks at the documented tolerances.

Each check returns a :class:`CriterionResult`; criteria 7-11 share one
N=400 simulation, built lazily and cached on the :class:`AcceptanceContext`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .barenblatt import derive_constants, pme_residual, total_mass
from .corrector import (
    ansatz_residual,
    decay_report,
    phase_signature,
    solve_corrector,
    volterra_oracle,
)
from .diagnostics import energy_levels, observable_series, rate_report
from .lagrangian_solver import InitialDataSpec, LagrangianSolver, log_times
from .weighted_calculus import build_grid, hardy_ratio


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict
    threshold: str
    runtime_s: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{tag}] {self.number:2d} {self.name}: {vals} (need {self.threshold}; {self.runtime_s:.2f}s)"

    def to_dict(self) -> dict:
        return {
            "criterion": self.number,
            "name": self.name,
            "passed": bool(self.passed),
            "measured": self.measured,
            "threshold": self.threshold,
        }


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}={_fmt(x)}" for k, x in v.items()) + "}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass
class AcceptanceContext:
    seed: int = 0
    _cache: dict = field(default_factory=dict)

    def long_run(self):
        """gamma=2, eps=1e-3, N=400, horizon 1e3: (solver, trajectory, series, report)."""
        if "long" not in self._cache:
            p = derive_constants(2.0, 1.0)
            path = solve_corrector(2.0, 1000.0, 1e-10)
            solver = LagrangianSolver(p, path, build_grid(p, 400))
            traj = solver.run(solver.make_initial_data(InitialDataSpec(amplitude=1e-3)), 1000.0, 80)
            series = observable_series(solver, traj)
            energies = [energy_levels(solver, traj.state(i)) for i in range(len(traj))]
            report = rate_report(solver, traj, (10.0, 1000.0), E0=energies[0].E_total, series=series)
            self._cache["long"] = (solver, traj, series, energies, report)
        return self._cache["long"]


def c1_mass(ctx: AcceptanceContext) -> CriterionResult:
    worst = 0.0
    for g in (1.5, 2.0, 3.0):
        for M in (1.0, 5.0):
            p = derive_constants(g, M)
            for t in (0.0, 1.0, 10.0, 100.0, 1000.0):
                m, _ = total_mass(p, t)
                worst = max(worst, abs(m - M) / M)
    return CriterionResult(1, "Barenblatt mass invariance", worst < 1e-8, {"max_rel_error": worst}, "< 1e-8")


def c2_pme(ctx: AcceptanceContext) -> CriterionResult:
    p = derive_constants(2.0, 1.0)
    t = 1.0
    rs = np.linspace(0.0, 0.8 * p.radius0 * (1.0 + t) ** p.expansion_exponent, 20)
    norms = []
    for dh in (1e-2, 5e-3):
        res = np.array([pme_residual(p, float(r), t, dh) for r in rs])
        norms.append(np.max(np.abs(res), axis=0))
    orders = np.log2(norms[0] / norms[1])
    order = float(orders.min())
    return CriterionResult(
        2,
        "Barenblatt solves PME and Darcy",
        order >= 1.9,
        {"order_pme": float(orders[0]), "order_darcy": float(orders[1])},
        "observed order >= 1.9",
    )


def c3_corrector(ctx: AcceptanceContext) -> CriterionResult:
    measured = {}
    ok = True
    for g in (1.5, 2.0, 3.0):
        path = solve_corrector(g, 1e4, 1e-10)
        sig = phase_signature(path)
        rep = decay_report(path)
        ts = log_times(0.0, 1e4, 50)
        volt = max(volterra_oracle(path, float(t)) for t in ts)
        good = (
            sig.h_min >= -1e-12
            and sig.slope_rate_min >= -1e-12
            and sig.h_t_sign_changes == 1
            and volt < 1e-8
            and rep.tail_stable
        )
        ok = ok and good
        measured[f"g{g}"] = {
            "h_min": sig.h_min,
            "eta_rt_min": sig.slope_rate_min,
            "h_t_sign_changes": sig.h_t_sign_changes,
            "volterra_max": volt,
            "tail_growth": max(rep.tail_growth_h, rep.tail_growth_ht),
        }
    return CriterionResult(
        3,
        "Corrector structure",
        ok,
        measured,
        "h,eta_rt >= -1e-12; one h_t sign change; Volterra < 1e-8; tail stable",
    )


def c4_ansatz(ctx: AcceptanceContext) -> CriterionResult:
    p = derive_constants(2.0, 1.0)
    path = solve_corrector(2.0, 1000.0, 1e-10)
    rs = np.linspace(0.05, 0.95, 10) * p.radius0
    worst = max(float(np.max(np.abs(ansatz_residual(p, path, rs, float(t))))) for t in log_times(0.0, 1000.0, 10))
    return CriterionResult(4, "Exact ansatz residual", worst < 1e-8, {"max_residual": worst}, "< 1e-8")


def c5_zero(ctx: AcceptanceContext) -> CriterionResult:
    p = derive_constants(2.0, 1.0)
    path = solve_corrector(2.0, 100.0, 1e-10)
    solver = LagrangianSolver(p, path, build_grid(p, 200))
    traj = solver.run(solver.make_initial_data(InitialDataSpec(amplitude=0.0)), 100.0, 20)
    sup = float(np.max(np.abs(traj.zeta)))
    return CriterionResult(5, "Zero solution preserved", sup < 1e-10, {"sup_zeta": sup}, "< 1e-10")


def c6_linearization(ctx: AcceptanceContext) -> CriterionResult:
    p = derive_constants(2.0, 1.0)
    path = solve_corrector(2.0, 10.0, 1e-10)
    solver = LagrangianSolver(p, path, build_grid(p, 200))
    # direction: the shape of the simulated initial perturbation
    phi = 1.0 - (solver.r / p.radius0) ** 2
    e = solver.slope(0.0)
    lin = solver.linear_accel(phi, e)
    eps = np.array([1e-2, 1e-3, 1e-4])
    errs = np.array([np.max(np.abs(solver.spatial_accel(ep * phi, e) / ep - lin)) for ep in eps])
    slope = float(np.polyfit(np.log(eps), np.log(errs), 1)[0])
    pairwise = [float(v) for v in np.diff(np.log(errs)) / np.diff(np.log(eps))]
    return CriterionResult(
        6,
        "Linearization consistency",
        slope >= 1.0,
        {"slope": slope, "pairwise": pairwise, "err_1e-4": float(errs[-1])},
        "slope >= 1",
    )


def _theory_check(entry: dict, tol: float, models) -> tuple[bool, dict]:
    devs = {m: entry[m]["relative_deviation"] for m in models}
    exps = {f"exp_{m}": entry[m]["exponent"] for m in models}
    return any(d <= tol for d in devs.values()), exps


def c7_radius(ctx: AcceptanceContext) -> CriterionResult:
    rep = ctx.long_run()[4]["boundary_radius"]
    ok, exps = _theory_check(rep, 0.05, ("pure_power",))
    exps["relative_deviation"] = rep["pure_power"]["relative_deviation"]
    return CriterionResult(7, "Boundary expansion rate", ok, exps, "within 5% of 0.2")


def c8_velocity(ctx: AcceptanceContext) -> CriterionResult:
    rep = ctx.long_run()[4]["velocity"]
    ok, exps = _theory_check(rep, 0.15, ("pure_power", "power_times_log"))
    return CriterionResult(8, "Velocity decay rate", ok, exps, "within 15% of -1")


def c9_density(ctx: AcceptanceContext) -> CriterionResult:
    full = ctx.long_run()[4]
    rep = full["density"]
    ok, exps = _theory_check(rep, 0.15, ("power_times_log",))
    exps["regime"] = full["regime"]["statement"]
    return CriterionResult(9, "Density decay rate", ok, exps, "within 15% of -0.8 (power_times_log)")


def c10_vacuum(ctx: AcceptanceContext) -> CriterionResult:
    _, _, series, _, _ = ctx.long_run()
    sel = series["t"] >= 1.0
    lo, hi = float(series["norm_min"][sel].min()), float(series["norm_max"][sel].max())
    ratio = hi / lo
    return CriterionResult(
        10, "Physical-vacuum bracket", lo > 0.0 and ratio <= 10.0,
        {"min": lo, "max": hi, "ratio": ratio}, "max/min <= 10",
    )


def c11_energy(ctx: AcceptanceContext) -> CriterionResult:
    _, _, _, energies, _ = ctx.long_run()
    E = np.array([e.E_total for e in energies])
    entries = np.concatenate([np.concatenate([e.E_j, e.E_ji[e.computed]]) for e in energies])
    nonneg = bool(np.all(entries >= 0.0))
    ratio = float(E.max() / E[0])
    return CriterionResult(
        11, "Energy boundedness", ratio <= 10.0 and nonneg,
        {"max_E_over_E0": ratio, "all_nonnegative": nonneg}, "E(t) <= 10 E(0), entries >= 0",
    )


def c12_hardy(ctx: AcceptanceContext) -> CriterionResult:
    p = derive_constants(2.0, 1.0)
    grids = [build_grid(p, 200), build_grid(p, 400)]
    rng = np.random.default_rng(ctx.seed)
    coeffs = rng.standard_normal((100, 7))
    measured = {}
    ok = True
    for k in (1.5, 2.0, 3.0):
        stats = []
        for g in grids:
            x = g.nodes / g.radius
            ratios = np.array([hardy_ratio(g, np.polynomial.polynomial.polyval(x, c), k) for c in coeffs])
            stats.append((float(ratios.max()), float(np.median(ratios))))
        (mx, med), (mx2, med2) = stats
        drift = max(abs(mx2 / mx - 1.0), abs(med2 / med - 1.0))
        good = math.isfinite(mx) and mx <= 10.0 * med and drift <= 0.2
        ok = ok and good
        measured[f"k{k}"] = {"max_over_median": mx / med, "refinement_drift": drift}
    return CriterionResult(12, "Hardy property", ok, measured, "max <= 10 median; drift <= 20%")


def c13_convergence(ctx: AcceptanceContext) -> CriterionResult:
    p = derive_constants(2.0, 1.0)
    path = solve_corrector(2.0, 10.0, 1e-10)
    finals = []
    for n in (100, 200, 400):
        solver = LagrangianSolver(p, path, build_grid(p, n))
        traj = solver.run(solver.make_initial_data(InitialDataSpec(amplitude=1e-3)), 10.0, [0.0, 10.0])
        finals.append(traj.zeta[-1])
    # nested grids: every other node of the finer grid coincides
    d1 = float(np.max(np.abs(finals[0] - finals[1][::2])))
    d2 = float(np.max(np.abs(finals[1] - finals[2][::2])))
    order = math.log2(d1 / d2)
    return CriterionResult(
        13, "Solver self-convergence", order >= 1.0, {"d_100_200": d1, "d_200_400": d2, "order": order}, "order >= 1"
    )


CRITERIA: dict[int, Callable[[AcceptanceContext], CriterionResult]] = {
    1: c1_mass,
    2: c2_pme,
    3: c3_corrector,
    4: c4_ansatz,
    5: c5_zero,
    6: c6_linearization,
    7: c7_radius,
    8: c8_velocity,
    9: c9_density,
    10: c10_vacuum,
    11: c11_energy,
    12: c12_hardy,
    13: c13_convergence,
}


def run_criterion(number: int, ctx: AcceptanceContext) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number](ctx)
    res.runtime_s = time.perf_counter() - t0
    return res


def run_acceptance(seed: int = 0, numbers=None) -> list[CriterionResult]:
    ctx = AcceptanceContext(seed=seed)
    return [run_criterion(n, ctx) for n in (numbers or sorted(CRITERIA))]
