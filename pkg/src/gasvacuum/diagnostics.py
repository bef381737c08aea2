"""Weighted energies, sup-norm monitors, vacuum-slope brackets and
power-law fits for simulated perturbations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .barenblatt import DomainError, density, velocity
from .corrector import bar_slope
from .lagrangian_solver import LagrangianSolver, PerturbationState, Trajectory, density_power_slope
from .weighted_calculus import apply_stencil, stencils, weighted_integral

MODELS = ("pure_power", "power_times_log")


@dataclass
class EnergyReport:
    t: float
    E_j: list[float]
    E_ji: np.ndarray  # (jmax+1, imax+1); column 0 unused, NaN where not computed
    computed: np.ndarray  # bool mask matching E_ji
    E_total: float
    sup_norms: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class RateFit:
    exponent: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    model: str
    n_points: int
    constant: bool = False


@dataclass(frozen=True)
class VacuumBracket:
    t: float
    slope_min: float
    slope_max: float
    normalized_min: float
    normalized_max: float


def time_derivatives(solver: LagrangianSolver, state: PerturbationState, jmax: int = 2) -> list[np.ndarray]:
    """[zeta, zeta_t, zeta_tt, zeta_ttt][: jmax + 2], higher ones from the equation."""
    if not 0 <= jmax <= 2:
        raise DomainError("only jmax <= 2 is supported natively")
    out = [state.zeta, state.zeta_t]
    if jmax >= 1:
        ztt = solver.rhs(state)
        out.append(ztt)
        if jmax >= 2:
            out.append(solver.third_derivative(state, ztt))
    return out


def _r_derivs(solver: LagrangianSolver, f: np.ndarray, upto: int) -> list[np.ndarray]:
    """[f, f_r, ..., d^upto f / dr^upto] using even reflection at the origin."""
    out = [f]
    for i in range(1, upto + 1):
        out.append(apply_stencil(stencils(solver.g, i, even=True), f))
    return out


def energy_levels(
    solver: LagrangianSolver,
    state: PerturbationState,
    jmax: int = 2,
    imax: int = 4,
) -> EnergyReport:
    """E_j and E_{j,i} for j <= jmax, 1 <= i <= min(imax, l - j), in the sigma form:

    E_j   = (1+t)^{2j} int r^4 s^a D_j^2 + r^2 s^{a+1}(D_j^2 + (r D_j,r)^2) + (1+t) r^4 s^a D_{j+1}^2
    E_j,i = (1+t)^{2j} int r^2 s^{a+i-1} (d_r^i D_j)^2 + r^4 s^{a+i+1} (d_r^{i+1} D_j)^2

    with D_j = d_t^j zeta and s = sigma, a = alpha.
    """
    p, g = solver.p, solver.g
    al = p.alpha
    t = state.t
    s = 1.0 + t
    D = time_derivatives(solver, state, jmax)
    E_j = []
    E_ji = np.full((jmax + 1, imax + 1), np.nan)
    computed = np.zeros_like(E_ji, dtype=bool)
    for j in range(jmax + 1):
        top = min(imax, p.ell - j)
        rd = _r_derivs(solver, D[j], top + 1)
        wj = s ** (2 * j)
        e = (
            weighted_integral(g, D[j], al, 4)
            + weighted_integral(g, D[j], al + 1.0, 2)
            + weighted_integral(g, rd[1], al + 1.0, 4)
            + s * weighted_integral(g, D[j + 1], al, 4)
        )
        E_j.append(wj * e)
        for i in range(1, top + 1):
            E_ji[j, i] = wj * (
                weighted_integral(g, rd[i], al + i - 1.0, 2) + weighted_integral(g, rd[i + 1], al + i + 1.0, 4)
            )
            computed[j, i] = True
    total = float(sum(E_j) + np.nansum(E_ji))
    return EnergyReport(t=t, E_j=E_j, E_ji=E_ji, computed=computed, E_total=total)


def sup_norm_report(solver: LagrangianSolver, state: PerturbationState, imax: int = 4) -> dict[str, float]:
    """Time-weighted sup norms of the a priori set.

    Keys ``zeta_j{j}`` and ``zeta_r_j{j}`` carry (1+t)^{2j} sup|d_t^j zeta|^2
    and (1+t)^{2j} sup|d_t^j zeta_r|^2; ``w_i{i}_j{j}`` the sigma^{(2i+j-3)/2}
    weighted terms (times r or r^2 on the top two rungs of the ladder).
    ``a_priori`` sums every term with i + j <= l - 1.
    """
    p = solver.p
    l = p.ell
    t = state.t
    s = 1.0 + t
    D = time_derivatives(solver, state, 2)[:3]
    out: dict[str, float] = {}
    total = 0.0
    derivs = [_r_derivs(solver, D[j], imax) for j in range(3)]
    for j in range(3):
        v = s ** (2 * j) * float(np.max(np.abs(D[j])) ** 2)
        out[f"zeta_j{j}"] = v
        total += v
    for j in range(2):
        v = s ** (2 * j) * float(np.max(np.abs(derivs[j][1])) ** 2)
        out[f"zeta_r_j{j}"] = v
        total += v
    r = solver.r
    for j in range(3):
        for i in range(0, imax + 1):
            if 2 * i + j < 3 or i + j > l:
                continue
            w = solver.sigma ** ((2 * i + j - 3) / 2.0)
            if i + j == l - 1:
                w = w * r
            elif i + j == l:
                w = w * r * r
            v = s ** (2 * j) * float(np.max(np.abs(w * derivs[j][i])) ** 2)
            out[f"w_i{i}_j{j}"] = v
            if i + j <= l - 1:
                total += v
    out["a_priori"] = total
    return out


def vacuum_slope(solver: LagrangianSolver, state: PerturbationState) -> VacuumBracket:
    """Bracket of |(rho^{g-1})_eta| over R/2 <= eta <= R, raw and times (1+t)^{(3g-2)/(3g-1)}."""
    gm = solver.p.gamma
    snap = solver.reconstruct(state)
    slope = np.abs(density_power_slope(solver, state))
    sel = slope[snap.eta >= 0.5 * snap.R]
    norm = (1.0 + state.t) ** ((3.0 * gm - 2.0) / (3.0 * gm - 1.0))
    lo, hi = float(sel.min()), float(sel.max())
    return VacuumBracket(state.t, lo, hi, lo * norm, hi * norm)


def fit_rate(t, y, window: tuple[float, float] | None = None, model: str = "pure_power") -> RateFit:
    """Least-squares exponent p in y ~ C (1+t)^p, or y ~ C (1+t)^p ln(2+t)."""
    if model not in MODELS:
        raise DomainError(f"model must be one of {MODELS}")
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        window = (float(t.min()), float(t.max()))
    sel = (t >= window[0]) & (t <= window[1])
    if np.count_nonzero(sel) < 10:
        raise DomainError("need at least 10 points inside the fit window")
    if np.any(y[sel] <= 0.0):
        raise DomainError("series must be positive inside the fit window")
    x = np.log1p(t[sel])
    z = np.log(y[sel])
    if model == "power_times_log":
        z = z - np.log(np.log(2.0 + t[sel]))
    zc = z - z.mean()
    ss_tot = float(np.dot(zc, zc))
    if ss_tot <= 1e-28 * max(1.0, float(np.dot(z, z))):
        return RateFit(0.0, float(z.mean()), 1.0, window, model, int(x.size), constant=True)
    slope, intercept = np.polyfit(x, z, 1)
    resid = z - (slope * x + intercept)
    r2 = 1.0 - float(np.dot(resid, resid)) / ss_tot
    return RateFit(float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)), window, model, int(x.size))


def observable_series(solver: LagrangianSolver, traj: Trajectory) -> dict[str, np.ndarray]:
    """Per-sample R(t), velocity and density deviations and slope brackets."""
    p = solver.p
    r = solver.r
    n = len(traj)
    out = {k: np.empty(n) for k in ("t", "R", "velocity", "density", "slope_min", "slope_max", "norm_min", "norm_max")}
    inner = solver.sigma > 0.0
    for i in range(n):
        st = traj.state(i)
        snap = solver.reconstruct(st)
        bar_eta = r * bar_slope(p.gamma, st.t)
        du = np.abs(snap.u[1:] - velocity(p, bar_eta[1:], st.t)) / r[1:]
        drho = np.abs(snap.rho[inner] - density(p, bar_eta[inner], st.t)) / solver.g.rho0bar[inner]
        vb = vacuum_slope(solver, st)
        out["t"][i] = st.t
        out["R"][i] = snap.R
        out["velocity"][i] = du.max()
        out["density"][i] = drho.max()
        out["slope_min"][i], out["slope_max"][i] = vb.slope_min, vb.slope_max
        out["norm_min"][i], out["norm_max"][i] = vb.normalized_min, vb.normalized_max
    return out


def _fit_entry(t, y, window, theory, models=MODELS):
    fits = {m: fit_rate(t, y, window, m) for m in models}
    entry = {"theory_exponent": theory}
    for m, f in fits.items():
        entry[m] = {
            "exponent": f.exponent,
            "r_squared": f.r_squared,
            "relative_deviation": abs(f.exponent - theory) / abs(theory),
        }
    return entry


def rate_report(
    solver: LagrangianSolver,
    traj: Trajectory,
    window: tuple[float, float] | None = None,
    E0: float | None = None,
    series: dict[str, np.ndarray] | None = None,
) -> dict:
    """Fitted decay/expansion exponents next to their theoretical values."""
    gm = solver.p.gamma
    if window is None:
        horizon = float(traj.times[-1])
        window = (horizon / 100.0, horizon)
    if series is None:
        series = observable_series(solver, traj)
    t = series["t"]
    k = 1.0 / (3.0 * gm - 1.0)
    report = {
        "window": list(window),
        "boundary_radius": _fit_entry(t, series["R"], window, k, ("pure_power",)),
        "velocity": _fit_entry(t, series["velocity"], window, -1.0),
        "density": _fit_entry(t, series["density"], window, -4.0 * k),
    }
    sel = (t >= max(window[0], 1.0)) & (t <= window[1])
    lo = float(series["norm_min"][sel].min())
    hi = float(series["norm_max"][sel].max())
    report["vacuum_slope"] = {"normalized_min": lo, "normalized_max": hi, "ratio": hi / lo}
    if E0 is None:
        E0 = energy_levels(solver, traj.state(0)).E_total
    tail = (1.0 + window[1]) ** (-(3.0 * gm - 2.0) / (3.0 * gm - 1.0)) * math.log1p(window[1])
    head = (1.0 + window[0]) ** (-(3.0 * gm - 2.0) / (3.0 * gm - 1.0)) * math.log1p(window[0])
    root = math.sqrt(E0)
    if root >= head:
        regime = "sqrt(E(0)) term dominates over the whole window"
    elif root <= tail:
        regime = "corrector ln-term dominates over the whole window"
    else:
        regime = "crossover inside the window"
    report["regime"] = {"sqrt_E0": root, "log_term_at_window_start": head, "log_term_at_window_end": tail, "statement": regime}
    return report
