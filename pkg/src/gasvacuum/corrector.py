"""Scalar corrector h(t) that turns the Barenblatt trajectory into an exact
solution of the damped Lagrangian equation.

With eta_bar_r(t) = (1+t)**(1/(3g-1)) the corrector solves

    h'' + h' - (eta_bar_r + h)**(2-3g) / (3g-1) + eta_bar_r'' + eta_bar_r' = 0,
    h(0) = h'(0) = 0,

and the corrected slope eta_r(t) = eta_bar_r + h satisfies
eta_r'' + eta_r' = eta_r**(2-3g) / (3g-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import OdeSolution, solve_ivp

from .barenblatt import BarenblattParams, DomainError


class CorrectorFailure(RuntimeError):
    """The corrector integration broke down (slope lost positivity)."""


def bar_slope(gamma: float, t, k: int = 0):
    """k-th time derivative of eta_bar_r(t) = (1+t)**(1/(3g-1))."""
    a = 1.0 / (3.0 * gamma - 1.0)
    coef = 1.0
    for m in range(k):
        coef *= a - m
    return coef * (1.0 + np.asarray(t, dtype=float)) ** (a - k)


@dataclass(frozen=True, eq=False)
class CorrectorPath:
    gamma: float
    horizon: float
    tol: float
    t: np.ndarray  # accepted step times
    h: np.ndarray
    h_t: np.ndarray
    sol: OdeSolution = field(repr=False, compare=False)

    def state(self, t):
        """Dense-output ``(h, h_t)`` at time(s) ``t``."""
        tt = np.asarray(t, dtype=float)
        if np.any(tt < 0.0) or np.any(tt > self.horizon * (1.0 + 1e-12)):
            raise DomainError(f"t outside the corrector horizon [0, {self.horizon}]")
        y = self.sol(tt)
        return y[0], y[1]


def _rhs(gamma: float):
    g3 = 3.0 * gamma - 1.0

    def f(t, y):
        h, z = y
        base = bar_slope(gamma, t)
        slope = base + h
        if slope <= 0.0:
            raise CorrectorFailure(f"eta_r = {slope!r} <= 0 at t = {t!r}")
        return [
            z,
            -z + slope ** (2.0 - 3.0 * gamma) / g3
            - bar_slope(gamma, t, 2) - bar_slope(gamma, t, 1),
        ]

    return f


def solve_corrector(gamma: float, horizon: float, tol: float = 1e-10) -> CorrectorPath:
    if not gamma > 1.0:
        raise DomainError(f"gamma must be > 1, got {gamma!r}")
    if not horizon >= 1.0:
        raise DomainError(f"horizon must be >= 1, got {horizon!r}")
    if not 1e-14 <= tol <= 1e-6:
        raise DomainError(f"tol must lie in [1e-14, 1e-6], got {tol!r}")
    # Dormand-Prince 5(4): its quartic continuous extension stays at the
    # tolerance level between steps, which the Volterra check relies on.
    res = solve_ivp(
        _rhs(gamma),
        (0.0, float(horizon)),
        [0.0, 0.0],
        method="RK45",
        rtol=tol,
        atol=tol,
        dense_output=True,
    )
    if res.status != 0:
        raise CorrectorFailure(f"corrector integration failed: {res.message}")
    return CorrectorPath(
        gamma=float(gamma),
        horizon=float(horizon),
        tol=float(tol),
        t=res.t,
        h=res.y[0],
        h_t=res.y[1],
        sol=res.sol,
    )


def eval_tilde_eta_r(path: CorrectorPath, t, k: int = 0):
    """k-th time derivative (k = 0..3) of the corrected slope eta_r(t).

    k = 2, 3 come from the ODE and its time derivative, never from
    differentiating the dense output.
    """
    if k not in (0, 1, 2, 3):
        raise DomainError(f"k must be in 0..3, got {k!r}")
    g = path.gamma
    h, h_t = path.state(t)
    e0 = bar_slope(g, t) + h
    if k == 0:
        return e0
    e1 = bar_slope(g, t, 1) + h_t
    if k == 1:
        return e1
    g3 = 3.0 * g - 1.0
    e2 = -e1 + e0 ** (2.0 - 3.0 * g) / g3
    if k == 2:
        return e2
    return -e2 + (2.0 - 3.0 * g) / g3 * e0 ** (1.0 - 3.0 * g) * e1


# Gauss-Legendre rule per accepted step for the Volterra quadrature
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_MEMORY = 60.0  # exp(-60) ~ 1e-26: older history is invisible


def volterra_integral(path: CorrectorPath, t: float) -> float:
    """eta_rt(t) from the variation-of-constants form of the slope ODE:

        e^{-t}/(3g-1) + 1/(3g-1) int_0^t e^{-(t-s)} eta_r(s)**(2-3g) ds.

    Integrated step by step over the dense output, so the integrand is a
    smooth function on every subinterval.
    """
    g = path.gamma
    lo = max(0.0, t - _MEMORY)
    inner = path.t[(path.t > lo) & (path.t < t)]
    edges = np.concatenate([[lo], inner, [t]])
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    s = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    h, _ = path.state(s)
    integrand = np.exp(-(t - s)) * (bar_slope(g, s) + h) ** (2.0 - 3.0 * g)
    g3 = 3.0 * g - 1.0
    return math.exp(-t) / g3 + float(np.dot(w, integrand)) / g3


def volterra_oracle(path: CorrectorPath, t: float) -> float:
    """|eta_rt(t) from the ODE solve - eta_rt(t) from the integral form|."""
    return abs(float(eval_tilde_eta_r(path, t, 1)) - volterra_integral(path, t))


def ansatz_residual(
    p: BarenblattParams,
    path: CorrectorPath,
    r,
    t: float,
    *,
    use_corrector: bool = True,
):
    """Left side of the damped Lagrangian equation evaluated on eta = r*eta_r(t).

    rho0 eta_tt + rho0 eta_t + (eta/r)**2 [ (r**2 rho0 / (eta**2 eta_r))**g ]_r

    With ``eta/r`` independent of r the bracket derivative is
    eta_r**(-3g) (rho0**g)_r, and (rho0**g)_r = g/(g-1) sigma**alpha sigma_r.
    ``use_corrector=False`` evaluates the bare Barenblatt slope instead,
    whose residual is rho0 * r * eta_bar_rtt.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0) or np.any(r >= p.radius0):
        raise DomainError("r must lie strictly inside (0, sqrt(A/B))")
    g = p.gamma
    sigma = p.A - p.B * r * r
    rho0 = sigma**p.alpha
    if use_corrector:
        e0, e1, e2 = (eval_tilde_eta_r(path, t, k) for k in range(3))
    else:
        e0, e1, e2 = (bar_slope(g, t, k) for k in range(3))
    d_rho0_g = g / (g - 1.0) * rho0 * (-2.0 * p.B * r)
    flux = e0**2 * e0 ** (-3.0 * g) * d_rho0_g
    return rho0 * r * e2 + rho0 * r * e1 + flux


@dataclass(frozen=True)
class DecayReport:
    sup_h: float  # sup h (1+t)^{(3g-2)/(3g-1)} / ln(2+t)
    sup_ht: float  # sup |h_t| (1+t)^{(6g-3)/(3g-1)} / ln(2+t)
    tail_growth_h: float  # last-decade sup / earlier sup - 1
    tail_growth_ht: float
    tail_stable: bool


def sample_times(path: CorrectorPath, n: int = 20000) -> np.ndarray:
    """Accepted step times merged with a log-spaced grid over the horizon."""
    grid = np.expm1(np.linspace(0.0, math.log1p(path.horizon), n))
    ts = np.unique(np.concatenate([path.t, grid]))
    return ts[ts <= path.horizon]


def decay_quotients(path: CorrectorPath, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    g = path.gamma
    h, h_t = path.state(ts)
    s = 1.0 + ts
    log = np.log(2.0 + ts)
    q_h = h * s ** ((3.0 * g - 2.0) / (3.0 * g - 1.0)) / log
    q_ht = np.abs(h_t) * s ** ((6.0 * g - 3.0) / (3.0 * g - 1.0)) / log
    return q_h, q_ht


def decay_report(path: CorrectorPath) -> DecayReport:
    if path.horizon < 100.0:
        raise DomainError("decay_report needs horizon >= 100")
    ts = sample_times(path)
    q_h, q_ht = decay_quotients(path, ts)
    last = ts >= path.horizon / 10.0
    growth = []
    for q in (q_h, q_ht):
        before, after = q[~last].max(), q[last].max()
        growth.append(after / before - 1.0)
    sup_h, sup_ht = float(q_h.max()), float(q_ht.max())
    stable = (
        math.isfinite(sup_h) and math.isfinite(sup_ht) and growth[0] <= 0.0 and growth[1] <= 0.0
    )
    return DecayReport(sup_h, sup_ht, float(growth[0]), float(growth[1]), bool(stable))


def sign_changes(values: np.ndarray, deadband: float = 1e-12) -> int:
    v = values[np.abs(values) > deadband]
    return int(np.count_nonzero(np.diff(np.sign(v))))


@dataclass(frozen=True)
class PhaseSignature:
    h_t_sign_changes: int
    first_sign: int  # sign of h_t right after t = 0
    h_interior_maxima: int
    h_min: float
    slope_rate_min: float  # min of eta_rt over the samples


def phase_signature(path: CorrectorPath, deadband: float = 1e-12) -> PhaseSignature:
    ts = sample_times(path)
    h, h_t = path.state(ts)
    keep = np.abs(h_t) > deadband
    signs = np.sign(h_t[keep])
    # interior maxima of h are the + -> - crossings of h_t
    maxima = int(np.count_nonzero((signs[:-1] > 0) & (signs[1:] < 0)))
    slope_rate = eval_tilde_eta_r(path, ts, 1)
    return PhaseSignature(
        h_t_sign_changes=sign_changes(h_t, deadband),
        first_sign=int(signs[0]) if signs.size else 0,
        h_interior_maxima=maxima,
        h_min=float(h.min()),
        slope_rate_min=float(np.min(slope_rate)),
    )


def corrector_table(path: CorrectorPath, ts=None) -> np.ndarray:
    """Rows ``(t, h, h_t, eta_r)`` for CSV output."""
    if ts is None:
        ts = path.t
    ts = np.asarray(ts, dtype=float)
    h, h_t = path.state(ts)
    return np.column_stack([ts, h, h_t, bar_slope(path.gamma, ts) + h])
