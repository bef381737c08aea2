"""Method-of-lines solver for the Lagrangian perturbation zeta = eta/r - eta_tilde/r.

On the fixed reference interval [0, L], L = sqrt(A/B), the perturbation obeys
(after division by rho0 = sigma**alpha)

    zeta_tt = -zeta_t - (sigma/r) a**2 [a**(-2g) b**(-g)]_r
              - g/(g-1) (sigma_r/r) [a**(2-2g) b**(-g) - e**(2-3g)]

with e = eta_tilde_r(t), a = e + zeta, b = e + zeta + r zeta_r. The flux
derivative is expanded by the chain rule into zeta_r and zeta_rr terms; the
1/r factors are removed at the origin using evenness of zeta. No boundary
condition is imposed at r = L: sigma vanishes there and the equation
degenerates to an ODE driven by the one-sided zeta_r.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .barenblatt import BarenblattParams, DomainError
from .corrector import CorrectorPath, eval_tilde_eta_r
from .weighted_calculus import Grid, apply_stencil, spatial_derivative, stencils

log = logging.getLogger(__name__)


class JacobianLoss(RuntimeError):
    """eta/r or eta_r lost positivity; the Lagrangian map is no longer valid."""

    def __init__(self, t: float, node: int, which: str, value: float):
        super().__init__(f"{which} = {value:.3e} <= 0 at node {node}, t = {t:.6g}")
        self.t = t
        self.node = node
        self.which = which
        self.value = value


@dataclass(frozen=True)
class InitialDataSpec:
    """Even initial perturbation.

    Shapes are polynomials in x = (r/L)**2, coefficients lowest degree first,
    so ``shape=(1, -1)`` is 1 - B r**2 / A = sigma / A.
    """

    amplitude: float = 1e-3
    shape: tuple[float, ...] = (1.0, -1.0)
    velocity_amplitude: float = 0.0
    shape_t: tuple[float, ...] = (1.0,)


@dataclass(frozen=True, eq=False)
class PerturbationState:
    t: float
    zeta: np.ndarray
    zeta_t: np.ndarray


@dataclass(frozen=True, eq=False)
class EulerianSnapshot:
    eta: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    R: float


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    zeta: np.ndarray  # (n_samples, n_nodes)
    zeta_t: np.ndarray
    records: list[dict] = field(default_factory=list)
    n_steps: int = 0

    def state(self, i: int) -> PerturbationState:
        return PerturbationState(float(self.times[i]), self.zeta[i], self.zeta_t[i])

    def __len__(self) -> int:
        return len(self.times)


def _poly(coeffs: Sequence[float], x):
    return np.polynomial.polynomial.polyval(x, np.asarray(coeffs, dtype=float))


class LagrangianSolver:
    """Binds parameters, corrector path and grid; owns the stencils."""

    def __init__(self, p: BarenblattParams, path: CorrectorPath, g: Grid, cfl: float = 0.5):
        if abs(path.gamma - p.gamma) > 1e-14:
            raise DomainError("corrector path and Barenblatt parameters disagree on gamma")
        if not 0.0 < cfl <= 0.9:
            raise DomainError(f"cfl must lie in (0, 0.9], got {cfl}")
        self.p = p
        self.path = path
        self.g = g
        self.cfl = float(cfl)
        self.d1 = stencils(g, 1, even=True)
        self.d2 = stencils(g, 2, even=True)
        self.r = g.nodes
        self.sigma = g.sigma
        self._inv_r = np.zeros_like(self.r)
        self._inv_r[1:] = 1.0 / self.r[1:]
        gm = p.gamma
        self._react = 2.0 * p.B * gm / (gm - 1.0)  # -g/(g-1) * sigma_r / r
        self._radius = None

    # ------------------------------------------------------------ operators

    def derivatives(self, zeta):
        """zeta_r, zeta_rr and zeta_r / r (-> zeta_rr at the origin)."""
        zr = apply_stencil(self.d1, zeta)
        zrr = apply_stencil(self.d2, zeta)
        q = zr * self._inv_r
        q[0] = zrr[0]
        return zr, zrr, q

    def spatial_accel(self, zeta, e, t: float = math.nan):
        """zeta_tt + zeta_t as a function of zeta and the corrected slope e.

        Accepts complex input so directional derivatives can be taken by
        complex step.
        """
        gm = self.p.gamma
        zr, zrr, q = self.derivatives(zeta)
        x = zeta / e
        y = (zeta + self.r * zr) / e
        a_min = np.min(np.real(1.0 + x))
        b_min = np.min(np.real(1.0 + y))
        if a_min <= 0.0 or b_min <= 0.0:
            which, arr = ("eta/r", np.real(1.0 + x)) if a_min <= 0.0 else ("eta_r", np.real(1.0 + y))
            node = int(np.argmin(arr))
            raise JacobianLoss(t, node, which, float(np.real(e)) * float(arr[node]))
        la, lb = np.log1p(x), np.log1p(y)
        # a**p b**q = e**(p+q) exp(p log(1+x) + q log(1+y))
        c1 = e ** (1.0 - 3.0 * gm) * np.exp((1.0 - 2.0 * gm) * la - gm * lb)
        c2 = e ** (1.0 - 3.0 * gm) * np.exp((2.0 - 2.0 * gm) * la - (gm + 1.0) * lb)
        flux_over_r = -2.0 * gm * c1 * q - gm * c2 * (2.0 * q + zrr)
        # bracket a**(2-2g) b**(-g) - e**(2-3g), cancellation-free
        bracket = e ** (2.0 - 3.0 * gm) * np.expm1((2.0 - 2.0 * gm) * la - gm * lb)
        return -self.sigma * flux_over_r + self._react * bracket

    def linear_accel(self, zeta, e):
        """Linearization of :meth:`spatial_accel` about zeta = 0."""
        gm = self.p.gamma
        zr, zrr, q = self.derivatives(zeta)
        k = gm * e ** (1.0 - 3.0 * gm)
        wave = k * (self.sigma * zrr + 4.0 * self.sigma * q + gm / (gm - 1.0) * self.g.sigma_r * zr)
        return wave + self._react * (2.0 - 3.0 * gm) * e ** (1.0 - 3.0 * gm) * zeta

    def slope(self, t: float) -> float:
        return float(eval_tilde_eta_r(self.path, t, 0))

    def rhs(self, state: PerturbationState):
        """zeta_tt at the state's time."""
        e = self.slope(state.t)
        return -state.zeta_t + self.spatial_accel(state.zeta, e, state.t)

    def third_derivative(self, state: PerturbationState, zeta_tt=None):
        """zeta_ttt from the time derivative of the equation (complex step)."""
        t = state.t
        e = eval_tilde_eta_r(self.path, t, 0)
        e_t = eval_tilde_eta_r(self.path, t, 1)
        if zeta_tt is None:
            zeta_tt = self.rhs(state)
        hstep = 1e-30
        pert = self.spatial_accel(state.zeta + 1j * hstep * state.zeta_t, e + 1j * hstep * e_t, t)
        return -zeta_tt + np.imag(pert) / hstep

    # ---------------------------------------------------------- time stepping

    def spectral_radius(self) -> float:
        """max |eigenvalue| of the frozen linear operator with e = 1."""
        if self._radius is None:
            n = self.r.size
            cols = np.eye(n)
            mat = np.column_stack([self.linear_accel(cols[:, j], 1.0) for j in range(n)])
            self._radius = float(np.max(np.abs(np.linalg.eigvals(mat))))
        return self._radius

    def stable_dt(self, t: float) -> float:
        """CFL step: the operator scales like e**(1-3g), so dt grows with t."""
        e = self.slope(t)
        lam = self.spectral_radius() * e ** (1.0 - 3.0 * self.p.gamma)
        return self.cfl * 2.0 / math.sqrt(lam)

    def step(self, state: PerturbationState, dt: float) -> PerturbationState:
        """One Lawson-RK4 step; damping handled by the exact factor exp(-dt)."""
        t0 = state.t
        z0, v0 = state.zeta, state.zeta_t
        half = 0.5 * dt
        e_mid = self.slope(t0 + half)
        slopes = (self.slope(t0), e_mid, e_mid, self.slope(t0 + dt))
        taus = (0.0, half, half, dt)

        def f(i, z, v):
            tau = taus[i]
            acc = self.spatial_accel(z, slopes[i], t0 + tau)
            return math.exp(-tau) * v, math.exp(tau) * acc

        k1z, k1v = f(0, z0, v0)
        k2z, k2v = f(1, z0 + half * k1z, v0 + half * k1v)
        k3z, k3v = f(2, z0 + half * k2z, v0 + half * k2v)
        k4z, k4v = f(3, z0 + dt * k3z, v0 + dt * k3v)
        z1 = z0 + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        v1 = v0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        return PerturbationState(t0 + dt, z1, math.exp(-dt) * v1)

    def run(
        self,
        init: PerturbationState,
        horizon: float,
        sample_times: Sequence[float] | int = 60,
        on_sample: Callable[[PerturbationState], dict] | None = None,
    ) -> Trajectory:
        """Integrate to ``horizon`` and keep states at the sample times.

        An integer ``sample_times`` means that many times log-spaced in 1+t,
        including 0 and the horizon.
        """
        if horizon > self.path.horizon:
            raise DomainError(
                f"horizon {horizon} exceeds the corrector horizon {self.path.horizon}"
            )
        if horizon <= init.t:
            raise DomainError("horizon must exceed the initial time")
        if isinstance(sample_times, (int, np.integer)):
            ts = log_times(init.t, horizon, int(sample_times))
        else:
            ts = np.unique(np.asarray(sample_times, dtype=float))
            if ts[0] < init.t or ts[-1] > horizon:
                raise DomainError("sample times must lie inside [t0, horizon]")
        state = init
        times, zs, zts, records = [], [], [], []
        steps = 0

        def record(s):
            times.append(s.t)
            zs.append(s.zeta.copy())
            zts.append(s.zeta_t.copy())
            rec = {"t": s.t, "steps": steps}
            rec.update(self.monitor(s))
            if on_sample is not None:
                rec.update(on_sample(s))
            records.append(rec)

        k = 0
        if ts[0] <= init.t:
            record(state)
            k = 1
        while k < len(ts):
            target = ts[k]
            dt = self.stable_dt(state.t)
            if state.t + dt >= target * (1.0 - 1e-13):
                dt = target - state.t
            state = self.step(state, dt)
            steps += 1
            if state.t >= target * (1.0 - 1e-13):
                state = PerturbationState(float(target), state.zeta, state.zeta_t)
                record(state)
                k += 1
        return Trajectory(
            times=np.asarray(times),
            zeta=np.asarray(zs),
            zeta_t=np.asarray(zts),
            records=records,
            n_steps=steps,
        )

    # -------------------------------------------------------------- Eulerian

    def reconstruct(self, state: PerturbationState) -> EulerianSnapshot:
        e = eval_tilde_eta_r(self.path, state.t, 0)
        e_t = eval_tilde_eta_r(self.path, state.t, 1)
        zr, _, _ = self.derivatives(state.zeta)
        ratio = e + state.zeta  # eta / r
        eta_r = ratio + self.r * zr
        if np.any(ratio <= 0.0) or np.any(eta_r <= 0.0):
            raise JacobianLoss(state.t, int(np.argmin(np.minimum(ratio, eta_r))), "jacobian", float(np.min(np.minimum(ratio, eta_r))))
        eta = self.r * ratio
        # r**2 rho0 / (eta**2 eta_r) with the r**2 cancelled analytically
        rho = self.g.rho0bar / (ratio**2 * eta_r)
        u = self.r * (e_t + state.zeta_t)
        return EulerianSnapshot(eta=eta, rho=rho, u=u, R=float(eta[-1]))

    def mass_residual(self, state: PerturbationState, snap: EulerianSnapshot | None = None) -> float:
        """max |rho eta**2 eta_r - r**2 rho0| with eta_r from differencing eta."""
        if snap is None:
            snap = self.reconstruct(state)
        eta_r_num = spatial_derivative(self.g, snap.eta, 1)
        lhs = snap.rho * snap.eta**2 * eta_r_num
        return float(np.max(np.abs(lhs - self.r**2 * self.g.rho0bar)))

    def jacobian_minima(self, state: PerturbationState) -> tuple[float, float]:
        e = self.slope(state.t)
        zr, _, _ = self.derivatives(state.zeta)
        return float(np.min(e + state.zeta)), float(np.min(e + state.zeta + self.r * zr))

    def monitor(self, state: PerturbationState) -> dict:
        ja, jb = self.jacobian_minima(state)
        return {
            "jacobian_min_ratio": ja,
            "jacobian_min_eta_r": jb,
            "mass_residual": self.mass_residual(state),
            "sup_zeta": float(np.max(np.abs(state.zeta))),
        }

    # ----------------------------------------------------------- initial data

    def make_initial_data(self, spec: InitialDataSpec) -> PerturbationState:
        """Even polynomial perturbation at t = 0, checked against the
        physical-vacuum requirements on the induced Eulerian density."""
        x = (self.r / self.g.radius) ** 2
        zeta = spec.amplitude * _poly(spec.shape, x)
        zeta_t = spec.velocity_amplitude * _poly(spec.shape_t, x)
        state = PerturbationState(0.0, zeta, zeta_t)
        zr, _, _ = self.derivatives(zeta)
        e0 = self.slope(0.0)
        for which, arr in (("eta/r", e0 + zeta), ("eta_r", e0 + zeta + self.r * zr)):
            bad = np.nonzero(arr <= 0.0)[0]
            if bad.size:
                raise JacobianLoss(0.0, int(bad[0]), which, float(arr[bad[0]]))
        snap = self.reconstruct(state)
        if not (np.all(snap.rho[:-1] > 0.0) and snap.rho[-1] == 0.0):
            raise DomainError("initial density must be positive inside and vanish on the boundary")
        slope = density_power_slope(self, state)[-1]
        if not (math.isfinite(slope) and slope < 0.0):
            raise DomainError(f"initial (rho**(gamma-1))_r at the boundary must be finite and < 0, got {slope}")
        log.info(
            "initial data accepted; total mass equals M by construction of the "
            "Lagrangian map (f eta^2 eta_r = r^2 rho0)"
        )
        return state


def density_power_slope(solver: LagrangianSolver, state: PerturbationState):
    """(rho**(gamma-1))_eta at every node, from the Lagrangian closed form.

    (1-g) sigma [2 (eta/r)**(1-2g) eta_r**(-g) zeta_r
                 + (eta/r)**(2-2g) eta_r**(-g-1) (2 zeta_r + r zeta_rr)]
      - 2 B r (eta/r)**(2-2g) eta_r**(-g)
    """
    gm = solver.p.gamma
    e = solver.slope(state.t)
    zr, zrr, _ = solver.derivatives(state.zeta)
    r = solver.r
    ratio = e + state.zeta
    eta_r = ratio + r * zr
    inner = 2.0 * ratio ** (1.0 - 2.0 * gm) * eta_r ** (-gm) * zr + ratio ** (2.0 - 2.0 * gm) * eta_r ** (
        -gm - 1.0
    ) * (2.0 * zr + r * zrr)
    return (1.0 - gm) * solver.sigma * inner - 2.0 * solver.p.B * r * ratio ** (2.0 - 2.0 * gm) * eta_r ** (-gm)


def log_times(t0: float, t1: float, n: int) -> np.ndarray:
    if n < 2:
        raise DomainError("need at least two sample times")
    ts = np.expm1(np.linspace(math.log1p(t0), math.log1p(t1), n))
    ts[0], ts[-1] = t0, t1
    return ts


def trajectory_table(solver: LagrangianSolver, traj: Trajectory) -> np.ndarray:
    """Rows (t, node, r, zeta, zeta_t, rho, u)."""
    rows = []
    n = solver.r.size
    for i in range(len(traj)):
        s = traj.state(i)
        snap = solver.reconstruct(s)
        rows.append(
            np.column_stack([np.full(n, s.t), np.arange(n), solver.r, s.zeta, s.zeta_t, snap.rho, snap.u])
        )
    return np.vstack(rows)


def trajectory_from_table(table: np.ndarray, n_nodes: int) -> Trajectory:
    """Inverse of :func:`trajectory_table` for the state columns."""
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[1] < 5 or table.shape[0] % n_nodes:
        raise DomainError("trajectory table does not match the grid size")
    blocks = table.reshape(-1, n_nodes, table.shape[1])
    return Trajectory(times=blocks[:, 0, 0].copy(), zeta=blocks[:, :, 3].copy(), zeta_t=blocks[:, :, 4].copy())
