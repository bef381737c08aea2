"""Barenblatt self-similar solution of the porous medium equation.

The profile solves rho_t = Lap(rho**gamma) together with Darcy's law
grad(rho**gamma) = -rho * u in three space dimensions, spherically symmetric,
with total mass ``M = int_0^R r**2 rho dr``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


# radicand values in [-CLAMP_TOL*A, 0) are round-off at the vacuum edge
CLAMP_TOL = 1e-14


@dataclass(frozen=True)
class BarenblattParams:
    gamma: float
    mass: float
    A: float
    B: float
    alpha: float
    ell: int

    @property
    def radius0(self) -> float:
        """Reference radius sqrt(A/B), the vacuum edge at t = 0."""
        return math.sqrt(self.A / self.B)

    @property
    def expansion_exponent(self) -> float:
        return 1.0 / (3.0 * self.gamma - 1.0)


def _check_gamma(gamma: float) -> None:
    if not math.isfinite(gamma) or gamma <= 1.0:
        raise DomainError(f"gamma must be finite and > 1, got {gamma!r}")


def profile_moment(gamma: float) -> float:
    """int_0^1 y**2 (1 - y**2)**(1/(gamma-1)) dy.

    The endpoint factor (1-y)**alpha is handed to QUADPACK as an algebraic
    weight, so the degenerate endpoint costs nothing in accuracy.
    """
    _check_gamma(gamma)
    alpha = 1.0 / (gamma - 1.0)
    val, _ = integrate.quad(
        lambda y: y * y * (1.0 + y) ** alpha,
        0.0,
        1.0,
        weight="alg",
        wvar=(0.0, alpha),
        epsabs=0.0,
        epsrel=1e-13,
        limit=200,
    )
    return val


def derive_constants(gamma: float, mass: float) -> BarenblattParams:
    _check_gamma(gamma)
    if not math.isfinite(mass) or mass <= 0.0:
        raise DomainError(f"mass must be finite and > 0, got {mass!r}")
    alpha = 1.0 / (gamma - 1.0)
    B = (gamma - 1.0) / (2.0 * gamma * (3.0 * gamma - 1.0))
    rhs = mass * gamma**alpha * (gamma * B) ** 1.5 / profile_moment(gamma)
    # (gamma*A)**((3g-1)/(2(g-1))) = rhs is an explicit power law in A
    A = rhs ** (2.0 * (gamma - 1.0) / (3.0 * gamma - 1.0)) / gamma
    return BarenblattParams(
        gamma=float(gamma),
        mass=float(mass),
        A=A,
        B=B,
        alpha=alpha,
        ell=4 + math.floor(alpha),
    )


def _check_time(t) -> None:
    if np.any(np.asarray(t) < 0.0):
        raise DomainError("time must be >= 0")


def boundary_radius(p: BarenblattParams, t):
    _check_time(t)
    return p.radius0 * (1.0 + np.asarray(t, dtype=float)) ** p.expansion_exponent


def boundary_speed(p: BarenblattParams, t):
    """Analytic d/dt of :func:`boundary_radius`."""
    _check_time(t)
    k = p.expansion_exponent
    return p.radius0 * k * (1.0 + np.asarray(t, dtype=float)) ** (k - 1.0)


def _radicand(p: BarenblattParams, r, t):
    s = 1.0 + np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    rad = p.A - p.B * s ** (-2.0 * p.expansion_exponent) * r * r
    if np.any(rad < -CLAMP_TOL * p.A):
        raise DomainError("radius beyond the Barenblatt vacuum boundary")
    # round-off on either side of the edge snaps to the exact vacuum
    return np.where(rad <= CLAMP_TOL * p.A, 0.0, rad)


def density(p: BarenblattParams, r, t):
    """Barenblatt density; exactly zero on the vacuum boundary."""
    _check_time(t)
    if np.any(np.asarray(r) < 0.0):
        raise DomainError("radius must be >= 0")
    s = 1.0 + np.asarray(t, dtype=float)
    return s ** (-3.0 * p.expansion_exponent) * _radicand(p, r, t) ** p.alpha


def velocity(p: BarenblattParams, r, t):
    _check_time(t)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise DomainError("radius must be >= 0")
    _radicand(p, r, t)  # domain check only
    return r / ((3.0 * p.gamma - 1.0) * (1.0 + np.asarray(t, dtype=float)))


def sound_speed_sq_slope(p: BarenblattParams, t):
    """One-sided r-derivative of c**2 = gamma*rho**(gamma-1) at the vacuum edge.

    Finite and strictly negative: the boundary is a physical vacuum.
    """
    _check_time(t)
    return -2.0 * p.gamma * p.B * boundary_radius(p, t) / (1.0 + np.asarray(t, dtype=float))


def total_mass(p: BarenblattParams, t: float) -> tuple[float, float]:
    """Return ``(mass, relative error estimate)`` of int_0^R r**2 rho dr."""
    _check_time(t)
    R = float(boundary_radius(p, t))
    s = 1.0 + t
    Bt = p.B * s ** (-2.0 * p.expansion_exponent)
    scale = s ** (-3.0 * p.expansion_exponent) * Bt**p.alpha
    # A - Bt r^2 = Bt (R - r)(R + r); (R - r)**alpha goes into the weight
    val, err = integrate.quad(
        lambda r: r * r * (R + r) ** p.alpha,
        0.0,
        R,
        weight="alg",
        wvar=(0.0, p.alpha),
        epsabs=0.0,
        epsrel=1e-13,
        limit=200,
    )
    return scale * val, err / val


def pme_residual(p: BarenblattParams, r: float, t: float, dh: float) -> tuple[float, float]:
    """Centered-difference residuals of rho_t = Lap(p(rho)) and grad p = -rho u.

    Uses the same step ``dh`` in r and t, so both residuals are O(dh**2) on
    the exact profile. At r = 0 the Laplacian is replaced by its limit
    3 p_rr and evenness supplies the mirrored stencil point.
    """
    if dh <= 0.0:
        raise DomainError("dh must be > 0")
    if t - dh < 0.0:
        raise DomainError("t must exceed dh for the centered time stencil")
    if r < 0.0:
        raise DomainError("radius must be >= 0")
    if float(boundary_radius(p, t - dh)) - r <= 2.0 * dh:
        raise DomainError("r must stay 2*dh away from the vacuum boundary")

    g = p.gamma

    def pres(x, tt):
        return density(p, abs(x), tt) ** g

    rho_t = (density(p, r, t + dh) - density(p, r, t - dh)) / (2.0 * dh)
    pm, p0, pp = pres(r - dh, t), pres(r, t), pres(r + dh, t)
    p_r = (pp - pm) / (2.0 * dh)
    p_rr = (pp - 2.0 * p0 + pm) / (dh * dh)
    lap = 3.0 * p_rr if r == 0.0 else p_rr + 2.0 * p_r / r
    rho = density(p, r, t)
    darcy = p_r + rho * velocity(p, r, t)
    return float(rho_t - lap), float(darcy)
