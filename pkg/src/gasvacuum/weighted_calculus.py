"""Fixed Lagrangian reference grid on [0, sqrt(A/B)] and the discrete
calculus that lives on it: weight-aware quadrature for integrals carrying
powers of sigma(r) = A - B r**2, finite-difference derivatives on
non-uniform nodes, and a numeric Hardy-ratio probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .barenblatt import BarenblattParams, DomainError

GRADINGS = ("uniform", "boundary_graded")

# boundary_graded: node density ramps smoothly from 1 to 4 (two dyadic
# levels) across the outer 10% of the interval
_GRADED_START = 0.9
_GRADED_FACTOR = 4.0


@dataclass(frozen=True, eq=False)
class Grid:
    params: BarenblattParams
    n_cells: int
    grading: str
    nodes: np.ndarray
    sigma: np.ndarray
    sigma_r: np.ndarray
    rho0bar: np.ndarray
    cell_weights: np.ndarray  # trapezoid weights, int F dr ~ cell_weights @ F
    _stencils: dict = field(default_factory=dict, repr=False)

    @property
    def radius(self) -> float:
        return self.params.radius0

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)


def _graded_unit_nodes(n_cells: int) -> np.ndarray:
    """Nodes x in [0, 1] equidistributing the density 1 + 3 S(u), S quintic smoothstep."""
    w = 1.0 - _GRADED_START
    extra = _GRADED_FACTOR - 1.0

    def ramp(x):
        return np.clip((x - _GRADED_START) / w, 0.0, 1.0)

    def cum(x):
        u = ramp(x)
        return x + extra * w * (u**6 - 3.0 * u**5 + 2.5 * u**4)

    def dens(x):
        u = ramp(x)
        return 1.0 + extra * (6.0 * u**5 - 15.0 * u**4 + 10.0 * u**3)

    target = np.linspace(0.0, 1.0, n_cells + 1) * cum(1.0)
    # cum is increasing and convex; Newton from the right is monotone
    x = np.ones_like(target)
    for _ in range(100):
        step = (cum(x) - target) / dens(x)
        x = x - step
        if np.max(np.abs(step)) < 1e-16:
            break
    x[0], x[-1] = 0.0, 1.0
    return x


def build_grid(p: BarenblattParams, n_cells: int, grading: str = "boundary_graded") -> Grid:
    if n_cells < 32:
        raise DomainError(f"n_cells must be >= 32, got {n_cells}")
    if grading not in GRADINGS:
        raise DomainError(f"grading must be one of {GRADINGS}, got {grading!r}")
    if grading == "uniform":
        unit = np.linspace(0.0, 1.0, n_cells + 1)
    else:
        unit = _graded_unit_nodes(n_cells)
    L = p.radius0
    nodes = L * unit
    nodes[-1] = L
    sigma = p.A - p.B * nodes**2
    sigma[-1] = 0.0
    sigma = np.maximum(sigma, 0.0)
    dr = np.diff(nodes)
    cw = np.zeros_like(nodes)
    cw[:-1] += 0.5 * dr
    cw[1:] += 0.5 * dr
    return Grid(
        params=p,
        n_cells=int(n_cells),
        grading=grading,
        nodes=nodes,
        sigma=sigma,
        sigma_r=-2.0 * p.B * nodes,
        rho0bar=sigma**p.alpha,
        cell_weights=cw,
    )


# ---------------------------------------------------------------- quadrature

_NQ = 8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_NQ)


@lru_cache(maxsize=64)
def _jacobi_rule(a: float):
    x, w = roots_jacobi(_NQ, a, 0.0)  # weight (1 - x)**a on [-1, 1]
    return x, w


def weighted_integral(g: Grid, F, a: float, b: int, lo: float | None = None, hi: float | None = None) -> float:
    """int r**b sigma(r)**a F(r)**2 dr with F piecewise linear between nodes.

    The weight is evaluated analytically at quadrature points inside every
    cell. The cell touching the vacuum edge uses a Gauss-Jacobi rule for the
    factor (L - r)**a, so fractional and mildly negative powers (a > -1)
    are integrated without loss of order.
    """
    if a <= -1.0:
        raise DomainError(f"sigma power must be > -1, got {a}")
    if b < 0:
        raise DomainError(f"r power must be >= 0, got {b}")
    F = np.asarray(F, dtype=float)
    r = g.nodes
    L = g.radius
    lo = 0.0 if lo is None else max(0.0, float(lo))
    hi = L if hi is None else min(L, float(hi))
    if hi <= lo:
        return 0.0
    left, right = r[:-1], r[1:]
    c = np.maximum(left, lo)
    d = np.minimum(right, hi)
    live = d > c
    slope = (F[1:] - F[:-1]) / (right - left)
    p = g.params
    total = 0.0

    edge = live & (d >= L)
    smooth = live & ~edge
    if np.any(smooth):
        cs, ds = c[smooth], d[smooth]
        mid, half = 0.5 * (cs + ds), 0.5 * (ds - cs)
        x = mid[:, None] + half[:, None] * _GL_X[None, :]
        fx = F[:-1][smooth][:, None] + slope[smooth][:, None] * (x - left[smooth][:, None])
        sig = np.maximum(p.A - p.B * x * x, 0.0)
        wgt = x**b * sig**a
        total += float(np.sum(half[:, None] * _GL_W[None, :] * wgt * fx * fx))
    if np.any(edge):
        (i,) = np.nonzero(edge)
        i = int(i[-1])
        ci = c[i]
        xj, wj = _jacobi_rule(float(a))
        x = ci + (L - ci) * 0.5 * (1.0 + xj)
        fx = F[i] + slope[i] * (x - left[i])
        # sigma**a = B**a (L - r)**a (L + r)**a; (L - r)**a is in the rule
        smooth_part = x**b * (p.B * (L + x)) ** a * fx * fx
        total += float((0.5 * (L - ci)) ** (a + 1.0) * np.dot(wj, smooth_part))
    return total


# ------------------------------------------------------------ differentiation


def fd_weights(x0: float, xs: np.ndarray, m: int) -> np.ndarray:
    """Fornberg's weights for the m-th derivative at x0 from samples at xs."""
    n = len(xs)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def stencil_width(order: int) -> int:
    """Centered width: smallest odd count >= order + 2 (formal accuracy >= 2)."""
    w = order + 2
    return w if w % 2 else w + 1


def stencils(g: Grid, order: int, even: bool = False, width: int | None = None):
    """Index and weight arrays (n_nodes, width) for the order-th derivative.

    Centered where the stencil fits, shifted to one-sided at the ends. With
    ``even=True`` the field is reflected through r = 0 via ghost nodes, so
    stencils near the origin stay centered.
    """
    if order < 1:
        raise DomainError("derivative order must be >= 1")
    if width is None:
        width = stencil_width(order)
    key = (order, even, width)
    cached = g._stencils.get(key)
    if cached is not None:
        return cached
    r = g.nodes
    n = r.size
    if n < width:
        raise DomainError(f"grid too small for a {width}-point stencil")
    if even:
        ng = width // 2
        ext = np.concatenate([-r[ng:0:-1], r])
        src = np.concatenate([np.arange(ng, 0, -1), np.arange(n)])
    else:
        ng = 0
        ext = r
        src = np.arange(n)
    idx = np.empty((n, width), dtype=np.intp)
    wts = np.empty((n, width))
    half = width // 2
    for i in range(n):
        e = i + ng
        start = min(max(e - half, 0), ext.size - width)
        sel = slice(start, start + width)
        idx[i] = src[sel]
        wts[i] = fd_weights(r[i], ext[sel], order)
    g._stencils[key] = (idx, wts)
    return idx, wts


def apply_stencil(st, F):
    idx, wts = st
    return np.sum(wts * F[idx], axis=1)


def spatial_derivative(g: Grid, F, order: int, even: bool = False):
    if not 1 <= order <= 4:
        raise DomainError(f"derivative order must be in [1, 4], got {order}")
    F = np.asarray(F)
    return apply_stencil(stencils(g, order, even), F)


# ----------------------------------------------------------------- Hardy

def hardy_ratio(g: Grid, F, k: float) -> float:
    """int_Ib sigma**(k-2) F**2 / int_Ib sigma**k (F**2 + F_r**2) on
    Ib = (sqrt(A/(4B)), sqrt(A/B)).

    Returns 0 for F == 0 and ``inf`` if the right side vanishes while the
    left does not.
    """
    if not k > 1.0:
        raise DomainError(f"k must be > 1, got {k}")
    F = np.asarray(F, dtype=float)
    if not np.all(np.isfinite(F)):
        raise DomainError("F must be finite")
    lo = 0.5 * g.radius
    F_r = spatial_derivative(g, F, 1)
    lhs = weighted_integral(g, F, k - 2.0, 0, lo=lo)
    rhs = weighted_integral(g, F, k, 0, lo=lo) + weighted_integral(g, F_r, k, 0, lo=lo)
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else math.inf
    return lhs / rhs
