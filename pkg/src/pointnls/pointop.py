"""Algebra of the 2D point interaction -Lap_alpha.

Everything is explicit: the negative eigenvalue, the coupling ``beta(lam)``
between the regular part's origin value and the singular coefficient, the
Green function ``G_lam(r) = K0(sqrt(lam) r) / (2 pi)`` and the closed-form
inner products ``(G_lam, G_mu)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import radial
from .radial import RadialGrid
from .specfun import EULER_GAMMA, bessel_k0, bessel_k1

FOUR_PI = 4.0 * math.pi


class SingularParameterError(ValueError):
    """lam sits on the eigenvalue -e_alpha, where beta(lam) vanishes."""


@dataclass(frozen=True)
class OperatorParams:
    alpha: float

    @property
    def e_alpha(self) -> float:
        return -4.0 * math.exp(-FOUR_PI * self.alpha - 2.0 * EULER_GAMMA)

    def beta(self, lam):
        """beta_alpha(lam) = ln(lam / -e_alpha) / (4 pi)."""
        return np.log(np.asarray(lam, dtype=float) / -self.e_alpha) / FOUR_PI \
            if np.ndim(lam) else math.log(lam / -self.e_alpha) / FOUR_PI

    def beta_direct(self, lam: float) -> float:
        """Same quantity written as alpha + gamma/2pi + ln(sqrt(lam)/2)/2pi."""
        return self.alpha + EULER_GAMMA / (2 * math.pi) + math.log(math.sqrt(lam) / 2) / (2 * math.pi)

    def omega_for_beta(self, beta: float) -> float:
        return -self.e_alpha * math.exp(FOUR_PI * beta)


def make_params(alpha: float) -> OperatorParams:
    if not math.isfinite(alpha):
        raise ValueError("alpha must be finite")
    params = OperatorParams(float(alpha))
    if params.e_alpha == 0.0:
        # exp(-4 pi alpha) underflows; such alpha is the free Laplacian to double precision
        raise ValueError(f"alpha={alpha} too large: e_alpha underflows")
    return params


def _positive(*xs):
    for x in xs:
        if not (np.all(np.isfinite(x)) and np.all(np.asarray(x) > 0)):
            raise ValueError("arguments must be finite and strictly positive")


def green_value(lam, r):
    """G_lam(r) = K0(sqrt(lam) r) / (2 pi)."""
    _positive(lam, r)
    return bessel_k0(np.sqrt(lam) * np.asarray(r, dtype=float)) / (2 * math.pi) \
        if np.ndim(r) else bessel_k0(math.sqrt(lam) * r) / (2 * math.pi)


def green_radial_moment(lam, r):
    """r d/dr G_lam(r) = -sqrt(lam) r K1(sqrt(lam) r) / (2 pi)."""
    _positive(lam, r)
    s = np.sqrt(lam) * np.asarray(r, dtype=float)
    return -s * bessel_k1(s) / (2 * math.pi)


@lru_cache(maxsize=64)
def _green_nodes(n: int, r_max: float, lam: float) -> np.ndarray:
    v = green_value(lam, RadialGrid(n, r_max).r)
    v.setflags(write=False)
    return v


def green_on_grid(grid: RadialGrid, lam: float = 1.0) -> np.ndarray:
    """G_lam sampled at the grid nodes (cached, read-only)."""
    return _green_nodes(grid.n, grid.r_max, float(lam))


@dataclass(frozen=True)
class CellQuadrature:
    """Gauss-Legendre rule resolving G_1 inside every grid cell.

    ``avg(v)`` returns the cell averages ``<v>_i = int_cell v r dr / (r_i h)``
    of values ``v`` given at ``nodes``; ``cell`` maps each node to its cell.
    The first cell, which holds the logarithmic singularity, is split into
    dyadic pieces towards the origin.
    """

    grid: RadialGrid
    nodes: np.ndarray
    weights: np.ndarray
    cell: np.ndarray
    g1: np.ndarray

    def avg(self, v) -> np.ndarray:
        return np.bincount(self.cell, weights=self.weights * v, minlength=self.grid.n)


@lru_cache(maxsize=16)
def _cell_quadrature(n: int, r_max: float, order: int, levels: int) -> CellQuadrature:
    grid = RadialGrid(n, r_max)
    h = grid.h
    x, wt = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (x + 1.0)
    k = np.arange(levels)
    lo = np.concatenate((h * 2.0 ** (-k - 1.0), grid.r_faces[1:-1]))
    width = np.concatenate((h * 2.0 ** (-k - 1.0), np.full(n - 1, h)))
    cell = np.concatenate((np.zeros(levels, dtype=int), np.arange(1, n)))
    r = lo[:, None] + width[:, None] * t
    w = 0.5 * width[:, None] * wt * r / (grid.r[cell] * h)[:, None]
    nodes = r.ravel()
    for arr in (nodes, w):
        arr.setflags(write=False)
    g1 = green_value(1.0, nodes)
    g1.setflags(write=False)
    return CellQuadrature(grid, nodes, w.ravel(), np.repeat(cell, order), g1)


def cell_quadrature(grid: RadialGrid, order: int = 6, levels: int = 40) -> CellQuadrature:
    return _cell_quadrature(grid.n, grid.r_max, order, levels)


@lru_cache(maxsize=16)
def _green_cell_integrals(n: int, r_max: float) -> np.ndarray:
    faces = RadialGrid(n, r_max).r_faces
    # int r K0(r) dr = -r K1(r); r K1(r) -> 1 at the origin
    rk1 = np.ones_like(faces)
    rk1[1:] = faces[1:] * bessel_k1(faces[1:])
    out = rk1[:-1] - rk1[1:]
    out.setflags(write=False)
    return out


def green_cell_integrals(grid: RadialGrid) -> np.ndarray:
    """Exact integrals of G_1 over each cell, 2 pi int G_1 r dr."""
    return _green_cell_integrals(grid.n, grid.r_max)


def green_inner(lam: float, mu: float) -> float:
    """(G_lam, G_mu)_{L2} in closed form."""
    _positive(lam, mu)
    t = (mu - lam) / lam
    if abs(t) <= 1e-6:
        # ln(1+t)/t expanded to third order
        return (1.0 - t / 2 + t * t / 3) / (FOUR_PI * lam)
    return math.log1p(t) / (t * FOUR_PI * lam)


def chi_alpha(params: OperatorParams, grid: RadialGrid) -> np.ndarray:
    """Eigenfunction G_{-e_alpha} normalised in the discrete L2 norm."""
    g = green_value(-params.e_alpha, grid.r)
    return g / math.sqrt(radial.inner(grid, g, g))


def apply_resolvent(params: OperatorParams, lam: float, g, grid: RadialGrid) -> np.ndarray:
    """(-Lap_alpha + lam)^{-1} g as the free solve plus the rank-one Green term."""
    b = params.beta(lam)
    if abs(b) < 1e-12:
        raise SingularParameterError(f"beta({lam}) = {b:.3e}: lam is the eigenvalue -e_alpha")
    g = np.asarray(g, dtype=float)
    gl = green_value(lam, grid.r)
    return radial.solve_helmholtz(grid, lam, g) + radial.inner(grid, g, gl) / b * gl


def apply_point_operator(params: OperatorParams, lam: float, u, grid: RadialGrid):
    """(-Lap_alpha + lam) on a domain element u = f + (f(0)/beta) G_lam.

    The split ``f = u - c G_lam`` is fixed by ``f(0) = beta c`` with ``f(0)``
    the discrete Green pairing of :func:`delta_weights`, which is linear, so
    ``c = a.u / (beta + a.G_lam)``.  Returns ``((-Lap + lam) f, c)``.
    """
    b = params.beta(lam)
    gl = green_on_grid(grid, lam)
    u = np.asarray(u, dtype=float)
    a = delta_weights(grid, lam)
    c = float(np.dot(a, u) / (b + np.dot(a, gl)))
    f = u - c * gl
    return radial.apply_helmholtz(grid, lam, f), c


def delta_weights(grid: RadialGrid, lam: float = 1.0) -> np.ndarray:
    """Weights ``a`` with ``a . f = <(-Lap_h + lam) f, G_lam>_w``.

    By symmetry of the discrete operator this is ``W (-Lap_h + lam) G_lam``,
    a discrete delta concentrated on the first few nodes; ``a . f``
    approximates ``f(0)`` to O(h^2 ln h).
    """
    gl = green_on_grid(grid, lam)
    return grid.weights * radial.apply_helmholtz(grid, lam, gl)


def h1_alpha_norm_sq(params: OperatorParams, omega: float, f, c: float, grid: RadialGrid) -> float:
    """||grad f||^2 + omega ||f||^2 + beta(omega) c^2 for g = f + c G_omega."""
    if omega <= -params.e_alpha:
        raise ValueError(f"omega={omega} must exceed -e_alpha={-params.e_alpha:.6g}")
    f = np.asarray(f, dtype=float)
    return radial.dirichlet_energy(grid, f) + omega * radial.inner(grid, f, f) + params.beta(omega) * c * c
