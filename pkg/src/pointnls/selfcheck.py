"""Analytic identity suite for the special functions, operator and grid."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import pointop, radial
from .radial import RadialGrid
from .specfun import bessel_k0


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tol)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name:<28s} error={self.error:.3e}  tol={self.tol:.1e}"


def k0_integral(x: float, step: float = 0.02) -> float:
    """K0(x) = int_0^inf exp(-x cosh t) dt by the trapezoid rule.

    The integrand is entire and decays double-exponentially, so the
    trapezoid rule converges geometrically in ``1/step``.
    """
    t_max = math.acosh(max(760.0 / x, 1.0)) + 1.0
    t = np.arange(0.0, t_max + step, step)
    y = np.exp(-x * np.cosh(t))
    return float(step * (y.sum() - 0.5 * y[0]))


def check_k0(k0=bessel_k0) -> CheckResult:
    xs = np.geomspace(1e-3, 20.0, 25)
    err = max(abs(k0(float(x)) / k0_integral(float(x)) - 1.0) for x in xs)
    return CheckResult("K0 integral oracle", err, 1e-10)


def _green_log_coeffs(lam: float):
    """G_lam ~ A + B ln r near the origin."""
    b = -1.0 / (2 * math.pi)
    return b * (math.log(math.sqrt(lam) / 2) + pointop.EULER_GAMMA), b


def green_inner_quadrature(grid: RadialGrid, lam: float, mu: float) -> float:
    """(G_lam, G_mu) by the midpoint rule with the origin log correction."""
    a1, b1 = _green_log_coeffs(lam)
    a2, b2 = _green_log_coeffs(mu)
    prod = pointop.green_value(lam, grid.r) * pointop.green_value(mu, grid.r)
    return radial.integrate_log_corrected(grid, prod, [a1 * a2, a1 * b2 + a2 * b1, b1 * b2])


def check_green_inner(grid: RadialGrid) -> CheckResult:
    lams = (1.0, 2.0, 4.0)
    err = max(abs(green_inner_quadrature(grid, a, b) / pointop.green_inner(a, b) - 1.0)
              for a, b in product(lams, lams))
    return CheckResult("(G_lam, G_mu) quadrature", err, 1e-6)


def check_green_norm(grid: RadialGrid) -> CheckResult:
    err = 0.0
    for lam in (0.5, 1.0, 2.0, 4.0):
        exact = 1.0 / (4 * math.pi * lam)
        err = max(err, abs(pointop.green_inner(lam, lam) / exact - 1.0),
                  abs(green_inner_quadrature(grid, lam, lam) / exact - 1.0))
    return CheckResult("||G_lam||^2 = 1/(4 pi lam)", err, 1e-6)


def check_beta() -> CheckResult:
    err = 0.0
    for alpha in (-1.0, -0.25, 0.0, 0.5, 2.0):
        params = pointop.make_params(alpha)
        for lam in np.geomspace(1e-3, 1e8, 23):
            b1 = params.beta(float(lam))
            b2 = params.beta_direct(float(lam))
            err = max(err, abs(b1 - b2) / max(1.0, abs(b1)))
    return CheckResult("beta formulas agree", err, 1e-13)


def resolvent_residual(grid: RadialGrid, alpha: float = 0.0) -> float:
    """L2 defect of R(lam) chi = chi / (lam + e_alpha) at lam = 1 - e_alpha."""
    params = pointop.make_params(alpha)
    lam = 1.0 - params.e_alpha
    chi = pointop.chi_alpha(params, grid)
    d = pointop.apply_resolvent(params, lam, chi, grid) - chi / (lam + params.e_alpha)
    return math.sqrt(radial.inner(grid, d, d))


def check_resolvent(grid: RadialGrid) -> CheckResult:
    return CheckResult("resolvent eigenpair", resolvent_residual(grid), 1e-3)


def xgrad_identity_defect(grid: RadialGrid) -> float:
    """<(-Lap+1) f, r d_r G_1> + 2 (f, G_1) relative to 2 (f, G_1), f = exp(-r^2)."""
    f = np.exp(-grid.r**2)
    lhs = radial.inner(grid, radial.apply_helmholtz(grid, 1.0, f),
                       pointop.green_radial_moment(1.0, grid.r))
    a, b = _green_log_coeffs(1.0)
    fg = radial.integrate_log_corrected(grid, f * pointop.green_value(1.0, grid.r), [a, b])
    return abs(lhs + 2 * fg) / abs(2 * fg)


def check_xgrad(grid: RadialGrid) -> CheckResult:
    return CheckResult("x.grad G_1 weak identity", xgrad_identity_defect(grid), 1e-4)


GAUSSIAN_TOLS = {"integral": 1e-8, "energy": 1e-5}


def gaussian_anchor_errors(grid: RadialGrid) -> dict:
    """Relative errors of two Gaussian anchors.

    * ``integral``: int exp(-r^2) = pi, midpoint rule with the origin
      Euler-Maclaurin term removed;
    * ``energy``: ||grad g||^2 + ||g||^2 = 2 pi for g = exp(-r^2/2).
    """
    f = np.exp(-grid.r**2)
    e_int = abs(radial.integrate_log_corrected(grid, f, [1.0]) / math.pi - 1.0)
    g = np.exp(-0.5 * grid.r**2)
    energy = radial.dirichlet_energy(grid, g) + radial.integrate_log_corrected(grid, g * g, [1.0])
    return {"integral": e_int, "energy": abs(energy / (2 * math.pi) - 1.0)}


def check_gaussian(grid: RadialGrid) -> CheckResult:
    errs = gaussian_anchor_errors(grid)
    score = max(errs[k] / GAUSSIAN_TOLS[k] for k in errs)
    return CheckResult("Gaussian anchors (err/tol)", score, 1.0)


def run_selfcheck(grid: RadialGrid | None = None, k0=bessel_k0) -> list[CheckResult]:
    """All seven identity checks; ``k0`` is swappable for sensitivity tests."""
    grid = grid or RadialGrid()
    return [
        check_k0(k0),
        check_green_inner(grid),
        check_green_norm(grid),
        check_beta(),
        check_resolvent(grid),
        check_xgrad(grid),
        check_gaussian(grid),
    ]
