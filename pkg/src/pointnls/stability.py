"""Mass curve, slope criterion and linearized diagnostics along a branch.

A standing wave is classified stable where ``d/domega ||phi_omega||^2 > 0``
and unstable where it is negative.  The slope is a finite difference in
``ln omega`` over a sweep; an honest inconclusive band comes from comparing
two stencils of different width.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, null_space

from . import radial
from .groundstate import (
    GroundState,
    Profile,
    _System,
    classic_pohozaev_defect,
    pohozaev_defect,
    solve_classic,
    solve_ground,
)
from .pointop import FOUR_PI, green_cell_integrals
from .radial import RadialGrid

STABLE = "stable"
UNSTABLE = "unstable"
INCONCLUSIVE = "inconclusive"
FAILED = "failed"

THRESHOLD_FACTOR = 10.0
MAX_EIG_N = 2048

CSV_HEADER = ["omega", "beta", "mass", "mass_rescaled", "f0", "action", "dmass",
              "dmass_asymptotic", "classification"]


def pohozaev_residual(gs: GroundState) -> float:
    """Relative Pohozaev defect of the state's profile.

    For a classical state (beta = inf) the continuum norms of the
    classical solver are used.
    """
    prof = gs.profile
    if prof is None:
        return math.nan
    if not math.isfinite(prof.beta):
        return classic_pohozaev_defect(solve_classic(prof.p, prof.grid))
    return pohozaev_defect(prof)


# -- mass curve ---------------------------------------------------------


def _three_point(x, y, i, idx):
    """Derivative at x[i] of the quadratic through the points ``idx``."""
    x0, x1, x2 = x[idx]
    y0, y1, y2 = y[idx]
    t = x[i]
    return (y0 * (2 * t - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (2 * t - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (2 * t - x0 - x1) / ((x2 - x0) * (x2 - x1)))


def stencil_derivative(x, y, stride: int = 1) -> np.ndarray:
    """dy/dx from three-point stencils spaced by ``stride``.

    Centered where the stencil fits, otherwise one-sided; a window merely
    shifted inward would coincide with the centered stride-1 value and hide
    the error estimate, so it is the last resort.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    s = stride
    if n < 2 * s + 1:
        raise ValueError(f"need at least {2 * s + 1} points for stride {s}")
    out = np.empty(n)
    for i in range(n):
        if i - s >= 0 and i + s < n:
            start = i - s
        elif i + 2 * s < n:
            start = i
        elif i - 2 * s >= 0:
            start = i - 2 * s
        else:
            start = min(max(i - s, 0), n - 1 - 2 * s)
        out[i] = _three_point(x, y, i, [start, start + s, start + 2 * s])
    return out


def derivative_with_error(x, y):
    """(derivative, error estimate) from stride-1 and stride-2 stencils.

    Both stencils are second order, so their difference over 3 estimates
    the error of the fine one.  With fewer than 6 points the stride-2
    stencils are not independent of the fine ones; the gap to the one-sided
    two-point slope (first order, so conservative) is used instead.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fine = stencil_derivative(x, y, 1)
    if x.size >= 6:
        return fine, np.abs(fine - stencil_derivative(x, y, 2)) / 3.0
    slope = np.diff(y) / np.diff(x)
    return fine, np.abs(fine - np.append(slope, slope[-1]))


def classify(dmass, threshold) -> list[str]:
    out = []
    for d, t in zip(dmass, threshold):
        if not np.isfinite(d):
            out.append(FAILED)
        elif d > t:
            out.append(STABLE)
        elif d < -t:
            out.append(UNSTABLE)
        else:
            out.append(INCONCLUSIVE)
    return out


@dataclass
class MassCurve:
    alpha: float
    p: float
    omegas: np.ndarray
    mass: np.ndarray
    mass_rescaled: np.ndarray
    f0: np.ndarray
    beta: np.ndarray
    action: np.ndarray
    dmass: np.ndarray
    dmass_asymptotic: np.ndarray
    threshold: np.ndarray = field(repr=False)
    classification: list = field(default_factory=list)

    def sign_changes(self) -> list[tuple[float, float]]:
        """Consecutive classified (stable/unstable) points that disagree."""
        pts = [(w, c) for w, c in zip(self.omegas, self.classification) if c in (STABLE, UNSTABLE)]
        return [(a[0], b[0]) for a, b in zip(pts, pts[1:]) if a[1] != b[1]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        cols = (self.omegas, self.beta, self.mass, self.mass_rescaled, self.f0, self.action,
                self.dmass, self.dmass_asymptotic)
        for i, cls in enumerate(self.classification):
            writer.writerow([format(float(c[i]), ".17g") for c in cols] + [cls])
        return buf.getvalue()


def asymptotic_dmass(gs: GroundState) -> float:
    """Two-term large-omega expansion of d/domega ||phi_omega||^2."""
    if gs.profile is None:
        return math.nan
    p, w = gs.p, gs.omega
    lead = (3 - p) / (p - 1) * gs.mass_rescaled
    sing = gs.f0**2 / (2 * (p - 1) * math.pi * gs.beta**2)
    return w ** (2 * (2 - p) / (p - 1)) * (lead + sing)


def _check_sweep(states, minimum=3):
    if len(states) < minimum:
        raise ValueError(f"need at least {minimum} states, got {len(states)}")
    w = np.array([s.omega for s in states], dtype=float)
    if np.any(np.diff(w) <= 0):
        raise ValueError("states must have strictly ascending omega")
    if len({(s.alpha, s.p) for s in states}) != 1:
        raise ValueError("states must come from a single (alpha, p) sweep")
    return w


def mass_curve(states: list[GroundState]) -> MassCurve:
    """Mass curve of one sweep with slope classification.

    ``dmass = (M / omega) d ln M / d ln omega`` with three-point stencils in
    ``ln omega``; the threshold is ten times the stencil-gap error estimate.

    Failed states keep NaN entries and the class ``failed``; derivatives use
    the converged points only.
    """
    w = _check_sweep(states)
    ok = np.array([s.converged for s in states])
    if ok.sum() < 3:
        raise ValueError("need at least 3 converged states")

    def col(name):
        return np.array([getattr(s, name) if s.converged else math.nan for s in states], dtype=float)

    mass = col("mass_physical")
    dmass = np.full(w.size, math.nan)
    thresh = np.full(w.size, math.nan)
    # M is close to a power of omega, so ln M is nearly linear in ln omega
    # and its differences carry far less truncation error than M's
    lw = np.log(w[ok])
    d, err = derivative_with_error(lw, np.log(mass[ok]))
    dmass[ok] = mass[ok] * d / w[ok]
    thresh[ok] = THRESHOLD_FACTOR * mass[ok] * err / w[ok]
    s0 = states[0]
    return MassCurve(
        alpha=s0.alpha, p=s0.p, omegas=w, mass=mass, mass_rescaled=col("mass_rescaled"),
        f0=np.array([s.f0 for s in states], dtype=float),
        beta=np.array([s.beta for s in states], dtype=float),
        action=col("action"), dmass=dmass,
        dmass_asymptotic=np.array([asymptotic_dmass(s) for s in states]),
        threshold=thresh, classification=classify(dmass, thresh),
    )


def domega_f0_ratio(states: list[GroundState]) -> np.ndarray:
    """|d f0 / d omega| * omega * beta^{3/2} at the interior sweep points."""
    w = _check_sweep(states)
    f0 = np.array([s.f0 for s in states], dtype=float)
    beta = np.array([s.beta for s in states], dtype=float)
    lw = np.log(w)
    # d f0/d omega * omega = d f0 / d ln omega
    d = np.array([_three_point(lw, f0, i, [i - 1, i, i + 1]) for i in range(1, w.size - 1)])
    return np.abs(d) * beta[1:-1] ** 1.5


# -- linearized operator ------------------------------------------------


@dataclass
class LinearizedReport:
    omega: float
    smallest_abs_eig: float
    coercivity_eig: float
    reduced_eig: float  # lowest eigenvalue with the singular row/column deleted
    dims: int

    def as_dict(self) -> dict:
        return {"omega": self.omega, "smallest_abs_eig": self.smallest_abs_eig,
                "coercivity_eig": self.coercivity_eig, "reduced_eig": self.reduced_eig,
                "dims": self.dims}


def _dense_helmholtz(grid: RadialGrid) -> np.ndarray:
    """W (-Lap_h + 1) as a dense symmetric matrix."""
    ab = radial.helmholtz_banded(grid, 1.0)
    n = grid.n
    a = np.diag(ab[1]) + np.diag(ab[0, 1:], 1) + np.diag(ab[2, :-1], -1)
    wa = grid.weights[:, None] * a
    return 0.5 * (wa + wa.T)


def linearized_pencil(prof: Profile):
    """Second variation H, energy Gram matrix G and the L2 pairing with phi.

    Coordinates are the grid values of the regular part plus the singular
    coefficient as an independent last entry.  For a classical profile
    (beta = inf) the last coordinate is dropped.
    """
    grid = prof.grid
    system = _System(grid, prof.p, prof.beta)
    wa = _dense_helmholtz(grid)
    w = grid.weights
    if not system.coupled:
        big, _, _ = system.hessian_blocks(prof.f)
        h = wa - np.diag(w * big)
        q = w * prof.f
        return h, wa, q
    x = np.append(prof.f, prof.c)
    big, d, s = system.hessian_blocks(x)
    n = grid.n
    h = np.zeros((n + 1, n + 1))
    h[:n, :n] = wa - np.diag(w * big)
    h[:n, n] = h[n, :n] = -w * d
    h[n, n] = s
    g = np.zeros_like(h)
    g[:n, :n] = wa
    g[n, n] = prof.beta
    gi = green_cell_integrals(grid)
    q = np.append(w * prof.f + prof.c * gi, float(gi @ prof.f) + prof.c / FOUR_PI)
    return h, g, q


def pencil_eigenvalues(h, g) -> np.ndarray:
    return eigh(h, g, eigvals_only=True, check_finite=False)


def lowest_constrained(h, g, q) -> float:
    """Lowest eigenvalue of the pencil on the complement ``q . v = 0``."""
    z = null_space(q[None, :])
    return float(eigh(z.T @ h @ z, z.T @ g @ z, eigvals_only=True, subset_by_index=[0, 0],
                      check_finite=False)[0])


def _reduced_grid_state(gs: GroundState, n: int) -> GroundState:
    grid = gs.profile.grid
    if grid.n == n:
        return gs
    return solve_ground(gs.alpha, gs.p, gs.omega, RadialGrid(n, grid.r_max), seed=gs.profile)


def linearized_report(gs: GroundState, n: int = 1024) -> LinearizedReport:
    """Eigenvalue diagnostics of the linearization on a grid of ``n`` nodes.

    The state is transferred to the reduced grid and re-polished by Newton
    before the dense generalized eigen-solves.
    """
    if gs.profile is None or not gs.converged:
        raise ValueError("linearized_report needs a converged state")
    if n > MAX_EIG_N:
        raise ValueError(f"dense eigen-solve limited to n <= {MAX_EIG_N}, got {n}")
    red = _reduced_grid_state(gs, n)
    h, g, q = linearized_pencil(red.profile)
    ev = pencil_eigenvalues(h, g)
    m = red.profile.grid.n
    reduced = float(eigh(h[:m, :m], g[:m, :m], eigvals_only=True, subset_by_index=[0, 0],
                         check_finite=False)[0])
    return LinearizedReport(
        omega=gs.omega, smallest_abs_eig=float(np.min(np.abs(ev))),
        coercivity_eig=lowest_constrained(h, g, q), reduced_eig=reduced, dims=h.shape[0],
    )


def classical_linearized_eig(p: float, n: int = 1024, r_max: float = radial.DEFAULT_R) -> float:
    """Lowest radial eigenvalue of the classical linearization (energy pencil)."""
    cp = solve_classic(p, RadialGrid(n, r_max))
    h, g, _ = linearized_pencil(cp.as_profile())
    return float(eigh(h, g, eigvals_only=True, subset_by_index=[0, 0], check_finite=False)[0])
