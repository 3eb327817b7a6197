"""Ground states of -Lap_alpha phi + omega phi = phi^p in the rescaled frame.

After the rescaling ``phi~(x) = omega^{-1/(p-1)} phi(x / sqrt(omega))`` the
frequency is 1 and omega survives only through ``beta = beta_alpha(omega)``.
The unknowns are the regular part ``f`` on the radial grid and the singular
coefficient ``c``; the field is ``phi = f + c G_1`` and ``f(0) = beta c``.

The discrete action is

    S(f, c) = 1/2 (f, A f)_w + 1/2 beta c^2 - 1/(p+1) sum_i w_i <phi^{p+1}>_i

where ``<.>_i`` averages over cell i with ``f`` frozen at its nodal value
and ``G_1`` resolved exactly inside the cell.  Midpoint sampling of the
logarithmic singularity would cost a factor ``ln^{p+1} h`` in accuracy.
The Newton system is the exact gradient of this action, so Nehari's
identity holds to solver precision on the grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_banded

from . import radial
from .pointop import FOUR_PI, cell_quadrature, green_cell_integrals, green_on_grid, make_params
from .radial import RadialGrid
from .specfun import EULER_GAMMA, bessel_k0_scaled

log = logging.getLogger(__name__)

BETA_GUARD = 0.02
P_MAX = 8.0
NEWTON_TOL = 1e-10
NEWTON_MAXIT = 50
MAX_HALVINGS = 8
SMOOTHING_STEPS = 4


class SolverError(RuntimeError):
    pass


class NoConvergenceError(SolverError):
    pass


class PositivityError(SolverError):
    pass


class BetaTooSmallError(ValueError):
    pass


class ShootingError(SolverError):
    pass


@dataclass
class Profile:
    grid: RadialGrid
    f: np.ndarray = field(repr=False)
    f0: float
    beta: float
    c: float
    omega: float
    p: float
    alpha: float

    @property
    def phi(self) -> np.ndarray:
        return self.f + self.c * green_on_grid(self.grid)

    def scaled(self, s: float) -> "Profile":
        return replace(self, f=s * self.f, f0=s * self.f0, c=s * self.c)


@dataclass
class GroundState:
    profile: Profile | None
    alpha: float
    p: float
    omega: float
    beta: float
    action: float = math.nan
    nehari_residual: float = math.nan
    pohozaev_residual: float = math.nan
    mass_rescaled: float = math.nan
    mass_physical: float = math.nan
    energy: float = math.nan
    newton_iters: int = 0
    newton_residual: float = math.nan
    converged: bool = False
    message: str = ""

    @property
    def f0(self) -> float:
        return self.profile.f0 if self.profile is not None else math.nan

    def diagnostics(self) -> dict:
        """Key set of the diagnostics JSON."""
        return {
            "alpha": self.alpha,
            "p": self.p,
            "omega": self.omega,
            "beta": self.beta,
            "f0": self.f0,
            "action": self.action,
            "nehari_residual": self.nehari_residual,
            "pohozaev_residual": self.pohozaev_residual,
            "mass_rescaled": self.mass_rescaled,
            "mass_physical": self.mass_physical,
            "energy": self.energy,
            "newton_iters": self.newton_iters,
            "converged": self.converged,
        }


@dataclass
class ClassicProfile:
    grid: RadialGrid
    u: np.ndarray = field(repr=False)
    u0: float
    p: float
    action_infty: float
    mass: float
    lp_norm: float  # ||u||_{p+1}^{p+1}
    newton_iters: int = 0

    def as_profile(self, alpha: float = math.inf) -> Profile:
        """Embed as a field with no singular part (beta = infinity)."""
        return Profile(self.grid, self.u.copy(), radial.extrapolate_origin(self.grid, self.u),
                       math.inf, 0.0, math.inf, self.p, alpha)


# -- functionals ---------------------------------------------------------


def _cell_powers(prof: Profile, q: float) -> np.ndarray:
    """Cell averages of |phi|^q."""
    if prof.c == 0.0:
        return np.abs(prof.f) ** q
    cq = cell_quadrature(prof.grid)
    return cq.avg(np.abs(prof.f[cq.cell] + prof.c * cq.g1) ** q)


def lp_integral(prof: Profile) -> float:
    """||phi||_{p+1}^{p+1}, cell-averaged."""
    return float(prof.grid.weights @ _cell_powers(prof, prof.p + 1))


def h1_tilde_sq(prof: Profile) -> float:
    """||f||_{H^1}^2 + beta c^2 (discrete)."""
    g = prof.grid
    sing = prof.beta * prof.c**2 if prof.c != 0.0 else 0.0
    return radial.dirichlet_energy(g, prof.f) + radial.inner(g, prof.f, prof.f) + sing


def functional_values(prof: Profile) -> tuple[float, float]:
    """Rescaled action and Nehari functional ``(S~, K~)``."""
    quad = h1_tilde_sq(prof)
    lp = lp_integral(prof)
    return 0.5 * quad - lp / (prof.p + 1), quad - lp


def nehari_rescale(prof: Profile) -> Profile:
    """Scale (f, c) onto the Nehari manifold K~ = 0."""
    quad = h1_tilde_sq(prof)
    lp = lp_integral(prof)
    if lp == 0.0:
        raise ValueError("cannot Nehari-rescale a field with zero L^{p+1} norm")
    return prof.scaled((quad / lp) ** (1.0 / (prof.p - 1.0)))


def mass_rescaled(prof: Profile) -> float:
    """||f||^2 + 2c (f, G_1) + c^2 / (4 pi), with (G_1, G_1) taken exactly."""
    g = prof.grid
    m = radial.inner(g, prof.f, prof.f) + prof.c**2 / FOUR_PI
    if prof.c != 0.0:
        m += 2.0 * prof.c * float(green_cell_integrals(g) @ prof.f)
    return m


def pohozaev_defect(prof: Profile) -> float:
    """Relative defect of ||phi||^2 = f(0)^2/(4 pi beta^2) + 2/(p+1) ||phi||_{p+1}^{p+1}."""
    m = mass_rescaled(prof)
    return abs(m - prof.c**2 / FOUR_PI - 2.0 / (prof.p + 1) * lp_integral(prof)) / m


# -- Newton --------------------------------------------------------------


@dataclass
class _System:
    """Gradient of the discrete action in the unknowns x = (f, c).

    With ``beta = inf`` the coefficient is frozen at zero and x = f.
    """

    grid: RadialGrid
    p: float
    beta: float
    ab: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.ab = radial.helmholtz_banded(self.grid, 1.0)

    @property
    def coupled(self) -> bool:
        return math.isfinite(self.beta)

    def split(self, x):
        n = self.grid.n
        return (x[:n], float(x[n])) if self.coupled else (x, 0.0)

    def _cells(self, x):
        f, c = self.split(x)
        if not self.coupled:
            return None, np.maximum(f, 0.0)
        cq = cell_quadrature(self.grid)
        return cq, np.maximum(f[cq.cell] + c * cq.g1, 0.0)

    def residual(self, x):
        f, c = self.split(x)
        cq, phi = self._cells(x)
        pp = phi**self.p
        if cq is None:
            return radial.apply_helmholtz(self.grid, 1.0, f) - pp
        rf = radial.apply_helmholtz(self.grid, 1.0, f) - cq.avg(pp)
        rc = self.beta * c - float(self.grid.weights @ cq.avg(pp * cq.g1))
        return np.append(rf, rc)

    def hessian_blocks(self, x):
        """(D, d, s): Jacobian blocks A - diag(D), -d and s = d_c R_c."""
        cq, phi = self._cells(x)
        q = self.p * phi ** (self.p - 1.0)
        if cq is None:
            return q, None, None
        d = cq.avg(q * cq.g1)
        s = self.beta - float(self.grid.weights @ cq.avg(q * cq.g1 * cq.g1))
        return cq.avg(q), d, s

    def jacobian_solve(self, x, rhs):
        """Bordered solve: banded block plus the Schur complement in c."""
        big, d, s = self.hessian_blocks(x)
        ab = self.ab.copy()
        ab[1] -= big
        if d is None:
            return solve_banded((1, 1), ab, rhs, check_finite=False)
        n = self.grid.n
        yz = solve_banded((1, 1), ab, np.column_stack((rhs[:n], d)), check_finite=False)
        y, z = yz[:, 0], yz[:, 1]
        v = self.grid.weights * d
        dc = (rhs[n] + v @ y) / (s - v @ z)
        return np.append(y + z * dc, dc)

    def jacobian_apply(self, x, v):
        big, d, s = self.hessian_blocks(x)
        if d is None:
            return radial.apply_helmholtz(self.grid, 1.0, v) - big * v
        n = self.grid.n
        vf, vc = v[:n], v[n]
        out_f = radial.apply_helmholtz(self.grid, 1.0, vf) - big * vf - d * vc
        out_c = -float(self.grid.weights @ (d * vf)) + s * vc
        return np.append(out_f, out_c)


def _sup(x) -> float:
    return float(np.max(np.abs(x)))


def newton(system: _System, x, tol=NEWTON_TOL, maxit=NEWTON_MAXIT):
    """Safeguarded Newton; returns (x, iterations, final sup residual)."""
    x = np.array(x, dtype=float)
    res = system.residual(x)
    rn = _sup(res)
    for it in range(1, maxit + 1):
        if rn <= tol * (1.0 + _sup(x)):
            return x, it - 1, rn
        step = system.jacobian_solve(x, res)
        if not np.all(np.isfinite(step)):
            raise NoConvergenceError("non-finite Newton step")
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = x - t * step
            tres = system.residual(trial)
            tn = _sup(tres)
            if tn < rn:
                break
            t *= 0.5
        x, res, rn = trial, tres, tn
    if rn <= tol * (1.0 + _sup(x)):
        return x, maxit, rn
    raise NoConvergenceError(f"Newton did not converge in {maxit} iterations (residual {rn:.3e})")


# -- classical limit (beta = infinity) ----------------------------------


def _shoot(u0, p, grid: RadialGrid, record: bool = True):
    """RK4 outward from the first node for a vector of central values.

    Returns (status, u, v) where status is +1 for overshoot (u crosses 0),
    -1 for undershoot (u' > 0 while u > 0), 0 if unresolved at r_max, and
    u, v hold the trajectory of every candidate (NaN from the classifying
    step on).  With ``record=False`` the trajectories are None.
    """
    u0 = np.asarray(u0, dtype=float)
    r = grid.r[0]
    curv = u0 - u0**p
    u = u0 + curv * r * r / 4.0
    v = curv * r / 2.0
    with np.errstate(over="ignore", invalid="ignore"):
        status, stop, traj_u, traj_v = _rk4_march(u, v, r, grid.h, p, grid.n, record)
    if record:
        rows = np.arange(grid.n)[:, None]
        dead = rows >= stop[None, :]
        traj_u[dead] = np.nan
        traj_v[dead] = np.nan
    return status, traj_u, traj_v


def _rk4_march(u, v, r, h, p, n, record):
    q = p - 1.0

    def accel(rr, uu, vv):
        return uu - np.abs(uu) ** q * uu - vv / rr

    m = u.size
    status = np.zeros(m, dtype=int)
    stop = np.full(m, n)
    traj_u = traj_v = None
    if record:
        traj_u = np.empty((n, m))
        traj_v = np.empty((n, m))
        traj_u[0], traj_v[0] = u, v
    h2, h6 = h / 2, h / 6
    for i in range(1, n):
        a1 = accel(r, u, v)
        u2, v2 = u + h2 * v, v + h2 * a1
        a2 = accel(r + h2, u2, v2)
        u3, v3 = u + h2 * v2, v + h2 * a2
        a3 = accel(r + h2, u3, v3)
        u4, v4 = u + h * v3, v + h * a3
        a4 = accel(r + h, u4, v4)
        u = u + h6 * (v + 2 * v2 + 2 * v3 + v4)
        v = v + h6 * (a1 + 2 * a2 + 2 * a3 + a4)
        r += h
        if record:
            traj_u[i], traj_v[i] = u, v
        # a blown-up step (NaN/inf) is a violent overshoot
        over = ~(u >= 0) | ~np.isfinite(v)
        hit = (status == 0) & (over | (v > 0))
        if hit.any():
            status[hit & over] = 1
            status[hit & ~over] = -1
            stop[hit] = i
            if status.all():
                break
    return status, stop, traj_u, traj_v


def _shooting_bracket(p, grid, lo=1.001, hi=100.0, tol=1e-12, width=48):
    s, _, _ = _shoot(np.array([lo, hi]), p, grid, record=False)
    if not (s[0] == -1 and s[1] == 1):
        raise ShootingError(f"no shooting bracket in u0 in [{lo}, {hi}] for p={p}")
    while hi - lo > tol * hi:
        cand = np.linspace(lo, hi, width + 2)[1:-1]
        s, _, _ = _shoot(cand, p, grid, record=False)
        unresolved = np.flatnonzero(s == 0)
        if unresolved.size:
            # trajectory stayed monotone to r_max: as close as the grid can tell
            k = unresolved[0]
            return cand[k], cand[k]
        k = np.searchsorted(s, 1)  # first overshoot; s is -1...-1, 1...1
        new_lo = cand[k - 1] if k > 0 else lo
        new_hi = cand[k] if k < cand.size else hi
        if (new_lo, new_hi) == (lo, hi):
            break
        lo, hi = new_lo, new_hi
    return lo, hi


def _tail_completed(u, grid):
    """Keep the trusted monotone part of a shot, continue with the K0 decay."""
    good = np.isfinite(u) & (u > 0)
    k = int(np.argmin(good)) if not good.all() else grid.n
    du = np.diff(u[:k])
    bad = np.flatnonzero(du >= 0)
    if bad.size:
        k = int(bad[0]) + 1
    # back off to where the shot is still far from its numerical breakdown
    k = max(3, k - max(k // 20, 1))
    out = np.empty(grid.n)
    out[:k] = u[:k]
    rk = grid.r[k - 1]
    tail = grid.r[k:]
    # e^{-(r - rk)} K0-shaped decay, evaluated without underflow
    out[k:] = u[k - 1] * bessel_k0_scaled(tail) / bessel_k0_scaled(rk) * np.exp(-(tail - rk))
    return out


def _check_p(p):
    if not (1.0 < p <= P_MAX):
        raise ValueError(f"p must lie in (1, {P_MAX:g}], got {p}")


@lru_cache(maxsize=32)
def _classic_raw(p: float, n: int, r_max: float):
    grid = RadialGrid(n, r_max)
    lo, hi = _shooting_bracket(p, grid)
    _, tu, _ = _shoot(np.array([lo]), p, grid)
    seed = _tail_completed(tu[:, 0], grid)
    u, iters, _ = newton(_System(grid, p, math.inf), seed)
    if np.any(u <= 0):
        raise PositivityError("classical profile lost positivity after Newton polish")
    u.setflags(write=False)
    return 0.5 * (lo + hi), u, iters


def _richardson(fine: float, coarse: float) -> float:
    return (4.0 * fine - coarse) / 3.0


def solve_classic(p: float, grid: RadialGrid | None = None) -> ClassicProfile:
    """Positive radial ground state of -Lap u + u = u^p.

    Shooting-bisection on ``u(0)`` fixes the central value; the shot (with
    its unstable tail replaced by the decaying Green-function tail) seeds a
    Newton polish of the discrete problem on ``grid``.  The mass and
    L^{p+1} norm are Richardson-extrapolated against a half-resolution
    solve; ``action_infty`` is the value on ``grid`` itself.
    """
    _check_p(p)
    p = float(p)
    grid = grid or RadialGrid()
    u0, u, iters = _classic_raw(p, grid.n, grid.r_max)
    lp = radial.integrate(grid, u ** (p + 1))
    mass = radial.inner(grid, u, u)
    if grid.n >= 16 and grid.n % 2 == 0:
        coarse = grid.coarsen(grid.n // 2)
        _, uc, _ = _classic_raw(p, coarse.n, coarse.r_max)
        lp_x = _richardson(lp, radial.integrate(coarse, uc ** (p + 1)))
        mass_x = _richardson(mass, radial.inner(coarse, uc, uc))
    else:
        lp_x, mass_x = lp, mass
    return ClassicProfile(grid, u, float(u0), p, (p - 1) / (2 * (p + 1)) * lp, mass_x, lp_x, iters)


def classic_pohozaev_defect(cp: ClassicProfile) -> float:
    """|M - 2/(p+1) ||u||_{p+1}^{p+1}| / M from the extrapolated norms."""
    return abs(cp.mass - 2.0 / (cp.p + 1) * cp.lp_norm) / cp.mass


# -- interacting ground state ------------------------------------------


def _profile(system: _System, x, omega, alpha) -> Profile:
    f, c = system.split(np.asarray(x, dtype=float))
    return Profile(system.grid, f.copy(), system.beta * c, system.beta, c, omega, system.p, alpha)


def petviashvili(system: _System, x, steps: int = SMOOTHING_STEPS) -> np.ndarray:
    """Stabilized fixed-point steps ``x <- M^{p/(p-1)} L^{-1} N(x)``.

    ``L = diag(A, beta)`` is the linear part, ``N`` the nonlinear one and
    ``M = <x, L x> / <x, N(x)>``.  Each step is one banded solve; it smooths
    a rough seed and, unlike Newton, is repelled from the trivial solution.
    """
    x = np.array(x, dtype=float)
    g = system.grid
    for _ in range(steps):
        f, c = system.split(x)
        cq, phi = system._cells(x)
        pp = phi**system.p
        nf = cq.avg(pp)
        nc = float(g.weights @ cq.avg(pp * cq.g1))
        quad = float(g.weights @ (f * radial.apply_helmholtz(g, 1.0, f))) + system.beta * c * c
        lp = float(g.weights @ (f * nf)) + c * nc
        if not lp > 0:
            break
        m = (quad / lp) ** (system.p / (system.p - 1.0))
        x = m * np.append(solve_banded((1, 1), system.ab, nf, check_finite=False), nc / system.beta)
    return x


def _start(system: _System, f, f0, omega, alpha) -> np.ndarray:
    """Nehari-rescaled initial vector (f, f0 / beta), smoothed by a few Petviashvili steps."""
    prof = Profile(system.grid, f, f0, system.beta, f0 / system.beta, omega, system.p, alpha)
    prof = nehari_rescale(prof)
    return petviashvili(system, np.append(prof.f, prof.c))


def _finish(prof: Profile, iters: int, rn: float) -> GroundState:
    p, omega = prof.p, prof.omega
    phi = prof.phi
    if np.any(phi <= 0):
        raise PositivityError(f"converged field is not positive (min {phi.min():.3e})")
    s, k = functional_values(prof)
    m = mass_rescaled(prof)
    return GroundState(
        profile=prof, alpha=prof.alpha, p=p, omega=omega, beta=prof.beta,
        action=s,
        nehari_residual=abs(k) / h1_tilde_sq(prof),
        pohozaev_residual=pohozaev_defect(prof),
        mass_rescaled=m,
        mass_physical=omega ** ((3 - p) / (p - 1)) * m,
        energy=omega ** (2 / (p - 1)) * (s - 0.5 * m),
        newton_iters=iters, newton_residual=rn, converged=True,
    )


def check_admissible(alpha: float, omega: float) -> float:
    params = make_params(alpha)
    if not omega > -params.e_alpha:
        raise BetaTooSmallError(
            f"omega={omega:g} is not above -e_alpha={-params.e_alpha:.6g}; "
            f"admissible: omega >= {params.omega_for_beta(BETA_GUARD):.6g} (beta >= {BETA_GUARD})")
    beta = params.beta(omega)
    # relative slack so that omega_for_beta(BETA_GUARD) itself is admissible
    if beta < BETA_GUARD * (1 - 1e-12):
        raise BetaTooSmallError(
            f"beta({omega:g}) = {beta:.4g} is below the guard {BETA_GUARD}; "
            f"admissible: omega >= {params.omega_for_beta(BETA_GUARD):.6g}")
    return beta


def _seed_vector(seed, grid: RadialGrid):
    """Regular part on ``grid`` and origin value of a seed."""
    if isinstance(seed, Profile):
        f, src, f0 = seed.f, seed.grid, seed.f0
    elif isinstance(seed, ClassicProfile):
        f, src, f0 = seed.u, seed.grid, None
    else:
        f, src, f0 = seed, grid, None
    f = np.asarray(f, dtype=float)
    if f.shape != (src.n,):
        raise ValueError("seed length does not match the grid")
    if src != grid:
        f = src.interpolate(f, grid)
    if f0 is None or not math.isfinite(f0):
        f0 = radial.extrapolate_origin(grid, f)
    return f, f0


def solve_ground(alpha: float, p: float, omega: float, grid: RadialGrid | None = None,
                 seed=None) -> GroundState:
    """Rescaled ground state at frequency ``omega``.

    ``seed`` may be a :class:`Profile`, a :class:`ClassicProfile` or a bare
    regular-part vector; by default the classical profile is used and, if
    Newton fails from it directly, a continuation in beta from a large value
    down to the target is run.
    """
    _check_p(p)
    grid = grid or RadialGrid()
    beta = check_admissible(alpha, omega)
    system = _System(grid, p, beta)
    default = seed is None
    if default:
        # the bare classical profile; the extrapolated norms are not needed here
        seed = _classic_raw(float(p), grid.n, grid.r_max)[1]
    f_seed, f0 = _seed_vector(seed, grid)
    try:
        x, iters, rn = newton(system, _start(system, f_seed, f0, omega, alpha))
        return _finish(_profile(system, x, omega, alpha), iters, rn)
    except SolverError as exc:
        if not default:
            raise
        log.debug("direct Newton from classical seed failed (%s); continuing in beta", exc)
    return _beta_continuation(alpha, p, omega, grid, f_seed, f0)


def _beta_continuation(alpha, p, omega, grid, f, f0, beta_start=20.0, ratio=0.7):
    params = make_params(alpha)
    target = params.beta(omega)
    betas = []
    b = max(beta_start, 2 * target)
    while b > target:
        betas.append(b)
        b *= ratio
    betas.append(target)
    iters_total = 0
    for b in betas:
        system = _System(grid, p, b)
        x, iters, rn = newton(system, _start(system, f, f0, params.omega_for_beta(b), alpha))
        iters_total += iters
        f, c = system.split(x)
        f0 = b * c
    return _finish(_profile(system, x, omega, alpha), iters_total, rn)


def action_error_estimate(gs: GroundState, factor: int = 2) -> float:
    """Richardson estimate |S_h - S_{2h}| / 3 of the action's discretisation error."""
    grid = gs.profile.grid
    coarse = grid.coarsen(grid.n // factor)
    gc = solve_ground(gs.alpha, gs.p, gs.omega, coarse, seed=gs.profile)
    return abs(gs.action - gc.action) / (factor**2 - 1)


def failed_state(alpha, p, omega, message: str) -> GroundState:
    params = make_params(alpha)
    beta = params.beta(omega) if omega > -params.e_alpha else math.nan
    return GroundState(None, alpha, p, omega, beta, converged=False, message=message)


def continue_sweep(alpha: float, p: float, omegas, grid: RadialGrid | None = None) -> list[GroundState]:
    """Warm-started solves along ascending ``omegas``, processed from the top down.

    Failures are recorded as unconverged states; the next point is seeded
    from the last success.
    """
    omegas = [float(w) for w in omegas]
    if any(b <= a for a, b in zip(omegas, omegas[1:])):
        raise ValueError("omegas must be strictly ascending")
    grid = grid or RadialGrid()
    out: dict[int, GroundState] = {}
    seed = None
    for i in reversed(range(len(omegas))):
        try:
            gs = solve_ground(alpha, p, omegas[i], grid, seed=seed)
            seed = gs.profile
        except (SolverError, ValueError) as exc:
            log.warning("omega=%g failed: %s", omegas[i], exc)
            gs = failed_state(alpha, p, omegas[i], str(exc))
        out[i] = gs
    states = [out[i] for i in range(len(omegas))]
    if states and not any(s.converged for s in states):
        raise SolverError("every point of the sweep failed")
    return states
