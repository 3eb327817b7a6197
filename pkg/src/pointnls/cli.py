"""Command line: selfcheck, classic, solve and sweep.

Exit codes: 0 success, 1 selfcheck failure, 2 solver failure,
3 invalid or inadmissible parameters.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import groundstate as gsm
from . import stability
from .radial import DEFAULT_N, DEFAULT_R, RadialGrid, fields_to_csv
from .selfcheck import run_selfcheck
from .specfun import bessel_k0

log = logging.getLogger(__name__)

EXIT_OK, EXIT_SELFCHECK, EXIT_SOLVER, EXIT_PARAMS = 0, 1, 2, 3

# config-file keys and how to parse them
CONFIG_KEYS = {
    "alpha": float, "p": float, "omega": float, "omega_min": float, "omega_max": float,
    "points": int, "grid_n": int, "grid_r": float, "out_dir": str,
    "emit_svg": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "linearized": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "eig_n": int,
}
DEFAULTS = {"alpha": 0.0, "grid_n": DEFAULT_N, "grid_r": DEFAULT_R, "out_dir": ".",
            "emit_svg": False, "linearized": False, "eig_n": 1024}


class ParamError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAMS, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags win")
    common.add_argument("--alpha", type=float)
    common.add_argument("--p", type=float)
    common.add_argument("--omega", type=float)
    common.add_argument("--omega-min", type=float)
    common.add_argument("--omega-max", type=float)
    common.add_argument("--points", type=int)
    common.add_argument("--grid-n", type=int)
    common.add_argument("--grid-r", type=float)
    common.add_argument("--out-dir")
    common.add_argument("--emit-svg", action="store_true", default=None)
    common.add_argument("--linearized", action="store_true", default=None,
                        help="also write the linearized eigenvalue report (solve)")
    common.add_argument("--eig-n", type=int, help="grid size for the eigen-solves")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="pointnls", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("selfcheck", parents=[common], help="analytic identity suite")
    sub.add_parser("classic", parents=[common], help="classical ground state")
    sub.add_parser("solve", parents=[common], help="ground state at one omega")
    sub.add_parser("sweep", parents=[common], help="mass curve over an omega range")
    return parser


def read_config(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParamError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ParamError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ParamError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


def resolve_config(args) -> dict:
    """Defaults < config file < flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            cfg.update(read_config(args.config))
        except OSError as exc:
            raise ParamError(f"cannot read config: {exc}") from None
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def _grid(cfg) -> RadialGrid:
    try:
        return RadialGrid(cfg["grid_n"], cfg["grid_r"])
    except ValueError as exc:
        raise ParamError(str(exc)) from None


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ParamError("missing parameter(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _num(x) -> str:
    """Filename-friendly number."""
    return format(x, "g")


def _json_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g") if math.isfinite(v) else "null"
    return json.dumps(v)


def json_text(d: dict) -> str:
    """Flat JSON object with 17-significant-digit floats (NaN as null)."""
    body = ",\n".join(f"  {json.dumps(k)}: {_json_value(v)}" for k, v in d.items())
    return "{\n" + body + "\n}\n"


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    print(f"wrote {path}", file=sys.stderr)


def _out_dir(cfg) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands -----------------------------------------------------------


def cmd_selfcheck(cfg, k0=bessel_k0) -> int:
    results = run_selfcheck(_grid(cfg), k0=k0)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_SELFCHECK


def cmd_classic(cfg) -> int:
    _require(cfg, "p")
    grid = _grid(cfg)
    p = cfg["p"]
    try:
        cp = gsm.solve_classic(p, grid)
    except ValueError as exc:
        raise ParamError(str(exc)) from None
    out = _out_dir(cfg)
    stem = f"classic_p{_num(p)}"
    _write(out / f"{stem}.csv", fields_to_csv(grid, {"u": cp.u}))
    info = {"p": p, "u0": cp.u0, "mass": cp.mass, "lp_norm": cp.lp_norm,
            "action_infty": cp.action_infty, "pohozaev_residual": gsm.classic_pohozaev_defect(cp),
            "newton_iters": cp.newton_iters, "grid_n": grid.n, "grid_r": grid.r_max}
    text = json_text(info)
    _write(out / f"{stem}.json", text)
    if cfg["emit_svg"]:
        from .plotting import plot_profile

        plot_profile(grid.r, {"u": cp.u}, out / f"{stem}.svg", title=f"p = {_num(p)}")
    sys.stdout.write(text)
    return EXIT_OK


def _ground_stem(alpha, p, omega) -> str:
    return f"ground_a{_num(alpha)}_p{_num(p)}_w{_num(omega)}"


def _check_params(alpha, p, omegas):
    try:
        gsm._check_p(p)
        for w in omegas:
            gsm.check_admissible(alpha, w)
    except ValueError as exc:
        raise ParamError(str(exc)) from None


def cmd_solve(cfg) -> int:
    _require(cfg, "p", "omega")
    grid = _grid(cfg)
    alpha, p, omega = cfg["alpha"], cfg["p"], cfg["omega"]
    _check_params(alpha, p, [omega])
    gs = gsm.solve_ground(alpha, p, omega, grid)
    out = _out_dir(cfg)
    stem = _ground_stem(alpha, p, omega)
    prof = gs.profile
    _write(out / f"{stem}.csv", fields_to_csv(grid, {"f": prof.f, "phi": prof.phi}))
    text = json_text(gs.diagnostics())
    _write(out / f"{stem}.json", text)
    if cfg["linearized"]:
        rep = stability.linearized_report(gs, n=cfg["eig_n"])
        _write(out / f"linearized_a{_num(alpha)}_p{_num(p)}_w{_num(omega)}.json", json_text(rep.as_dict()))
    if cfg["emit_svg"]:
        from .plotting import plot_profile

        plot_profile(grid.r, {"f": prof.f, "phi": prof.phi}, out / f"{stem}.svg",
                     title=f"alpha = {_num(alpha)}, p = {_num(p)}, omega = {_num(omega)}")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(cfg) -> int:
    _require(cfg, "p", "omega_min", "omega_max", "points")
    grid = _grid(cfg)
    alpha, p = cfg["alpha"], cfg["p"]
    n = cfg["points"]
    if n < 3:
        raise ParamError("--points must be at least 3")
    if not 0 < cfg["omega_min"] < cfg["omega_max"]:
        raise ParamError("need 0 < omega-min < omega-max")
    omegas = np.geomspace(cfg["omega_min"], cfg["omega_max"], n)
    _check_params(alpha, p, omegas)
    states = gsm.continue_sweep(alpha, p, omegas, grid)
    curve = stability.mass_curve(states)
    out = _out_dir(cfg)
    for s in states:
        _write(out / f"{_ground_stem(alpha, p, s.omega)}.json", json_text(s.diagnostics()))
    stem = f"mass_curve_a{_num(alpha)}_p{_num(p)}"
    _write(out / f"{stem}.csv", curve.to_csv())
    if cfg["emit_svg"]:
        from .plotting import plot_mass_curve

        plot_mass_curve(curve, out / f"{stem}.svg")
    counts = {c: curve.classification.count(c) for c in
              (stability.STABLE, stability.UNSTABLE, stability.INCONCLUSIVE, stability.FAILED)}
    print("# " + " ".join(f"{k}={v}" for k, v in counts.items()))
    changes = curve.sign_changes()
    if changes:
        for a, b in changes:
            print(f"sign_change,{a:.17g},{b:.17g}")
    else:
        print("sign_change,none")
    ok = [s for s in states if s.converged]
    if len(ok) >= 3:
        ratio = stability.domega_f0_ratio(ok)
        if ratio.size and ratio.min() > 0:
            print(f"f0_ratio_spread,{ratio.max() / ratio.min():.17g}")
    sys.stdout.write(curve.to_csv())
    return EXIT_OK


COMMANDS = {"selfcheck": cmd_selfcheck, "classic": cmd_classic, "solve": cmd_solve, "sweep": cmd_sweep}


def main(argv=None, k0=None) -> int:
    """Entry point; ``k0`` replaces the K0 routine checked by ``selfcheck``."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "selfcheck":
            return cmd_selfcheck(cfg, k0=k0 or bessel_k0)
        return COMMANDS[args.command](cfg)
    except ParamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except gsm.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
