"""Ground states and orbital stability for the 2D NLS with a point interaction."""

from .groundstate import (
    ClassicProfile,
    GroundState,
    Profile,
    continue_sweep,
    solve_classic,
    solve_ground,
)
from .pointop import OperatorParams, make_params
from .radial import RadialGrid
from .stability import LinearizedReport, MassCurve, linearized_report, mass_curve

__all__ = [
    "ClassicProfile",
    "GroundState",
    "LinearizedReport",
    "MassCurve",
    "OperatorParams",
    "Profile",
    "RadialGrid",
    "continue_sweep",
    "linearized_report",
    "make_params",
    "mass_curve",
    "solve_classic",
    "solve_ground",
]

__version__ = "0.1.0"
