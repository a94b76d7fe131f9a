"""High-order SBP-SAT finite-difference solver for the incompressible boundary-layer equations."""

from .blasius import BlasiusTable, eval_velocity, solve_blasius, wall_shear
from .boundary import BoundarySpec, default_specs
from .grid import Grid2D, build_grid, make_operators
from .sbp import Operator2D, Sbp1D, build_sbp_1d
from .solver import SolverConfig, run_steady, run_transient
from .spatial import SbpSatScheme, StateVector, pack, unpack

__version__ = "0.1.0"

__all__ = [
    "BlasiusTable", "BoundarySpec", "Grid2D", "Operator2D", "SbpSatScheme", "Sbp1D",
    "SolverConfig", "StateVector", "build_grid", "build_sbp_1d", "default_specs",
    "eval_velocity", "make_operators", "pack", "run_steady", "run_transient",
    "solve_blasius", "unpack", "wall_shear",
]
