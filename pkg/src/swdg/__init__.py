"""Second-order Runge-Kutta discontinuous Galerkin solver for the shallow
water equations on triangles, with limiter-based wetting and drying."""

__version__ = "0.1.0"

from .dg import G, DGOperator, InflowSpec, compute_rhs, rusanov_flux
from .limiter import PositivityError, apply_limiter
from .mesh import Mesh, MeshError, build_uniform_mesh, cfl_radius, load_mesh, save_mesh
from .scenarios import (ScenarioSpec, convergence_rate, error_norms, make_scenario,
                        total_energy, total_mass)
from .timestep import Solver, SolverAbort, StepControl
from .wetdry import classify_cells, nodal_velocity

__all__ = [
    "G", "DGOperator", "InflowSpec", "compute_rhs", "rusanov_flux",
    "PositivityError", "apply_limiter",
    "Mesh", "MeshError", "build_uniform_mesh", "cfl_radius", "load_mesh", "save_mesh",
    "ScenarioSpec", "convergence_rate", "error_norms", "make_scenario", "total_energy",
    "total_mass", "Solver", "SolverAbort", "StepControl", "classify_cells", "nodal_velocity",
]
