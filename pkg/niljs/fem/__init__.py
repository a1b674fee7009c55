# niljs finite elements: meshes, the mean curvature operator, Dirichlet solves and fluxes

from .flux import CONORMAL, VARIATIONAL, FluxReport, flux_area_form, flux_balance, flux_line
from .mesh import CurveChain, Mesh, build_mesh, interior_curve_trace, refine
from .solver import (BoundaryData, CheckMode, LinearSolver, ScalarField, SolveOptions, Truncation,
                     boundary_values, solve_dirichlet, verify_comparison)

__all__ = [
    "CONORMAL",
    "VARIATIONAL",
    "FluxReport",
    "flux_area_form",
    "flux_balance",
    "flux_line",
    "CurveChain",
    "Mesh",
    "build_mesh",
    "interior_curve_trace",
    "refine",
    "BoundaryData",
    "CheckMode",
    "LinearSolver",
    "ScalarField",
    "SolveOptions",
    "Truncation",
    "boundary_values",
    "solve_dirichlet",
    "verify_comparison",
]
