"""
Dirichlet problem for constant mean curvature graphs and the comparison checks.

solve_dirichlet minimizes the convex energy J(u) = int W + 2H int u over
piecewise-linear functions with prescribed boundary values, by damped Newton
on its gradient (the weak residual) with a backtracking line search on J.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from scipy import sparse
from scipy.sparse.linalg import cg, spsolve

from ..errors import ConditionsError, InputError, NonConvergence
from ..geometry.ambient import AmbientParams
from ..geometry.arcs import ArcLabel, ArcSpec
from ..geometry.domain import DirichletReport, DomainSpec, check_dirichlet_conditions
from .mesh import Mesh
from .operator import energy, jacobian, quadrature_flux, stiffness, weak_residual

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
MIN_STEP = 1e-12
MAX_HALVINGS = 6


class CheckMode(str, Enum):
    """What solve_dirichlet does when the existence conditions fail"""
    STRICT = "strict"
    WARN = "warn"
    OFF = "off"


class LinearSolver(str, Enum):
    DIRECT = "direct"
    CG = "cg"


class Truncation(str, Enum):
    """How infinite data are cut off at level n"""
    SYMMETRIC = "symmetric"   # n on A, -n on B, f clipped to [-n, n] on C
    UPPER = "upper"           # n on A, min(n, f) on C
    LOWER = "lower"           # -n on B, max(-n, f) on C


@dataclass(frozen=True)
class SolveOptions:
    max_newton_iters: int = 50
    newton_tol: float = 1e-10
    damping: float = 0.5
    continuation_steps: int = 1
    data_cap: float = 1e6
    check_conditions: CheckMode = CheckMode.STRICT
    linear_solver: LinearSolver = LinearSolver.DIRECT

    def __post_init__(self):
        object.__setattr__(self, "check_conditions", CheckMode(self.check_conditions))
        object.__setattr__(self, "linear_solver", LinearSolver(self.linear_solver))
        if self.max_newton_iters <= 0 or self.continuation_steps <= 0:
            raise InputError("max_newton_iters and continuation_steps must be positive")
        if not self.newton_tol > 0 or not self.data_cap > 0:
            raise InputError("newton_tol and data_cap must be positive")
        if not 0.0 < self.damping < 1.0:
            raise InputError(f"damping must lie in (0, 1), got {self.damping}")

    def with_overrides(self, **kwargs) -> "SolveOptions":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


class SolveReport(BaseModel):
    """Residual report of one Dirichlet solve"""
    converged: bool
    iters: int
    residual_history: List[float] = Field(default_factory=list)
    final_residual: float
    flagged_blowup: bool = Field(False, description="max |grad u| exceeded 1/h")
    max_gradient: float
    max_flux_norm: float = Field(..., description="max |X_u| over quadrature points, always < 1")
    clipped_nodes: int = 0
    conditions: Optional[DirichletReport] = None


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal values on a mesh; NaN is only allowed outside `mask` or when diverged"""
    mesh: Mesh
    values: np.ndarray
    params: AmbientParams = field(default_factory=AmbientParams)
    diverged: bool = False
    mask: Optional[np.ndarray] = None
    report: Optional[SolveReport] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.mesh.n_nodes,):
            raise InputError(f"field has {values.shape} values for {self.mesh.n_nodes} nodes")
        if not self.diverged:
            check = values if self.mask is None else values[np.asarray(self.mask, dtype=bool)]
            if not np.all(np.isfinite(check)):
                raise InputError("field values must be finite unless marked diverged")

    def gradient(self) -> np.ndarray:
        return self.mesh.triangle_gradient(self.values)

    def gradient_norms(self) -> np.ndarray:
        return np.linalg.norm(self.gradient(), axis=1)

    def flux(self):
        """X_u and W at the quadrature points of every triangle"""
        return quadrature_flux(self.mesh, self.values, self.params)

    def with_values(self, values: np.ndarray, **kwargs) -> "ScalarField":
        return replace(self, values=np.asarray(values, dtype=float), report=None, **kwargs)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.mesh.nodes[:, 0], "y": self.mesh.nodes[:, 1], "u": self.values})


@dataclass(frozen=True, eq=False)
class CellField:
    """One value per triangle"""
    mesh: Mesh
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Dirichlet values; only the entries of boundary nodes are used"""
    mesh: Mesh
    values: np.ndarray
    clipped: int = 0

    @classmethod
    def from_function(cls, mesh: Mesh, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "BoundaryData":
        values = np.zeros(mesh.n_nodes)
        nodes = np.fromiter(mesh.boundary_nodes, dtype=int)
        values[nodes] = fn(mesh.nodes[nodes, 0], mesh.nodes[nodes, 1])
        return cls(mesh, values)

    def shifted(self, c: float) -> "BoundaryData":
        return BoundaryData(self.mesh, self.values + c, self.clipped)

    @property
    def boundary_values(self) -> np.ndarray:
        return self.values[self.mesh.is_boundary]


def _arc_values(arc: ArcSpec, points: np.ndarray, n: Optional[float], mode: Truncation) -> np.ndarray:
    if arc.label == ArcLabel.C:
        f = arc.evaluate(points[:, 0], points[:, 1])
        if np.any(np.isnan(f)):
            raise InputError(f"boundary data of arc {arc.arc_id!r} is NaN")
        if n is None:
            return f
        if mode == Truncation.UPPER:
            return np.minimum(f, n)
        if mode == Truncation.LOWER:
            return np.maximum(f, -n)
        return np.clip(f, -n, n)
    if n is None:
        raise InputError(f"arc {arc.arc_id!r} has infinite data; a truncation level n is required")
    if arc.label == ArcLabel.A:
        if mode == Truncation.LOWER:
            raise InputError("lower truncation is for domains without A arcs")
        return np.full(len(points), float(n))
    if mode == Truncation.UPPER:
        raise InputError("upper truncation is for domains without B arcs")
    return np.full(len(points), -float(n))


def boundary_values(mesh: Mesh, dom: DomainSpec, n: Optional[float] = None,
                    mode: Truncation = Truncation.SYMMETRIC, data_cap: float = 1e6) -> BoundaryData:
    """Data at the boundary nodes, truncated at level n; corner nodes average their two arcs"""
    mode = Truncation(mode)
    total = np.zeros(mesh.n_nodes)
    count = np.zeros(mesh.n_nodes)
    for arc in dom.arcs:
        ids = mesh.arc_nodes[arc.arc_id]
        total[ids] += _arc_values(arc, mesh.nodes[ids], n, mode)
        count[ids] += 1
    values = np.divide(total, count, out=np.zeros(mesh.n_nodes), where=count > 0)
    wild = (np.abs(values) > data_cap) | ~np.isfinite(values)
    clipped = int(np.count_nonzero(wild & (count > 0)))
    if clipped:
        logger.warning("clipped boundary data at %d nodes to +-%g", clipped, data_cap)
        values = np.clip(np.nan_to_num(values, posinf=data_cap, neginf=-data_cap), -data_cap, data_cap)
    return BoundaryData(mesh, values, clipped)


def _linear_solve(matrix: sparse.csr_matrix, rhs: np.ndarray, method: LinearSolver) -> np.ndarray:
    if method == LinearSolver.CG:
        x, info = cg(matrix, rhs, rtol=1e-13, atol=0.0, maxiter=10 * matrix.shape[0])
        if info != 0:
            logger.warning("CG stopped with info=%d; falling back to a direct solve", info)
            return spsolve(matrix.tocsc(), rhs)
        return x
    return spsolve(matrix.tocsc(), rhs)


def harmonic_lift(mesh: Mesh, boundary: np.ndarray, method: LinearSolver = LinearSolver.DIRECT) -> np.ndarray:
    """Discrete harmonic function with the given boundary node values"""
    u = np.where(mesh.is_boundary, boundary, 0.0)
    interior = mesh.interior
    if len(interior) == 0:
        return u
    k = stiffness(mesh)
    k_ii = k[interior][:, interior]
    rhs = -(k[interior] @ u)
    u[interior] = _linear_solve(k_ii, rhs, method)
    return u


def _check_conditions(dom: DomainSpec, mode: CheckMode) -> Optional[DirichletReport]:
    if mode == CheckMode.OFF:
        return None
    rep = check_dirichlet_conditions(dom)
    if not rep.passed:
        message = (f"Dirichlet existence conditions fail on {dom.name!r}: "
                   f"curvature margin {rep.curvature_margin:.4g}, Ricci margin {rep.ricci_margin:.4g}")
        if mode == CheckMode.STRICT:
            raise ConditionsError(message)
        logger.warning("%s; solving anyway", message)
    return rep


def _newton(mesh: Mesh, u: np.ndarray, params: AmbientParams, opts: SolveOptions,
            history: List[float], polish: bool = True):
    """Damped Newton on the interior unknowns; returns (u, converged, iterations)"""
    interior = mesh.interior
    iters = 0
    for iters in range(1, opts.max_newton_iters + 1):
        res = weak_residual(mesh, u, params)[interior]
        norm = float(np.max(np.abs(res))) if len(res) else 0.0
        if not np.isfinite(norm):
            return u, False, iters
        history.append(norm)
        logger.debug("newton %d: residual %.3e", iters, norm)
        if norm <= opts.newton_tol:
            break
        step = _damped_step(mesh, u, params, opts, res, norm)
        if step is None:
            logger.debug("newton %d: line search exhausted, keeping the last iterate", iters)
            return u, False, iters
        u = step
    else:
        res = weak_residual(mesh, u, params)[interior]
        norm = float(np.max(np.abs(res))) if len(res) else 0.0
        history.append(norm)
        if norm > opts.newton_tol:
            return u, False, iters

    if polish and len(interior):
        res = weak_residual(mesh, u, params)[interior]
        k = jacobian(mesh, u, params)[interior][:, interior]
        trial = u.copy()
        trial[interior] += _linear_solve(k, -res, opts.linear_solver)
        trial_res = weak_residual(mesh, trial, params)[interior]
        if np.all(np.isfinite(trial_res)) and np.max(np.abs(trial_res)) <= np.max(np.abs(res)):
            u = trial
    return u, True, iters


def _damped_step(mesh: Mesh, u: np.ndarray, params: AmbientParams, opts: SolveOptions,
                 res: np.ndarray, norm: float) -> Optional[np.ndarray]:
    """Backtracking along the Newton direction; None when no step length is accepted"""
    interior = mesh.interior
    k = jacobian(mesh, u, params)[interior][:, interior]
    du = _linear_solve(k, -res, opts.linear_solver)
    if not np.all(np.isfinite(du)):
        return None
    e0 = energy(mesh, u, params)
    slope = float(res @ du)
    t = 1.0
    while True:
        trial = u.copy()
        trial[interior] += t * du
        e1 = energy(mesh, trial, params)
        if np.isfinite(e1) and e1 <= e0 + ARMIJO * t * slope:
            return trial
        trial_res = weak_residual(mesh, trial, params)[interior]
        if np.all(np.isfinite(trial_res)) and np.max(np.abs(trial_res)) < (1.0 - ARMIJO * t) * norm:
            return trial
        t *= opts.damping
        if t < MIN_STEP:
            return None


def solve_dirichlet(dom: DomainSpec, data: BoundaryData, opts: Optional[SolveOptions] = None,
                    initial: Optional[np.ndarray] = None) -> ScalarField:
    """
    Solve div X_u = 2H in dom with u = data on the boundary nodes of data.mesh

    Args:
        initial: starting iterate; defaults to the harmonic lift of the data.
            With continuation the boundary values move from the initial
            iterate's to the data in increments of 1/continuation_steps; an
            increment whose Newton solve fails is halved, up to MAX_HALVINGS times.

    Raises:
        ConditionsError: existence conditions fail and check_conditions is strict
        NonConvergence: Newton did not reach newton_tol; carries the last iterate
    """
    opts = opts or SolveOptions()
    conditions = _check_conditions(dom, opts.check_conditions)
    mesh, params = data.mesh, dom.params
    target = np.asarray(data.values, dtype=float)
    boundary = mesh.is_boundary

    start = np.zeros(mesh.n_nodes) if initial is None else np.asarray(initial, dtype=float).copy()
    ramp = target[boundary] - start[boundary]

    history: List[float] = []
    total_iters = 0
    converged = False
    accepted, t_done = start, 0.0
    dt = 1.0 / opts.continuation_steps
    min_dt = dt / 2 ** MAX_HALVINGS
    u = start
    while t_done < 1.0:
        t = 1.0 if t_done + dt >= 1.0 - 1e-12 else t_done + dt
        lift = harmonic_lift(mesh, _scatter(mesh, (t - t_done) * ramp), opts.linear_solver)
        u, converged, iters = _newton(mesh, accepted + lift, params, opts, history, polish=t == 1.0)
        total_iters += iters
        if converged:
            accepted, t_done = u, t
            continue
        dt *= 0.5
        if dt < min_dt:
            break
        logger.debug("continuation to t=%.4g failed; retrying with increment %.4g", t, dt)

    grad = mesh.triangle_gradient(u)
    max_grad = float(np.max(np.linalg.norm(grad, axis=1))) if np.all(np.isfinite(grad)) else np.inf
    blowup = max_grad > 1.0 / mesh.h
    if blowup:
        logger.warning("gradient blow-up candidate: max |grad u| = %.3g > 1/h = %.3g", max_grad, 1.0 / mesh.h)
    x, _ = quadrature_flux(mesh, u, params)
    max_flux = float(np.nanmax(np.linalg.norm(x, axis=-1)))
    report = SolveReport(
        converged=converged, iters=total_iters, residual_history=history,
        final_residual=history[-1] if history else 0.0, flagged_blowup=blowup,
        max_gradient=max_grad, max_flux_norm=max_flux, clipped_nodes=data.clipped,
        conditions=conditions,
    )
    if not converged:
        last = ScalarField(mesh, u, params, diverged=True, report=report)
        raise NonConvergence(
            f"Newton did not converge on {dom.name!r} after {total_iters} iterations "
            f"(residual {report.final_residual:.3e})",
            last_iterate=last, residual_history=history, flagged_blowup=blowup)
    logger.info("solved %r: %d Newton iterations, residual %.3e", dom.name, total_iters, report.final_residual)
    return ScalarField(mesh, u, params, report=report)


def _scatter(mesh: Mesh, boundary_values: np.ndarray) -> np.ndarray:
    full = np.zeros(mesh.n_nodes)
    full[mesh.is_boundary] = boundary_values
    return full


def residual_div(field: ScalarField, params: Optional[AmbientParams] = None) -> ScalarField:
    """Weak divergence-form residual at the interior nodes (zero at boundary nodes)"""
    params = params or field.params
    res = weak_residual(field.mesh, field.values, params)
    res[field.mesh.is_boundary] = 0.0
    return ScalarField(field.mesh, res, params)


def monotonicity_pairing(u: ScalarField, v: ScalarField) -> CellField:
    """Per triangle <grad u - grad v, X_u - X_v>, averaged over the quadrature points; never negative"""
    if u.mesh is not v.mesh:
        raise InputError("monotonicity_pairing needs fields on the same mesh")
    xu, _ = quadrature_flux(u.mesh, u.values, u.params)
    xv, _ = quadrature_flux(v.mesh, v.values, u.params)
    dgrad = u.gradient() - v.gradient()
    pairing = np.einsum("td,tqd->tq", dgrad, xu - xv).mean(axis=1)
    return CellField(u.mesh, pairing)


class ComparisonReport(BaseModel):
    applicable: bool = Field(..., description="u >= v - tol holds on the boundary")
    passed: Optional[bool] = None
    tol: float
    boundary_min: float = Field(..., description="min over boundary nodes of u - v")
    interior_min: Optional[float] = None
    worst_node: Optional[int] = None


def verify_comparison(u: ScalarField, v: ScalarField, newton_tol: float = 1e-10) -> ComparisonReport:
    """Discrete maximum principle: u >= v on the boundary implies u >= v inside"""
    if u.mesh is not v.mesh:
        raise InputError("verify_comparison needs fields on the same mesh")
    mesh = u.mesh
    diam = float(np.max(np.ptp(mesh.nodes, axis=0)))
    tol = 10.0 * newton_tol * max(1.0, diam)
    diff = u.values - v.values
    boundary_min = float(diff[mesh.is_boundary].min())
    if boundary_min < -tol:
        return ComparisonReport(applicable=False, tol=tol, boundary_min=boundary_min)
    interior = mesh.interior
    if len(interior) == 0:
        return ComparisonReport(applicable=True, passed=True, tol=tol, boundary_min=boundary_min)
    k = int(np.argmin(diff[interior]))
    interior_min = float(diff[interior][k])
    return ComparisonReport(applicable=True, passed=interior_min >= -tol, tol=tol,
                            boundary_min=boundary_min, interior_min=interior_min,
                            worst_node=int(interior[k]))


def cap_profile(r, h: float, radius: float) -> np.ndarray:
    """tau = 0 spherical cap over the disk of the given radius with zero boundary values

    u(r) = sqrt(rho^2 - R^2) - sqrt(rho^2 - r^2), rho = 1/H: a bowl below the
    boundary circle whose flux field is X = H (x, y).
    """
    if not 0.0 < h <= 1.0 / radius:
        raise InputError("the cap needs 0 < H <= 1/R")
    rho = 1.0 / h
    r = np.asarray(r, dtype=float)
    return np.sqrt(rho * rho - radius * radius) - np.sqrt(rho * rho - r * r)


def scherk(x, y) -> np.ndarray:
    """Minimal Scherk graph log cos x - log cos y over (-pi/2, pi/2)^2"""
    return np.log(np.cos(np.asarray(x, dtype=float))) - np.log(np.cos(np.asarray(y, dtype=float)))


__all__ = [
    "CheckMode",
    "LinearSolver",
    "Truncation",
    "SolveOptions",
    "SolveReport",
    "ScalarField",
    "CellField",
    "BoundaryData",
    "ComparisonReport",
    "boundary_values",
    "harmonic_lift",
    "solve_dirichlet",
    "residual_div",
    "monotonicity_pairing",
    "verify_comparison",
    "cap_profile",
    "scherk",
]
