"""
Flux of a graph across curves.

F_u(gamma) = int_gamma <X_u, nu> ds. For a boundary arc nu is the outward
conormal; for interior curves the caller picks the side. When u is not
differentiable up to gamma the area form 2H A(D) - int_zeta <X_u, nu> is
used, where zeta closes gamma up to the boundary of D.
"""

import logging
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from ..errors import GeometryError, InputError, NotApplicable
from ..geometry.arcs import ArcSpec
from ..geometry.domain import DomainSpec
from .mesh import CurveChain, interior_curve_trace
from .operator import flux_field, weak_residual
from .solver import ScalarField

logger = logging.getLogger(__name__)

CONORMAL = "conormal"
VARIATIONAL = "variational"
CLOSURE_TOL = 1e-7


def _chain_flux(field: ScalarField, chain: CurveChain) -> float:
    """Midpoint rule on each piece with the gradient of the triangle holding it"""
    if chain.is_empty:
        return 0.0
    grad = field.gradient()[chain.triangles]
    mid = chain.midpoints
    x, _ = flux_field(mid[:, 0], mid[:, 1], grad[:, 0], grad[:, 1], field.params)
    return float(np.sum(chain.lengths * np.einsum("nd,nd->n", x, chain.normals)))


def flux_line(field: ScalarField, gamma: Union[CurveChain, ArcSpec], side: str = "right") -> float:
    """int_gamma <X_u, nu> ds; an ArcSpec is traced on the field's mesh first"""
    if isinstance(gamma, ArcSpec):
        if gamma.arc_id in field.mesh.arc_nodes:
            gamma = field.mesh.boundary_chain(gamma.arc_id)
            return _chain_flux(field, gamma if side == "right" else gamma.flipped())
        gamma = interior_curve_trace(field.mesh, gamma, clip=True, side=side)
    if not isinstance(gamma, CurveChain):
        raise InputError(f"flux_line needs a CurveChain or an ArcSpec, got {type(gamma).__name__}")
    if len(gamma) and np.any((gamma.triangles < 0) | (gamma.triangles >= field.mesh.n_triangles)):
        raise InputError("curve chain is not on the field's mesh")
    return _chain_flux(field, gamma)


def flux_area_form(field: ScalarField, gamma: ArcSpec, zeta: ArcSpec) -> float:
    """2H A(D) - int_zeta <X_u, nu> with nu pointing out of D, the region bounded by gamma and zeta

    zeta must run from the end of gamma back to its start.
    """
    scale = max(1.0, gamma.length)
    if (np.linalg.norm(zeta.start - gamma.end) > CLOSURE_TOL * scale
            or np.linalg.norm(zeta.end - gamma.start) > CLOSURE_TOL * scale):
        raise GeometryError("gamma and zeta do not close up: zeta must run from the end of gamma to its start")
    signed = gamma.green_term() + zeta.green_term()
    if abs(signed) <= 1e-14:
        raise GeometryError("gamma and zeta enclose no area")
    side = "right" if signed > 0 else "left"
    chain = interior_curve_trace(field.mesh, zeta, clip=True, side=side)
    return float(2.0 * field.params.h * abs(signed) - _chain_flux(field, chain))


class ArcFlux(BaseModel):
    id: str
    label: str
    length: float
    flux: float
    margin: float = Field(..., description="|gamma| - |F_u(gamma)|, never negative beyond quadrature error")


class FluxReport(BaseModel):
    """Per-arc fluxes and the balance 2H A(Omega) = total boundary flux"""
    method: str
    arcs: List[ArcFlux]
    area: float
    total: float
    balance_residual: float = Field(..., description="total - 2H area")
    relative_residual: float = Field(..., description="|balance_residual| / (2H area), or / perimeter when H = 0")

    @property
    def per_arc(self) -> Dict[str, float]:
        return {a.id: a.flux for a in self.arcs}


def _variational_arc_flux(field: ScalarField, dom: DomainSpec) -> Dict[str, float]:
    """Boundary flux as the weak residual of boundary test functions; corners split evenly"""
    res = weak_residual(field.mesh, field.values, field.params)
    out = {}
    for arc in dom.arcs:
        ids = field.mesh.arc_nodes[arc.arc_id]
        weights = np.ones(len(ids))
        weights[0] = weights[-1] = 0.5
        out[arc.arc_id] = float(np.sum(weights * res[ids]))
    return out


def flux_balance(field: ScalarField, dom: DomainSpec, method: str = CONORMAL) -> FluxReport:
    """Flux across every boundary arc and the divergence-theorem residual"""
    if method == CONORMAL:
        per_arc = {arc.arc_id: _chain_flux(field, field.mesh.boundary_chain(arc.arc_id)) for arc in dom.arcs}
    elif method == VARIATIONAL:
        per_arc = _variational_arc_flux(field, dom)
    else:
        raise InputError(f"unknown flux method {method!r}; use {CONORMAL!r} or {VARIATIONAL!r}")
    arcs = [ArcFlux(id=arc.arc_id, label=arc.label.value, length=arc.length, flux=per_arc[arc.arc_id],
                    margin=arc.length - abs(per_arc[arc.arc_id])) for arc in dom.arcs]
    area = field.mesh.area
    total = float(sum(per_arc.values()))
    two_h_area = 2.0 * field.params.h * area
    residual = total - two_h_area
    scale = two_h_area if field.params.h > 0 else dom.perimeter
    report = FluxReport(method=method, arcs=arcs, area=area, total=total,
                        balance_residual=residual, relative_residual=abs(residual) / scale)
    logger.info("flux balance (%s): total %.6g, 2HA %.6g, relative residual %.2e",
                method, total, two_h_area, report.relative_residual)
    return report


def strict_interior_bound_check(field: ScalarField, arc: ArcSpec) -> float:
    """|gamma| - |F_u(gamma)|, positive for u continuous up to an arc with k >= 2H

    Raises NotApplicable on a diverged or blow-up-flagged field.
    """
    if field.diverged or (field.report is not None and field.report.flagged_blowup):
        raise NotApplicable("field is flagged for gradient blow-up; the strict flux bound does not apply")
    return float(arc.length - abs(flux_line(field, arc)))


class LimitCheck(BaseModel):
    """Trend of F_{u_n}(gamma) toward sign * |gamma|"""
    sign: int
    length: float
    trend: List[float]
    monotone: bool
    bounded: bool = Field(..., description="|F| <= |gamma| (1 + 1e-9) for every member")
    final_ratio: float = Field(..., description="sign * F_last / |gamma|")
    passed: bool


def flux_limit_check(trend: Sequence[float], length: float, sign: int = 1,
                     tol: float = 0.02, bound_tol: float = 1e-9,
                     monotone_slack: float = 1e-9) -> LimitCheck:
    """F along a sequence tends to sign*|gamma| monotonically, from inside [-|gamma|, |gamma|]"""
    if sign not in (1, -1):
        raise InputError("sign must be +1 or -1")
    values = [float(v) for v in trend]
    if not values:
        raise InputError("empty flux trend")
    steps = np.diff(np.asarray(values) * sign)
    monotone = bool(np.all(steps >= -monotone_slack * length))
    bounded = all(abs(v) <= length * (1.0 + bound_tol) for v in values)
    ratio = sign * values[-1] / length
    return LimitCheck(sign=sign, length=length, trend=values, monotone=monotone, bounded=bounded,
                      final_ratio=ratio, passed=monotone and bounded and ratio >= 1.0 - tol)


__all__ = [
    "CONORMAL",
    "VARIATIONAL",
    "ArcFlux",
    "FluxReport",
    "LimitCheck",
    "flux_line",
    "flux_area_form",
    "flux_balance",
    "strict_interior_bound_check",
    "flux_limit_check",
]
