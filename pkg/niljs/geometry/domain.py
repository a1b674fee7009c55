"""
Curvilinear domains with Jenkins-Serrin labelled boundary arcs.

A DomainSpec is validated once, at construction: the arcs must close up,
form a simple curve and run counter-clockwise. The checks below never mutate
it and return pydantic reports.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Sequence, Tuple

import numpy as np
import shapely
from pydantic import BaseModel, Field
from scipy.spatial.distance import pdist

from ..errors import InputError, StructuralError
from .ambient import AmbientParams
from .arcs import COINCIDENCE_TOL, ArcKind, ArcLabel, ArcSpec, chain_points

logger = logging.getLogger(__name__)

CURVATURE_TOL = 1e-8
# dense boundary resolution used for simplicity and containment tests
_RING_SAMPLES = 1440


def validate_structure(arcs: Sequence[ArcSpec]) -> None:
    """Closure, unique ids, simplicity and counter-clockwise orientation; StructuralError otherwise"""
    if len(arcs) < 2 and not (len(arcs) == 1 and arcs[0].kind == ArcKind.POLYLINE):
        raise StructuralError("a boundary needs at least two arcs")
    ids = [arc.arc_id for arc in arcs]
    if len(set(ids)) != len(ids):
        raise StructuralError(f"duplicate arc ids: {ids}")
    for k, arc in enumerate(arcs):
        nxt = arcs[(k + 1) % len(arcs)]
        gap = float(np.linalg.norm(arc.end - nxt.start))
        if gap > COINCIDENCE_TOL:
            raise StructuralError(
                f"open boundary chain: end of {arc.arc_id!r} is {gap:.3e} away from start of {nxt.arc_id!r}")

    perimeter = sum(arc.length for arc in arcs)
    ring = chain_points(arcs, spacing=perimeter / _RING_SAMPLES)
    if not shapely.LinearRing(ring).is_simple:
        raise StructuralError("boundary is self-intersecting")
    if sum(arc.green_term() for arc in arcs) <= 0:
        raise StructuralError("boundary must run counter-clockwise around the domain")


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """Ordered cyclic list of boundary arcs plus the ambient parameters"""
    arcs: Tuple[ArcSpec, ...]
    params: AmbientParams = field(default_factory=AmbientParams)
    name: str = "domain"

    def __post_init__(self):
        arcs = tuple(arc if arc.arc_id else arc.with_id(f"arc{k}") for k, arc in enumerate(self.arcs))
        object.__setattr__(self, "arcs", arcs)
        validate_structure(arcs)

    @cached_property
    def vertices(self) -> np.ndarray:
        """Arc endpoints in boundary order; vertex k is the start of arc k"""
        return np.array([arc.start for arc in self.arcs])

    @cached_property
    def area(self) -> float:
        return float(sum(arc.green_term() for arc in self.arcs))

    @cached_property
    def perimeter(self) -> float:
        return float(sum(arc.length for arc in self.arcs))

    @cached_property
    def boundary_points(self) -> np.ndarray:
        return chain_points(self.arcs, spacing=self.perimeter / _RING_SAMPLES)

    @cached_property
    def polygon(self) -> shapely.Polygon:
        return shapely.Polygon(self.boundary_points)

    @cached_property
    def diameter(self) -> float:
        return float(pdist(self.boundary_points[:: max(1, len(self.boundary_points) // 360)]).max())

    @cached_property
    def centroid(self) -> np.ndarray:
        c = self.polygon.centroid
        return np.array([c.x, c.y])

    @cached_property
    def _index(self) -> Dict[str, int]:
        return {arc.arc_id: k for k, arc in enumerate(self.arcs)}

    def arc(self, arc_id: str) -> ArcSpec:
        try:
            return self.arcs[self._index[arc_id]]
        except KeyError as e:
            raise InputError(f"unknown arc id {arc_id!r}") from e

    def arc_index(self, arc_id: str) -> int:
        return self._index[arc_id]

    def labelled(self, label: ArcLabel) -> List[ArcSpec]:
        return [arc for arc in self.arcs if arc.label == label]

    def has(self, label: ArcLabel) -> bool:
        return any(arc.label == label for arc in self.arcs)

    def covers(self, points: np.ndarray, tol: float = 1e-7) -> np.ndarray:
        """Points inside the closed domain, up to tol (scaled by the diameter)"""
        pts = np.atleast_2d(points)
        region = self.polygon.buffer(tol * max(1.0, self.diameter))
        return shapely.contains_xy(region, pts[:, 0], pts[:, 1])

    def distance_to_boundary(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return shapely.distance(shapely.points(pts), self.polygon.exterior)


def geodesic_curvature(arc: ArcSpec, s: float) -> float:
    """Signed curvature at arclength s with respect to the domain's inner normal"""
    if s < -COINCIDENCE_TOL or s > arc.length + COINCIDENCE_TOL:
        raise InputError(f"s={s} outside arc {arc.arc_id!r} of length {arc.length}")
    return arc.curvature_at(s)


class AdmissibilityReport(BaseModel):
    """Outcome of the admissible-domain check"""
    passed: bool = Field(..., description="All label, endpoint and connectivity rules hold")
    curvature_violations: List[str] = Field(default_factory=list, description="Arc ids whose curvature contradicts their label")
    endpoint_violations: List[List[str]] = Field(default_factory=list, description="Pairs of same-label A or B arcs sharing an endpoint")
    flagged: List[str] = Field(default_factory=list, description="C arcs with curvature exactly 2H (allowed, reported)")
    simply_connected: bool = True


class DirichletReport(BaseModel):
    """Outcome of the existence conditions 2H <= k and tau^2 <= inf (k/2)^2"""
    passed: bool
    curvature_margin: float = Field(..., description="min k - 2H (negative means violated)")
    ricci_margin: float = Field(..., description="inf (k/2)^2 - tau^2 (negative means violated)")
    k_min: float
    worst_arc: str


def check_admissible(dom: DomainSpec, curvature_tol: float = CURVATURE_TOL) -> AdmissibilityReport:
    """Labels against curvature (A: 2H, B: -2H, C: >= 2H) and the endpoint-sharing rule"""
    validate_structure(dom.arcs)
    two_h = 2.0 * dom.params.h
    curvature_violations, flagged = [], []
    for arc in dom.arcs:
        ks = arc.curvature_samples()
        if arc.label == ArcLabel.A:
            ok = np.max(np.abs(ks - two_h)) <= curvature_tol
        elif arc.label == ArcLabel.B:
            ok = np.max(np.abs(ks + two_h)) <= curvature_tol
        else:
            ok = np.min(ks) >= two_h - curvature_tol
            if ok and np.any(np.abs(ks - two_h) <= curvature_tol):
                flagged.append(arc.arc_id)
        if not ok:
            curvature_violations.append(arc.arc_id)

    endpoint_violations = []
    m = len(dom.arcs)
    for k in range(m):
        a, b = dom.arcs[k], dom.arcs[(k + 1) % m]
        if a is b or a.label == ArcLabel.C or a.label != b.label:
            continue
        pair = [a.arc_id, b.arc_id]
        if sorted(pair) not in [sorted(p) for p in endpoint_violations]:
            endpoint_violations.append(pair)

    if flagged:
        logger.info("C arcs with curvature exactly 2H: %s", flagged)
    return AdmissibilityReport(
        passed=not curvature_violations and not endpoint_violations,
        curvature_violations=curvature_violations,
        endpoint_violations=endpoint_violations,
        flagged=flagged,
    )


def check_dirichlet_conditions(dom: DomainSpec, tol: float = CURVATURE_TOL) -> DirichletReport:
    """Existence regime of the Dirichlet problem: 2H <= k(s) everywhere and tau^2 <= inf (k/2)^2"""
    two_h = 2.0 * dom.params.h
    k_min, worst, quarter_min = np.inf, dom.arcs[0].arc_id, np.inf
    for arc in dom.arcs:
        ks = arc.curvature_samples()
        if ks.min() < k_min:
            k_min, worst = float(ks.min()), arc.arc_id
        quarter_min = min(quarter_min, float(np.min((ks / 2.0) ** 2)))
    curvature_margin = k_min - two_h
    ricci_margin = quarter_min - dom.params.tau ** 2
    return DirichletReport(
        passed=curvature_margin >= -tol and ricci_margin >= -tol,
        curvature_margin=curvature_margin,
        ricci_margin=ricci_margin,
        k_min=k_min,
        worst_arc=worst,
    )


__all__ = [
    "DomainSpec",
    "AdmissibilityReport",
    "DirichletReport",
    "validate_structure",
    "geodesic_curvature",
    "check_admissible",
    "check_dirichlet_conditions",
]
