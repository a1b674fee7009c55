"""
Admissible polygons and the solvability inequalities.

A polygon is a simple closed chain whose vertices are arc endpoints of the
parent domain and whose edges are either whole boundary arcs or interior
circular arcs of curvature +-2H (radius 1/(2H); straight segments when H = 0).
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Hashable, List, Optional, Sequence, Tuple

import numpy as np
import shapely
from pydantic import BaseModel, Field

from ..errors import GeometryError, InputError
from .ambient import AmbientParams
from .arcs import COINCIDENCE_TOL, ArcKind, ArcLabel, ArcSpec, arc_through, chain_points
from .domain import DomainSpec

logger = logging.getLogger(__name__)

INTERIOR = "interior"
DEFAULT_MAX_VERTICES = 8
_EDGE_SAMPLES = 48


@dataclass(frozen=True, eq=False)
class PolygonEdge:
    """One polygon edge, oriented along the polygon's traversal"""
    arc: ArcSpec
    provenance: str = INTERIOR
    label: Optional[ArcLabel] = None
    key: Hashable = None

    @property
    def curvature_sign(self) -> int:
        """+1 when the edge is convex toward the polygon, -1 when concave, 0 for a segment"""
        if self.arc.kind == ArcKind.SEGMENT:
            return 0
        return 1 if self.arc.orientation == "ccw" else -1

    def reversed(self) -> "PolygonEdge":
        return PolygonEdge(self.arc.reversed(), self.provenance, self.label, self.key)


class PolygonMeasures(BaseModel):
    """alpha/beta: total length of A/B edges; ell: perimeter; area: enclosed area"""
    alpha: float
    beta: float
    ell: float
    area: float


@dataclass(frozen=True, eq=False)
class PolygonSpec:
    """Cyclic list of edges; measures are computed lazily"""
    edges: Tuple[PolygonEdge, ...]

    @cached_property
    def measures(self) -> PolygonMeasures:
        return polygon_measures(self)

    @property
    def key(self) -> FrozenSet[Hashable]:
        return frozenset(edge.key if edge.key is not None else id(edge) for edge in self.edges)

    @property
    def provenance(self) -> List[str]:
        return [edge.provenance for edge in self.edges]

    def signed_area(self) -> float:
        return float(sum(edge.arc.green_term() for edge in self.edges))

    def oriented(self) -> "PolygonSpec":
        """The same polygon traversed counter-clockwise"""
        if self.signed_area() >= 0:
            return self
        return PolygonSpec(tuple(edge.reversed() for edge in reversed(self.edges)))

    def ring(self) -> np.ndarray:
        return chain_points([edge.arc for edge in self.edges],
                            per_arc=[_EDGE_SAMPLES] * len(self.edges))


def _check_closed(poly: PolygonSpec) -> None:
    edges = poly.edges
    if len(edges) < 2:
        raise GeometryError("a polygon needs at least two edges")
    for k, edge in enumerate(edges):
        nxt = edges[(k + 1) % len(edges)]
        if np.linalg.norm(edge.arc.end - nxt.arc.start) > COINCIDENCE_TOL:
            raise GeometryError(f"polygon edge {k} does not meet edge {(k + 1) % len(edges)}")


def is_simple(poly: PolygonSpec) -> bool:
    try:
        _check_closed(poly)
    except GeometryError:
        return False
    return bool(shapely.LinearRing(poly.ring()).is_simple)


def polygon_measures(poly: PolygonSpec) -> PolygonMeasures:
    """Exact perimeter (radius times angle) and area (Green's theorem with exact arc terms)"""
    _check_closed(poly)
    if not shapely.LinearRing(poly.ring()).is_simple:
        raise GeometryError("polygon is self-intersecting")
    alpha = sum(e.arc.length for e in poly.edges if e.label == ArcLabel.A)
    beta = sum(e.arc.length for e in poly.edges if e.label == ArcLabel.B)
    ell = sum(e.arc.length for e in poly.edges)
    area = abs(poly.signed_area())
    if area <= 0:
        raise GeometryError("polygon encloses no area")
    return PolygonMeasures(alpha=alpha, beta=beta, ell=ell, area=area)


def circular_segment_area(radius: float, half_angle: float) -> float:
    """Area between a chord and an arc subtending 2*half_angle"""
    return radius * radius * (half_angle - np.sin(half_angle) * np.cos(half_angle))


def lens_polygon(arc: ArcSpec) -> PolygonSpec:
    """Lens bounded by an arc and its reflection across the chord"""
    mirrored = arc.reflect_across_chord().reversed()
    poly = PolygonSpec((
        PolygonEdge(arc, arc.arc_id or "arc", arc.label, ("b", arc.arc_id)),
        PolygonEdge(mirrored, INTERIOR, None, ("i", "mirror", arc.arc_id)),
    ))
    return poly.oriented()


class LensReport(BaseModel):
    arc_id: str
    arc_length: float
    area: float = Field(..., description="Lens area from polygon_measures")
    closed_form_area: Optional[float] = Field(None, description="2 r^2 (theta - sin theta cos theta) for circular arcs")
    margin: float = Field(..., description="2|B| - 2H A(L); positive when the lens inequality holds")
    passed: bool


def lens_inequality(arc: ArcSpec, params: AmbientParams) -> LensReport:
    """2H A(L) < 2|B| for the lens L of a B arc and its reflection"""
    measures = polygon_measures(lens_polygon(arc))
    closed = None
    if arc.kind == ArcKind.CIRCULAR:
        closed = 2.0 * circular_segment_area(arc.radius, abs(arc.span) / 2.0)
    margin = 2.0 * arc.length - 2.0 * params.h * measures.area
    return LensReport(arc_id=arc.arc_id, arc_length=arc.length, area=measures.area,
                      closed_form_area=closed, margin=margin, passed=margin > 0)


# -- enumeration ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _Candidate:
    arc: ArcSpec            # oriented from the lower to the higher vertex index
    provenance: str
    label: Optional[ArcLabel]
    key: Hashable


def _boundary_candidates(dom: DomainSpec) -> Dict[Tuple[int, int], List[_Candidate]]:
    m = len(dom.arcs)
    out: Dict[Tuple[int, int], List[_Candidate]] = {}
    for k, arc in enumerate(dom.arcs):
        i, j = k, (k + 1) % m
        oriented = arc if i < j else arc.reversed()
        out.setdefault((min(i, j), max(i, j)), []).append(
            _Candidate(oriented, arc.arc_id, arc.label, ("b", arc.arc_id)))
    return out


def _interior_arcs(p: np.ndarray, q: np.ndarray, h: float) -> List[Tuple[ArcSpec, Hashable]]:
    """Curvature 2H arcs (or the segment when H = 0) joining p to q"""
    chord = float(np.linalg.norm(q - p))
    if h == 0:
        return [(ArcSpec.segment(p, q), ("line",))]
    radius = 1.0 / (2.0 * h)
    if chord > 2.0 * radius + COINCIDENCE_TOL:
        return []
    mid = 0.5 * (p + q)
    normal = np.array([-(q - p)[1], (q - p)[0]]) / chord
    offset = np.sqrt(max(radius * radius - chord * chord / 4.0, 0.0))
    centers = [mid + offset * normal] if offset < COINCIDENCE_TOL else [mid + offset * normal, mid - offset * normal]
    arcs = []
    for center in centers:
        for ccw in (True, False):
            arc = arc_through(center, radius, p, q, ccw)
            key = (round(float(center[0]), 9), round(float(center[1]), 9), round(abs(arc.span), 9))
            arcs.append((arc, key))
    return arcs


def _coincides(arc: ArcSpec, other: ArcSpec) -> bool:
    mid_a = arc.point_at(arc.length / 2.0)[0]
    mid_b = other.point_at(other.length / 2.0)[0]
    return float(np.linalg.norm(mid_a - mid_b)) < 1e-7 and abs(arc.length - other.length) < 1e-7


def _candidates(dom: DomainSpec) -> Dict[Tuple[int, int], List[_Candidate]]:
    table = _boundary_candidates(dom)
    verts = dom.vertices
    m = len(verts)
    for i, j in itertools.combinations(range(m), 2):
        p, q = verts[i], verts[j]
        if np.linalg.norm(q - p) <= COINCIDENCE_TOL:
            continue
        existing = table.get((i, j), [])
        for arc, geo_key in _interior_arcs(p, q, dom.params.h):
            if any(_coincides(arc, c.arc) for c in existing):
                continue
            s = np.linspace(0.0, arc.length, _EDGE_SAMPLES + 1)[1:-1]
            if not np.all(dom.covers(arc.point_at(s), tol=1e-6)):
                continue
            table.setdefault((i, j), []).append(
                _Candidate(arc, INTERIOR, None, ("i", i, j) + geo_key))
    return table


def _edge(cand: _Candidate, forward: bool) -> PolygonEdge:
    edge = PolygonEdge(cand.arc, cand.provenance, cand.label, cand.key)
    return edge if forward else edge.reversed()


def _chains_from(start: int, m: int, max_vertices: int,
                 table: Dict[Tuple[int, int], List[_Candidate]]) -> List[PolygonSpec]:
    """All simple polygons whose smallest vertex index is `start`"""
    found: List[PolygonSpec] = []

    def pair(i: int, j: int) -> List[Tuple[_Candidate, bool]]:
        return [(c, i < j) for c in table.get((min(i, j), max(i, j)), [])]

    # two-vertex lenses: two distinct edges between the same endpoints
    for v in range(start + 1, m):
        options = pair(start, v)
        for (a, _), (b, _) in itertools.combinations(options, 2):
            found.append(PolygonSpec((_edge(a, True), _edge(b, False))))

    def extend(path: List[int]):
        if len(path) >= 3:
            legs = [pair(path[k], path[(k + 1) % len(path)]) for k in range(len(path))]
            if all(legs):
                for choice in itertools.product(*legs):
                    found.append(PolygonSpec(tuple(_edge(c, fwd) for c, fwd in choice)))
        if len(path) == max_vertices:
            return
        for v in range(start + 1, m):
            if v not in path and pair(path[-1], v):
                extend(path + [v])

    extend([start])
    return found


def enumerate_polygons(dom: DomainSpec, max_vertices: int = DEFAULT_MAX_VERTICES,
                       workers: int = 1) -> List[PolygonSpec]:
    """Admissible polygons of dom with at most max_vertices vertices

    Exponential in the number of arc endpoints. Work is split by the smallest
    vertex of each chain; results are merged in vertex order and deduplicated
    by edge set, so the output does not depend on `workers`.
    """
    if max_vertices < 2:
        raise InputError("max_vertices must be at least 2")
    table = _candidates(dom)
    m = len(dom.vertices)
    starts = list(range(m))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(lambda s: _chains_from(s, m, max_vertices, table), starts))
    else:
        batches = [_chains_from(s, m, max_vertices, table) for s in starts]

    seen, polygons = set(), []
    for batch in batches:
        for poly in batch:
            if poly.key in seen or not is_simple(poly):
                continue
            poly = poly.oriented()
            if poly.signed_area() <= 1e-12:
                continue
            seen.add(poly.key)
            polygons.append(poly)
    logger.info("enumerated %d admissible polygons (max_vertices=%d)", len(polygons), max_vertices)
    return polygons


# -- solvability -----------------------------------------------------------------

class PolygonMargin(BaseModel):
    edges: List[str]
    alpha: float
    beta: float
    ell: float
    area: float
    alpha_margin: float = Field(..., description="l + 2HA - 2 alpha")
    beta_margin: float = Field(..., description="l - 2HA - 2 beta")
    alpha_required: bool
    beta_required: bool
    passed: bool


class BoundaryIdentity(BaseModel):
    """alpha(dOmega) = beta(dOmega) + 2H A(Omega), required when there are no C arcs"""
    alpha: float
    beta: float
    two_h_area: float
    residual: float
    passed: bool


class SolvabilityReport(BaseModel):
    passed: bool
    regime: str = Field(..., description="no-C | two-sided | upper (no B arcs) | lower (no A arcs)")
    boundary_identity: Optional[BoundaryIdentity] = None
    polygons: List[PolygonMargin] = Field(default_factory=list)
    failing: List[int] = Field(default_factory=list, description="Indices into polygons")


def _regime(dom: DomainSpec) -> str:
    has_a, has_b, has_c = (dom.has(ArcLabel.A), dom.has(ArcLabel.B), dom.has(ArcLabel.C))
    if not has_c:
        return "no-C"
    if has_a and not has_b:
        return "upper"
    if has_b and not has_a:
        return "lower"
    return "two-sided"


def check_solvability(dom: DomainSpec, polys: Sequence[PolygonSpec],
                      rel_tol: float = 1e-8) -> SolvabilityReport:
    """Flux conditions for the Jenkins-Serrin problem on dom

    Without C arcs: the boundary identity plus both strict inequalities for
    every polygon other than the whole domain. With C arcs: both strict
    inequalities; one side only when the domain has no B arcs (alpha
    inequality) or no A arcs (beta inequality).
    """
    two_h = 2.0 * dom.params.h
    regime = _regime(dom)
    scale = max(1.0, dom.perimeter)

    identity = None
    if regime == "no-C":
        alpha = sum(a.length for a in dom.labelled(ArcLabel.A))
        beta = sum(a.length for a in dom.labelled(ArcLabel.B))
        residual = alpha - beta - two_h * dom.area
        identity = BoundaryIdentity(alpha=alpha, beta=beta, two_h_area=two_h * dom.area,
                                    residual=residual, passed=abs(residual) <= rel_tol * scale)

    alpha_required = regime != "lower"
    beta_required = regime != "upper"
    whole = frozenset(("b", arc.arc_id) for arc in dom.arcs)
    margins, failing = [], []
    for poly in polys:
        if regime == "no-C" and poly.key == whole:
            continue
        m = poly.measures
        alpha_margin = m.ell + two_h * m.area - 2.0 * m.alpha
        beta_margin = m.ell - two_h * m.area - 2.0 * m.beta
        strict = rel_tol * max(1.0, m.ell)
        ok = ((not alpha_required or alpha_margin > strict)
              and (not beta_required or beta_margin > strict))
        if not ok:
            failing.append(len(margins))
        margins.append(PolygonMargin(
            edges=poly.provenance, alpha=m.alpha, beta=m.beta, ell=m.ell, area=m.area,
            alpha_margin=alpha_margin, beta_margin=beta_margin,
            alpha_required=alpha_required, beta_required=beta_required, passed=ok))

    passed = not failing and (identity is None or identity.passed)
    if not passed:
        logger.warning("solvability conditions fail for %d polygon(s)", len(failing))
    return SolvabilityReport(passed=passed, regime=regime, boundary_identity=identity,
                             polygons=margins, failing=failing)


__all__ = [
    "INTERIOR",
    "PolygonEdge",
    "PolygonSpec",
    "PolygonMeasures",
    "PolygonMargin",
    "SolvabilityReport",
    "LensReport",
    "polygon_measures",
    "circular_segment_area",
    "lens_polygon",
    "lens_inequality",
    "enumerate_polygons",
    "check_solvability",
    "is_simple",
]
