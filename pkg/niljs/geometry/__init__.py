# niljs geometry: Nil3(tau) ambient formulas, labelled domains and polygons

from .ambient import AmbientParams, FrameVector, GraphJet
from .arcs import ArcKind, ArcLabel, ArcSpec
from .domain import DomainSpec, check_admissible, check_dirichlet_conditions, geodesic_curvature
from .polygons import PolygonSpec, check_solvability, enumerate_polygons, polygon_measures
from .schema import load_domain, parse_domain

__all__ = [
    "AmbientParams",
    "FrameVector",
    "GraphJet",
    "ArcKind",
    "ArcLabel",
    "ArcSpec",
    "DomainSpec",
    "PolygonSpec",
    "check_admissible",
    "check_dirichlet_conditions",
    "geodesic_curvature",
    "check_solvability",
    "enumerate_polygons",
    "polygon_measures",
    "load_domain",
    "parse_domain",
]
