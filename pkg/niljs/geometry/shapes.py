"""
Stock domains: disks, rectangles, lenses and the Jenkins-Serrin fixtures.

The Jenkins-Serrin fixtures are built for a given H with r = 1/(2H): their
A arcs lie on circles of radius r and their C arcs are half circles on a
chord of such a circle, so that k(C) > 2H strictly.
"""

from typing import Optional, Sequence

import numpy as np

from ..errors import InputError
from .ambient import AmbientParams
from .arcs import ArcLabel, ArcSpec, BoundaryFunction, arc_through
from .domain import DomainSpec
from .registry import BoundaryRegistry


def _zero() -> BoundaryFunction:
    return BoundaryRegistry.create("zero")


def _data_for(label: ArcLabel, data: Optional[BoundaryFunction]) -> Optional[BoundaryFunction]:
    if ArcLabel(label) != ArcLabel.C:
        return None
    return data if data is not None else _zero()


def disk(radius: float = 1.0, center=(0.0, 0.0), params: AmbientParams = None,
         labels: Sequence[str] = ("C", "C"), data: Optional[BoundaryFunction] = None,
         start_angle: float = 0.0, name: str = "disk") -> DomainSpec:
    """Disk whose boundary circle is split into len(labels) equal arcs"""
    if len(labels) < 2:
        raise InputError("a disk boundary needs at least two arcs")
    params = params or AmbientParams()
    cuts = start_angle + np.linspace(0.0, 2.0 * np.pi, len(labels) + 1)
    arcs = tuple(
        ArcSpec.circular(center, radius, cuts[k], cuts[k + 1], label=lab,
                         arc_id=f"{lab}{k}", data=_data_for(lab, data))
        for k, lab in enumerate(labels)
    )
    return DomainSpec(arcs, params, name)


def rectangle(x0: float, y0: float, x1: float, y1: float, params: AmbientParams = None,
              data: Optional[BoundaryFunction] = None, labels: Sequence[str] = ("C",) * 4,
              name: str = "rectangle") -> DomainSpec:
    """Axis-aligned rectangle; edges bottom, right, top, left"""
    if not (x1 > x0 and y1 > y0):
        raise InputError("rectangle needs x1 > x0 and y1 > y0")
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    sides = ("bottom", "right", "top", "left")
    arcs = tuple(
        ArcSpec.segment(corners[k], corners[(k + 1) % 4], label=labels[k], arc_id=sides[k],
                        data=_data_for(labels[k], data))
        for k in range(4)
    )
    return DomainSpec(arcs, params or AmbientParams(), name)


def lens(radius: float, half_angle: float, params: AmbientParams = None,
         labels: Sequence[str] = ("A", "A"), data: Optional[BoundaryFunction] = None,
         name: str = "lens") -> DomainSpec:
    """Two arcs of the given radius, each subtending 2*half_angle, on a common horizontal chord"""
    if not 0.0 < half_angle < np.pi / 2:
        raise InputError("lens half angle must lie in (0, pi/2)")
    params = params or AmbientParams()
    offset = radius * np.cos(half_angle)
    upper = ArcSpec.circular((0.0, -offset), radius, np.pi / 2 - half_angle, np.pi / 2 + half_angle,
                             label=labels[0], arc_id="upper", data=_data_for(labels[0], data))
    lower = ArcSpec.circular((0.0, offset), radius, -np.pi / 2 - half_angle, -np.pi / 2 + half_angle,
                             label=labels[1], arc_id="lower", data=_data_for(labels[1], data))
    return DomainSpec((upper, lower), params, name)


def cap_disk(radius: float = 1.0, h: float = 0.3, tau: float = 0.0) -> DomainSpec:
    """Disk with zero data; its tau = 0 solution is a spherical cap"""
    return disk(radius, params=AmbientParams(tau=tau, h=h), name="cap_disk")


def scherk_square(half_width: float = 1.3) -> DomainSpec:
    """Square (-a, a)^2 with the minimal Scherk graph as data, tau = H = 0"""
    if not 0.0 < half_width < np.pi / 2:
        raise InputError("Scherk data needs half_width < pi/2")
    a = half_width
    return rectangle(-a, -a, a, a, AmbientParams(), data=BoundaryRegistry.create("scherk"),
                     name="scherk_square")


def half_circle_on_chord(p, q, label: str = "C", arc_id: str = "",
                         data: Optional[BoundaryFunction] = None) -> ArcSpec:
    """Half circle from p to q bulging to the right of p -> q (outward for a ccw boundary)"""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    center = 0.5 * (p + q)
    radius = 0.5 * float(np.linalg.norm(q - p))
    return arc_through(center, radius, p, q, True, label=ArcLabel(label), arc_id=arc_id,
                       data=_data_for(label, data))


def _on_circle(radius: float, degrees: float) -> np.ndarray:
    t = np.deg2rad(degrees)
    return np.array([radius * np.cos(t), radius * np.sin(t)])


def js_convergent(h: float = 0.5, tau: float = 0.0,
                  data: Optional[BoundaryFunction] = None) -> DomainSpec:
    """Quarter arc A of the circle of radius 1/(2H) closed by a half circle C below its chord

    Every admissible polygon satisfies 2 alpha < l + 2HA, so the upper
    sequence converges and F(A) tends to |A|.
    """
    r = 1.0 / (2.0 * h)
    a = ArcSpec.circular((0.0, 0.0), r, np.pi / 4, 3 * np.pi / 4, label=ArcLabel.A, arc_id="A")
    c = half_circle_on_chord(a.end, a.start, "C", "C", data)
    return DomainSpec((a, c), AmbientParams(tau=tau, h=h), "js_convergent")


def js_divergent(h: float = 0.5, tau: float = 0.0,
                 data: Optional[BoundaryFunction] = None) -> DomainSpec:
    """Three-quarter arc A of the circle of radius 1/(2H) closed by a half circle C

    The polygon bounded by A and the reflection of the remaining quarter
    circle violates 2 alpha < l + 2HA; the upper sequence diverges above
    that reflected arc.
    """
    r = 1.0 / (2.0 * h)
    a = ArcSpec.circular((0.0, 0.0), r, -np.pi / 4, 5 * np.pi / 4, label=ArcLabel.A, arc_id="A")
    c = half_circle_on_chord(a.end, a.start, "C", "C", data)
    return DomainSpec((a, c), AmbientParams(tau=tau, h=h), "js_divergent")


def js_two_lines(h: float = 0.5, tau: float = 0.0,
                 data: Optional[BoundaryFunction] = None) -> DomainSpec:
    """Circle of radius 1/(2H) with two opposite 140-degree A arcs separated by half-circle C arcs

    The polygon bounded by both A arcs and the reflections of the two
    40-degree gaps fails 2 alpha < l + 2HA; the upper sequence diverges
    between the two reflected arcs, which are disjoint.
    """
    r = 1.0 / (2.0 * h)
    a_east = ArcSpec.circular((0.0, 0.0), r, np.deg2rad(-70.0), np.deg2rad(70.0),
                              label=ArcLabel.A, arc_id="A_east")
    c_north = half_circle_on_chord(_on_circle(r, 70.0), _on_circle(r, 110.0), "C", "C_north", data)
    a_west = ArcSpec.circular((0.0, 0.0), r, np.deg2rad(110.0), np.deg2rad(250.0),
                              label=ArcLabel.A, arc_id="A_west")
    c_south = half_circle_on_chord(_on_circle(r, 250.0), _on_circle(r, 290.0), "C", "C_south", data)
    return DomainSpec((a_east, c_north, a_west, c_south), AmbientParams(tau=tau, h=h), "js_two_lines")


__all__ = [
    "disk",
    "rectangle",
    "lens",
    "cap_disk",
    "scherk_square",
    "half_circle_on_chord",
    "js_convergent",
    "js_divergent",
    "js_two_lines",
]
