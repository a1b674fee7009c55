"""
Boundary arcs of curvilinear planar domains.

An arc is oriented: it runs from `start` to `end`, and domains traverse their
boundary counter-clockwise, so the interior lies on the left. Curvature is
signed with respect to that left (inner) normal: a circular arc running
counter-clockwise about its center has k = +1/r.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ..errors import InputError

BoundaryFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

TWO_PI = 2.0 * np.pi
COINCIDENCE_TOL = 1e-9


class ArcKind(str, Enum):
    """Supported arc geometries"""
    CIRCULAR = "circular"
    SEGMENT = "segment"
    POLYLINE = "polyline"


class ArcLabel(str, Enum):
    """Jenkins-Serrin labels: A (data +inf, k = 2H), B (data -inf, k = -2H), C (continuous data, k >= 2H)"""
    A = "A"
    B = "B"
    C = "C"


@dataclass(frozen=True, eq=False)
class ArcSpec:
    """One oriented boundary arc with its label and (for C arcs) its data

    Use the `circular`, `segment` and `polyline` constructors rather than
    filling the fields by hand.
    """
    kind: ArcKind
    label: ArcLabel = ArcLabel.C
    arc_id: str = ""
    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    theta0: float = 0.0
    theta1: float = 0.0
    points: Optional[np.ndarray] = field(default=None, repr=False)
    data: Optional[BoundaryFunction] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == ArcKind.CIRCULAR:
            span = abs(self.theta1 - self.theta0)
            if not self.radius > 0:
                raise InputError(f"arc {self.arc_id!r}: radius must be positive, got {self.radius}")
            if not 0.0 < span < TWO_PI:
                raise InputError(f"arc {self.arc_id!r}: angle span must lie in (0, 2pi), got {span}")
        else:
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2:
                raise InputError(f"arc {self.arc_id!r}: points must be an (n, 2) array")
            needed = 2 if self.kind == ArcKind.SEGMENT else 3
            if len(pts) < needed:
                raise InputError(f"arc {self.arc_id!r}: {self.kind.value} needs at least {needed} points")
            if np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) <= COINCIDENCE_TOL):
                raise InputError(f"arc {self.arc_id!r}: repeated consecutive points")
            object.__setattr__(self, "points", pts)

    # -- constructors -------------------------------------------------------

    @classmethod
    def circular(cls, center, radius: float, theta0: float, theta1: float,
                 label: ArcLabel = ArcLabel.C, arc_id: str = "",
                 data: Optional[BoundaryFunction] = None) -> "ArcSpec":
        return cls(ArcKind.CIRCULAR, ArcLabel(label), arc_id,
                   (float(center[0]), float(center[1])), float(radius),
                   float(theta0), float(theta1), None, data)

    @classmethod
    def segment(cls, start, end, label: ArcLabel = ArcLabel.C, arc_id: str = "",
                data: Optional[BoundaryFunction] = None) -> "ArcSpec":
        pts = np.array([start, end], dtype=float)
        return cls(ArcKind.SEGMENT, ArcLabel(label), arc_id, points=pts, data=data)

    @classmethod
    def polyline(cls, points, label: ArcLabel = ArcLabel.C, arc_id: str = "",
                 data: Optional[BoundaryFunction] = None) -> "ArcSpec":
        return cls(ArcKind.POLYLINE, ArcLabel(label), arc_id,
                   points=np.asarray(points, dtype=float), data=data)

    def with_label(self, label: ArcLabel) -> "ArcSpec":
        return replace(self, label=ArcLabel(label))

    def with_id(self, arc_id: str) -> "ArcSpec":
        return replace(self, arc_id=arc_id)

    def with_data(self, data: Optional[BoundaryFunction]) -> "ArcSpec":
        return replace(self, data=data)

    # -- geometry -----------------------------------------------------------

    @property
    def span(self) -> float:
        """Signed angle swept by a circular arc (positive = counter-clockwise)"""
        return self.theta1 - self.theta0

    @property
    def orientation(self) -> str:
        """'ccw' when the arc turns toward the domain interior, 'cw' when away"""
        if self.kind == ArcKind.CIRCULAR:
            return "ccw" if self.span > 0 else "cw"
        if self.kind == ArcKind.SEGMENT:
            return "ccw"
        return "ccw" if self.signed_curvatures().mean() >= 0 else "cw"

    def _cumulative(self) -> np.ndarray:
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        if self.kind == ArcKind.CIRCULAR:
            return self.radius * abs(self.span)
        return float(self._cumulative()[-1])

    @property
    def start(self) -> np.ndarray:
        return self.point_at(0.0)[0]

    @property
    def end(self) -> np.ndarray:
        if self.kind == ArcKind.CIRCULAR:
            return self._circle_point(self.theta1)
        return self.points[-1].copy()

    def _circle_point(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.stack([self.center[0] + self.radius * np.cos(theta),
                         self.center[1] + self.radius * np.sin(theta)], axis=-1)

    def point_at(self, s) -> np.ndarray:
        """Points at arclength parameters s, shape (n, 2)"""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.kind == ArcKind.CIRCULAR:
            theta = self.theta0 + np.sign(self.span) * s / self.radius
            return self._circle_point(theta)
        cum = self._cumulative()
        return np.stack([np.interp(s, cum, self.points[:, 0]),
                         np.interp(s, cum, self.points[:, 1])], axis=-1)

    def tangent_at(self, s) -> np.ndarray:
        """Unit tangents along the direction of travel, shape (n, 2)"""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.kind == ArcKind.CIRCULAR:
            theta = self.theta0 + np.sign(self.span) * s / self.radius
            sign = np.sign(self.span)
            return np.stack([-sign * np.sin(theta), sign * np.cos(theta)], axis=-1)
        cum = self._cumulative()
        seg = np.diff(self.points, axis=0)
        seg = seg / np.linalg.norm(seg, axis=1)[:, None]
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
        return seg[idx]

    def sample(self, n_segments: int) -> np.ndarray:
        """n_segments + 1 points at equal arclength spacing, endpoints included"""
        return self.point_at(np.linspace(0.0, self.length, int(n_segments) + 1))

    def signed_curvatures(self) -> np.ndarray:
        """Three-point (Menger) curvature at every interior polyline vertex"""
        pts = self.points
        a, b, c = pts[:-2], pts[1:-1], pts[2:]
        u, v = b - a, c - b
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        denom = (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
                 * np.linalg.norm(c - a, axis=1))
        return 2.0 * cross / denom

    def curvature_at(self, s: float) -> float:
        if self.kind == ArcKind.CIRCULAR:
            return float(np.sign(self.span) / self.radius)
        if self.kind == ArcKind.SEGMENT:
            return 0.0
        cum = self._cumulative()
        vertex = int(np.clip(np.argmin(np.abs(cum - s)), 1, len(cum) - 2))
        return float(self.signed_curvatures()[vertex - 1])

    def curvature_samples(self) -> np.ndarray:
        """Curvature values that represent the whole arc for pointwise label checks"""
        if self.kind == ArcKind.CIRCULAR:
            return np.array([self.curvature_at(0.0)])
        if self.kind == ArcKind.SEGMENT:
            return np.array([0.0])
        return self.signed_curvatures()

    def green_term(self) -> float:
        """Exact contribution of the arc to the signed area 1/2 * integral(x dy - y dx)"""
        if self.kind == ArcKind.CIRCULAR:
            cx, cy = self.center
            r, t0, t1 = self.radius, self.theta0, self.theta1
            return 0.5 * (r * r * (t1 - t0)
                          + cx * r * (np.sin(t1) - np.sin(t0))
                          - cy * r * (np.cos(t1) - np.cos(t0)))
        x, y = self.points[:, 0], self.points[:, 1]
        return float(0.5 * np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))

    def reversed(self) -> "ArcSpec":
        """Same curve traversed the other way (curvature sign flips)"""
        if self.kind == ArcKind.CIRCULAR:
            return replace(self, theta0=self.theta1, theta1=self.theta0)
        return replace(self, points=self.points[::-1].copy())

    def reflect_across_chord(self) -> "ArcSpec":
        """Geodesic reflection across the chord start-end, keeping start and end

        For a circular arc the center is mirrored and the sweep flips, so the
        reflected arc bulges to the other side of the chord.
        """
        p, q = self.start, self.end
        chord = q - p
        d = chord / np.linalg.norm(chord)
        mirror = 2.0 * np.outer(d, d) - np.eye(2)
        if self.kind == ArcKind.CIRCULAR:
            center = p + mirror @ (np.asarray(self.center) - p)
            t0 = float(np.arctan2(p[1] - center[1], p[0] - center[0]))
            return replace(self, center=(float(center[0]), float(center[1])),
                           theta0=t0, theta1=t0 - self.span)
        pts = p + (self.points - p) @ mirror.T
        return replace(self, points=pts)

    def evaluate(self, x, y) -> np.ndarray:
        """Boundary data at points on the arc; InputError when the arc carries none"""
        if self.data is None:
            raise InputError(f"arc {self.arc_id!r} ({self.label.value}) carries no boundary data")
        values = np.asarray(self.data(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)
        return np.broadcast_to(values, np.shape(x)).astype(float)


def arc_through(center, radius: float, p, q, ccw: bool, **kwargs) -> ArcSpec:
    """Circular arc of the circle (center, radius) running from p to q in the given sense"""
    t0 = float(np.arctan2(p[1] - center[1], p[0] - center[0]))
    t1 = float(np.arctan2(q[1] - center[1], q[0] - center[0]))
    span = (t1 - t0) % TWO_PI
    if span <= COINCIDENCE_TOL:
        span = TWO_PI
    if not ccw:
        span = span - TWO_PI
    return ArcSpec.circular(center, radius, t0, t0 + span, **kwargs)


def chain_points(arcs: Sequence[ArcSpec], per_arc: Optional[Sequence[int]] = None,
                 spacing: Optional[float] = None) -> np.ndarray:
    """Dense polyline through a closed or open chain of arcs, without repeated joints"""
    chunks = []
    for k, arc in enumerate(arcs):
        if per_arc is not None:
            n = per_arc[k]
        elif arc.kind == ArcKind.CIRCULAR:
            n = max(16, int(np.ceil(arc.length / spacing))) if spacing else 64
        elif arc.kind == ArcKind.SEGMENT:
            n = max(1, int(np.ceil(arc.length / spacing))) if spacing else 1
        else:
            chunks.append(arc.points[:-1])
            continue
        chunks.append(arc.sample(n)[:-1])
    return np.concatenate(chunks, axis=0)


__all__ = [
    "ArcKind",
    "ArcLabel",
    "ArcSpec",
    "BoundaryFunction",
    "arc_through",
    "chain_points",
]
