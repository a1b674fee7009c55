"""
Conforming triangulations of curvilinear domains.

Boundary nodes are sampled on the arcs at spacing <= h and keep their
(arc id, arclength) tags; interior nodes come from a hexagonal lattice. The
triangulation is a Delaunay triangulation of all nodes, restricted to the
polygon through the boundary nodes, with boundary edges recovered by
splitting (conforming Delaunay), Laplacian smoothing and a sliver pass.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import shapely
from scipy import sparse
from scipy.spatial import Delaunay, cKDTree

from ..errors import GeometryError, InputError, MeshError
from ..geometry.arcs import ArcKind, ArcSpec
from ..geometry.domain import DomainSpec

logger = logging.getLogger(__name__)

AREA_TOL = 1e-14
MIN_ARC_SAMPLES = 4
INTERIOR_CLEARANCE = 0.7
_MAX_RECOVERY = 6
_MAX_SLIVER_PASSES = 5
_LOCATE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulated domain

    nodes: (N, 2); triangles: (T, 3) counter-clockwise node triples;
    boundary_nodes: node -> (arc id, arclength on that arc);
    arc_nodes: arc id -> ordered nodes along the arc, both ends included
    (the last one is the start of the next arc).
    """
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_nodes: Dict[int, Tuple[str, float]]
    arc_nodes: Dict[str, np.ndarray]
    h: float

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @cached_property
    def gradients(self) -> np.ndarray:
        """(T, 3, 2): constant gradients of the three hat functions on each triangle"""
        p = self.nodes[self.triangles]
        two_a = 2.0 * self.areas
        grads = np.empty((self.n_triangles, 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            grads[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / two_a
            grads[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / two_a
        return grads

    @cached_property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[list(self.boundary_nodes)] = True
        return mask

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.is_boundary)

    @cached_property
    def edge_triangles(self) -> Dict[Tuple[int, int], List[int]]:
        out: Dict[Tuple[int, int], List[int]] = {}
        for t, (a, b, c) in enumerate(self.triangles):
            for e in ((a, b), (b, c), (c, a)):
                out.setdefault((min(e), max(e)), []).append(t)
        return out

    @cached_property
    def node_adjacency(self) -> sparse.csr_matrix:
        tris = self.triangles
        rows = np.concatenate([tris[:, 0], tris[:, 1], tris[:, 2], tris[:, 1], tris[:, 2], tris[:, 0]])
        cols = np.concatenate([tris[:, 1], tris[:, 2], tris[:, 0], tris[:, 0], tris[:, 1], tris[:, 2]])
        adj = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n_nodes,) * 2).tocsr()
        adj.data[:] = 1.0
        return adj

    @cached_property
    def triangle_adjacency(self) -> sparse.csr_matrix:
        """Triangles sharing an edge"""
        rows, cols = [], []
        for tris in self.edge_triangles.values():
            if len(tris) == 2:
                rows += tris
                cols += tris[::-1]
        return sparse.coo_matrix((np.ones(len(rows)), (rows, cols)),
                                 shape=(self.n_triangles,) * 2).tocsr()

    @cached_property
    def min_angles(self) -> np.ndarray:
        """Smallest interior angle of each triangle, in degrees"""
        return triangle_angles(self.nodes, self.triangles).min(axis=1)

    @cached_property
    def _centroid_tree(self) -> cKDTree:
        return cKDTree(self.centroids)

    def triangle_gradient(self, values: np.ndarray) -> np.ndarray:
        """(T, 2) gradient of the piecewise-linear interpolant of nodal values"""
        return np.einsum("tij,ti->tj", self.gradients, np.asarray(values)[self.triangles])

    def barycentric(self, tris: np.ndarray, points: np.ndarray) -> np.ndarray:
        offset = np.atleast_2d(points) - self.centroids[tris]
        return 1.0 / 3.0 + np.einsum("nij,nj->ni", self.gradients[tris], offset)

    def locate(self, points: np.ndarray, tol: float = _LOCATE_TOL) -> Tuple[np.ndarray, np.ndarray]:
        """Containing triangle (-1 outside the mesh) and barycentric coordinates of each point"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        found = np.full(len(pts), -1, dtype=int)
        bary = np.zeros((len(pts), 3))
        if len(pts) == 0:
            return found, bary
        k = min(12, self.n_triangles)
        _, cand = self._centroid_tree.query(pts, k=k)
        cand = np.asarray(cand).reshape(len(pts), -1)
        for j in range(cand.shape[1]):
            todo = np.flatnonzero(found < 0)
            if len(todo) == 0:
                break
            lam = self.barycentric(cand[todo, j], pts[todo])
            ok = (lam >= -tol).all(axis=1)
            found[todo[ok]] = cand[todo[ok], j]
            bary[todo[ok]] = lam[ok]
        for n in np.flatnonzero(found < 0):
            every = np.arange(self.n_triangles)
            lam = self.barycentric(every, np.repeat(pts[n:n + 1], self.n_triangles, axis=0))
            hits = np.flatnonzero((lam >= -tol).all(axis=1))
            if len(hits):
                found[n], bary[n] = hits[0], lam[hits[0]]
        return found, bary

    def interpolate(self, values: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Piecewise-linear interpolation; NaN outside the mesh"""
        tris, bary = self.locate(points)
        out = np.full(len(tris), np.nan)
        inside = tris >= 0
        out[inside] = np.einsum("ni,ni->n", bary[inside], np.asarray(values)[self.triangles[tris[inside]]])
        return out

    def boundary_chain(self, arc_id: str) -> "CurveChain":
        """Boundary edges of an arc, each with its one adjacent triangle and the outward normal"""
        if arc_id not in self.arc_nodes:
            raise InputError(f"mesh has no arc {arc_id!r}")
        ids = self.arc_nodes[arc_id]
        starts, ends = self.nodes[ids[:-1]], self.nodes[ids[1:]]
        tris = []
        for a, b in zip(ids[:-1], ids[1:]):
            owners = self.edge_triangles.get((min(a, b), max(a, b)))
            if not owners or len(owners) != 1:
                raise MeshError(f"edge ({a}, {b}) of arc {arc_id!r} is not a boundary edge")
            tris.append(owners[0])
        return CurveChain.from_segments(starts, ends, np.array(tris, dtype=int))

    def node_frame(self) -> pd.DataFrame:
        arc = [self.boundary_nodes.get(i, ("", np.nan)) for i in range(self.n_nodes)]
        return pd.DataFrame({
            "node": np.arange(self.n_nodes),
            "x": self.nodes[:, 0],
            "y": self.nodes[:, 1],
            "arc_id": [a for a, _ in arc],
            "s": [s for _, s in arc],
        })

    def triangle_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.triangles, columns=["i", "j", "k"])


@dataclass(frozen=True)
class CurveChain:
    """Polyline pieces of a curve with the triangle holding each piece and its unit normal"""
    starts: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    ends: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    triangles: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    normals: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    @classmethod
    def from_segments(cls, starts: np.ndarray, ends: np.ndarray, triangles: np.ndarray,
                      side: str = "right") -> "CurveChain":
        if side not in ("right", "left"):
            raise InputError(f"side must be 'right' or 'left', got {side!r}")
        d = ends - starts
        lengths = np.linalg.norm(d, axis=1)
        normals = np.column_stack([d[:, 1], -d[:, 0]]) / np.where(lengths > 0, lengths, 1.0)[:, None]
        if side == "left":
            normals = -normals
        return cls(np.asarray(starts, dtype=float), np.asarray(ends, dtype=float),
                   np.asarray(triangles, dtype=int), normals)

    def __len__(self) -> int:
        return len(self.starts)

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.ends - self.starts, axis=1)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.starts + self.ends)

    @property
    def length(self) -> float:
        return float(self.lengths.sum())

    def flipped(self) -> "CurveChain":
        """Same pieces with the normals pointing to the other side"""
        return CurveChain(self.starts, self.ends, self.triangles, -self.normals)

    def concat(self, other: "CurveChain") -> "CurveChain":
        return CurveChain(np.vstack([self.starts, other.starts]), np.vstack([self.ends, other.ends]),
                          np.concatenate([self.triangles, other.triangles]),
                          np.vstack([self.normals, other.normals]))

    def green_sum(self) -> float:
        """Sum of 1/2 (x dy - y dx) over the pieces"""
        s, e = self.starts, self.ends
        return float(0.5 * np.sum(s[:, 0] * e[:, 1] - e[:, 0] * s[:, 1]))


def triangle_angles(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = nodes[triangles]
    a = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
    b = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    c = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)

    def angle(opp, s1, s2):
        return np.degrees(np.arccos(np.clip((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0)))

    return np.column_stack([angle(a, b, c), angle(b, c, a), angle(c, a, b)])


# -- construction ---------------------------------------------------------------

def _initial_samples(dom: DomainSpec, h: float) -> List[np.ndarray]:
    out = []
    for arc in dom.arcs:
        n = int(np.ceil(arc.length / h - 1e-9))
        if arc.kind != ArcKind.SEGMENT and n < MIN_ARC_SAMPLES:
            raise MeshError(f"h={h} is too coarse for arc {arc.arc_id!r} of length {arc.length:.4g} "
                            f"({n} samples, need {MIN_ARC_SAMPLES})")
        out.append(np.linspace(0.0, arc.length, max(n, 1) + 1)[:-1])
    return out


def _boundary_layout(dom: DomainSpec, samples: Sequence[np.ndarray]):
    points, info, first = [], {}, []
    node = 0
    for arc, s in zip(dom.arcs, samples):
        first.append(node)
        points.append(arc.point_at(s))
        for value in s:
            info[node] = (arc.arc_id, float(value))
            node += 1
    arc_nodes = {}
    m = len(dom.arcs)
    for k, arc in enumerate(dom.arcs):
        ids = np.arange(first[k], first[k] + len(samples[k]))
        arc_nodes[arc.arc_id] = np.append(ids, first[(k + 1) % m])
    return np.vstack(points), info, arc_nodes


def _lattice(dom: DomainSpec, h: float) -> np.ndarray:
    """Hexagonal lattice of spacing h anchored at the centroid, kept well inside the domain"""
    xmin, ymin, xmax, ymax = dom.polygon.bounds
    cx, cy = dom.centroid
    dy = h * np.sqrt(3.0) / 2.0
    rows = np.arange(np.floor((ymin - cy) / dy), np.ceil((ymax - cy) / dy) + 1)
    cols = np.arange(np.floor((xmin - cx) / h) - 1, np.ceil((xmax - cx) / h) + 2)
    jj, ii = np.meshgrid(rows, cols, indexing="ij")
    pts = np.column_stack([(cx + (ii + 0.5 * (jj % 2)) * h).ravel(), (cy + jj * dy).ravel()])
    pts = pts[shapely.contains_xy(dom.polygon, pts[:, 0], pts[:, 1])]
    return pts[dom.distance_to_boundary(pts) >= INTERIOR_CLEARANCE * h]


def _triangulate(points: np.ndarray, ring: shapely.Polygon) -> np.ndarray:
    simplices = Delaunay(points).simplices
    p = points[simplices]
    cross = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    simplices = np.where((cross < 0)[:, None], simplices[:, [0, 2, 1]], simplices)
    centroids = p.mean(axis=1)
    keep = (0.5 * np.abs(cross) > AREA_TOL) & shapely.contains_xy(ring, centroids[:, 0], centroids[:, 1])
    return simplices[keep]


def _missing_edges(arc_nodes: Dict[str, np.ndarray], triangles: np.ndarray) -> Dict[str, List[int]]:
    edges = set()
    for a, b, c in triangles:
        edges.update({(min(a, b), max(a, b)), (min(b, c), max(b, c)), (min(c, a), max(c, a))})
    missing = {}
    for arc_id, ids in arc_nodes.items():
        gaps = [k for k in range(len(ids) - 1) if (min(ids[k], ids[k + 1]), max(ids[k], ids[k + 1])) not in edges]
        if gaps:
            missing[arc_id] = gaps
    return missing


def _conforming(dom: DomainSpec, samples: List[np.ndarray], interior: np.ndarray):
    """Delaunay triangulation that contains every boundary segment, splitting lost ones"""
    for _ in range(_MAX_RECOVERY):
        bpts, info, arc_nodes = _boundary_layout(dom, samples)
        points = np.vstack([bpts, interior]) if len(interior) else bpts
        triangles = _triangulate(points, shapely.Polygon(bpts))
        missing = _missing_edges(arc_nodes, triangles)
        if not missing:
            return points, triangles, info, arc_nodes, samples
        for k, arc in enumerate(dom.arcs):
            gaps = missing.get(arc.arc_id)
            if not gaps:
                continue
            s = samples[k]
            ends = np.append(s, arc.length)
            samples[k] = np.sort(np.concatenate([s, 0.5 * (ends[gaps] + ends[np.array(gaps) + 1])]))
        logger.debug("recovering %d lost boundary segments", sum(len(g) for g in missing.values()))
    raise MeshError("could not recover the boundary segments in the triangulation")


def _compact(points: np.ndarray, triangles: np.ndarray, n_boundary: int):
    used = np.zeros(len(points), dtype=bool)
    used[triangles.ravel()] = True
    if not used[:n_boundary].all():
        raise MeshError("boundary node left out of the triangulation")
    remap = np.cumsum(used) - 1
    return points[used], remap[triangles]


def _smooth(points: np.ndarray, triangles: np.ndarray, n_boundary: int, dom: DomainSpec,
            h: float, passes: int) -> np.ndarray:
    """Laplacian smoothing of interior nodes; moves that leave the safe region are rejected"""
    pts = points.copy()
    n = len(pts)
    tris = triangles
    rows = np.concatenate([tris[:, 0], tris[:, 1], tris[:, 2], tris[:, 1], tris[:, 2], tris[:, 0]])
    cols = np.concatenate([tris[:, 1], tris[:, 2], tris[:, 0], tris[:, 0], tris[:, 1], tris[:, 2]])
    adj = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    adj.data[:] = 1.0
    degree = np.asarray(adj.sum(axis=1)).ravel()
    movable = np.arange(n) >= n_boundary
    for _ in range(passes):
        target = (adj @ pts) / np.maximum(degree, 1.0)[:, None]
        candidate = np.where(movable[:, None], target, pts)
        moved = np.flatnonzero(movable)
        ok = dom.distance_to_boundary(candidate[moved]) >= 0.5 * h
        ok &= shapely.contains_xy(dom.polygon, candidate[moved, 0], candidate[moved, 1])
        pts[moved[ok]] = candidate[moved[ok]]
    return pts


def build_mesh(dom: DomainSpec, h: float, min_angle_deg: float = 20.0,
               smoothing_passes: int = 3) -> Mesh:
    """Triangulate dom with target edge length h

    Raises MeshError when h leaves a curved arc with fewer than four samples.
    """
    if not h > 0:
        raise InputError(f"mesh size must be positive, got {h}")
    samples = _initial_samples(dom, h)
    interior = _lattice(dom, h)

    points, triangles, info, arc_nodes, samples = _conforming(dom, samples, interior)
    n_boundary = len(info)
    points, triangles = _compact(points, triangles, n_boundary)

    if smoothing_passes > 0 and len(points) > n_boundary:
        interior = _smooth(points, triangles, n_boundary, dom, h, smoothing_passes)[n_boundary:]
        points, triangles, info, arc_nodes, samples = _conforming(dom, samples, interior)
        n_boundary = len(info)
        points, triangles = _compact(points, triangles, n_boundary)

    for _ in range(_MAX_SLIVER_PASSES):
        angles = triangle_angles(points, triangles)
        bad = np.flatnonzero(angles.min(axis=1) < min_angle_deg)
        if len(bad) == 0:
            break
        drop = set()
        for t in bad:
            tri = triangles[t]
            p = points[tri]
            lengths = [np.linalg.norm(p[(i + 1) % 3] - p[i]) for i in range(3)]
            i = int(np.argmin(lengths))
            ends = [tri[i], tri[(i + 1) % 3]]
            inner = [v for v in ends if v >= n_boundary]
            if inner:
                drop.add(inner[0])
        if not drop:
            break
        keep = np.setdiff1d(np.arange(n_boundary, len(points)), sorted(drop))
        points, triangles, info, arc_nodes, samples = _conforming(dom, samples, points[keep])
        n_boundary = len(info)
        points, triangles = _compact(points, triangles, n_boundary)

    worst = float(triangle_angles(points, triangles).min())
    if worst < min_angle_deg:
        logger.warning("mesh min angle %.1f deg below the %.1f deg target", worst, min_angle_deg)
    mesh = Mesh(points, triangles, info, arc_nodes, float(h))
    if np.any(mesh.areas <= AREA_TOL):
        raise MeshError("degenerate triangle in the mesh")
    logger.info("mesh built: %d nodes (%d boundary), %d triangles, h=%g, min angle %.1f deg",
                mesh.n_nodes, n_boundary, mesh.n_triangles, h, worst)
    return mesh


def refine(mesh: Mesh, dom: DomainSpec) -> Mesh:
    """Red refinement: every triangle split in four, boundary midpoints snapped to their arcs"""
    n, tris = mesh.n_nodes, mesh.triangles
    t = len(tris)
    edges = np.sort(np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]), axis=1)
    unique, inverse = np.unique(edges, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    mids = 0.5 * (mesh.nodes[unique[:, 0]] + mesh.nodes[unique[:, 1]])
    lookup = {(int(a), int(b)): k for k, (a, b) in enumerate(unique)}

    info = dict(mesh.boundary_nodes)
    arc_nodes = {}
    for arc in dom.arcs:
        ids = mesh.arc_nodes[arc.arc_id]
        chain = [int(ids[0])]
        for a, b in zip(ids[:-1], ids[1:]):
            k = lookup[(min(a, b), max(a, b))]
            s_a = mesh.boundary_nodes[a][1]
            s_b = mesh.boundary_nodes[b][1] if mesh.boundary_nodes[b][0] == arc.arc_id else arc.length
            s_mid = 0.5 * (s_a + s_b)
            mids[k] = arc.point_at(s_mid)[0]
            info[n + k] = (arc.arc_id, float(s_mid))
            chain += [n + k, int(b)]
        arc_nodes[arc.arc_id] = np.array(chain, dtype=int)

    m01, m12, m20 = n + inverse[:t], n + inverse[t:2 * t], n + inverse[2 * t:]
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    children = np.vstack([
        np.column_stack([a, m01, m20]),
        np.column_stack([m01, b, m12]),
        np.column_stack([m20, m12, c]),
        np.column_stack([m01, m12, m20]),
    ])
    fine = Mesh(np.vstack([mesh.nodes, mids]), children, info, arc_nodes, mesh.h / 2.0)
    if np.any(fine.areas <= AREA_TOL):
        raise MeshError("refinement produced a degenerate triangle")
    logger.info("mesh refined: %d nodes, %d triangles, h=%g", fine.n_nodes, fine.n_triangles, fine.h)
    return fine


def interior_curve_trace(mesh: Mesh, curve: ArcSpec, clip: bool = True,
                         side: str = "right") -> CurveChain:
    """Polyline approximation of a curve at spacing h/4, each piece tagged with its triangle

    Pieces whose midpoint is outside the mesh are dropped (clip=True) or make
    the call fail with GeometryError (clip=False). Normals point to the
    right of the direction of travel unless side="left".
    """
    n = max(4, int(np.ceil(curve.length / (mesh.h / 4.0))))
    pts = curve.sample(n)
    starts, ends = pts[:-1], pts[1:]
    tris, _ = mesh.locate(0.5 * (starts + ends))
    outside = tris < 0
    if outside.any():
        if not clip:
            raise GeometryError(f"curve {curve.arc_id or '<unnamed>'} leaves the meshed domain "
                                f"({int(outside.sum())} of {n} pieces outside)")
        logger.debug("clipped %d of %d curve pieces outside the mesh", int(outside.sum()), n)
    keep = ~outside
    return CurveChain.from_segments(starts[keep], ends[keep], tris[keep], side)


__all__ = [
    "Mesh",
    "CurveChain",
    "build_mesh",
    "refine",
    "interior_curve_trace",
    "triangle_angles",
]
