"""
Truncated-data solution sequences and divergence-line detection.

For n in n_values the Dirichlet problem is solved with data n on A arcs,
-n on B arcs and the C data truncated at level n; each member warm-starts
from the previous one. Where the sequence stays bounded it converges; where
it does not, the gradient blows up along arcs of curvature 2H.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..errors import InputError, NoConvergenceRegion, NonConvergence, NotApplicable
from ..fem.flux import CONORMAL, flux_balance
from ..fem.mesh import Mesh, build_mesh
from ..fem.operator import quadrature_flux
from ..fem.solver import (BoundaryData, CheckMode, ScalarField, SolveOptions, Truncation,
                          boundary_values, harmonic_lift, solve_dirichlet)
from ..geometry.arcs import ArcLabel
from ..geometry.domain import DomainSpec
from .circle_fit import fit_fixed_radius, taubin_fit

logger = logging.getLogger(__name__)

DEFAULT_N_VALUES = (1, 2, 4, 8, 16, 32, 64)
SEQUENCE_OPTIONS = SolveOptions(max_newton_iters=100, continuation_steps=4, check_conditions=CheckMode.WARN)


def geometric_n_values(n_max: int = 64) -> List[int]:
    """1, 2, 4, ... up to n_max"""
    if n_max < 1:
        raise InputError("n_max must be at least 1")
    return [2 ** k for k in range(int(np.floor(np.log2(n_max))) + 1)]


def auto_truncation(dom: DomainSpec) -> Truncation:
    """No B arcs: upper sequence; no A arcs: lower sequence; otherwise symmetric"""
    if not dom.has(ArcLabel.B):
        return Truncation.UPPER
    if not dom.has(ArcLabel.A):
        return Truncation.LOWER
    return Truncation.SYMMETRIC


@dataclass
class SequenceRun:
    """Members u_n of a truncated-data sequence with per-member diagnostics"""
    dom: DomainSpec
    mesh: Mesh
    mode: Truncation
    requested: List[int]
    n_values: List[int] = field(default_factory=list)
    fields: List[ScalarField] = field(default_factory=list)
    grad_norms: List[np.ndarray] = field(default_factory=list)
    arc_flux: Dict[str, List[float]] = field(default_factory=dict)
    c_bounds: Dict[str, List[Tuple[float, float]]] = field(default_factory=dict)
    anchor: Optional[np.ndarray] = None
    anchor_values: List[float] = field(default_factory=list)
    monotone: Optional[bool] = None
    monotonicity_gap: float = 0.0
    failure: Optional[str] = None

    @property
    def truncated(self) -> bool:
        return self.failure is not None

    def normalized(self, k: int = -1) -> np.ndarray:
        """v_n = u_n - u_n(anchor)"""
        return self.fields[k].values - self.anchor_values[k]

    def flux_frame(self) -> pd.DataFrame:
        rows = [{"n": n, "arc_id": arc_id, "flux": trend[k]}
                for arc_id, trend in self.arc_flux.items() for k, n in enumerate(self.n_values)]
        return pd.DataFrame(rows, columns=["n", "arc_id", "flux"])


def _near_nodes(mesh: Mesh, points: np.ndarray, radius: float) -> np.ndarray:
    tree = cKDTree(points)
    dist, _ = tree.query(mesh.nodes)
    return dist <= radius


def _c_neighbourhoods(dom: DomainSpec, mesh: Mesh) -> Dict[str, np.ndarray]:
    """Nodes within 3h of each C arc and away from the infinite-data arcs"""
    reach = 3.0 * mesh.h
    infinite = [arc for arc in dom.arcs if arc.label != ArcLabel.C]
    far = np.ones(mesh.n_nodes, dtype=bool)
    for arc in infinite:
        far &= ~_near_nodes(mesh, arc.sample(max(8, int(np.ceil(arc.length / (mesh.h / 4))))), reach)
    out = {}
    for arc in dom.labelled(ArcLabel.C):
        near = _near_nodes(mesh, arc.sample(max(8, int(np.ceil(arc.length / (mesh.h / 4))))), reach)
        out[arc.arc_id] = np.flatnonzero(near & far)
    return out


def run_sequence(dom: DomainSpec, n_values: Sequence[int] = DEFAULT_N_VALUES, h: float = 0.05,
                 mesh: Optional[Mesh] = None, opts: Optional[SolveOptions] = None,
                 mode: Optional[Truncation] = None, flux_method: str = CONORMAL,
                 anchor: Optional[Sequence[float]] = None) -> SequenceRun:
    """
    Solve the truncated problems for increasing n

    A solver failure ends the run early; the members solved so far are kept
    and the failure is recorded (expected close to genuine divergence).
    """
    n_values = [int(n) for n in n_values]
    if not n_values or any(b <= a for a, b in zip(n_values, n_values[1:])) or n_values[0] <= 0:
        raise InputError(f"n_values must be positive and strictly increasing, got {n_values}")
    opts = opts or SEQUENCE_OPTIONS
    mode = Truncation(mode) if mode is not None else auto_truncation(dom)
    mesh = mesh or build_mesh(dom, h)
    anchor_point = np.asarray(anchor if anchor is not None else dom.centroid, dtype=float)
    run = SequenceRun(dom, mesh, mode, list(n_values), anchor=anchor_point,
                      arc_flux={arc.arc_id: [] for arc in dom.arcs},
                      c_bounds={arc.arc_id: [] for arc in dom.labelled(ArcLabel.C)})
    neighbourhoods = _c_neighbourhoods(dom, mesh)
    diam = float(np.max(np.ptp(mesh.nodes, axis=0)))
    mono_tol = 10.0 * opts.newton_tol * max(1.0, diam)

    previous: Optional[np.ndarray] = None
    for n in n_values:
        data = boundary_values(mesh, dom, n, mode, opts.data_cap)
        try:
            member = solve_dirichlet(dom, data, opts, initial=previous)
        except NonConvergence as e:
            run.failure = f"n={n}: {e}"
            logger.warning("sequence stopped at n=%d: %s", n, e)
            break
        _record(run, n, member, neighbourhoods, flux_method)
        if previous is not None and mode != Truncation.SYMMETRIC:
            step = member.values - previous
            gap = float(-step.min()) if mode == Truncation.UPPER else float(step.max())
            run.monotonicity_gap = max(run.monotonicity_gap, gap)
        previous = member.values
        logger.info("sequence member n=%d solved (max |grad u| %.3g)", n, run.grad_norms[-1].max())

    if mode != Truncation.SYMMETRIC and len(run.fields) > 1:
        run.monotone = run.monotonicity_gap <= mono_tol
        if not run.monotone:
            logger.warning("sequence is not monotone: worst step against the data order %.3e", run.monotonicity_gap)
    return run


def _record(run: SequenceRun, n: int, member: ScalarField, neighbourhoods: Dict[str, np.ndarray],
            flux_method: str) -> None:
    run.n_values.append(n)
    run.fields.append(member)
    run.grad_norms.append(member.gradient_norms())
    for arc_flux in flux_balance(member, run.dom, method=flux_method).arcs:
        run.arc_flux[arc_flux.id].append(arc_flux.flux)
    for arc_id, nodes in neighbourhoods.items():
        vals = member.values[nodes] if len(nodes) else np.array([np.nan])
        run.c_bounds[arc_id].append((float(np.min(vals)), float(np.max(vals))))
    run.anchor_values.append(float(run.mesh.interpolate(member.values, run.anchor[None, :])[0]))


# -- divergence detection ---------------------------------------------------------

class DivergenceLine(BaseModel):
    """Circles fitted to the gradient ridge of one cluster of divergent triangles

    center and radius come from the fit with the radius held at 1/(2H);
    curvature is measured by the free fit.
    """
    center: Tuple[float, float]
    radius: float
    curvature: float = Field(..., description="curvature of the unconstrained Taubin fit to the ridge")
    curvature_error: float = Field(..., description="|curvature - 2H| / 2H, or |curvature| when H = 0")
    curvature_sign: int = Field(..., description="+1 when the blow-up region lies on the center side")
    fit_residual: float = Field(..., description="RMS distance of the locus to the fixed-radius circle")
    free_fit_residual: float
    side: str = Field(..., description="'center' or 'outside': where the values run off")
    blowup_sign: int = Field(..., description="+1 for u_n -> +inf, -1 for -inf")
    endpoints: List[Tuple[float, float]]
    endpoint_vertex_distance: List[float]
    arc_like: bool = Field(..., description="fit residual within max(h, 5% of the radius), curvature_error within tol")
    n_triangles: int
    locus_size: int
    normal_xi: float = Field(..., description="median |<N, xi>| = 1/W on the locus at the last member")


class DivergenceReport(BaseModel):
    n_values: List[int]
    lines: List[DivergenceLine] = Field(default_factory=list)
    divergent_triangles: int = 0
    converged_fraction: float
    converged_mask: List[bool] = Field(default_factory=list, exclude=True)
    flux_trends: Dict[str, List[float]] = Field(default_factory=dict)
    disjoint: bool = True
    grad_cap: float
    successive_gap: Optional[float] = Field(None, description="max |u_N - u_{N-1}| on the converged nodes")

    @property
    def empty(self) -> bool:
        return not self.lines and self.divergent_triangles == 0

    def mask(self) -> np.ndarray:
        return np.asarray(self.converged_mask, dtype=bool)


def converged_mask(run: SequenceRun, value_growth_fraction: float = 0.5) -> np.ndarray:
    """Nodes whose last increment stays below value_growth_fraction * (n_N - n_{N-1})"""
    mesh = run.mesh
    if len(run.fields) < 2:
        raise InputError("converged_mask needs at least two sequence members")
    dn = run.n_values[-1] - run.n_values[-2]
    step = np.abs(run.fields[-1].values - run.fields[-2].values)
    mask = step <= value_growth_fraction * dn
    for arc in run.dom.arcs:
        if arc.label != ArcLabel.C:
            mask[mesh.arc_nodes[arc.arc_id]] = False
    return mask


def _arc_endpoints(points: np.ndarray, center: np.ndarray, radius: float) -> List[np.ndarray]:
    """Extreme points of the arc of the fitted circle covered by the locus"""
    angles = np.sort(np.arctan2(points[:, 1] - center[1], points[:, 0] - center[0]))
    gaps = np.diff(np.append(angles, angles[0] + 2.0 * np.pi))
    k = int(np.argmax(gaps))
    first, last = angles[(k + 1) % len(angles)], angles[k]
    return [center + radius * np.array([np.cos(t), np.sin(t)]) for t in (first, last)]


def _boundary_distance(dom: DomainSpec, mesh: Mesh, points: np.ndarray) -> np.ndarray:
    samples = np.vstack([arc.sample(max(8, int(np.ceil(arc.length / (mesh.h / 4))))) for arc in dom.arcs])
    return cKDTree(samples).query(points)[0]


def _ridge(mesh: Mesh, tris: np.ndarray, grad: np.ndarray, fraction: float) -> np.ndarray:
    """Triangles whose gradient is at least `fraction` of the largest one within 3h"""
    pts = mesh.centroids[tris]
    neighbours = cKDTree(pts).query_ball_point(pts, 3.0 * mesh.h)
    local_max = np.array([grad[tris[idx]].max() for idx in neighbours])
    return tris[grad[tris] >= fraction * local_max]


def _fit_line(run: SequenceRun, cluster: np.ndarray, locus_threshold: float, curvature_tol: float,
              ridge_fraction: float) -> DivergenceLine:
    mesh, dom = run.mesh, run.dom
    last = run.fields[-1]
    x, w = quadrature_flux(mesh, last.values, last.params)
    flux_norm = np.linalg.norm(x, axis=-1).mean(axis=1)
    locus = cluster[flux_norm[cluster] > locus_threshold]
    if len(locus) < 3:
        locus = cluster
    ridge = _ridge(mesh, locus, run.grad_norms[-1], ridge_fraction)
    if len(ridge) >= 3:
        locus = ridge
    pts = mesh.centroids[locus]

    two_h = 2.0 * dom.params.h
    free = taubin_fit(pts) if len(pts) >= 3 else None
    free_k = free.curvature if free is not None else 0.0
    if two_h > 0:
        fixed = fit_fixed_radius(pts, 1.0 / two_h)
        center, radius, rms = fixed.center, fixed.radius, fixed.rms
        endpoints = _arc_endpoints(pts, center, radius)
    else:
        centroid = pts.mean(axis=0)
        _, s, vt = np.linalg.svd(pts - centroid, full_matrices=False)
        direction = vt[0]
        proj = (pts - centroid) @ direction
        rms = float(s[1] / np.sqrt(len(pts))) if len(s) > 1 else 0.0
        center, radius = centroid, np.inf
        endpoints = [centroid + proj.min() * direction, centroid + proj.max() * direction]
    curvature_error = abs(free_k - two_h) / two_h if two_h > 0 else abs(free_k)

    # which side of the fitted circle runs off
    increment = run.fields[-1].values - run.fields[-2].values
    tri_increment = increment[mesh.triangles].mean(axis=1)
    neighbourhood = np.flatnonzero(np.linalg.norm(mesh.centroids - pts.mean(axis=0), axis=1)
                                   <= max(4.0 * mesh.h, 0.5 * np.ptp(pts, axis=0).max()))
    if np.isfinite(radius):
        inside = np.linalg.norm(mesh.centroids[neighbourhood] - center, axis=1) < radius
    else:
        normal = np.array([-direction[1], direction[0]])
        inside = (mesh.centroids[neighbourhood] - center) @ normal > 0
    grow_in = np.abs(tri_increment[neighbourhood][inside]).mean() if inside.any() else 0.0
    grow_out = np.abs(tri_increment[neighbourhood][~inside]).mean() if (~inside).any() else 0.0
    side = "center" if grow_in >= grow_out else "outside"
    region = neighbourhood[inside] if side == "center" else neighbourhood[~inside]
    blowup_sign = 1 if region.size == 0 or tri_increment[region].mean() >= 0 else -1

    vertex_dist = [float(np.min(np.linalg.norm(dom.vertices - e, axis=1))) for e in endpoints]
    close = bool(rms <= max(mesh.h, 0.05 * radius if np.isfinite(radius) else mesh.h))
    arc_like = close and curvature_error <= curvature_tol
    if not arc_like:
        logger.warning("divergent cluster of %d triangles is not arc-like (fit residual %.3g, curvature %.4g, 2H %.4g)",
                       len(cluster), rms, free_k, two_h)
    return DivergenceLine(
        center=(float(center[0]), float(center[1])), radius=float(radius),
        curvature=float(free_k), curvature_error=float(curvature_error),
        curvature_sign=1 if side == "center" else -1, fit_residual=float(rms),
        free_fit_residual=float(free.rms) if free is not None else 0.0,
        side=side, blowup_sign=blowup_sign,
        endpoints=[(float(e[0]), float(e[1])) for e in endpoints],
        endpoint_vertex_distance=vertex_dist, arc_like=arc_like,
        n_triangles=int(len(cluster)), locus_size=int(len(locus)),
        normal_xi=float(np.median(1.0 / w[locus].mean(axis=1))),
    )


def detect_divergence(run: SequenceRun, grad_cap_factor: float = 0.5, growth_factor: float = 1.25,
                      locus_threshold: float = 0.99, value_growth_fraction: float = 0.5,
                      min_cluster: int = 3, boundary_band: float = 2.0, curvature_tol: float = 0.05,
                      ridge_fraction: float = 0.5) -> DivergenceReport:
    """
    Divergent triangles, their clusters and the circles fitted to them

    A triangle farther than boundary_band * h from the boundary is divergent
    when its gradient at the last member exceeds grad_cap = grad_cap_factor / h
    and grew by at least growth_factor since the previous member. The band
    keeps the boundary layer along the infinite-data arcs out of the clusters.
    Each cluster is fitted on its ridge: triangles with |X_u| above
    locus_threshold whose gradient is at least ridge_fraction of the local maximum.
    """
    if len(run.fields) < 3:
        raise InputError(f"detect_divergence needs at least three sequence members, got {len(run.fields)}")
    mesh = run.mesh
    grad_cap = grad_cap_factor / mesh.h
    away = ~mesh.is_boundary[mesh.triangles].any(axis=1)
    away &= _boundary_distance(run.dom, mesh, mesh.centroids) > boundary_band * mesh.h
    last, prev = run.grad_norms[-1], run.grad_norms[-2]
    divergent = np.flatnonzero(away & (last > grad_cap) & (last >= growth_factor * prev))
    mask = converged_mask(run, value_growth_fraction)
    report = dict(n_values=list(run.n_values), converged_fraction=float(mask.mean()),
                  successive_gap=successive_gap(run, mask),
                  converged_mask=mask.tolist(), flux_trends={k: list(v) for k, v in run.arc_flux.items()},
                  grad_cap=grad_cap, divergent_triangles=int(len(divergent)))
    if len(divergent) == 0:
        logger.info("no divergent triangles: the sequence converges on the whole mesh")
        return DivergenceReport(**report)

    sub = mesh.triangle_adjacency[divergent][:, divergent]
    n_clusters, labels = connected_components(sub, directed=False)
    clusters = [divergent[labels == k] for k in range(n_clusters)]
    clusters = sorted((c for c in clusters if len(c) >= min_cluster), key=lambda c: (-len(c), c.min()))
    lines = [_fit_line(run, cluster, locus_threshold, curvature_tol, ridge_fraction) for cluster in clusters]

    disjoint = True
    for a, b in combinations(clusters, 2):
        gap = cKDTree(mesh.centroids[a]).query(mesh.centroids[b])[0].min()
        disjoint &= bool(gap > mesh.h)
    logger.info("divergence: %d divergent triangles in %d clusters", len(divergent), len(clusters))
    return DivergenceReport(lines=lines, disjoint=disjoint, **report)


def successive_gap(run: SequenceRun, mask: np.ndarray) -> float:
    """max |u_N - u_{N-1}| over the masked nodes"""
    if len(run.fields) < 2 or not mask.any():
        return float("nan")
    return float(np.max(np.abs(run.fields[-1].values - run.fields[-2].values)[mask]))


def limit_solution(run: SequenceRun, report: DivergenceReport) -> ScalarField:
    """Last member restricted to the converged nodes (NaN elsewhere)

    Raises NoConvergenceRegion when no node converges.
    """
    mask = report.mask()
    if mask.size == 0 or not mask.any():
        raise NoConvergenceRegion("the sequence diverges at every node")
    values = np.where(mask, run.fields[-1].values, np.nan)
    logger.info("limit on %.1f%% of the nodes, last successive gap %.3e",
                100.0 * mask.mean(), successive_gap(run, mask))
    return ScalarField(run.mesh, values, run.fields[-1].params, mask=mask)


class UniquenessReport(BaseModel):
    seeds: int
    max_distance: float = Field(..., description="largest pairwise L-infinity distance between solutions")
    tol: float
    passed: bool


def uniqueness_probe(dom: DomainSpec, data: BoundaryData, seeds: Sequence[Union[int, np.ndarray]],
                     opts: Optional[SolveOptions] = None, amplitude: float = 1.0) -> UniquenessReport:
    """Solve from several initial iterates and compare the results

    Integer seeds perturb the harmonic lift at the interior nodes with
    seeded Gaussian noise of the given amplitude; arrays are used as given.
    """
    if not dom.has(ArcLabel.C):
        raise NotApplicable("uniqueness_probe needs at least one C arc")
    if len(seeds) < 2:
        raise InputError("uniqueness_probe needs at least two seeds")
    opts = opts or SolveOptions(check_conditions=CheckMode.WARN)
    mesh = data.mesh
    base = harmonic_lift(mesh, data.values, opts.linear_solver)
    solutions = []
    for seed in seeds:
        if isinstance(seed, (int, np.integer)):
            rng = np.random.default_rng(int(seed))
            initial = base + amplitude * np.where(mesh.is_boundary, 0.0, rng.standard_normal(mesh.n_nodes))
        else:
            initial = np.where(mesh.is_boundary, data.values, np.asarray(seed, dtype=float))
        solutions.append(solve_dirichlet(dom, data, opts.with_overrides(continuation_steps=1),
                                         initial=initial).values)
    distance = max(float(np.max(np.abs(a - b))) for a, b in combinations(solutions, 2))
    tol = 10.0 * opts.newton_tol
    return UniquenessReport(seeds=len(seeds), max_distance=distance, tol=tol, passed=distance <= tol)


__all__ = [
    "DEFAULT_N_VALUES",
    "SEQUENCE_OPTIONS",
    "SequenceRun",
    "DivergenceLine",
    "DivergenceReport",
    "UniquenessReport",
    "geometric_n_values",
    "auto_truncation",
    "run_sequence",
    "converged_mask",
    "detect_divergence",
    "successive_gap",
    "limit_solution",
    "uniqueness_probe",
]
