"""
The prescribed mean curvature operator of Nil3(tau) graphs.

Pointwise:     L_H(u) = ((1+b^2) u_xx + (1+a^2) u_yy - 2ab u_xy) / W^3 - 2H
Divergence:    div X_u = 2H,  X_u = (a, b) / W
with a = tau*y + u_x, b = -tau*x + u_y and W^2 = 1 + a^2 + b^2.

The weak form uses piecewise-linear elements. On each triangle the gradient
of u is constant, so a and b are affine and X_u is evaluated exactly at the
three edge midpoints (a rule exact for quadratics).
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..geometry.ambient import AmbientParams, GraphJet, graph_slopes
from .mesh import Mesh

# quadrature points of the edge-midpoint rule, as barycentric coordinates
_MIDPOINT_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


@dataclass(frozen=True)
class CoefficientJet:
    alpha: float
    beta: float
    w: float


def coefficients(jet: GraphJet, params: AmbientParams) -> CoefficientJet:
    alpha, beta, w = graph_slopes(jet.x, jet.y, jet.ux, jet.uy, params.tau)
    return CoefficientJet(float(alpha), float(beta), float(w))


def residual_nondiv(jet: GraphJet, params: AmbientParams) -> float:
    """L_H(u) at the jet's point; zero exactly when the graph has mean curvature H there"""
    c = coefficients(jet, params)
    bracket = ((1.0 + c.beta ** 2) * jet.uxx + (1.0 + c.alpha ** 2) * jet.uyy
               - 2.0 * c.alpha * c.beta * jet.uxy)
    return float(bracket / c.w ** 3 - 2.0 * params.h)


def flux_vector(jet: GraphJet, params: AmbientParams) -> np.ndarray:
    """X_u = (alpha/W, beta/W); its length is always below 1"""
    c = coefficients(jet, params)
    return np.array([c.alpha / c.w, c.beta / c.w])


def flux_field(x, y, ux, uy, params: AmbientParams):
    """Vectorized X_u and W at arrays of points with given gradients"""
    alpha, beta, w = graph_slopes(x, y, ux, uy, params.tau)
    return np.stack([alpha / w, beta / w], axis=-1), w


def quadrature_points(mesh: Mesh) -> np.ndarray:
    """(T, 3, 2) edge midpoints of each triangle"""
    return np.einsum("qi,tid->tqd", _MIDPOINT_BARY, mesh.nodes[mesh.triangles])


def _slopes(mesh: Mesh, u: np.ndarray, params: AmbientParams):
    grad = mesh.triangle_gradient(u)
    q = quadrature_points(mesh)
    return graph_slopes(q[..., 0], q[..., 1], grad[:, None, 0], grad[:, None, 1], params.tau)


def quadrature_flux(mesh: Mesh, u: np.ndarray, params: AmbientParams):
    """X_u (T, 3, 2) and W (T, 3) at the quadrature points"""
    alpha, beta, w = _slopes(mesh, u, params)
    return np.stack([alpha / w, beta / w], axis=-1), w


def energy(mesh: Mesh, u: np.ndarray, params: AmbientParams) -> float:
    """J(u) = integral of W + 2H integral of u; convex, its gradient is weak_residual"""
    _, _, w = _slopes(mesh, u, params)
    area_term = np.sum(mesh.areas * w.mean(axis=1))
    mean_u = np.asarray(u)[mesh.triangles].mean(axis=1)
    return float(area_term + 2.0 * params.h * np.sum(mesh.areas * mean_u))


def weak_residual(mesh: Mesh, u: np.ndarray, params: AmbientParams) -> np.ndarray:
    """R_i = integral X_u . grad phi_i + 2H integral phi_i for every node"""
    x, _ = quadrature_flux(mesh, u, params)
    x_mean = x.mean(axis=1)
    local = mesh.areas[:, None] * (np.einsum("tid,td->ti", mesh.gradients, x_mean)
                                   + 2.0 * params.h / 3.0)
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_nodes)


def jacobian(mesh: Mesh, u: np.ndarray, params: AmbientParams) -> sparse.csr_matrix:
    """Derivative of weak_residual: grad phi_i^T M grad phi_j with M = (I - v v^T / W^2) / W

    M is symmetric positive definite, so the matrix is an SPD stiffness matrix.
    """
    alpha, beta, w = _slopes(mesh, u, params)
    v = np.stack([alpha, beta], axis=-1)
    eye = np.eye(2)[None, None]
    m = (eye - np.einsum("tqa,tqb->tqab", v, v) / (w * w)[..., None, None]) / w[..., None, None]
    m_mean = m.mean(axis=1)
    local = mesh.areas[:, None, None] * np.einsum("tia,tab,tjb->tij", mesh.gradients, m_mean, mesh.gradients)
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_nodes,) * 2).tocsr()


def stiffness(mesh: Mesh) -> sparse.csr_matrix:
    """Laplace stiffness matrix (the Jacobian at a horizontal, tau = 0 graph)"""
    local = mesh.areas[:, None, None] * np.einsum("tia,tja->tij", mesh.gradients, mesh.gradients)
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_nodes,) * 2).tocsr()


__all__ = [
    "CoefficientJet",
    "coefficients",
    "residual_nondiv",
    "flux_vector",
    "flux_field",
    "quadrature_points",
    "quadrature_flux",
    "energy",
    "weak_residual",
    "jacobian",
    "stiffness",
]
