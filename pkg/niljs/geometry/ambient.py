"""
Geometry of the Heisenberg space Nil3(tau).

Nil3(tau) is R^3 with the metric

    g = dx^2 + dy^2 + (tau (y dx - x dy) + dz)^2

seen as a Riemannian submersion pi(x, y, z) = (x, y) over the Euclidean plane,
with fibers generated by the unit Killing field xi = d/dz. Everything here is
expressed in the orthonormal frame

    E1 = d/dx - tau*y d/dz,   E2 = d/dy + tau*x d/dz,   E3 = xi = d/dz

whose Levi-Civita connection has constant coefficients in tau. Curvature uses
the convention R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z.

The isometry group is generated by the Killing fields
    F1 = d/dx + tau*y d/dz,  F2 = d/dy - tau*x d/dz,  F3 = d/dz,
    F4 = -y d/dx + x d/dy;
they are documented only and have no code counterpart.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..errors import InputError

UNIT_TOL = 1e-10


@dataclass(frozen=True)
class AmbientParams:
    """Bundle curvature tau and prescribed mean curvature H (upward normal, H >= 0)"""
    tau: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.tau) and np.isfinite(self.h)):
            raise InputError(f"AmbientParams must be finite, got tau={self.tau}, H={self.h}")
        if self.h < 0:
            raise InputError(f"H must be non-negative (upward normal convention), got {self.h}")


@dataclass(frozen=True)
class FrameVector:
    """Components of a tangent vector in the frame {E1, E2, xi}"""
    c1: float
    c2: float
    c3: float

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "FrameVector":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3], dtype=float)

    def norm(self) -> float:
        return float(np.sqrt(self.c1 ** 2 + self.c2 ** 2 + self.c3 ** 2))


@dataclass(frozen=True)
class GraphJet:
    """Value and derivatives of u at a base point; second derivatives may stay 0 for first-order ops"""
    x: float
    y: float
    u: float = 0.0
    ux: float = 0.0
    uy: float = 0.0
    uxx: float = 0.0
    uxy: float = 0.0
    uyy: float = 0.0


def _vertical_form(p, v, tau: float):
    """theta(v) = tau (y v_x - x v_y) + v_z, the xi-component of v"""
    return tau * (p[1] * v[0] - p[0] * v[1]) + v[2]


def metric_eval(p, v, w, params: AmbientParams) -> float:
    """g_p(v, w) for coordinate vectors v, w at p"""
    return float(v[0] * w[0] + v[1] * w[1]
                 + _vertical_form(p, v, params.tau) * _vertical_form(p, w, params.tau))


def frame_at(p, params: AmbientParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coordinate expressions of E1, E2, xi at p"""
    tau = params.tau
    e1 = np.array([1.0, 0.0, -tau * p[1]])
    e2 = np.array([0.0, 1.0, tau * p[0]])
    xi = np.array([0.0, 0.0, 1.0])
    return e1, e2, xi


def to_frame(p, v, params: AmbientParams) -> FrameVector:
    """Frame components of the coordinate vector v at p"""
    return FrameVector(float(v[0]), float(v[1]), float(_vertical_form(p, v, params.tau)))


def submersion(p) -> Tuple[float, float]:
    """pi(x, y, z) = (x, y)"""
    return float(p[0]), float(p[1])


# nabla_{E_i} E_j = sum_k table[i, j, k] E_k, divided by tau
_UNIT_CONNECTION = np.zeros((3, 3, 3))
_UNIT_CONNECTION[0, 1, 2] = 1.0    # nabla_E1 E2 = tau xi
_UNIT_CONNECTION[0, 2, 1] = -1.0   # nabla_E1 xi = -tau E2
_UNIT_CONNECTION[1, 0, 2] = -1.0   # nabla_E2 E1 = -tau xi
_UNIT_CONNECTION[1, 2, 0] = 1.0    # nabla_E2 xi = tau E1
_UNIT_CONNECTION[2, 0, 1] = -1.0   # nabla_xi E1 = -tau E2
_UNIT_CONNECTION[2, 1, 0] = 1.0    # nabla_xi E2 = tau E1


def connection_table(params: AmbientParams) -> np.ndarray:
    """Hard-coded connection coefficients: table[i, j, k] is the E_k component of nabla_{E_i} E_j"""
    return params.tau * _UNIT_CONNECTION


def bracket_table(params: AmbientParams) -> np.ndarray:
    """Structure constants: [E_i, E_j] = sum_k c[i, j, k] E_k (torsion-free, so Gamma_ij - Gamma_ji)"""
    gamma = connection_table(params)
    return gamma - gamma.transpose(1, 0, 2)


def curvature_tensor(params: AmbientParams) -> np.ndarray:
    """R[a, b, c, m]: the E_m component of R(E_a, E_b) E_c

    The frame coefficients are constant, so the derivative terms drop and
    only products of connection coefficients remain.
    """
    gamma = connection_table(params)
    brackets = bracket_table(params)
    first = np.einsum("bcl,alm->abcm", gamma, gamma)
    second = np.einsum("acl,blm->abcm", gamma, gamma)
    third = np.einsum("abl,lcm->abcm", brackets, gamma)
    return first - second - third


def _as_components(v) -> np.ndarray:
    if isinstance(v, FrameVector):
        return v.as_array()
    return np.asarray(v, dtype=float)


def sectional_curvature(v, w, params: AmbientParams) -> float:
    """K(v, w) = <R(v, w) w, v> / (|v|^2 |w|^2 - <v, w>^2)"""
    a, b = _as_components(v), _as_components(w)
    area2 = a.dot(a) * b.dot(b) - a.dot(b) ** 2
    if area2 <= 1e-24:
        raise InputError("sectional curvature needs two independent vectors")
    value = np.einsum("a,b,c,m,abcm->", a, b, b, a, curvature_tensor(params))
    return float(value / area2)


def _complete_basis(v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt completion of a unit v; switches candidate when v leans on E1"""
    candidate = np.array([1.0, 0.0, 0.0])
    if abs(candidate.dot(v)) > 0.5:
        candidate = np.array([0.0, 1.0, 0.0])
    w1 = candidate - candidate.dot(v) * v
    w1 /= np.linalg.norm(w1)
    w2 = np.cross(v, w1)
    return w1, w2


def ricci(v, params: AmbientParams) -> float:
    """Ric(v) = sum_i <R(w_i, v) v, w_i> over an orthonormal completion {w_1, w_2} of v

    Lies in [-2 tau^2, 2 tau^2]; Ric(xi) = 2 tau^2 and Ric(E1) = -2 tau^2.
    """
    comps = _as_components(v)
    norm = float(np.linalg.norm(comps))
    if abs(norm - 1.0) > UNIT_TOL:
        raise InputError(f"ricci expects a unit vector, got norm {norm:.3e}")
    tensor = curvature_tensor(params)
    total = 0.0
    for w in _complete_basis(comps):
        total += np.einsum("a,b,c,m,abcm->", w, comps, comps, w, tensor)
    return float(total)


def graph_slopes(x, y, ux, uy, tau: float):
    """alpha = tau*y + u_x, beta = -tau*x + u_y, W = sqrt(1 + alpha^2 + beta^2); works on arrays"""
    alpha = tau * np.asarray(y) + np.asarray(ux)
    beta = -tau * np.asarray(x) + np.asarray(uy)
    w = np.sqrt(1.0 + alpha * alpha + beta * beta)
    return alpha, beta, w


def graph_normal(jet: GraphJet, params: AmbientParams) -> Tuple[FrameVector, float]:
    """Upward unit normal N = (-alpha/W, -beta/W, 1/W) of the graph z = u(x, y) and W"""
    alpha, beta, w = graph_slopes(jet.x, jet.y, jet.ux, jet.uy, params.tau)
    w = float(w)
    return FrameVector(-float(alpha) / w, -float(beta) / w, 1.0 / w), w


def _metric_matrix(p, tau: float) -> np.ndarray:
    theta = np.array([tau * p[1], -tau * p[0], 1.0])
    return np.diag([1.0, 1.0, 0.0]) + np.outer(theta, theta)


def christoffel_connection(p, params: AmbientParams) -> np.ndarray:
    """Connection coefficients of the frame at p computed from coordinate Christoffel symbols

    Independent of the hard-coded table; used as its oracle.
    """
    tau = params.tau
    theta = np.array([tau * p[1], -tau * p[0], 1.0])
    d_theta = [np.array([0.0, -tau, 0.0]), np.array([tau, 0.0, 0.0]), np.zeros(3)]
    d_metric = [np.outer(dt, theta) + np.outer(theta, dt) for dt in d_theta]
    g_inv = np.linalg.inv(_metric_matrix(p, tau))

    lowered = np.empty((3, 3, 3))
    for l in range(3):
        for i in range(3):
            for j in range(3):
                lowered[l, i, j] = d_metric[i][l, j] + d_metric[j][l, i] - d_metric[l][i, j]
    christoffel = 0.5 * np.einsum("kl,lij->kij", g_inv, lowered)

    frame = frame_at(p, params)
    # d_frame[j][a] = derivative of E_j along coordinate a
    d_frame = [
        [np.zeros(3), np.array([0.0, 0.0, -tau]), np.zeros(3)],
        [np.array([0.0, 0.0, tau]), np.zeros(3), np.zeros(3)],
        [np.zeros(3), np.zeros(3), np.zeros(3)],
    ]
    table = np.empty((3, 3, 3))
    for i in range(3):
        for j in range(3):
            directional = sum(frame[i][a] * d_frame[j][a] for a in range(3))
            covariant = directional + np.einsum("cab,a,b->c", christoffel, frame[i], frame[j])
            table[i, j] = to_frame(p, covariant, params).as_array()
    return table


__all__ = [
    "AmbientParams",
    "FrameVector",
    "GraphJet",
    "metric_eval",
    "frame_at",
    "to_frame",
    "submersion",
    "connection_table",
    "bracket_table",
    "curvature_tensor",
    "sectional_curvature",
    "ricci",
    "graph_slopes",
    "graph_normal",
    "christoffel_connection",
]
