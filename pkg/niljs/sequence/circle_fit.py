"""
Circle fitting for divergence loci.

An algebraic Taubin fit gives a free circle; a second geometric fit keeps
the radius fixed (1/(2H) for divergence lines) and only moves the center.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from ..errors import InputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CircleFit:
    center: np.ndarray
    radius: float
    rms: float

    @property
    def curvature(self) -> float:
        return 1.0 / self.radius if np.isfinite(self.radius) and self.radius > 0 else 0.0


def _rms(points: np.ndarray, center: np.ndarray, radius: float) -> float:
    d = np.linalg.norm(points - center, axis=1)
    return float(np.sqrt(np.mean((d - radius) ** 2)))


def taubin_fit(points: np.ndarray) -> CircleFit:
    """Algebraic circle fit (Taubin, via SVD); infinite radius for collinear points"""
    xy = np.asarray(points, dtype=float)
    if len(xy) < 3:
        raise InputError("a circle fit needs at least three points")
    centroid = xy.mean(axis=0)
    x, y = xy[:, 0] - centroid[0], xy[:, 1] - centroid[1]
    z = x * x + y * y
    z_mean = z.mean()
    if z_mean <= 0:
        raise InputError("circle fit needs distinct points")
    z0 = (z - z_mean) / (2.0 * np.sqrt(z_mean))
    _, _, vt = np.linalg.svd(np.column_stack([z0, x, y]), full_matrices=False)
    a = vt[2].copy()
    a[0] = a[0] / (2.0 * np.sqrt(z_mean))
    a = np.append(a, -z_mean * a[0])
    if abs(a[0]) < 1e-12:
        return CircleFit(centroid, np.inf, 0.0)
    center = -a[1:3] / a[0] / 2.0 + centroid
    radius = float(np.sqrt(a[1] ** 2 + a[2] ** 2 - 4.0 * a[0] * a[3]) / abs(a[0]) / 2.0)
    return CircleFit(center, radius, _rms(xy, center, radius))


def fit_fixed_radius(points: np.ndarray, radius: float,
                     guess: Optional[np.ndarray] = None) -> CircleFit:
    """Least-squares center of a circle of known radius through the points

    Both sides of the point cloud are tried as starting centers unless a
    guess is given; the better fit wins.
    """
    xy = np.asarray(points, dtype=float)
    if len(xy) < 2:
        raise InputError("a fixed-radius fit needs at least two points")
    if not radius > 0:
        raise InputError(f"radius must be positive, got {radius}")

    def residuals(c):
        return np.linalg.norm(xy - c, axis=1) - radius

    if guess is not None:
        starts = [np.asarray(guess, dtype=float)]
    else:
        centroid = xy.mean(axis=0)
        _, _, vt = np.linalg.svd(xy - centroid, full_matrices=False)
        normal = vt[1]
        starts = [centroid + radius * normal, centroid - radius * normal]
    best = None
    for start in starts:
        sol = least_squares(residuals, start, method="lm")
        fit = CircleFit(sol.x, float(radius), _rms(xy, sol.x, radius))
        if best is None or fit.rms < best.rms:
            best = fit
    return best


__all__ = ["CircleFit", "taubin_fit", "fit_fixed_radius"]
