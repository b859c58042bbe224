"""Deterministic node sets: Gauss–Legendre, complex radial contours, sphere point sets."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray

from app.core.errors import DomainError

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def gauss_legendre(count: int, lower: float, upper: float) -> tuple[FloatArray, FloatArray]:
    """Nodes and weights on [lower, upper]."""
    if count < 1:
        raise DomainError(f"need at least one quadrature node, got {count}")
    x, w = np.polynomial.legendre.leggauss(count)
    half = 0.5 * (upper - lower)
    return lower + half * (x + 1.0), half * w


def contour_radii(count: int, radius: float) -> ComplexArray:
    """Equispaced complex radii R·e^{2πij/count} on the circle |r| = R."""
    if count < 1 or radius <= 0.0:
        raise DomainError(f"invalid radial contour (count={count}, radius={radius})")
    return radius * np.exp(2j * math.pi * np.arange(count) / count)


def fibonacci_sphere(count: int) -> FloatArray:
    """Near-uniform unit vectors, shape (count, 3)."""
    if count < 1:
        raise DomainError(f"need at least one point, got {count}")
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = _GOLDEN_ANGLE * k
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def sphere_quadrature(n_theta: int, n_phi: int | None = None) -> tuple[FloatArray, FloatArray]:
    """Product rule on S²: Gauss–Legendre in cos θ, trapezoid in φ.

    Returns unit directions (n_theta·n_phi, 3) and weights summing to 4π.
    """
    n_phi = 2 * n_theta if n_phi is None else n_phi
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    sin_t = np.sqrt(1.0 - x * x)
    dirs = np.stack(
        [
            np.outer(sin_t, np.cos(phi)),
            np.outer(sin_t, np.sin(phi)),
            np.outer(x, np.ones(n_phi)),
        ],
        axis=-1,
    ).reshape(-1, 3)
    weights = np.outer(wx, np.full(n_phi, 2.0 * math.pi / n_phi)).ravel()
    return dirs, weights


def cartesian_to_spherical(points: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray]:
    """(r, θ, φ) of Cartesian points (…, 3); θ = 0 at the origin."""
    pts = np.asarray(points, dtype=float)
    r = np.linalg.norm(pts, axis=-1)
    safe = np.where(r > 0.0, r, 1.0)
    theta = np.arccos(np.clip(pts[..., 2] / safe, -1.0, 1.0))
    phi = np.mod(np.arctan2(pts[..., 1], pts[..., 0]), 2.0 * math.pi)
    return r, theta, phi


def spherical_to_cartesian(r: FloatArray, theta: FloatArray, phi: FloatArray) -> FloatArray:
    st = np.sin(theta)
    return np.stack([r * st * np.cos(phi), r * st * np.sin(phi), r * np.cos(theta)], axis=-1)
