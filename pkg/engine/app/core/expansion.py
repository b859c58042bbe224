"""Truncated spherical-wave expansion about a corner point.

    u(x) = 4π Σ_{n ≤ n_max} Σ_{|m| ≤ n} iⁿ a_n^m j_n(k r) Y_n^m(θ, φ),   k = √λ

Coefficients are stored flat with index n² + n + m (see ``ModeIndex.flat``).
Every trace used by the theorem engine and the oracle is a matrix acting on
that flat vector, so evaluation, fitting and collocation share one code path.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from app.config import settings
from app.core.errors import ConditioningError, DomainError
from app.core.geometry import Ray
from app.core.sampling import cartesian_to_spherical, spherical_to_cartesian
from app.core.specfun import (
    ModeIndex,
    harmonic_norm,
    legendre_dtheta_table,
    legendre_table,
    mode_arrays,
    mode_count,
    sph_bessel_jp_table,
    sph_bessel_series_table,
    sph_bessel_table,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

_CHUNK = 4096
_POLE_TOL = 1e-12


# ── Mode matrices ─────────────────────────────────────────────────────────────


def _wavenumber(lam: float) -> float:
    if not lam > 0.0:
        raise DomainError(f"eigenvalue λ must be positive, got {lam}")
    return math.sqrt(lam)


def _prefactors(n_max: int) -> tuple[NDArray[np.int64], NDArray[np.int64], ComplexArray]:
    degrees, orders = mode_arrays(n_max)
    norms = np.array([harmonic_norm(int(n), int(m)) for n, m in zip(degrees, orders)])
    return degrees, orders, 4.0 * math.pi * (1j ** degrees) * norms


def _angular(n_max: int, theta: FloatArray, phi: FloatArray) -> tuple[FloatArray, ComplexArray]:
    """P_n^{|m|}(cos θ) and e^{imφ}, each shaped (K, P)."""
    degrees, orders = mode_arrays(n_max)
    legendre = legendre_table(n_max, np.cos(theta))[degrees, np.abs(orders)]
    phase = np.exp(1j * np.outer(orders, phi))
    return legendre, phase


def _radii(r: ArrayLike, message: str, positive: bool = False) -> np.ndarray:
    """Flat radii; complex values (points on a collocation contour) pass through unchecked for sign."""
    arr = np.atleast_1d(np.asarray(r)).ravel()
    if np.iscomplexobj(arr):
        if positive and np.any(arr == 0.0):
            raise DomainError(message)
        return arr.astype(complex)
    arr = arr.astype(float)
    if np.any(arr < 0.0) or (positive and np.any(arr == 0.0)):
        raise DomainError(message)
    return arr


def _radial_table(n_max: int, kr: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(kr):
        return sph_bessel_series_table(n_max, kr)
    return sph_bessel_table(n_max, kr)


def mode_matrix(lam: float, n_max: int, r: ArrayLike, theta: ArrayLike, phi: ArrayLike) -> ComplexArray:
    """Values of every basis function 4π iⁿ j_n(kr) Y_n^m at (r, θ, φ); shape (P, K).

    ``r`` may be complex, which evaluates the entire radial factor off the real axis.
    """
    k = _wavenumber(lam)
    r = _radii(r, "radii must be non-negative")
    theta, phi = (np.atleast_1d(np.asarray(a, dtype=float)).ravel() for a in (theta, phi))
    degrees, _, pre = _prefactors(n_max)
    radial = _radial_table(n_max, k * r)[degrees]
    legendre, phase = _angular(n_max, theta, phi)
    return (pre[:, None] * radial * legendre * phase).T


def mode_matrix_cartesian(lam: float, n_max: int, points: ArrayLike) -> ComplexArray:
    r, theta, phi = cartesian_to_spherical(np.asarray(points, dtype=float).reshape(-1, 3))
    return mode_matrix(lam, n_max, r, theta, phi)


def _spherical_gradients(
    lam: float, n_max: int, r: FloatArray, theta: FloatArray, phi: FloatArray
) -> tuple[ComplexArray, ComplexArray, ComplexArray, ComplexArray]:
    """Basis values and their (∂_r, r⁻¹∂_θ, (r sinθ)⁻¹∂_φ) components, each (K, P)."""
    k = _wavenumber(lam)
    if np.any(r <= 0.0):
        raise DomainError("gradient traces need r > 0")
    sin_t = np.sin(theta)
    if np.any(sin_t < _POLE_TOL):
        raise DomainError("gradient traces need θ strictly inside (0, π)")
    degrees, orders, pre = _prefactors(n_max)
    kr = k * r
    j = sph_bessel_table(n_max, kr)[degrees]
    jp = sph_bessel_jp_table(n_max, kr)[degrees]
    legendre, phase = _angular(n_max, theta, phi)
    dlegendre = legendre_dtheta_table(n_max, theta)[degrees, np.abs(orders)]
    base = pre[:, None] * phase
    values = base * j * legendre
    d_r = base * k * jp * legendre
    j_over_r = j / r
    d_theta = base * j_over_r * dlegendre
    d_phi = base * j_over_r * legendre * (1j * orders[:, None]) / sin_t
    return values, d_r, d_theta, d_phi


def mode_gradient(lam: float, n_max: int, points: ArrayLike) -> tuple[ComplexArray, ComplexArray]:
    """Basis values (P, K) and Cartesian gradients (P, 3, K) at points off the x₃-axis."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    r, theta, phi = cartesian_to_spherical(pts)
    values, d_r, d_theta, d_phi = _spherical_gradients(lam, n_max, r, theta, phi)
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    r_hat = np.stack([st * cp, st * sp, ct])
    t_hat = np.stack([ct * cp, ct * sp, -st])
    p_hat = np.stack([-sp, cp, np.zeros_like(sp)])
    grad = d_r[None] * r_hat[:, None] + d_theta[None] * t_hat[:, None] + d_phi[None] * p_hat[:, None]
    return values.T, np.transpose(grad, (2, 0, 1))


# ── Trace matrices ────────────────────────────────────────────────────────────


def phi_trace_matrix(lam: float, n_max: int, phi0: float, r: ArrayLike, theta: ArrayLike) -> ComplexArray:
    """Rows u(r, θ, φ₀) for paired (r, θ) samples."""
    if not 0.0 <= phi0 < 2.0 * math.pi:
        raise DomainError(f"azimuth φ₀={phi0} outside [0, 2π)")
    r = _radii(r, "radii must be non-negative")
    return mode_matrix(lam, n_max, r, theta, np.full(r.shape, phi0))


def impedance_trace_matrix(
    lam: float,
    n_max: int,
    phi0: float,
    side: int,
    eta: complex,
    r: ArrayLike,
    theta: ArrayLike,
    scaled: bool = False,
) -> ComplexArray:
    """Rows ±(r sinθ)⁻¹ ∂_φ u + η u on the half-plane φ = φ₀.

    With ``scaled`` every row is multiplied by r sinθ, which leaves the
    constraint unchanged and keeps rows near the edge of comparable size.
    """
    if side not in (-1, 1):
        raise DomainError(f"side must be ±1, got {side}")
    r = _radii(r, "impedance trace needs r > 0", positive=True)
    theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
    sin_t = np.sin(theta)
    if np.any(theta <= 0.0) or np.any(theta >= math.pi) or np.any(sin_t < _POLE_TOL):
        raise DomainError("impedance trace needs θ strictly inside (0, π)")
    values = phi_trace_matrix(lam, n_max, phi0, r, theta)
    _, orders = mode_arrays(n_max)
    rs = (r * sin_t)[:, None]
    if scaled:
        return side * (1j * orders)[None, :] * values + eta * rs * values
    return side * (1j * orders)[None, :] * values / rs + eta * values


def plane_trace_matrix(
    lam: float, n_max: int, r: ArrayLike, directions: ArrayLike, normal: ArrayLike, eta: complex
) -> ComplexArray:
    """Rows r·(ν·∇u + η u) at the points r·ω of a plane through the origin with normal ν.

    ``r`` and the unit ``directions`` ω are paired.  Since ω ⊥ ν only the
    surface gradient of Y_n^m enters, so each row stays entire in r and
    complex radii are allowed.
    """
    k = _wavenumber(lam)
    r = _radii(r, "radii must be non-negative")
    dirs = np.asarray(directions, dtype=float).reshape(-1, 3)
    nu = np.asarray(normal, dtype=float)
    if dirs.shape[0] != r.size:
        raise DomainError(f"{r.size} radii but {dirs.shape[0]} directions")
    if np.any(np.abs(dirs @ nu) > 1e-10):
        raise DomainError("directions must lie in the plane orthogonal to ν")
    _, theta, phi = cartesian_to_spherical(dirs)
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    if np.any(st < _POLE_TOL):
        raise DomainError("plane trace needs directions off the x₃-axis")
    nu_theta = nu[0] * ct * cp + nu[1] * ct * sp - nu[2] * st
    nu_phi = -nu[0] * sp + nu[1] * cp
    degrees, orders, pre = _prefactors(n_max)
    radial = _radial_table(n_max, k * r)[degrees]
    legendre, phase = _angular(n_max, theta, phi)
    dlegendre = legendre_dtheta_table(n_max, theta)[degrees, np.abs(orders)]
    surface = dlegendre * nu_theta + legendre * (1j * orders[:, None]) * nu_phi / st
    return (pre[:, None] * phase * radial * (surface + eta * r * legendre)).T


def edge_line_matrix(lam: float, n_max: int, r: ArrayLike, side: int = 1) -> ComplexArray:
    """Rows u on the edge line (θ = 0 for side +1, θ = π for side −1) via P_n^m(±1)."""
    if side not in (-1, 1):
        raise DomainError(f"side must be ±1, got {side}")
    k = _wavenumber(lam)
    r = _radii(r, "radii must be non-negative")
    degrees, orders, pre = _prefactors(n_max)
    radial = _radial_table(n_max, k * r)[degrees]
    limit = np.where(orders == 0, float(side) ** degrees, 0.0)
    return (pre[:, None] * radial * limit[:, None]).T


# ── Expansion value type ──────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class Expansion:
    lam: float
    coeffs: ComplexArray

    def __post_init__(self) -> None:
        _wavenumber(self.lam)
        arr = np.array(self.coeffs, dtype=complex).ravel()
        n = math.isqrt(arr.size) - 1
        if arr.size == 0 or (n + 1) ** 2 != arr.size:
            raise DomainError(f"coefficient vector of length {arr.size} is not (n_max+1)²")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    # ── construction ──

    @classmethod
    def zeros(cls, lam: float, n_max: int) -> Expansion:
        return cls(lam, np.zeros(mode_count(n_max), dtype=complex))

    @classmethod
    def from_modes(cls, lam: float, n_max: int, modes: Mapping[ModeIndex, complex]) -> Expansion:
        coeffs = np.zeros(mode_count(n_max), dtype=complex)
        for idx, value in modes.items():
            if idx.n > n_max:
                raise DomainError(f"mode {idx} exceeds n_max={n_max}")
            coeffs[idx.flat] = value
        return cls(lam, coeffs)

    # ── accessors ──

    @property
    def n_max(self) -> int:
        return math.isqrt(self.coeffs.size) - 1

    @property
    def k(self) -> float:
        return math.sqrt(self.lam)

    def coefficient(self, idx: ModeIndex) -> complex:
        return complex(self.coeffs[idx.flat]) if idx.n <= self.n_max else 0j

    def padded(self, n_max: int) -> Expansion:
        if n_max < self.n_max:
            return Expansion(self.lam, self.coeffs[: mode_count(n_max)])
        coeffs = np.zeros(mode_count(n_max), dtype=complex)
        coeffs[: self.coeffs.size] = self.coeffs
        return Expansion(self.lam, coeffs)

    def degree_mass(self) -> FloatArray:
        """‖(a_n^m)_m‖₂ for every degree n."""
        degrees, _ = mode_arrays(self.n_max)
        return np.sqrt(np.bincount(degrees, weights=np.abs(self.coeffs) ** 2, minlength=self.n_max + 1))

    def leading_degree(self, tol: float = 0.0) -> int | None:
        mass = self.degree_mass()
        scale = max(float(mass.max()), 1e-300)
        hits = np.flatnonzero(mass > tol * scale)
        return int(hits[0]) if hits.size else None

    def tail_indicator(self, r_max: float) -> float:
        """Size of the highest retained degree's contribution at r_max."""
        top = self.n_max
        j = sph_bessel_table(top, self.k * r_max)[top]
        return float(4.0 * math.pi * self.degree_mass()[top] * abs(j))

    # ── arithmetic ──

    def __add__(self, other: Expansion) -> Expansion:
        if not isinstance(other, Expansion):
            return NotImplemented
        if self.lam != other.lam:
            raise DomainError(f"cannot add expansions with λ={self.lam} and λ={other.lam}")
        n_max = max(self.n_max, other.n_max)
        return Expansion(self.lam, self.padded(n_max).coeffs + other.padded(n_max).coeffs)

    def __mul__(self, scalar: complex) -> Expansion:
        return Expansion(self.lam, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    # ── evaluation ──

    def __call__(self, points: ArrayLike) -> ComplexArray:
        """u at Cartesian points (…, 3)."""
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 3)
        out = np.empty(flat.shape[0], dtype=complex)
        for start in range(0, flat.shape[0], _CHUNK):
            block = flat[start : start + _CHUNK]
            out[start : start + _CHUNK] = mode_matrix_cartesian(self.lam, self.n_max, block) @ self.coeffs
        return out.reshape(pts.shape[:-1])

    def gradient(self, points: ArrayLike) -> ComplexArray:
        """∇u at Cartesian points off the x₃-axis, shape (P, 3)."""
        _, grad = mode_gradient(self.lam, self.n_max, points)
        return grad @ self.coeffs

    # ── serialisation ──

    def to_json(self) -> str:
        degrees, orders = mode_arrays(self.n_max)
        rows = [
            [int(n), int(m), float(c.real), float(c.imag)] for n, m, c in zip(degrees, orders, self.coeffs)
        ]
        return json.dumps({"lambda": self.lam, "n_max": self.n_max, "coeffs": rows})

    @classmethod
    def from_json(cls, text: str) -> Expansion:
        doc = json.loads(text)
        coeffs = np.zeros(mode_count(int(doc["n_max"])), dtype=complex)
        for n, m, re, im in doc["coeffs"]:
            coeffs[ModeIndex(int(n), int(m)).flat] = complex(re, im)
        return cls(float(doc["lambda"]), coeffs)


@dataclass(frozen=True)
class TraceSample:
    r: float
    theta: float
    phi: float
    value: complex


# ── Public operations ─────────────────────────────────────────────────────────


def evaluate(e: Expansion, r: ArrayLike, theta: ArrayLike, phi: ArrayLike) -> ComplexArray | complex:
    """Truncated sum at spherical points; at r = 0 this is √(4π)·a_0^0."""
    shape = np.shape(r)
    values = mode_matrix(e.lam, e.n_max, r, theta, phi) @ e.coeffs
    return complex(values[0]) if shape == () else values.reshape(shape)


def _samples(r: FloatArray, theta: FloatArray, phi: FloatArray, values: ComplexArray) -> list[TraceSample]:
    return [TraceSample(float(a), float(b), float(c), complex(v)) for a, b, c, v in zip(r, theta, phi, values)]


def phi_trace(e: Expansion, phi0: float, r: ArrayLike, theta: ArrayLike) -> list[TraceSample]:
    r = np.atleast_1d(np.asarray(r, dtype=float)).ravel()
    theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
    values = phi_trace_matrix(e.lam, e.n_max, phi0, r, theta) @ e.coeffs
    return _samples(r, theta, np.full(r.shape, phi0), values)


def impedance_trace(
    e: Expansion, phi0: float, side: int, eta: complex, r: ArrayLike, theta: ArrayLike
) -> list[TraceSample]:
    r = np.atleast_1d(np.asarray(r, dtype=float)).ravel()
    theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
    values = impedance_trace_matrix(e.lam, e.n_max, phi0, side, eta, r, theta) @ e.coeffs
    return _samples(r, theta, np.full(r.shape, phi0), values)


def ray_impedance_trace(e: Expansion, ray: Ray, nu: ArrayLike, eta: complex, r: ArrayLike) -> list[TraceSample]:
    """(1/r)∂_θu (ν·θ̂) + (r sinθ)⁻¹∂_φu (ν·φ̂) + ηu along a ray, for ν tangent to it."""
    nu = np.asarray(nu, dtype=float)
    if abs(float(np.linalg.norm(nu)) - 1.0) > 1e-10:
        raise DomainError("ν must be a unit vector")
    direction = ray.direction()
    if abs(float(nu @ direction)) > 1e-10:
        raise DomainError("ν has a radial component along the ray; it cannot be a plane normal")
    r = np.atleast_1d(np.asarray(r, dtype=float)).ravel()
    theta = np.full(r.shape, ray.theta)
    phi = np.full(r.shape, ray.phi)
    _, _, d_theta, d_phi = _spherical_gradients(e.lam, e.n_max, r, theta, phi)
    values = mode_matrix(e.lam, e.n_max, r, theta, phi)
    ct, st, cp, sp = math.cos(ray.theta), math.sin(ray.theta), math.cos(ray.phi), math.sin(ray.phi)
    nu_theta = float(nu @ np.array([ct * cp, ct * sp, -st]))
    nu_phi = float(nu @ np.array([-sp, cp, 0.0]))
    rows = nu_theta * d_theta.T + nu_phi * d_phi.T + eta * values
    return _samples(r, theta, phi, rows @ e.coeffs)


def edge_line_trace(e: Expansion, r: ArrayLike, side: int = 1) -> list[TraceSample]:
    r = np.atleast_1d(np.asarray(r, dtype=float)).ravel()
    values = edge_line_matrix(e.lam, e.n_max, r, side) @ e.coeffs
    theta = 0.0 if side == 1 else math.pi
    return _samples(r, np.full(r.shape, theta), np.zeros(r.shape), values)


def plane_wave_expansion(k: float, direction: ArrayLike, n_max: int | None = None) -> Expansion:
    """e^{ik x·d} truncated at n_max (default DEFAULT_N_MAX): a_n^m = conj(Y_n^m(d))."""
    n_max = settings.DEFAULT_N_MAX if n_max is None else n_max
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    _, theta_d, phi_d = cartesian_to_spherical(d[None, :])
    degrees, orders = mode_arrays(n_max)
    legendre, phase = _angular(n_max, theta_d, phi_d)
    norms = np.array([harmonic_norm(int(n), int(m)) for n, m in zip(degrees, orders)])
    return Expansion(k * k, np.conj(norms * legendre[:, 0] * phase[:, 0]))


@dataclass(frozen=True)
class FitResult:
    expansion: Expansion
    residual: float
    condition_number: float


def fit_from_samples(
    points: ArrayLike, values: ArrayLike, lam: float, n_max: int, rcond: float | None = None
) -> FitResult:
    """Least-squares coefficients from point samples, via an equilibrated SVD."""
    rcond = settings.FIT_RCOND if rcond is None else rcond
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    rhs = np.asarray(values, dtype=complex).ravel()
    unknowns = mode_count(n_max)
    if pts.shape[0] != rhs.size:
        raise DomainError(f"{pts.shape[0]} points but {rhs.size} values")
    if pts.shape[0] < 2 * unknowns:
        raise DomainError(f"need ≥ {2 * unknowns} samples for n_max={n_max}, got {pts.shape[0]}")
    design = mode_matrix_cartesian(lam, n_max, pts)
    col_norms = np.linalg.norm(design, axis=0)
    if np.any(col_norms == 0.0):
        raise ConditioningError("sample set annihilates some basis function", math.inf)
    u, s, vh = linalg.svd(design / col_norms, full_matrices=False)
    condition = float(s[0] / s[-1]) if s[-1] > 0.0 else math.inf
    if s[-1] < rcond * s[0]:
        raise ConditioningError(f"rank-deficient sampling for n_max={n_max}", condition)
    coeffs = (vh.conj().T @ ((u.conj().T @ rhs) / s)) / col_norms
    misfit = float(np.linalg.norm(design @ coeffs - rhs))
    scale = float(np.linalg.norm(rhs))
    residual = misfit / scale if scale > 0.0 else misfit
    logger.debug("fit n_max=%d samples=%d cond=%.3e residual=%.3e", n_max, pts.shape[0], condition, residual)
    return FitResult(Expansion(lam, coeffs), residual, condition)


def points_from_spherical(r: ArrayLike, theta: ArrayLike, phi: ArrayLike) -> FloatArray:
    return spherical_to_cartesian(np.asarray(r, float), np.asarray(theta, float), np.asarray(phi, float))
