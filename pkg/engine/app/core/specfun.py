"""Special-function kernels for the spherical-wave expansion.

Conventions (used consistently by every other module):
  * P_n^m carries the Condon–Shortley phase, so P_1^1(cos θ) = −sin θ.
  * Y_n^m = N_n^{|m|} · P_n^{|m|}(cos θ) · e^{imφ}.  Negative orders reuse
    P_n^{|m|} directly; the (−1)^m reflection is never applied.
  * j_n(t) is summed from its power series when t < max(1, n/2) and taken
    from Miller's downward recurrence otherwise; complex arguments always use
    the series.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from app.core.errors import DomainError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

_SERIES_MAX_TERMS = 400
_RESCALE_AT = 1e150


# ── Mode bookkeeping ──────────────────────────────────────────────────────────


@dataclass(frozen=True, order=True)
class ModeIndex:
    """Index (n, m) of a coefficient a_n^m."""

    n: int
    m: int

    def __post_init__(self) -> None:
        if self.n < 0 or abs(self.m) > self.n:
            raise DomainError(f"invalid mode (n={self.n}, m={self.m}): need 0 ≤ |m| ≤ n")

    @property
    def flat(self) -> int:
        """Position in the flat coefficient vector, k = n² + n + m."""
        return self.n * self.n + self.n + self.m

    @classmethod
    def from_flat(cls, k: int) -> ModeIndex:
        if k < 0:
            raise DomainError(f"flat mode index must be non-negative, got {k}")
        n = math.isqrt(k)
        return cls(n, k - n * n - n)


def mode_count(n_max: int) -> int:
    return (n_max + 1) ** 2


@lru_cache(maxsize=64)
def mode_arrays(n_max: int) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """Degree and order of every flat index up to ``n_max`` (read-only)."""
    if n_max < 0:
        raise DomainError(f"n_max must be non-negative, got {n_max}")
    degrees = np.concatenate([np.full(2 * n + 1, n) for n in range(n_max + 1)])
    orders = np.concatenate([np.arange(-n, n + 1) for n in range(n_max + 1)])
    degrees.setflags(write=False)
    orders.setflags(write=False)
    return degrees, orders


@dataclass(frozen=True)
class SphericalDirection:
    theta: float
    phi: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= math.pi:
            raise DomainError(f"polar angle {self.theta} outside [0, π]")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise DomainError(f"azimuth {self.phi} outside [0, 2π)")

    @classmethod
    def from_vector(cls, v: ArrayLike) -> SphericalDirection:
        x, y, z = np.asarray(v, dtype=float)
        norm = math.sqrt(x * x + y * y + z * z)
        if norm == 0.0:
            raise DomainError("zero vector has no direction")
        theta = math.acos(max(-1.0, min(1.0, z / norm)))
        phi = math.atan2(y, x) % (2.0 * math.pi)
        return cls(theta, phi)

    def unit_vector(self) -> FloatArray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


# ── Spherical Bessel functions ────────────────────────────────────────────────


def _check_degree(n: int) -> None:
    if int(n) != n or n < 0:
        raise DomainError(f"degree must be a non-negative integer, got {n}")


def _as_arguments(t: ArrayLike) -> FloatArray:
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise DomainError("spherical Bessel argument must be non-negative")
    return arr


def _double_factorial_odd(n: int) -> float:
    """(2n+1)!! as a float."""
    return float(math.prod(range(1, 2 * n + 2, 2)))


def sph_bessel_j_series(n: int, t: ArrayLike, terms: int | None = None) -> FloatArray:
    """Power series j_n(t) = Σ_p (−t²/2)^p / p! · t^n / (2n+2p+1)!!.

    With ``terms`` given, exactly that many terms are summed; otherwise the
    sum stops once the next term no longer changes the result.
    """
    _check_degree(n)
    t = _as_arguments(t)
    term = t**n / _double_factorial_odd(n)
    total = term.copy()
    half_sq = -0.5 * t * t
    limit = terms if terms is not None else _SERIES_MAX_TERMS
    for p in range(1, limit):
        term = term * half_sq / (p * (2 * n + 2 * p + 1))
        total = total + term
        if terms is None and np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _miller_table(n_max: int, t: FloatArray) -> FloatArray:
    """Downward recurrence for j_0 … j_n_max at strictly positive ``t``."""
    n_top = max(n_max, 1)
    start = int(1.5 * max(float(t.max()), n_top)) + 40
    table = np.zeros((n_top + 1, t.size))
    upper = np.zeros_like(t)
    current = np.full_like(t, 1e-30)
    for ell in range(start, 0, -1):
        lower = (2 * ell + 1) / t * current - upper
        upper, current = current, lower
        if ell - 1 <= n_top:
            table[ell - 1] = current
        big = np.abs(current) > _RESCALE_AT
        if np.any(big):
            upper[big] /= _RESCALE_AT
            current[big] /= _RESCALE_AT
            table[:, big] /= _RESCALE_AT
    j0 = np.sin(t) / t
    j1 = np.sin(t) / (t * t) - np.cos(t) / t
    # Normalise against whichever closed form is farther from a zero.
    use_j0 = np.abs(j0) >= np.abs(j1)
    scale = np.where(use_j0, j0 / table[0], j1 / table[1])
    return (table * scale)[: n_max + 1]


def sph_bessel_j_recurrence(n: int, t: ArrayLike) -> FloatArray:
    """j_n(t) from the downward recurrence alone (t > 0)."""
    _check_degree(n)
    arr = _as_arguments(t)
    flat = np.atleast_1d(arr).ravel()
    if np.any(flat == 0.0):
        raise DomainError("recurrence branch needs t > 0")
    return _miller_table(n, flat)[n].reshape(arr.shape)


def sph_bessel_table(n_max: int, t: ArrayLike) -> FloatArray:
    """Rows j_0(t) … j_{n_max}(t); shape (n_max + 1, *t.shape)."""
    _check_degree(n_max)
    arr = _as_arguments(t)
    flat = np.atleast_1d(arr).ravel()
    out = np.empty((n_max + 1, flat.size))
    large = flat >= 1.0
    recurred = _miller_table(n_max, flat[large]) if np.any(large) else None
    for n in range(n_max + 1):
        series = flat < max(1.0, n / 2.0)
        if np.any(series):
            out[n, series] = sph_bessel_j_series(n, flat[series])
        rest = ~series
        if np.any(rest) and recurred is not None:
            out[n, rest] = recurred[n, rest[large]]
    return out.reshape((n_max + 1,) + arr.shape)


def sph_bessel_series_table(n_max: int, z: ArrayLike) -> ComplexArray:
    """Rows j_0(z) … j_{n_max}(z) for complex ``z``, summed from the power series.

    Used on complex collocation contours; |z| of a few units keeps the
    cancellation between terms harmless.
    """
    _check_degree(n_max)
    arr = np.asarray(z, dtype=complex)
    if np.any(~np.isfinite(arr)):
        raise DomainError("spherical Bessel argument must be finite")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty((n_max + 1, flat.size), dtype=complex)
    half_sq = -0.5 * flat * flat
    power = np.ones_like(flat)
    for n in range(n_max + 1):
        term = power / _double_factorial_odd(n)
        total = term.copy()
        lead = np.abs(term)
        for p in range(1, _SERIES_MAX_TERMS):
            term = term * half_sq / (p * (2 * n + 2 * p + 1))
            total = total + term
            if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), lead)):
                break
        out[n] = total
        power = power * flat
    return out.reshape((n_max + 1,) + arr.shape)


def sph_bessel_j(n: int, t: ArrayLike) -> FloatArray | float:
    """Spherical Bessel function of the first kind j_n(t), t ≥ 0."""
    _check_degree(n)
    values = sph_bessel_table(n, t)[n]
    return float(values) if np.ndim(values) == 0 else values


def sph_bessel_jp_table(n_max: int, t: ArrayLike) -> FloatArray:
    """Rows j_n'(t) from (2n+1) j_n' = n j_{n−1} − (n+1) j_{n+1}; regular at t = 0."""
    table = sph_bessel_table(n_max + 1, t)
    out = np.empty_like(table[: n_max + 1])
    out[0] = -table[1]
    for n in range(1, n_max + 1):
        out[n] = (n * table[n - 1] - (n + 1) * table[n + 1]) / (2 * n + 1)
    return out


# ── Associated Legendre functions ─────────────────────────────────────────────


def _as_cosines(x: ArrayLike) -> FloatArray:
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-14):
        raise DomainError("Legendre argument must lie in [−1, 1]")
    return np.clip(arr, -1.0, 1.0)


def legendre_table(n_max: int, x: ArrayLike) -> FloatArray:
    """P_n^m(x) for 0 ≤ m ≤ n ≤ n_max; shape (n_max+1, n_max+1, *x.shape), zero above m = n."""
    _check_degree(n_max)
    arr = _as_cosines(x)
    flat = np.atleast_1d(arr).ravel()
    sine = np.sqrt(np.clip(1.0 - flat * flat, 0.0, None))
    table = np.zeros((n_max + 1, n_max + 1, flat.size))
    diagonal = np.ones_like(flat)
    for m in range(n_max + 1):
        if m > 0:
            diagonal = -(2 * m - 1) * sine * diagonal
        table[m, m] = diagonal
        if m + 1 <= n_max:
            table[m + 1, m] = (2 * m + 1) * flat * diagonal
        for n in range(m + 2, n_max + 1):
            table[n, m] = ((2 * n - 1) * flat * table[n - 1, m] - (n + m - 1) * table[n - 2, m]) / (n - m)
    return table.reshape((n_max + 1, n_max + 1) + arr.shape)


def assoc_legendre(n: int, m: int, x: ArrayLike) -> FloatArray | float:
    """P_n^m(x) with the Condon–Shortley phase, 0 ≤ m ≤ n."""
    _check_degree(n)
    if m < 0 or m > n:
        raise DomainError(f"order m={m} must satisfy 0 ≤ m ≤ n={n}")
    values = legendre_table(n, x)[n, m]
    return float(values) if np.ndim(values) == 0 else values


def legendre_column(n_max: int, m: int, x: ArrayLike) -> FloatArray:
    """P_n^m(x) for n = 0 … n_max at a single order m (zero where n < m)."""
    _check_degree(n_max)
    if m < 0:
        raise DomainError(f"order m={m} must be non-negative")
    arr = _as_cosines(x)
    flat = np.atleast_1d(arr).ravel()
    out = np.zeros((n_max + 1, flat.size))
    if m > n_max:
        return out.reshape((n_max + 1,) + arr.shape)
    sine = np.sqrt(np.clip(1.0 - flat * flat, 0.0, None))
    diagonal = np.ones_like(flat)
    for k in range(1, m + 1):
        diagonal = -(2 * k - 1) * sine * diagonal
    out[m] = diagonal
    if m + 1 <= n_max:
        out[m + 1] = (2 * m + 1) * flat * diagonal
    for n in range(m + 2, n_max + 1):
        out[n] = ((2 * n - 1) * flat * out[n - 1] - (n + m - 1) * out[n - 2]) / (n - m)
    return out.reshape((n_max + 1,) + arr.shape)


def _check_interior(theta: FloatArray) -> None:
    sin_theta = np.sin(theta)
    if np.any(theta <= 0.0) or np.any(theta >= math.pi) or np.any(sin_theta == 0.0):
        raise DomainError("θ-derivative needs θ strictly inside (0, π)")


def legendre_dtheta_table(n_max: int, theta: ArrayLike) -> FloatArray:
    """d/dθ P_n^m(cos θ) for all 0 ≤ m ≤ n ≤ n_max.

    m = 0 uses d/dθ P_n(cos θ) = P_n^1(cos θ); m ≥ 1 uses
    ½[P_n^{m+1} − (n+m)(n−m+1) P_n^{m−1}].
    """
    arr = np.asarray(theta, dtype=float)
    _check_interior(arr)
    p = legendre_table(n_max, np.cos(arr))
    out = np.zeros_like(p)
    for n in range(1, n_max + 1):
        out[n, 0] = p[n, 1]
        for m in range(1, n + 1):
            above = p[n, m + 1] if m + 1 <= n else 0.0
            out[n, m] = 0.5 * (above - (n + m) * (n - m + 1) * p[n, m - 1])
    return out


def assoc_legendre_dtheta(n: int, m: int, theta: ArrayLike) -> FloatArray | float:
    _check_degree(n)
    if m < 0 or m > n:
        raise DomainError(f"order m={m} must satisfy 0 ≤ m ≤ n={n}")
    values = legendre_dtheta_table(n, theta)[n, m]
    return float(values) if np.ndim(values) == 0 else values


# ── Spherical harmonics ───────────────────────────────────────────────────────


@lru_cache(maxsize=4096)
def harmonic_norm(n: int, m: int) -> float:
    """sqrt((2n+1)/(4π) · (n−|m|)!/(n+|m|)!), evaluated through log-gamma."""
    a = abs(m)
    log_value = math.log((2 * n + 1) / (4.0 * math.pi)) + math.lgamma(n - a + 1) - math.lgamma(n + a + 1)
    return math.exp(0.5 * log_value)


def sph_harmonic(idx: ModeIndex, direction: SphericalDirection) -> complex:
    a = abs(idx.m)
    p = assoc_legendre(idx.n, a, math.cos(direction.theta))
    return harmonic_norm(idx.n, a) * float(p) * complex(math.cos(idx.m * direction.phi), math.sin(idx.m * direction.phi))


# ── Orthogonality & independence checks ───────────────────────────────────────


def legendre_orthogonality(n: int, m: int, l: int, nodes: int = 512) -> float:
    """∫_{−1}^{1} P_n^m P_n^l / (1−x²) dx, integrated in θ where the integrand is smooth."""
    _check_degree(n)
    if not (0 <= m <= n and 0 <= l <= n):
        raise DomainError(f"orders ({m}, {l}) must lie in [0, {n}]")
    if m == 0 and l == 0:
        raise DomainError("the m = l = 0 integral diverges")
    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = 0.5 * math.pi * (x + 1.0)
    p = legendre_table(n, np.cos(theta))
    integrand = p[n, m] * p[n, l] / np.sin(theta)
    return float(0.5 * math.pi * np.dot(w, integrand))


def legendre_orthogonality_norm(n: int, m: int) -> float:
    """(n+m)! / (m · (n−m)!) for 1 ≤ m ≤ n."""
    if not 1 <= m <= n:
        raise DomainError(f"closed form needs 1 ≤ m ≤ n, got m={m}, n={n}")
    return math.factorial(n + m) / (m * math.factorial(n - m))


@dataclass(frozen=True)
class ColumnIndependence:
    """Smallest relative singular value of a column-normalised sample matrix."""

    sigma_min: float
    null_vector: FloatArray  # unit coefficients of the combination closest to zero
    dependent: bool


@dataclass(frozen=True)
class BesselIndependence:
    gram_sigma_min: float
    columns: ColumnIndependence

    @property
    def dependent(self) -> bool:
        return self.columns.dependent


def bessel_gram(n_max: int, h: float = 1.0, nodes: int = 64) -> FloatArray:
    """G_nk = ∫_0^h j_n(t) j_k(t) dt by Gauss–Legendre."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * h * (x + 1.0)
    table = sph_bessel_table(n_max, t)
    return (table * (0.5 * h * w)) @ table.T


def column_independence(design: ArrayLike, tol: float = 1e-12) -> ColumnIndependence:
    """Columns count as dependent when σ_min/σ_max ≤ ``tol`` after normalising each column."""
    a = np.asarray(design, dtype=float)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise DomainError(f"need at least as many samples as functions, got shape {a.shape}")
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0.0):
        vector = (norms == 0.0).astype(float)
        return ColumnIndependence(0.0, vector / np.linalg.norm(vector), True)
    _, s, vh = linalg.svd(a / norms, full_matrices=False)
    vector = vh[-1] / norms
    sigma = float(s[-1] / s[0])
    return ColumnIndependence(sigma, vector / np.linalg.norm(vector), sigma <= tol)


def bessel_independence(n_max: int = 12, h: float = 1.0, samples: int = 200, tol: float = 1e-12) -> BesselIndependence:
    """Whether j_0 … j_{n_max} sampled on (0, h) admit a vanishing combination Σ α_n j_n."""
    gram_sigma = float(linalg.svdvals(bessel_gram(n_max, h))[-1])
    t = np.linspace(0.0, h, samples + 2)[1:-1]
    report = column_independence(sph_bessel_table(n_max, t).T, tol)
    logger.debug("bessel independence n_max=%d h=%g: σ_min=%.3e", n_max, h, report.sigma_min)
    return BesselIndependence(gram_sigma_min=gram_sigma, columns=report)
