"""Corner geometry: boundary conditions, edge and vertex corners, rationality.

Frames
  * Edge corner: the edge is the x₃-axis, Π₁ is the half-plane φ = 0 and
    Π₂ the half-plane φ = απ, so the wedge interior is 0 < φ < απ.
  * Vertex corner: an ordered fan of unit rays r_0 … r_{n−1}; plane i is
    spanned by r_i and r_{i+1} (indices mod n) and carries ``bcs[i]``.
    Edge corner ℓ is formed by planes ℓ and ℓ+1 along their shared ray r_{ℓ+1}.
"""

from __future__ import annotations

import cmath
import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.config import settings
from app.core.errors import DegenerateGeometryError, DomainError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
Vec3 = tuple[float, float, float]

_PARALLEL_TOL = 1e-12
_SIDE_TOL = 1e-12


# ── Boundary conditions ───────────────────────────────────────────────────────


class BCKind(str, Enum):
    NODAL = "nodal"
    SINGULAR = "singular"
    GENERALIZED_SINGULAR = "generalized_singular"


@dataclass(frozen=True)
class BoundaryCondition:
    """Condition attached to a plane: u = 0, ∂_ν u = 0, or ∂_ν u + η u = 0."""

    kind: BCKind
    eta: complex | None = None

    def __post_init__(self) -> None:
        if self.kind is BCKind.GENERALIZED_SINGULAR:
            if self.eta is None or self.eta == 0 or not cmath.isfinite(complex(self.eta)):
                raise DomainError(f"generalized-singular plane needs a finite nonzero η, got {self.eta}")
            object.__setattr__(self, "eta", complex(self.eta))
        elif self.eta is not None:
            raise DomainError(f"{self.kind.value} plane carries no η (got {self.eta})")

    @classmethod
    def nodal(cls) -> BoundaryCondition:
        return cls(BCKind.NODAL)

    @classmethod
    def singular(cls) -> BoundaryCondition:
        return cls(BCKind.SINGULAR)

    @classmethod
    def impedance(cls, eta: complex) -> BoundaryCondition:
        return cls(BCKind.GENERALIZED_SINGULAR, complex(eta))

    @property
    def is_nodal(self) -> bool:
        return self.kind is BCKind.NODAL

    @property
    def effective_eta(self) -> complex:
        """η of the Robin trace; 0 for a singular plane."""
        if self.kind is BCKind.NODAL:
            raise DomainError("a nodal plane has no impedance trace")
        return self.eta if self.eta is not None else 0j

    @property
    def label(self) -> str:
        if self.kind is BCKind.GENERALIZED_SINGULAR:
            return f"Impedance(η={self.eta.real:g}{self.eta.imag:+g}i)"  # type: ignore[union-attr]
        return self.kind.value.capitalize()


# ── Corners ───────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class EdgeCorner:
    alpha: float
    bc1: BoundaryCondition
    bc2: BoundaryCondition
    aux_line_zero: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"dihedral fraction α={self.alpha} must lie strictly in (0, 1)")

    @property
    def label(self) -> str:
        return f"{self.bc1.label}/{self.bc2.label}"


@dataclass(frozen=True)
class Ray:
    """Unit ray (θ, φ) off the poles."""

    theta: float
    phi: float

    def __post_init__(self) -> None:
        if not 0.0 < self.theta < math.pi:
            raise DomainError(f"ray polar angle {self.theta} must lie in (0, π)")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise DomainError(f"ray azimuth {self.phi} must lie in [0, 2π)")

    def direction(self) -> FloatArray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


def _unit(v: ArrayLike) -> FloatArray:
    arr = np.asarray(v, dtype=float).reshape(3)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise DegenerateGeometryError("zero vector cannot define a ray")
    return arr / norm


def _as_vector(ray: Ray | ArrayLike) -> FloatArray:
    return ray.direction() if isinstance(ray, Ray) else _unit(ray)


@dataclass(frozen=True)
class VertexCorner:
    """Convex polyhedral cone given by its ordered rays and per-plane conditions."""

    rays: tuple[Vec3, ...]
    bcs: tuple[BoundaryCondition, ...]
    aux_vertex_zero: bool = False
    _directions: FloatArray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.rays) < 3:
            raise DegenerateGeometryError(f"a vertex corner needs at least 3 rays, got {len(self.rays)}")
        if len(self.bcs) != len(self.rays):
            raise DomainError(f"{len(self.rays)} planes need {len(self.rays)} conditions, got {len(self.bcs)}")
        directions = np.array([_unit(r) for r in self.rays])
        object.__setattr__(self, "rays", tuple(tuple(float(c) for c in d) for d in directions))
        object.__setattr__(self, "bcs", tuple(self.bcs))
        directions.setflags(write=False)
        object.__setattr__(self, "_directions", directions)
        self._check_convex()

    def _check_convex(self) -> None:
        n = self.size
        for i in range(n):
            normal = np.cross(self._directions[i], self._directions[(i + 1) % n])
            if np.linalg.norm(normal) < _PARALLEL_TOL:
                raise DegenerateGeometryError(f"rays {i} and {(i + 1) % n} are parallel")
            sides = [float(normal @ self._directions[k]) for k in range(n) if k not in (i, (i + 1) % n)]
            if min(abs(s) for s in sides) < _SIDE_TOL or (min(sides) < 0.0 < max(sides)):
                raise DegenerateGeometryError(f"plane {i} does not bound a convex cone")

    # ── constructors ──

    @classmethod
    def from_rays(
        cls, rays: Sequence[Ray], bcs: Sequence[BoundaryCondition], aux_vertex_zero: bool = False
    ) -> VertexCorner:
        return cls(tuple(tuple(r.direction()) for r in rays), tuple(bcs), aux_vertex_zero)

    @classmethod
    def canonical(
        cls,
        alpha: float,
        theta1: float,
        theta2: float,
        bcs: Sequence[BoundaryCondition],
        aux_vertex_zero: bool = False,
    ) -> VertexCorner:
        """Rays a = (θ₁, 0), x̂₃, b = (θ₂, απ): Π₁ ∋ a, Π₂ ∋ b, the third plane spans b and a."""
        if not 0.0 < alpha < 1.0:
            raise DomainError(f"dihedral fraction α={alpha} must lie strictly in (0, 1)")
        a = Ray(theta1, 0.0).direction()
        b = Ray(theta2, alpha * math.pi).direction()
        return cls((tuple(a), (0.0, 0.0, 1.0), tuple(b)), tuple(bcs), aux_vertex_zero)

    @classmethod
    def from_plane_normals(
        cls, normals: Sequence[ArrayLike], bcs: Sequence[BoundaryCondition], aux_vertex_zero: bool = False
    ) -> VertexCorner:
        """Cone {x : n_i · x ≥ 0}; ray i+1 is the edge shared by planes i and i+1."""
        inward = [_unit(n) for n in normals]
        count = len(inward)
        rays: list[FloatArray] = [np.zeros(3)] * count
        for i in range(count):
            edge = np.cross(inward[i], inward[(i + 1) % count])
            if np.linalg.norm(edge) < _PARALLEL_TOL:
                raise DegenerateGeometryError(f"planes {i} and {(i + 1) % count} are parallel")
            edge = _unit(edge)
            if sum(float(inward[k] @ edge) for k in range(count)) < 0.0:
                edge = -edge
            rays[(i + 1) % count] = edge
        return cls(tuple(tuple(r) for r in rays), tuple(bcs), aux_vertex_zero)

    @classmethod
    def from_dihedrals(
        cls, fractions: Sequence[float], bcs: Sequence[BoundaryCondition], aux_vertex_zero: bool = False
    ) -> VertexCorner:
        """Trihedral cone whose dihedral angle along ray k is fractions[k]·π."""
        if len(fractions) != 3:
            raise DomainError("dihedral construction supports trihedral cones only")
        g = [f * math.pi for f in fractions]
        sides = []
        for k in range(3):
            a, b, c = g[k], g[(k + 1) % 3], g[(k + 2) % 3]
            cos_side = (math.cos(a) + math.cos(b) * math.cos(c)) / (math.sin(b) * math.sin(c))
            if not -1.0 < cos_side < 1.0:
                raise DegenerateGeometryError(f"dihedral fractions {tuple(fractions)} admit no trihedral cone")
            sides.append(math.acos(cos_side))
        r0 = np.array([0.0, 0.0, 1.0])
        r1 = np.array([math.sin(sides[2]), 0.0, math.cos(sides[2])])
        r2 = np.array([math.sin(sides[1]) * math.cos(g[0]), math.sin(sides[1]) * math.sin(g[0]), math.cos(sides[1])])
        return cls((tuple(r0), tuple(r1), tuple(r2)), tuple(bcs), aux_vertex_zero)

    # ── accessors ──

    @property
    def size(self) -> int:
        return len(self.rays)

    @property
    def directions(self) -> FloatArray:
        return self._directions

    def plane_rays(self, i: int) -> tuple[FloatArray, FloatArray]:
        n = self.size
        return self._directions[i % n], self._directions[(i + 1) % n]

    @property
    def axis(self) -> FloatArray:
        """Interior direction (normalised sum of rays)."""
        return _unit(self._directions.sum(axis=0))


# ── Rationality ───────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class RationalityClass:
    """Rational{p, q} (α = q/p, irreducible) or Irrational{Q}."""

    denominator_bound: int
    p: int | None = None
    q: int | None = None

    def __post_init__(self) -> None:
        if (self.p is None) != (self.q is None):
            raise DomainError("rational class needs both p and q")
        if self.p is not None and math.gcd(self.p, self.q or 0) != 1:
            raise DomainError(f"{self.q}/{self.p} is not irreducible")

    @property
    def is_rational(self) -> bool:
        return self.p is not None

    @property
    def label(self) -> str:
        return f"Rational{{p={self.p}, q={self.q}}}" if self.is_rational else f"Irrational{{Q={self.denominator_bound}}}"


def convergents(alpha: float, max_den: int) -> Iterator[Fraction]:
    """Continued-fraction convergents of ``alpha`` with denominator ≤ ``max_den``."""
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    x = alpha
    while True:
        a = math.floor(x)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if k > max_den:
            return
        yield Fraction(h, k)
        rest = x - a
        if rest < 1e-15:
            return
        x = 1.0 / rest


def classify_angle(alpha: float, Q: int | None = None, eps: float | None = None) -> RationalityClass:
    """Rational{p, q} iff some irreducible q/p with p ≤ Q lies within ε of α."""
    Q = settings.RATIONAL_DENOMINATOR_BOUND if Q is None else Q
    eps = settings.RATIONAL_EPS if eps is None else eps
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"dihedral fraction α={alpha} must lie strictly in (0, 1)")
    if Q < 2:
        raise DomainError(f"denominator bound must be ≥ 2, got {Q}")
    for frac in convergents(alpha, Q):
        if frac.numerator > 0 and abs(alpha - frac.numerator / frac.denominator) <= eps:
            return RationalityClass(Q, p=frac.denominator, q=frac.numerator)
    return RationalityClass(Q)


# ── Ray / plane algebra ───────────────────────────────────────────────────────


def plane_normal_from_rays(a: Ray | ArrayLike, b: Ray | ArrayLike) -> FloatArray:
    """Unit normal b × a of the plane spanned by two rays."""
    cross = np.cross(_as_vector(b), _as_vector(a))
    norm = float(np.linalg.norm(cross))
    if norm < _PARALLEL_TOL:
        raise DegenerateGeometryError("parallel rays span no plane")
    return cross / norm


def _dihedral_fraction(first: FloatArray, shared: FloatArray, last: FloatArray) -> float:
    n1 = plane_normal_from_rays(shared, first)
    n2 = plane_normal_from_rays(last, shared)
    between = math.atan2(float(np.linalg.norm(np.cross(n1, n2))), float(n1 @ n2))
    return (math.pi - between) / math.pi


def vertex_edge_corners(v: VertexCorner) -> list[EdgeCorner]:
    """Edge corner ℓ: planes ℓ and ℓ+1 meeting along ray ℓ+1."""
    n = v.size
    corners = []
    for ell in range(n):
        first, shared, last = (v.directions[(ell + j) % n] for j in range(3))
        bc1, bc2 = v.bcs[ell], v.bcs[(ell + 1) % n]
        corners.append(
            EdgeCorner(
                alpha=_dihedral_fraction(first, shared, last),
                bc1=bc1,
                bc2=bc2,
                aux_line_zero=bc1.is_nodal or bc2.is_nodal,
            )
        )
    return corners


def pair_frame(v: VertexCorner, ell: int) -> FloatArray:
    """Rows (x̂', ŷ', ẑ') with ẑ' on ray ℓ+1, plane ℓ at φ' = 0 and plane ℓ+1 at φ' ∈ (0, π)."""
    n = v.size
    first, shared, last = (v.directions[(ell + j) % n] for j in range(3))
    z = shared
    x = _unit(first - (first @ z) * z)
    y = np.cross(z, x)
    if float(last @ y) < 0.0:
        y = -y
    return np.vstack([x, y, z])


def outward_normal(v: VertexCorner, i: int) -> FloatArray:
    """Unit normal of plane i pointing out of the cone."""
    a, b = v.plane_rays(i)
    normal = plane_normal_from_rays(b, a)
    return -normal if float(normal @ v.axis) > 0.0 else normal


# ── Vertex classification ─────────────────────────────────────────────────────


@dataclass(frozen=True)
class VertexClass:
    edges: tuple[RationalityClass, ...]

    @property
    def irrational(self) -> bool:
        return any(not e.is_rational for e in self.edges)

    @property
    def degree(self) -> int | None:
        """Largest edge degree; None for an irrational vertex."""
        return None if self.irrational else max(e.p for e in self.edges if e.p is not None)

    @property
    def smallest_degree(self) -> int | None:
        """Smallest degree among rational edges (the obstacle-level notion)."""
        degrees = [e.p for e in self.edges if e.p is not None]
        return min(degrees) if degrees else None

    @property
    def label(self) -> str:
        return "IrrationalVertex" if self.irrational else f"RationalVertex{{degree={self.degree}}}"


def classify_vertex(v: VertexCorner, Q: int | None = None) -> VertexClass:
    edges = tuple(classify_angle(e.alpha, Q) for e in vertex_edge_corners(v))
    logger.debug("vertex edges classified: %s", [e.label for e in edges])
    return VertexClass(edges)
