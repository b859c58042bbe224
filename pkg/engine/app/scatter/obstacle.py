"""Scatterers: convex polyhedra with per-face boundary conditions, and spheres."""

from __future__ import annotations

import json
import logging
import math
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.core.errors import DegenerateGeometryError, DomainError
from app.core.geometry import BoundaryCondition, VertexCorner, classify_vertex
from app.core.sampling import fibonacci_sphere

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

_PLANE_TOL = 1e-9


@dataclass(frozen=True)
class BoundarySamples:
    """Weighted boundary points; ``face`` indexes the boundary condition of each point."""

    points: FloatArray
    normals: FloatArray
    weights: FloatArray
    face: NDArray[np.int64]


class Scatterer(ABC):
    """Anything the forward solver can collocate on."""

    label: str

    @property
    @abstractmethod
    def centroid(self) -> FloatArray: ...

    @property
    @abstractmethod
    def diameter(self) -> float: ...

    @abstractmethod
    def boundary_samples(self, target: int, offset: int = 0) -> BoundarySamples:
        """At least ``target`` points; ``offset`` selects a different (out-of-sample) set."""

    @abstractmethod
    def condition(self, face: int) -> BoundaryCondition: ...

    @abstractmethod
    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        """True strictly inside the scatterer."""

    @property
    @abstractmethod
    def face_count(self) -> int: ...

    @property
    def faceted(self) -> bool:
        """True when the boundary has edges."""
        return False

    def source_points(self, count: int, shrink: float) -> FloatArray:
        """``count`` points on the boundary pulled towards the centroid by ``shrink``."""
        if not 0.0 < shrink < 1.0:
            raise DomainError(f"source shrink factor must lie in (0, 1), got {shrink}")
        samples = self.boundary_samples(count).points
        pick = np.unique(np.round(np.linspace(0, samples.shape[0] - 1, count)).astype(int))
        return self.centroid + shrink * (samples[pick] - self.centroid)


# ── Polyhedra ─────────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """Convex, watertight polyhedron; faces are oriented counter-clockwise seen from outside."""

    vertices: FloatArray
    faces: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        verts = np.array(self.vertices, dtype=float).reshape(-1, 3)
        if verts.shape[0] < 4:
            raise DegenerateGeometryError(f"a polyhedron needs at least 4 vertices, got {verts.shape[0]}")
        faces = tuple(tuple(int(i) for i in f) for f in self.faces)
        if any(len(f) < 3 for f in faces):
            raise DegenerateGeometryError("every face needs at least 3 vertices")
        if any(i < 0 or i >= verts.shape[0] for f in faces for i in f):
            raise DegenerateGeometryError("face references a missing vertex")
        center = verts.mean(axis=0)
        oriented = []
        for f in faces:
            pts = verts[list(f)]
            normal = np.cross(pts[1] - pts[0], pts[2] - pts[0])
            oriented.append(f if float(normal @ (pts.mean(axis=0) - center)) > 0.0 else tuple(reversed(f)))
        faces = tuple(oriented)
        edges = Counter((f[i], f[(i + 1) % len(f)]) for f in faces for i in range(len(f)))
        for (a, b), count in edges.items():
            if count != 1 or edges.get((b, a)) != 1:
                raise DegenerateGeometryError(f"polyhedron is not watertight at edge ({a}, {b})")
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "faces", faces)
        self._check_convex()

    def _check_convex(self) -> None:
        for i, (normal, point) in enumerate(zip(self.face_normals, self.face_points)):
            heights = (self.vertices - point) @ normal
            if heights.max() > _PLANE_TOL * max(1.0, self.diameter):
                raise DegenerateGeometryError(f"face {i} does not bound a convex polyhedron")

    @property
    def centroid(self) -> FloatArray:
        return self.vertices.mean(axis=0)

    @cached_property
    def diameter(self) -> float:
        diffs = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((diffs**2).sum(axis=-1)).max())

    @cached_property
    def face_points(self) -> FloatArray:
        return np.array([self.vertices[list(f)].mean(axis=0) for f in self.faces])

    @cached_property
    def face_normals(self) -> FloatArray:
        normals = []
        for f in self.faces:
            pts = self.vertices[list(f)]
            n = np.zeros(3)
            for i in range(len(f)):
                n += np.cross(pts[i], pts[(i + 1) % len(f)])
            normals.append(n / np.linalg.norm(n))
        return np.array(normals)

    def triangles(self) -> list[tuple[int, FloatArray]]:
        """Fan triangulation: (face index, 3×3 corner array)."""
        out = []
        for idx, f in enumerate(self.faces):
            for i in range(1, len(f) - 1):
                out.append((idx, self.vertices[[f[0], f[i], f[i + 1]]]))
        return out

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        return self.distance(points) < 0.0

    def distance(self, points: ArrayLike) -> FloatArray:
        """Largest face-plane height; positive outside, a lower bound on the true distance."""
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        heights = np.einsum("pfi,fi->pf", pts[:, None, :] - self.face_points[None], self.face_normals)
        return heights.max(axis=1)

    def translated(self, shift: ArrayLike) -> Polyhedron:
        return Polyhedron(self.vertices + np.asarray(shift, dtype=float), self.faces)

    def scaled(self, factor: float) -> Polyhedron:
        if factor <= 0.0:
            raise DomainError(f"scale factor must be positive, got {factor}")
        c = self.centroid
        return Polyhedron(c + factor * (self.vertices - c), self.faces)

    def vertex_fan(self, vertex: int) -> list[tuple[int, int, int]]:
        """Faces around ``vertex`` in cyclic order as (face, previous vertex, next vertex)."""
        around = {}
        for idx, f in enumerate(self.faces):
            if vertex in f:
                pos = f.index(vertex)
                around[f[pos - 1]] = (idx, f[pos - 1], f[(pos + 1) % len(f)])
        if len(around) < 3:
            raise DegenerateGeometryError(f"vertex {vertex} is shared by fewer than 3 faces")
        start = next(iter(around))
        fan, prev = [], start
        for _ in range(len(around)):
            entry = around[prev]
            fan.append(entry)
            prev = entry[2]
        if prev != start:
            raise DegenerateGeometryError(f"faces around vertex {vertex} do not close up")
        return fan


def _subdivided_centroids(corners: FloatArray, level: int) -> tuple[FloatArray, FloatArray]:
    """Centroids and areas of the level² sub-triangles of one triangle."""
    a, b, c = corners
    e1, e2 = (b - a) / level, (c - a) / level
    area = 0.5 * float(np.linalg.norm(np.cross(e1, e2)))
    pts = []
    for i in range(level):
        for j in range(level - i):
            pts.append(a + (i + 1.0 / 3.0) * e1 + (j + 1.0 / 3.0) * e2)
            if i + j < level - 1:
                pts.append(a + (i + 2.0 / 3.0) * e1 + (j + 2.0 / 3.0) * e2)
    return np.array(pts), np.full(len(pts), area)


@dataclass(frozen=True)
class Obstacle(Scatterer):
    polyhedron: Polyhedron
    bcs: tuple[BoundaryCondition, ...]
    label: str = "polyhedron"

    def __post_init__(self) -> None:
        if len(self.bcs) != len(self.polyhedron.faces):
            raise DomainError(f"{len(self.polyhedron.faces)} faces need as many conditions, got {len(self.bcs)}")
        object.__setattr__(self, "bcs", tuple(self.bcs))

    @classmethod
    def uniform(cls, polyhedron: Polyhedron, bc: BoundaryCondition, label: str = "polyhedron") -> Obstacle:
        return cls(polyhedron, tuple(bc for _ in polyhedron.faces), label)

    @property
    def centroid(self) -> FloatArray:
        return self.polyhedron.centroid

    @property
    def diameter(self) -> float:
        return self.polyhedron.diameter

    @property
    def face_count(self) -> int:
        return len(self.polyhedron.faces)

    @property
    def faceted(self) -> bool:
        return True

    def condition(self, face: int) -> BoundaryCondition:
        return self.bcs[face]

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        return self.polyhedron.contains(points)

    def boundary_samples(self, target: int, offset: int = 0) -> BoundarySamples:
        triangles = self.polyhedron.triangles()
        level = max(1, math.ceil(math.sqrt(target / len(triangles)))) + offset
        normals = self.polyhedron.face_normals
        pts, nrm, wts, ids = [], [], [], []
        for face, corners in triangles:
            p, w = _subdivided_centroids(corners, level)
            pts.append(p)
            wts.append(w)
            nrm.append(np.repeat(normals[face][None], p.shape[0], axis=0))
            ids.append(np.full(p.shape[0], face))
        return BoundarySamples(np.vstack(pts), np.vstack(nrm), np.concatenate(wts), np.concatenate(ids))

    def translated(self, shift: ArrayLike) -> Obstacle:
        return Obstacle(self.polyhedron.translated(shift), self.bcs, self.label)

    def with_conditions(self, bc: BoundaryCondition) -> Obstacle:
        return Obstacle.uniform(self.polyhedron, bc, self.label)


@dataclass(frozen=True)
class SphereObstacle(Scatterer):
    """Exact sphere; collocation on Fibonacci points of the true surface."""

    radius: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    bc: BoundaryCondition = field(default_factory=BoundaryCondition.nodal)
    label: str = "sphere"

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise DomainError(f"sphere radius must be positive, got {self.radius}")

    @property
    def centroid(self) -> FloatArray:
        return np.asarray(self.center, dtype=float)

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def face_count(self) -> int:
        return 1

    def condition(self, face: int) -> BoundaryCondition:
        return self.bc

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        return np.linalg.norm(pts - self.centroid, axis=1) < self.radius

    def boundary_samples(self, target: int, offset: int = 0) -> BoundarySamples:
        count = target + 7 * offset
        dirs = fibonacci_sphere(count)
        weights = np.full(count, 4.0 * math.pi * self.radius**2 / count)
        return BoundarySamples(self.centroid + self.radius * dirs, dirs, weights, np.zeros(count, dtype=np.int64))


# ── Builders ──────────────────────────────────────────────────────────────────


def regular_tetrahedron(size: float = 1.0, center: ArrayLike = (0.0, 0.0, 0.0)) -> Polyhedron:
    """Edge length ``size``."""
    base = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]])
    verts = base * size / (2.0 * math.sqrt(2.0)) + np.asarray(center, dtype=float)
    return Polyhedron(verts, ((0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)))


def cube(size: float = 1.0, center: ArrayLike = (0.0, 0.0, 0.0)) -> Polyhedron:
    h = 0.5 * size
    verts = np.array([[x, y, z] for x in (-h, h) for y in (-h, h) for z in (-h, h)]) + np.asarray(center, dtype=float)
    faces = ((0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3))
    return Polyhedron(verts, faces)


def icosphere(level: int = 2, radius: float = 1.0, center: ArrayLike = (0.0, 0.0, 0.0)) -> Polyhedron:
    """Icosahedron refined ``level`` times with vertices projected onto the sphere."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    points = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(level):
        midpoint: dict[tuple[int, int], int] = {}

        def middle(a: int, b: int) -> int:
            key = (min(a, b), max(a, b))
            if key not in midpoint:
                m = points[a] + points[b]
                points.append(m / np.linalg.norm(m))
                midpoint[key] = len(points) - 1
            return midpoint[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = middle(a, b), middle(b, c), middle(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined
    return Polyhedron(radius * np.array(points) + np.asarray(center, dtype=float), tuple(faces))


# ── OFF files ─────────────────────────────────────────────────────────────────


def _off_tokens(text: str) -> list[list[str]]:
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    return rows


def parse_off(text: str) -> Polyhedron:
    rows = _off_tokens(text)
    if not rows or rows[0][0] != "OFF":
        raise DomainError("OFF data must start with the 'OFF' keyword")
    header = rows[0][1:] or rows[1]
    body = rows[1:] if rows[0][1:] else rows[2:]
    try:
        n_verts, n_faces = int(header[0]), int(header[1])
        verts = np.array([[float(x) for x in row[:3]] for row in body[:n_verts]])
        faces = []
        for row in body[n_verts : n_verts + n_faces]:
            count = int(row[0])
            faces.append(tuple(int(i) for i in row[1 : 1 + count]))
    except (IndexError, ValueError) as exc:
        raise DomainError(f"malformed OFF data: {exc}") from exc
    if verts.shape != (n_verts, 3) or len(faces) != n_faces:
        raise DomainError(f"OFF header announces {n_verts} vertices / {n_faces} faces, file disagrees")
    return Polyhedron(verts, tuple(faces))


def load_off(path: str | Path, sidecar: str | Path | None = None, label: str | None = None) -> Obstacle:
    """OFF polyhedron plus per-face conditions from a JSON sidecar (``<stem>.json`` by default).

    Sidecar layout: ``{"default": {...}, "faces": {"3": {...}}}`` where each entry is
    ``{"kind": "nodal" | "singular" | "impedance", "eta": [re, im]}``.
    """
    from pydantic import ValidationError

    from app.schemas.scenario import BoundarySpec, FaceConditions

    path = Path(path)
    polyhedron = parse_off(path.read_text())
    side = Path(sidecar) if sidecar is not None else path.with_suffix(".json")
    if side.exists():
        try:
            spec = FaceConditions.model_validate(json.loads(side.read_text()))
        except (json.JSONDecodeError, ValidationError) as exc:
            raise DomainError(f"invalid face-condition sidecar {side}: {exc}") from exc
    else:
        logger.info("no sidecar next to %s; all faces sound-soft", path)
        spec = FaceConditions(default=BoundarySpec(kind="nodal"))
    bcs = spec.conditions(len(polyhedron.faces))
    return Obstacle(polyhedron, bcs, label or path.stem)


# ── Corners of an obstacle ────────────────────────────────────────────────────


def vertex_corner(obstacle: Obstacle, vertex: int, aux_vertex_zero: bool = False) -> VertexCorner:
    """The polyhedral cone of ``obstacle`` at one of its vertices, apex moved to the origin."""
    poly = obstacle.polyhedron
    apex = poly.vertices[vertex]
    fan = poly.vertex_fan(vertex)
    rays = tuple(tuple(poly.vertices[prev] - apex) for _, prev, _ in fan)
    bcs = tuple(obstacle.bcs[face] for face, _, _ in fan)
    return VertexCorner(rays, bcs, aux_vertex_zero)


@dataclass(frozen=True)
class ObstacleClass:
    irrational: bool
    smallest_degree: int | None
    vertex_labels: tuple[str, ...]

    @property
    def label(self) -> str:
        if self.irrational:
            return "IrrationalObstacle"
        return f"RationalObstacle{{degree={self.smallest_degree}}}"


def classify_obstacle(obstacle: Obstacle, Q: int | None = None) -> ObstacleClass:
    """Irrational iff every vertex is irrational; otherwise the smallest rational edge degree."""
    count = obstacle.polyhedron.vertices.shape[0]
    classes = [classify_vertex(vertex_corner(obstacle, i), Q) for i in range(count)]
    degrees = [c.smallest_degree for c in classes if c.smallest_degree is not None]
    irrational = all(c.irrational for c in classes)
    return ObstacleClass(irrational, min(degrees) if degrees else None, tuple(c.label for c in classes))
