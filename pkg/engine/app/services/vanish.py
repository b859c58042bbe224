"""Theorem engine: guaranteed vanishing orders at edge and vertex corners.

Every verdict is built from explicit per-degree algebra:

  * at an edge, degree n and order m ≥ 1 give a 2×2 system on
    (a_n^m, a_n^{−m}) whose determinant is a sine or cosine of mαπ;
  * at a vertex, a third (witness) plane pins the axisymmetric coefficient
    a_n^0 through a Legendre value at the witness rays.

The reported order is the first degree where a non-degeneracy condition
fails, or Infinite when none can fail (irrational dihedral angle).
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from app.config import settings
from app.core.errors import DomainError
from app.core.geometry import (
    BCKind,
    BoundaryCondition,
    EdgeCorner,
    RationalityClass,
    VertexCorner,
    classify_angle,
    outward_normal,
    pair_frame,
    vertex_edge_corners,
)
from app.core.specfun import legendre_column
from app.schemas.reports import ConditionRecord, ConditionStatus, VanishingVerdict, VerdictTag

logger = logging.getLogger(__name__)

INAPPLICABLE = "hypothesis not satisfied; theorem inapplicable"


class EdgeFamily(str, Enum):
    NODAL_NODAL = "nodal-nodal"
    NODAL_IMPEDANCE = "nodal-impedance"
    IMPEDANCE_NODAL = "impedance-nodal"
    IMPEDANCE_IMPEDANCE = "impedance-impedance"


def edge_family(corner: EdgeCorner) -> EdgeFamily:
    first, second = corner.bc1.is_nodal, corner.bc2.is_nodal
    if first and second:
        return EdgeFamily.NODAL_NODAL
    if first:
        return EdgeFamily.NODAL_IMPEDANCE
    if second:
        return EdgeFamily.IMPEDANCE_NODAL
    return EdgeFamily.IMPEDANCE_IMPEDANCE


# ── Per-degree systems ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class OrderSystem:
    """Rows of the two plane conditions acting on (a_n^m, a_n^{−m})."""

    m: int
    matrix: np.ndarray
    determinant: complex
    closed_form: complex


@dataclass(frozen=True)
class DegreeSystem:
    n: int
    per_m: dict[int, OrderSystem]
    m0_constraint: str | None


def _plane_row(bc: BoundaryCondition, m: int, angle: float) -> list[complex]:
    phase = cmath.exp(1j * m * angle)
    if bc.is_nodal:
        return [phase, 1.0 / phase]
    # ∂_φ multiplies a_n^{±m} by ±im; the common factor im is dropped.
    return [phase, -1.0 / phase]


def closed_form_determinant(family: EdgeFamily, m: int, alpha: float) -> complex:
    x = m * alpha * math.pi
    if family is EdgeFamily.NODAL_NODAL:
        return -2j * math.sin(x)
    if family is EdgeFamily.NODAL_IMPEDANCE:
        return complex(-2.0 * math.cos(x))
    if family is EdgeFamily.IMPEDANCE_NODAL:
        return complex(2.0 * math.cos(x))
    return 2j * math.sin(x)


def degree_system(corner: EdgeCorner, n: int) -> DegreeSystem:
    """The order-r^n conditions on degree n, assuming all lower degrees vanish."""
    if n < 1:
        raise DomainError(f"degree systems start at n = 1 (a_0^0 is fixed by auxiliary conditions), got {n}")
    family = edge_family(corner)
    angle = corner.alpha * math.pi
    per_m = {}
    for m in range(1, n + 1):
        matrix = np.array([_plane_row(corner.bc1, m, 0.0), _plane_row(corner.bc2, m, angle)], dtype=complex)
        det = complex(matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0])
        per_m[m] = OrderSystem(m, matrix, det, closed_form_determinant(family, m, corner.alpha))
    if family is not EdgeFamily.IMPEDANCE_IMPEDANCE:
        m0 = "a_n^0 = 0 (nodal plane)"
    elif corner.aux_line_zero:
        m0 = "a_n^0 = 0 (u vanishes on the edge line)"
    else:
        m0 = None
    return DegreeSystem(n, per_m, m0)


# ── Condition ledger helpers ──────────────────────────────────────────────────


def _record(statement: str, status: ConditionStatus, tag: VerdictTag, pair: int | None = None) -> ConditionRecord:
    return ConditionRecord(statement=statement, status=status, tag=tag, pair=pair)


def _trig_records(
    name: str, alpha: float, cap: int | None, n_request: int, tag: VerdictTag, pair: int | None
) -> list[ConditionRecord]:
    fn = math.sin if name == "sin" else math.cos
    limit = cap if cap is not None else n_request
    records = []
    if limit > 1:
        smallest = min(abs(fn(m * alpha * math.pi)) for m in range(1, limit))
        records.append(
            _record(f"{name}(mαπ) ≠ 0 for 1 ≤ m < {limit} (min |{name}| = {smallest:.3e})", ConditionStatus.HOLDS, tag, pair)
        )
    if cap is not None:
        records.append(_record(f"{name}({cap}·απ) = 0", ConditionStatus.FAILS, tag, pair))
    return records


def _rationality_record(cls: RationalityClass, tag: VerdictTag, pair: int | None = None) -> ConditionRecord:
    status = ConditionStatus.FAILS if cls.is_rational else ConditionStatus.HOLDS
    return _record(f"α irrational at denominator bound {cls.denominator_bound} ({cls.label})", status, tag, pair)


# ── Edge corners ──────────────────────────────────────────────────────────────


def _check_request(n_request: int) -> None:
    if n_request < 1:
        raise DomainError(f"requested order must be ≥ 1, got {n_request}")


def predict_edge(corner: EdgeCorner, n_request: int, Q: int | None = None, pair: int | None = None) -> VanishingVerdict:
    """Largest order the edge theorems guarantee for this corner."""
    _check_request(n_request)
    cls = classify_angle(corner.alpha, Q)
    family = edge_family(corner)
    records: list[ConditionRecord] = []
    axisymmetric = False
    applicable = True

    if family is EdgeFamily.NODAL_NODAL:
        tag = VerdictTag.NODAL_NODAL_EDGE
        cap = cls.p
        records.append(_record("a_n^0 = 0 on a nodal plane", ConditionStatus.HOLDS, tag, pair))
        records += _trig_records("sin", corner.alpha, cap, n_request, tag, pair)
    elif family in (EdgeFamily.NODAL_IMPEDANCE, EdgeFamily.IMPEDANCE_NODAL):
        tag = VerdictTag.NODAL_IMPEDANCE_EDGE
        cap = cls.p // 2 if cls.is_rational and cls.p % 2 == 0 else None  # type: ignore[operator]
        records.append(_record("a_n^0 = 0 on a nodal plane", ConditionStatus.HOLDS, tag, pair))
        excluded = "α ≠ (2q+1)/(2p) for every q ≥ 0, p ≥ 1 (q = 0 included)"
        records.append(_record(excluded, ConditionStatus.FAILS if cap else ConditionStatus.HOLDS, tag, pair))
        records += _trig_records("cos", corner.alpha, cap, n_request, tag, pair)
    else:
        tag = VerdictTag.IMPEDANCE_IMPEDANCE_EDGE
        if corner.aux_line_zero:
            cap = cls.p
            records.append(_record("u = 0 on the edge line", ConditionStatus.ASSUMED, tag, pair))
            records += _trig_records("sin", corner.alpha, cap, n_request, tag, pair)
        else:
            cap = 0
            records.append(_record("u = 0 on the edge line", ConditionStatus.NOT_SATISFIED, tag, pair))
            both_singular = corner.bc1.kind is BCKind.SINGULAR and corner.bc2.kind is BCKind.SINGULAR
            if both_singular and not cls.is_rational:
                tag = VerdictTag.AXISYMMETRIC_SINGULAR_EDGE
                axisymmetric = True
                records.append(_rationality_record(cls, tag, pair))
                records.append(
                    _record("only a_n^0 modes survive: u = 4π Σ iⁿ a_n^0 j_n(kr) Y_n^0", ConditionStatus.HOLDS, tag, pair)
                )
            else:
                applicable = False
                records.append(_record(INAPPLICABLE, ConditionStatus.NOT_SATISFIED, tag, pair))

    order: int | None = cap
    if cap is None:
        records.append(_rationality_record(cls, tag, pair))
        if not cls.is_rational:
            tag = VerdictTag.IRRATIONAL_EDGE
    verdict = VanishingVerdict(
        subject="edge",
        label=f"{corner.label} α={corner.alpha:.12g}",
        order=order,
        tag=tag,
        requested=n_request,
        applicable=applicable,
        axisymmetric=axisymmetric,
        rationality=[cls.label],
        pair=pair,
        conditions=records,
    )
    logger.debug("edge %s → %s [%s]", verdict.label, verdict.order_label, verdict.tag.value)
    return verdict


# ── Vertex corners ────────────────────────────────────────────────────────────


def _witness_values(p_max: int, order: int, cos_theta: np.ndarray) -> np.ndarray:
    """|P_p^order(cos θ)| divided by its sup bound on [−1, 1], rows p = 0 … p_max."""
    column = np.abs(legendre_column(p_max, order, cos_theta))
    if order == 0:
        return column
    p = np.arange(p_max + 1, dtype=float)
    bound = np.sqrt(np.maximum(p * (p + 1.0), 1.0))
    return column / bound[:, None]


def _first_failure(v: VertexCorner, ell: int, j: int, limit: int, tol: float) -> tuple[int | None, list[float]]:
    """First degree p in [1, limit) at which neither ray of witness plane j pins a_p^0."""
    frame = pair_frame(v, ell)
    rays = np.array(v.plane_rays(j))
    local = rays @ frame.T
    cos_theta = np.clip(local[:, 2], -1.0, 1.0)
    thetas = [math.acos(c) for c in cos_theta]
    if limit <= 1:
        return None, thetas
    if v.bcs[j].is_nodal:
        values = _witness_values(limit - 1, 0, cos_theta)
    else:
        values = _witness_values(limit - 1, 1, cos_theta)
        # the a_n^0 term enters through ν·θ̂ at the witness ray
        normal = outward_normal(v, j) @ frame.T
        st, ct = np.sqrt(1.0 - cos_theta**2), cos_theta
        phi = np.arctan2(local[:, 1], local[:, 0])
        theta_hat = np.stack([ct * np.cos(phi), ct * np.sin(phi), -st], axis=1)
        values = values * (np.abs(theta_hat @ normal) > tol)[None, :]
    for p in range(1, limit):
        if not np.any(values[p] > tol):
            return p, thetas
    return None, thetas


def _witness_pair(
    v: VertexCorner, ell: int, edge: EdgeCorner, cls: RationalityClass, n_request: int, tol: float
) -> tuple[int | None, bool, VerdictTag, list[ConditionRecord]]:
    n = v.size
    first, second = ell % n, (ell + 1) % n
    witnesses = [j for j in range(n) if j not in (first, second)]
    cap = cls.p
    records: list[ConditionRecord] = []
    usable = [j for j in witnesses if v.bcs[j].is_nodal or v.aux_vertex_zero]
    if not usable:
        tag = VerdictTag.VERTEX_IMPEDANCE_WITNESS
        records.append(_record("u(0) = 0", ConditionStatus.NOT_SATISFIED, tag, ell))
        records.append(_record(INAPPLICABLE, ConditionStatus.NOT_SATISFIED, tag, ell))
        return 0, False, tag, records

    limit = cap if cap is not None else n_request
    scans = []
    for j in usable:
        fail, thetas = _first_failure(v, ell, j, limit, tol)
        logger.debug("pair %d witness plane %d: first failing degree %s", ell, j, fail)
        scans.append((j, fail, thetas))
    best_j, best_fail, best_thetas = max(scans, key=lambda scan: _order_key(scan[1]))
    nodal_witness = v.bcs[best_j].is_nodal
    tag = VerdictTag.VERTEX_NODAL_WITNESS if nodal_witness else VerdictTag.VERTEX_IMPEDANCE_WITNESS
    if nodal_witness:
        records.append(_record(f"a_0^0 = 0 from nodal witness plane {best_j}", ConditionStatus.HOLDS, tag, ell))
    else:
        records.append(_record("u(0) = 0", ConditionStatus.ASSUMED, tag, ell))
    records += _trig_records("sin", edge.alpha, cap, n_request, tag, ell)
    if cap is None:
        records.append(_rationality_record(cls, tag, ell))

    m = 0 if nodal_witness else 1
    rays = f"θ = ({best_thetas[0]:.6g}, {best_thetas[1]:.6g}) on plane {best_j}"
    scanned = best_fail if best_fail is not None else limit
    if scanned > 1:
        records.append(_record(f"P_p^{m}(cos θ_τ) ≠ 0 for 1 ≤ p < {scanned}, {rays}", ConditionStatus.HOLDS, tag, ell))
    if best_fail is not None:
        records.append(_record(f"P_{best_fail}^{m}(cos θ_τ) = 0 at both witness rays, {rays}", ConditionStatus.FAILS, tag, ell))

    if best_fail is None:
        order = cap
    else:
        order = best_fail if cap is None else min(cap, best_fail)
    return order, True, tag, records


def _order_key(order: int | None) -> float:
    return math.inf if order is None else float(order)


def predict_vertex(
    v: VertexCorner, n_request: int, Q: int | None = None, tol: float | None = None
) -> VanishingVerdict:
    """Max over adjacent plane pairs of the order each pair guarantees."""
    _check_request(n_request)
    tol = settings.LEGENDRE_ROOT_TOL if tol is None else tol
    edges = vertex_edge_corners(v)
    classes = [classify_angle(e.alpha, Q) for e in edges]
    records: list[ConditionRecord] = []
    best: tuple[int | None, VerdictTag, int] | None = None
    for ell, (edge, cls) in enumerate(zip(edges, classes)):
        if edge.bc1.is_nodal or edge.bc2.is_nodal:
            ev = predict_edge(edge, n_request, Q, pair=ell)
            order, applicable, tag, pair_records = ev.order, ev.applicable, ev.tag, ev.conditions
        else:
            order, applicable, tag, pair_records = _witness_pair(v, ell, edge, cls, n_request, tol)
        records += pair_records
        logger.debug("vertex pair %d (%s): order %s applicable=%s", ell, edge.label, order, applicable)
        if applicable and (best is None or _order_key(order) > _order_key(best[0])):
            best = (order, tag, ell)

    label = f"{v.size}-plane vertex [{', '.join(bc.label for bc in v.bcs)}]"
    if best is None:
        records.append(_record("no plane pair with valid hypotheses", ConditionStatus.NOT_SATISFIED, VerdictTag.VERTEX_INAPPLICABLE))
        logger.warning("vertex %s: no applicable plane pair", label)
        return VanishingVerdict(
            subject="vertex",
            label=label,
            order=0,
            tag=VerdictTag.VERTEX_INAPPLICABLE,
            requested=n_request,
            applicable=False,
            rationality=[c.label for c in classes],
            conditions=records,
        )
    order, tag, ell = best
    verdict = VanishingVerdict(
        subject="vertex",
        label=label,
        order=order,
        tag=tag,
        requested=n_request,
        rationality=[c.label for c in classes],
        pair=ell,
        conditions=records,
    )
    logger.debug("vertex %s → %s via pair %d [%s]", label, verdict.order_label, ell, tag.value)
    return verdict


def predict(corner: EdgeCorner | VertexCorner, n_request: int) -> VanishingVerdict:
    if isinstance(corner, EdgeCorner):
        return predict_edge(corner, n_request)
    if isinstance(corner, VertexCorner):
        return predict_vertex(corner, n_request)
    raise DomainError(f"unsupported corner type {type(corner).__name__}")


# ── Rendering ─────────────────────────────────────────────────────────────────


def theorem_trace(verdict: VanishingVerdict) -> str:
    """Human-readable derivation of a verdict."""
    head = f"{verdict.subject.capitalize()} corner {verdict.label}: {verdict.order_label} [{verdict.tag.value}]"
    if not verdict.applicable:
        head += f" ({INAPPLICABLE})"
    lines = [head, f"  requested N = {verdict.requested}; angles: {', '.join(verdict.rationality)}"]
    if verdict.pair is not None and verdict.subject == "vertex":
        lines.append(f"  decided by plane pair {verdict.pair}")
    if verdict.axisymmetric:
        lines.append("  axisymmetric form: only m = 0 coefficients survive")
    for rec in verdict.conditions:
        where = f" pair {rec.pair}" if rec.pair is not None and verdict.subject == "vertex" else ""
        lines.append(f"  [{rec.status.value:>13}] {rec.statement}  ({rec.tag.value}{where})")
    return "\n".join(lines)
