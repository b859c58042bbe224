"""Numerical oracle for vanishing orders.

Two independent measurements:

  * collocation nullspace: every boundary condition of a corner is sampled
    on (r, angle) grids, the resulting linear map on truncated expansion
    coefficients is decomposed by SVD, and the null space tells which
    degrees can carry a nonzero coefficient;
  * integral order: the growth exponent of ρ ↦ ∫_{B_ρ}|u| for any field u.

Neither uses the per-degree algebra of the theorem engine.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from app.config import settings
from app.core.errors import DomainError
from app.core.expansion import (
    Expansion,
    edge_line_matrix,
    impedance_trace_matrix,
    mode_matrix,
    phi_trace_matrix,
    plane_trace_matrix,
)
from app.core.geometry import BoundaryCondition, EdgeCorner, VertexCorner, outward_normal
from app.core.sampling import cartesian_to_spherical, contour_radii, gauss_legendre, spherical_to_cartesian
from app.core.specfun import mode_arrays, mode_count
from app.schemas.reports import (
    AgreementRecord,
    AgreementStatus,
    IntegralOrderEstimate,
    OracleReport,
    OracleStatus,
    VanishingVerdict,
)

logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]
ScalarField = Callable[[np.ndarray], np.ndarray]

Corner = EdgeCorner | VertexCorner


# ── Constraint assembly ───────────────────────────────────────────────────────
#
# Each condition is entire in r along every ray of its plane, so it holds on
# the full plane and for complex r.  Radii lie on the circle |r| = R and each
# plane is sampled along its full great circle.


@dataclass(frozen=True)
class ConstraintSystem:
    matrix: ComplexArray
    n_solve: int
    r_max: float  # contour radius R
    radii: int
    angles: int


def _etas(corner: Corner) -> list[complex]:
    bcs: tuple[BoundaryCondition, ...] = (corner.bc1, corner.bc2) if isinstance(corner, EdgeCorner) else corner.bcs
    return [bc.effective_eta for bc in bcs if not bc.is_nodal]


def oracle_radius(corner: Corner, lam: float, radius: float | None = None) -> float:
    """R = radius · 2π/√λ, capped so that R·|η| stays below ORACLE_IMPEDANCE_RADIUS."""
    radius = settings.ORACLE_RADIUS if radius is None else radius
    if not lam > 0.0:
        raise DomainError(f"eigenvalue λ must be positive, got {lam}")
    r_max = radius * 2.0 * math.pi / math.sqrt(lam)
    eta = max((abs(e) for e in _etas(corner)), default=0.0)
    if eta > 0.0:
        r_max = min(r_max, settings.ORACLE_IMPEDANCE_RADIUS / eta)
    return r_max


def _grid_sizes(n_solve: int, planes: int, radial_nodes: int, row_factor: int, refine: int) -> tuple[int, int]:
    unknowns = mode_count(n_solve)
    n_r = max(radial_nodes, 2 * n_solve + 8)
    n_g = max(2 * n_solve + 8, math.ceil(row_factor * unknowns / (planes * n_r)))
    if refine > 1:
        n_r, n_g = refine * n_r + 1, refine * n_g + 1
    return n_r, n_g + n_g % 2


def _vertex_frame(v: VertexCorner) -> np.ndarray:
    """Rows of a rotation whose x₃'-axis points away from the cone (no plane contains the pole)."""
    z = -v.axis
    helper = np.eye(3)[int(np.argmin(np.abs(z)))]
    x = np.cross(z, helper)
    x /= np.linalg.norm(x)
    return np.vstack([x, np.cross(z, x), z])


def _edge_blocks(
    corner: EdgeCorner, lam: float, n_solve: int, radii: ComplexArray, n_g: int
) -> list[Callable[[], ComplexArray]]:
    """Both halves φ₀ and φ₀ + π of each plane; the outward side flips on the far half."""
    half = n_g // 2
    theta = math.pi * (np.arange(half) + 0.5) / half
    rr, tt = (a.ravel() for a in np.meshgrid(radii, theta, indexing="ij"))

    def halfplane(bc: BoundaryCondition, phi0: float, side: int) -> Callable[[], ComplexArray]:
        if bc.is_nodal:
            return lambda: phi_trace_matrix(lam, n_solve, phi0, rr, tt)
        return lambda: impedance_trace_matrix(lam, n_solve, phi0, side, bc.effective_eta, rr, tt, scaled=True)

    blocks = []
    for bc, phi0, side in ((corner.bc1, 0.0, -1), (corner.bc2, corner.alpha * math.pi, 1)):
        blocks.append(halfplane(bc, phi0, side))
        blocks.append(halfplane(bc, (phi0 + math.pi) % (2.0 * math.pi), -side))
    if corner.aux_line_zero:
        blocks.append(lambda: edge_line_matrix(lam, n_solve, radii, 1))
        blocks.append(lambda: edge_line_matrix(lam, n_solve, radii, -1))
    return blocks


def _vertex_blocks(
    v: VertexCorner, lam: float, n_solve: int, radii: ComplexArray, n_g: int
) -> list[Callable[[], ComplexArray]]:
    frame = _vertex_frame(v)
    dirs = v.directions @ frame.T
    psi = 2.0 * math.pi * (np.arange(n_g) + 0.5) / n_g

    def plane(i: int) -> Callable[[], ComplexArray]:
        normal = outward_normal(v, i) @ frame.T
        e1 = dirs[i]
        e2 = np.cross(normal, e1)
        circle = np.outer(np.cos(psi), e1) + np.outer(np.sin(psi), e2)
        _, theta, phi = cartesian_to_spherical(circle)
        rr = np.repeat(radii, n_g)
        tt, pp, ww = np.tile(theta, radii.size), np.tile(phi, radii.size), np.tile(circle, (radii.size, 1))
        bc = v.bcs[i]
        if bc.is_nodal:
            return lambda: mode_matrix(lam, n_solve, rr, tt, pp)
        return lambda: plane_trace_matrix(lam, n_solve, rr, ww, normal, bc.effective_eta)

    blocks = [plane(i) for i in range(v.size)]
    if v.aux_vertex_zero:
        blocks.append(lambda: mode_matrix(lam, n_solve, [0.0], [0.0], [0.0]))
    return blocks


def assemble_constraints(
    corner: Corner,
    lam: float,
    n_solve: int,
    radial_nodes: int | None = None,
    row_factor: int | None = None,
    refine: int = 1,
    threads: int | None = None,
) -> ConstraintSystem:
    """Rows of every boundary condition sampled on the corner's planes."""
    radial_nodes = settings.ORACLE_RADIAL_NODES if radial_nodes is None else radial_nodes
    row_factor = settings.ORACLE_ROW_FACTOR if row_factor is None else row_factor
    threads = settings.THREADS if threads is None else threads
    r_max = oracle_radius(corner, lam)
    planes = 2 if isinstance(corner, EdgeCorner) else corner.size
    n_r, n_g = _grid_sizes(n_solve, planes, radial_nodes, row_factor, refine)
    radii = contour_radii(n_r, r_max)
    if isinstance(corner, EdgeCorner):
        blocks = _edge_blocks(corner, lam, n_solve, radii, n_g)
    elif isinstance(corner, VertexCorner):
        blocks = _vertex_blocks(corner, lam, n_solve, radii, n_g)
    else:
        raise DomainError(f"unsupported corner type {type(corner).__name__}")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        matrix = np.vstack(list(pool.map(lambda build: build(), blocks)))
    logger.debug("assembled %d × %d constraint rows (n_r=%d, n_circle=%d, R=%.3e)", *matrix.shape, n_r, n_g, r_max)
    return ConstraintSystem(matrix, n_solve, r_max, n_r, n_g)


def _equilibrate(matrix: ComplexArray) -> tuple[ComplexArray, np.ndarray]:
    row_norms = np.linalg.norm(matrix, axis=1)
    rows = matrix[row_norms > 0.0] / row_norms[row_norms > 0.0, None]
    col_norms = np.linalg.norm(rows, axis=0)
    col_norms = np.where(col_norms > 0.0, col_norms, 1.0)
    return rows / col_norms, col_norms


# ── Nullspace analysis ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class NullspaceBasis:
    """Orthonormal null basis in column-equilibrated coordinates."""

    vectors: ComplexArray  # (K, d)
    col_norms: np.ndarray
    singular_values: np.ndarray  # relative to σ_max
    n_solve: int

    def unscaled(self) -> ComplexArray:
        return self.vectors / self.col_norms[:, None]


def _rank(block: ComplexArray, tol: float) -> int:
    if block.size == 0:
        return 0
    return int(np.sum(linalg.svdvals(block) > tol))


def _degree_counts(basis: ComplexArray, n_top: int, n_solve: int, tol: float) -> dict[int, int]:
    """Null dimension first appearing at each degree: rank(deg ≤ n) − rank(deg ≤ n−1)."""
    degrees, _ = mode_arrays(n_solve)
    counts, previous = {}, 0
    for n in range(n_top + 1):
        rank = _rank(basis[degrees <= n], tol)
        counts[n] = rank - previous
        previous = rank
    return counts


def _survivor(basis: ComplexArray, col_norms: np.ndarray, degree: int, n_solve: int) -> ComplexArray:
    """Null vector with the largest degree-``degree`` content, unscaled, peak entry 1."""
    degrees, _ = mode_arrays(n_solve)
    block = basis[degrees == degree]
    _, _, vh = linalg.svd(block, full_matrices=False)
    vector = (basis @ vh[0].conj()) / col_norms
    lead = vector[degrees == degree]
    return vector / lead[int(np.argmax(np.abs(lead)))]


def nullspace_basis(
    system: ConstraintSystem, sigma_cut: float | None = None
) -> tuple[NullspaceBasis, float | None]:
    """Null basis (σ/σ_max < cut) and the gap σ_last_kept / σ_first_null."""
    sigma_cut = settings.ORACLE_SIGMA_CUT if sigma_cut is None else sigma_cut
    scaled, col_norms = _equilibrate(system.matrix)
    _, s, vh = linalg.svd(scaled, full_matrices=scaled.shape[0] < scaled.shape[1])
    unknowns = scaled.shape[1]
    rel = np.zeros(unknowns)
    rel[: s.size] = s / s[0]
    null = rel < sigma_cut
    vectors = vh[null].conj().T
    kept = rel[~null]
    gap = None
    if null.any() and kept.size:
        gap = float(kept.min() / max(rel[null].max(), 1e-300))
    return NullspaceBasis(vectors, col_norms, rel, system.n_solve), gap


def collocation_nullspace(
    corner: Corner,
    lam: float,
    n_max: int,
    radial_nodes: int | None = None,
    row_factor: int | None = None,
    threads: int | None = None,
) -> OracleReport:
    """Leading surviving degree of the sampled boundary conditions."""
    if n_max < 1:
        raise DomainError(f"oracle needs n_max ≥ 1, got {n_max}")
    cut, gap_min = settings.ORACLE_SIGMA_CUT, settings.ORACLE_GAP
    band, mass = settings.ORACLE_GRAY_BAND, settings.ORACLE_MASS_TOL
    n_solve = n_max + settings.ORACLE_DEGREE_PADDING
    system = assemble_constraints(corner, lam, n_solve, radial_nodes, row_factor, threads=threads)
    basis, gap = nullspace_basis(system, cut)
    subject = "edge" if isinstance(corner, EdgeCorner) else "vertex"
    label = corner.label if isinstance(corner, EdgeCorner) else f"{corner.size}-plane vertex"
    common = dict(
        subject=subject,
        label=label,
        lam=lam,
        n_max=n_max,
        n_solve=n_solve,
        nullspace_dim=basis.vectors.shape[1],
        singular_values=[float(x) for x in basis.singular_values],
        gap=gap,
        rows=system.matrix.shape[0],
        unknowns=system.matrix.shape[1],
        tolerances={"sigma_cut": cut, "gap": gap_min, "gray_band": band, "mass": mass, "radius": system.r_max},
    )
    d = basis.vectors.shape[1]
    if d:
        _, orders = mode_arrays(n_solve)
        common["off_axis_mass"] = float(np.linalg.norm(basis.vectors[orders != 0], 2))
    if d and (gap is None or gap < gap_min):
        reason = f"no clear singular-value gap (gap {gap if gap is not None else 0.0:.3e} < {gap_min:.0e})"
        logger.warning("oracle inconclusive for %s: %s", label, reason)
        return OracleReport(status=OracleStatus.INCONCLUSIVE, reason=reason, **common)
    if not d and basis.singular_values[-1] <= cut * band:
        reason = f"smallest singular value {basis.singular_values[-1]:.3e} lies in the gray band above σ_cut"
        logger.warning("oracle inconclusive for %s: %s", label, reason)
        return OracleReport(status=OracleStatus.INCONCLUSIVE, reason=reason, **common)

    counts = _degree_counts(basis.vectors, n_max, n_solve, mass) if d else {n: 0 for n in range(n_max + 1)}
    leading = next((n for n, c in counts.items() if c > 0), None)
    survivor = None
    if leading is not None:
        vec = _survivor(basis.vectors, basis.col_norms, leading, n_solve)
        degrees, orders = mode_arrays(n_solve)
        survivor = [[int(n), int(m), float(c.real), float(c.imag)] for n, m, c in zip(degrees, orders, vec)]
    logger.info("oracle %s: leading degree %s, nullspace dim %d", label, leading, d)
    return OracleReport(
        status=OracleStatus.CONCLUSIVE,
        leading_degree=leading,
        nullspace_dim_per_degree=counts,
        survivor=survivor,
        **common,
    )


def survivor_expansion(report: OracleReport) -> Expansion | None:
    if report.survivor is None:
        return None
    coeffs = np.zeros(mode_count(report.n_solve), dtype=complex)
    for n, m, re, im in report.survivor:
        coeffs[int(n) * int(n) + int(n) + int(m)] = complex(re, im)
    return Expansion(report.lam, coeffs)


def survivor_residual(corner: Corner, expansion: Expansion, refine: int = 2) -> float:
    """Largest equilibrated boundary residual of ``expansion`` on a finer, out-of-sample grid."""
    system = assemble_constraints(corner, expansion.lam, expansion.n_max, refine=refine)
    row_norms = np.linalg.norm(system.matrix, axis=1)
    keep = row_norms > 0.0
    rows = system.matrix[keep] / row_norms[keep, None]
    col_norms = np.linalg.norm(rows, axis=0)
    col_norms = np.where(col_norms > 0.0, col_norms, 1.0)
    scaled = expansion.coeffs * col_norms
    scaled = scaled / np.linalg.norm(scaled)
    return float(np.max(np.abs((rows / col_norms) @ scaled)))


# ── Integral order ────────────────────────────────────────────────────────────


def _ball_integral(u: ScalarField, center: np.ndarray, rho: float, nodes: int) -> float:
    r, wr = gauss_legendre(nodes, 0.0, rho)
    c, wc = gauss_legendre(nodes, -1.0, 1.0)
    phi, wp = gauss_legendre(nodes, 0.0, 2.0 * math.pi)
    rr, cc, pp = np.meshgrid(r, c, phi, indexing="ij")
    weights = np.einsum("i,j,k->ijk", wr * r * r, wc, wp)
    points = center + spherical_to_cartesian(rr, np.arccos(cc), pp).reshape(-1, 3)
    values = np.abs(np.asarray(u(points))).reshape(rr.shape)
    return float(np.sum(weights * values))


def integral_order(
    u: ScalarField,
    center: ArrayLike = (0.0, 0.0, 0.0),
    rho_list: ArrayLike | None = None,
    nodes: int | None = None,
    threads: int | None = None,
    window: float | None = None,
) -> IntegralOrderEstimate:
    """Slope of log ∫_{B_ρ}|u| against log ρ; order estimate = slope − 3."""
    nodes = settings.QUAD_NODES if nodes is None else nodes
    threads = settings.THREADS if threads is None else threads
    window = settings.ORDER_ROUNDING if window is None else window
    rho = np.asarray(np.geomspace(1e-3, 1e-1, 9) if rho_list is None else rho_list, dtype=float)
    if rho.size < 2 or np.any(rho <= 0.0) or rho.max() / rho.min() < 10.0:
        raise DomainError("ρ values must be positive and span at least one decade")
    x0 = np.asarray(center, dtype=float).reshape(3)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        integrals = np.array(list(pool.map(lambda q: _ball_integral(u, x0, float(q), nodes), rho)))
    common = dict(rho=[float(q) for q in rho], integrals=[float(i) for i in integrals])
    if np.any(integrals <= 0.0):
        return IntegralOrderEstimate(
            slope=math.nan, order_estimate=math.nan, inconclusive=True, flagged=True, fit_residual=math.nan,
            note="field vanishes identically on some ball", **common,
        )
    coarse = _ball_integral(u, x0, float(rho.max()), max(nodes // 2, 2))
    converged = abs(coarse - integrals[rho.argmax()]) <= 5e-2 * integrals[rho.argmax()]

    x, y = np.log(rho), np.log(integrals)
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = linalg.lstsq(design, y)
    fit_residual = float(np.sqrt(np.mean((design @ np.array([slope, intercept]) - y) ** 2)))
    estimate = float(slope) - 3.0
    nearest = round(estimate)
    if not converged:
        return IntegralOrderEstimate(
            slope=float(slope), order_estimate=estimate, inconclusive=True, flagged=True,
            fit_residual=fit_residual, note="quadrature did not converge at the largest ρ", **common,
        )
    if estimate < -window:
        return IntegralOrderEstimate(
            slope=float(slope), order_estimate=estimate, order=0, flagged=True, fit_residual=fit_residual,
            note="∫|u| decays slower than ρ³; reported as order 0", **common,
        )
    within = abs(estimate - nearest) <= window
    return IntegralOrderEstimate(
        slope=float(slope),
        order_estimate=estimate,
        order=int(nearest) if within else None,
        flagged=not within,
        fit_residual=fit_residual,
        note=None if within else f"estimate {estimate:.3f} is not within {window} of an integer",
        **common,
    )


# ── Agreement ─────────────────────────────────────────────────────────────────


def cross_check(verdict: VanishingVerdict, report: OracleReport) -> AgreementRecord:
    """Theorem orders are lower bounds: agreement iff the observed leading degree reaches them."""
    observed = report.degree_label
    if not report.conclusive:
        return AgreementRecord(
            status=AgreementStatus.INCONCLUSIVE, guaranteed=verdict.order_label, observed=observed,
            note=report.reason or "oracle inconclusive",
        )
    if verdict.order is None:
        agree = report.all_vanish
        note = "Infinite verdict confirmed up to the truncation degree" if agree else (
            f"Infinite verdict but a survivor appears at degree {report.leading_degree}"
        )
        return AgreementRecord(
            status=AgreementStatus.AGREE if agree else AgreementStatus.DISAGREE,
            guaranteed=verdict.order_label, observed=observed, note=note,
        )
    leading = report.n_max + 1 if report.leading_degree is None else report.leading_degree
    agree = leading >= verdict.order
    sharp = report.leading_degree == verdict.order
    if not agree:
        note = f"survivor at degree {leading} below the guaranteed order {verdict.order}"
    elif sharp:
        note = "sharp: the oracle finds a survivor exactly at the guaranteed order"
    elif report.leading_degree is None:
        note = f"no survivor up to degree {report.n_max}; bound not tested for sharpness"
    else:
        note = f"strict: first survivor at degree {leading} > {verdict.order}"
    if not verdict.applicable:
        note += "; theorem inapplicable, only the trivial bound is checked"
    return AgreementRecord(
        status=AgreementStatus.AGREE if agree else AgreementStatus.DISAGREE,
        sharp=sharp, guaranteed=verdict.order_label, observed=observed, note=note,
    )
