"""Numerical oracle: collocation nullspace, integral order, agreement."""

import math

import numpy as np
import pytest

from app.core.errors import DomainError
from app.core.geometry import BoundaryCondition, EdgeCorner, VertexCorner
from app.core.sampling import contour_radii
from app.schemas.reports import AgreementStatus, OracleReport, OracleStatus, VanishingVerdict, VerdictTag
from app.services.oracle import (
    assemble_constraints,
    collocation_nullspace,
    cross_check,
    integral_order,
    oracle_radius,
    survivor_expansion,
    survivor_residual,
)
from app.services.vanish import predict_edge, predict_vertex

OCTANT = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

NODAL = BoundaryCondition.nodal()
SINGULAR = BoundaryCondition.singular()
IMPEDANCE = BoundaryCondition.impedance(1.0 + 0.5j)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

EDGE_PAIRS = {
    "nodal/nodal": (NODAL, NODAL),
    "nodal/singular": (NODAL, SINGULAR),
    "nodal/impedance": (NODAL, IMPEDANCE),
    "singular/singular": (SINGULAR, SINGULAR),
    "impedance/impedance": (IMPEDANCE, IMPEDANCE),
}
RATIONAL_ALPHAS = (1.0 / 2.0, 1.0 / 3.0, 2.0 / 5.0)
EDGE_ALPHAS = (*RATIONAL_ALPHAS, 1.0 / math.sqrt(2.0), GOLDEN)


# ── Helpers ────────────────────────────────────────────────────────────────────


def _verdict(order: int | None, applicable: bool = True) -> VanishingVerdict:
    return VanishingVerdict(subject="edge", label="test", order=order, tag=VerdictTag.NODAL_NODAL_EDGE, requested=10, applicable=applicable)


def _report(leading: int | None, conclusive: bool = True, n_max: int = 10) -> OracleReport:
    return OracleReport(
        subject="edge",
        label="test",
        lam=1.0,
        n_max=n_max,
        n_solve=n_max + 8,
        status=OracleStatus.CONCLUSIVE if conclusive else OracleStatus.INCONCLUSIVE,
        leading_degree=leading,
        reason=None if conclusive else "no clear singular-value gap",
    )


# ── Agreement rules ───────────────────────────────────────────────────────────


class TestCrossCheck:
    def test_sharp_agreement(self):
        record = cross_check(_verdict(3), _report(3))
        assert record.status is AgreementStatus.AGREE
        assert record.sharp

    def test_strict_agreement(self):
        record = cross_check(_verdict(2), _report(3))
        assert record.status is AgreementStatus.AGREE
        assert not record.sharp
        assert record.note.startswith("strict")

    def test_survivor_below_guarantee_disagrees(self):
        record = cross_check(_verdict(3), _report(2))
        assert record.status is AgreementStatus.DISAGREE

    def test_infinite_needs_all_vanish(self):
        assert cross_check(_verdict(None), _report(None)).status is AgreementStatus.AGREE
        assert cross_check(_verdict(None), _report(7)).status is AgreementStatus.DISAGREE

    def test_all_vanish_meets_finite_bound(self):
        record = cross_check(_verdict(4), _report(None))
        assert record.status is AgreementStatus.AGREE
        assert record.observed == "AllVanish{10}"

    def test_inconclusive_oracle(self):
        record = cross_check(_verdict(3), _report(None, conclusive=False))
        assert record.status is AgreementStatus.INCONCLUSIVE
        assert record.observed == "Inconclusive"

    def test_inapplicable_verdict_is_annotated(self):
        record = cross_check(_verdict(0, applicable=False), _report(0))
        assert record.status is AgreementStatus.AGREE
        assert "inapplicable" in record.note


# ── Collocation nullspace ─────────────────────────────────────────────────────


class TestAssembly:
    def test_radius_is_half_a_wavelength(self, nodal):
        assert oracle_radius(EdgeCorner(0.5, nodal, nodal), 4.0) == pytest.approx(math.pi / 2.0)
        assert oracle_radius(EdgeCorner(0.5, nodal, nodal), 1.0) == pytest.approx(math.pi)

    def test_radius_is_capped_by_impedance(self, impedance):
        corner = EdgeCorner(0.5, impedance, impedance)
        assert oracle_radius(corner, 1.0) == pytest.approx(0.05 / abs(1.0 + 0.5j))
        assert oracle_radius(corner, 16.0) == pytest.approx(0.05 / abs(1.0 + 0.5j))

    def test_contour_radii_are_discretely_orthogonal(self):
        radii = contour_radii(12, 2.0)
        np.testing.assert_allclose(np.abs(radii), 2.0, rtol=1e-15)
        for n in range(1, 12):
            assert abs(np.sum(radii**n)) <= 1e-12 * 2.0**n
        with pytest.raises(DomainError):
            contour_radii(0, 1.0)

    def test_rows_exceed_unknowns(self, nodal):
        system = assemble_constraints(EdgeCorner(1.0 / 3.0, nodal, nodal), 1.0, 8)
        assert system.matrix.shape[1] == 81
        assert system.matrix.shape[0] >= 3 * 81
        assert system.radii >= 12
        assert system.matrix.shape[0] == 2 * system.radii * system.angles

    def test_vertex_rows_per_plane(self, nodal):
        system = assemble_constraints(VertexCorner(OCTANT, (nodal,) * 3), 1.0, 6)
        assert system.matrix.shape[0] == 3 * system.radii * system.angles


class TestCollocationNullspace:
    def test_right_angle_nodal_edge_is_sharp(self, nodal):
        corner = EdgeCorner(0.5, nodal, nodal)
        report = collocation_nullspace(corner, 1.0, 4)
        assert report.conclusive
        assert report.leading_degree == 2
        record = cross_check(predict_edge(corner, 4), report)
        assert record.status is AgreementStatus.AGREE
        assert record.sharp

    def test_irrational_nodal_edge_has_no_survivor(self, nodal):
        corner = EdgeCorner(1.0 / math.sqrt(2.0), nodal, nodal)
        report = collocation_nullspace(corner, 1.0, 4)
        assert report.all_vanish
        assert cross_check(predict_edge(corner, 4), report).status is AgreementStatus.AGREE

    def test_irrational_singular_edge_keeps_one_mode_per_degree(self, singular):
        corner = EdgeCorner(1.0 / math.sqrt(2.0), singular, singular)
        report = collocation_nullspace(corner, 1.0, 4)
        assert report.conclusive
        assert report.leading_degree == 0
        assert report.nullspace_dim_per_degree == {n: 1 for n in range(5)}
        assert cross_check(predict_edge(corner, 4), report).sharp

    def test_nodal_octant_first_survivor_is_xyz(self, nodal):
        vertex = VertexCorner(OCTANT, (nodal,) * 3)
        report = collocation_nullspace(vertex, 1.0, 4)
        assert report.conclusive
        assert report.leading_degree == 3
        record = cross_check(predict_vertex(vertex, 4), report)
        assert record.status is AgreementStatus.AGREE
        assert not record.sharp

    def test_survivor_satisfies_the_boundary_conditions(self, nodal):
        corner = EdgeCorner(0.5, nodal, nodal)
        report = collocation_nullspace(corner, 1.0, 4)
        expansion = survivor_expansion(report)
        assert expansion is not None
        mass = expansion.degree_mass()
        assert mass[0] < 1e-8 and mass[1] < 1e-8
        assert mass[2] >= 1.0
        assert survivor_residual(corner, expansion) < 1e-6

    def test_n_max_must_be_positive(self, nodal):
        with pytest.raises(DomainError):
            collocation_nullspace(EdgeCorner(0.5, nodal, nodal), 1.0, 0)

    def test_singular_edge_survivors_are_axisymmetric(self, singular):
        report = collocation_nullspace(EdgeCorner(1.0 / math.sqrt(2.0), singular, singular), 1.0, 4)
        assert report.off_axis_mass is not None
        assert report.off_axis_mass <= 1e-8

    def test_nodal_impedance_right_angle_leads_at_one(self):
        """sin(a x₂)e^{ηx₁} meets both conditions and vanishes to first order."""
        corner = EdgeCorner(0.5, NODAL, IMPEDANCE)
        report = collocation_nullspace(corner, 1.0, 6)
        assert report.conclusive
        assert report.leading_degree == 1
        assert cross_check(predict_edge(corner, 6), report).sharp


class TestEdgeAgreementMatrix:
    @pytest.mark.parametrize("alpha", EDGE_ALPHAS)
    @pytest.mark.parametrize("pair", list(EDGE_PAIRS))
    def test_oracle_meets_the_guaranteed_order(self, pair, alpha):
        bc1, bc2 = EDGE_PAIRS[pair]
        corner = EdgeCorner(alpha, bc1, bc2, aux_line_zero=pair in ("singular/singular", "impedance/impedance"))
        report = collocation_nullspace(corner, 1.0, 10)
        record = cross_check(predict_edge(corner, 10), report)
        assert report.conclusive, report.reason
        assert record.status is AgreementStatus.AGREE, record.note
        if alpha in RATIONAL_ALPHAS and pair in ("nodal/nodal", "impedance/impedance"):
            assert record.sharp, record.note
        if alpha not in RATIONAL_ALPHAS:
            assert record.observed == "AllVanish{10}"


class TestVertexAgreement:
    def test_irrational_nodal_vertex_has_no_survivor(self):
        vertex = VertexCorner.canonical(1.0 / 3.0, 0.2 * math.pi, 0.2 * math.pi, [NODAL] * 3)
        verdict = predict_vertex(vertex, 8)
        report = collocation_nullspace(vertex, 1.0, 8)
        assert verdict.order is None
        assert report.all_vanish, report.reason
        assert cross_check(verdict, report).status is AgreementStatus.AGREE

    def test_irrational_impedance_vertex_has_no_survivor(self):
        vertex = VertexCorner.canonical(
            1.0 / 3.0, 0.2 * math.pi, 0.2 * math.pi, [BoundaryCondition.impedance(1.0)] * 3, aux_vertex_zero=True
        )
        verdict = predict_vertex(vertex, 8)
        report = collocation_nullspace(vertex, 1.0, 8)
        assert verdict.order is None
        assert report.all_vanish, report.reason
        assert cross_check(verdict, report).status is AgreementStatus.AGREE

    def test_rational_nodal_vertex_first_survivor(self):
        """Planes x₂ = 0, φ = π/3 and x₃ = 0: the first survivor is x₃·Im(x₁ + ix₂)³."""
        vertex = VertexCorner.canonical(1.0 / 3.0, math.pi / 2, math.pi / 2, [NODAL] * 3)
        verdict = predict_vertex(vertex, 6)
        report = collocation_nullspace(vertex, 1.0, 6)
        assert verdict.order == 3
        assert report.leading_degree == 4
        assert report.nullspace_dim_per_degree[4] == 1
        record = cross_check(verdict, report)
        assert record.status is AgreementStatus.AGREE
        assert not record.sharp


# ── Integral order ────────────────────────────────────────────────────────────


class TestIntegralOrder:
    def test_cubic_harmonic(self):
        estimate = integral_order(lambda x: x[:, 0] * x[:, 1] * x[:, 2], nodes=32)
        assert estimate.slope == pytest.approx(6.0, abs=0.05)
        assert estimate.order == 3
        assert not estimate.flagged

    def test_non_vanishing_field(self):
        estimate = integral_order(lambda x: 1.0 + x[:, 0], nodes=16)
        assert estimate.order == 0

    def test_offset_center(self):
        center = np.array([0.3, -0.1, 0.2])
        estimate = integral_order(lambda x: (x[:, 0] - center[0]) * (x[:, 1] - center[1]), center=center, nodes=32)
        assert estimate.order == 2

    def test_fractional_growth_is_flagged(self):
        estimate = integral_order(lambda x: np.linalg.norm(x, axis=1) ** 1.5, nodes=16)
        assert estimate.flagged
        assert estimate.order is None
        assert estimate.order_estimate == pytest.approx(1.5, abs=0.05)

    def test_zero_field_is_inconclusive(self):
        estimate = integral_order(lambda x: np.zeros(len(x)), nodes=8)
        assert estimate.inconclusive

    def test_radii_must_span_a_decade(self):
        with pytest.raises(DomainError):
            integral_order(lambda x: np.ones(len(x)), rho_list=[0.01, 0.05])

    @pytest.mark.parametrize("power", [0, 1, 2, 3])
    def test_radial_power(self, power):
        estimate = integral_order(lambda x: np.linalg.norm(x, axis=1) ** power, nodes=16)
        assert estimate.slope == pytest.approx(power + 3.0, abs=0.05)
        assert estimate.order == power

    def test_survivor_of_a_nodal_edge(self):
        corner = EdgeCorner(1.0 / 3.0, NODAL, NODAL)
        report = collocation_nullspace(corner, 1.0, 4)
        assert report.leading_degree == 3
        expansion = survivor_expansion(report)
        assert expansion is not None
        estimate = integral_order(expansion, nodes=32)
        assert estimate.order_estimate == pytest.approx(3.0, abs=0.1)
        assert estimate.order == 3
