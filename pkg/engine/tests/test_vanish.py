"""Theorem engine: per-degree systems, edge and vertex verdicts, traces."""

import math

import pytest

from app.core.errors import DomainError
from app.core.geometry import BoundaryCondition, EdgeCorner, VertexCorner
from app.schemas.reports import ConditionStatus, VanishingVerdict, VerdictTag
from app.services.vanish import (
    INAPPLICABLE,
    EdgeFamily,
    degree_system,
    edge_family,
    predict,
    predict_edge,
    predict_vertex,
    theorem_trace,
)

OCTANT = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


# ── Per-degree algebra ─────────────────────────────────────────────────────────


class TestDegreeSystem:
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0 / 3.0, 1.0 / math.sqrt(2.0)])
    def test_determinants_match_closed_forms(self, alpha, nodal, impedance):
        for bc1, bc2 in [(nodal, nodal), (nodal, impedance), (impedance, nodal), (impedance, impedance)]:
            system = degree_system(EdgeCorner(alpha, bc1, bc2), 6)
            for order in system.per_m.values():
                assert order.determinant == pytest.approx(order.closed_form, abs=1e-12)

    def test_family_dispatch(self, nodal, singular):
        assert edge_family(EdgeCorner(0.5, nodal, nodal)) is EdgeFamily.NODAL_NODAL
        assert edge_family(EdgeCorner(0.5, nodal, singular)) is EdgeFamily.NODAL_IMPEDANCE
        assert edge_family(EdgeCorner(0.5, singular, nodal)) is EdgeFamily.IMPEDANCE_NODAL
        assert edge_family(EdgeCorner(0.5, singular, singular)) is EdgeFamily.IMPEDANCE_IMPEDANCE

    def test_axisymmetric_constraint(self, nodal, impedance):
        assert degree_system(EdgeCorner(0.4, nodal, impedance), 2).m0_constraint is not None
        assert degree_system(EdgeCorner(0.4, impedance, impedance, aux_line_zero=True), 2).m0_constraint is not None
        assert degree_system(EdgeCorner(0.4, impedance, impedance), 2).m0_constraint is None

    def test_degree_zero_rejected(self, nodal):
        with pytest.raises(DomainError):
            degree_system(EdgeCorner(0.5, nodal, nodal), 0)


# ── Edge corners ──────────────────────────────────────────────────────────────


class TestPredictEdge:
    @pytest.mark.parametrize("alpha, order", [(0.5, 2), (1.0 / 3.0, 3), (2.0 / 5.0, 5), (3.0 / 7.0, 7)])
    def test_nodal_nodal_rational(self, alpha, order, nodal):
        verdict = predict_edge(EdgeCorner(alpha, nodal, nodal), 10)
        assert verdict.order == order
        assert verdict.tag == "nodal-nodal-edge"
        assert verdict.order_label == f"Finite{{{order}}}"

    def test_nodal_nodal_irrational(self, nodal):
        verdict = predict_edge(EdgeCorner(1.0 / math.sqrt(2.0), nodal, nodal), 10)
        assert verdict.infinite
        assert verdict.order_label == "Infinite"
        assert verdict.tag == "irrational-edge"

    def test_right_angle_nodal_impedance(self, nodal, impedance):
        assert predict_edge(EdgeCorner(0.5, nodal, impedance), 10).order == 1
        assert predict_edge(EdgeCorner(0.5, impedance, nodal), 10).order == 1

    @pytest.mark.parametrize("alpha", [1.0 / 3.0, 2.0 / 5.0, 1.0 / math.sqrt(2.0)])
    def test_nodal_impedance_without_half_odd_multiples(self, alpha, nodal, singular):
        verdict = predict_edge(EdgeCorner(alpha, nodal, singular), 10)
        assert verdict.infinite
        assert verdict.applicable

    def test_nodal_impedance_even_denominator(self, nodal, impedance):
        assert predict_edge(EdgeCorner(3.0 / 4.0, nodal, impedance), 10).order == 2

    def test_impedance_pair_with_vanishing_edge_line(self, impedance):
        verdict = predict_edge(EdgeCorner(2.0 / 5.0, impedance, impedance, aux_line_zero=True), 10)
        assert verdict.order == 5
        assert any(rec.status is ConditionStatus.ASSUMED for rec in verdict.conditions)

    def test_singular_pair_rational_is_inapplicable(self, singular):
        verdict = predict_edge(EdgeCorner(0.5, singular, singular), 10)
        assert not verdict.applicable
        assert verdict.order == 0
        assert any(rec.statement == INAPPLICABLE for rec in verdict.conditions)

    def test_singular_pair_irrational_is_axisymmetric(self, singular):
        verdict = predict_edge(EdgeCorner(1.0 / math.sqrt(2.0), singular, singular), 10)
        assert verdict.applicable
        assert verdict.axisymmetric
        assert verdict.order == 0
        assert verdict.tag == "axisymmetric-singular-edge"

    def test_impedance_pair_irrational_without_edge_line_is_inapplicable(self, impedance):
        verdict = predict_edge(EdgeCorner(1.0 / math.sqrt(2.0), impedance, impedance), 10)
        assert not verdict.applicable
        assert not verdict.axisymmetric

    def test_failing_condition_names_the_cap(self, nodal):
        verdict = predict_edge(EdgeCorner(1.0 / 3.0, nodal, nodal), 10)
        failing = [rec.statement for rec in verdict.conditions if rec.status is ConditionStatus.FAILS]
        assert failing == ["sin(3·απ) = 0"]

    def test_request_must_be_positive(self, nodal):
        with pytest.raises(DomainError):
            predict_edge(EdgeCorner(0.5, nodal, nodal), 0)


# ── Vertex corners ────────────────────────────────────────────────────────────


class TestPredictVertex:
    def test_nodal_octant(self, nodal):
        verdict = predict_vertex(VertexCorner(OCTANT, (nodal,) * 3), 10)
        assert verdict.order == 2
        assert verdict.tag == "nodal-nodal-edge"
        assert verdict.pair is not None

    def test_irrational_nodal_pair_gives_infinite(self, nodal):
        v = VertexCorner.canonical(1.0 / math.sqrt(2.0), 0.3 * math.pi, 0.3 * math.pi, [nodal] * 3)
        assert predict_vertex(v, 10).infinite

    def test_impedance_witness_at_the_equator(self, impedance):
        """Witness rays at θ = π/2 meet the zero of P_2^1(0)."""
        v = VertexCorner.canonical(1.0 / 3.0, math.pi / 2, math.pi / 2, [impedance] * 3, aux_vertex_zero=True)
        verdict = predict_vertex(v, 10)
        assert verdict.order == 2
        assert verdict.tag == "vertex-impedance-witness"
        failing = [rec.statement for rec in verdict.conditions if rec.status is ConditionStatus.FAILS]
        assert any(s.startswith("P_2^1") for s in failing)

    def test_impedance_planes_without_vertex_zero_are_inapplicable(self, impedance):
        v = VertexCorner.canonical(1.0 / 3.0, math.pi / 2, math.pi / 2, [impedance] * 3)
        verdict = predict_vertex(v, 10)
        assert not verdict.applicable
        assert verdict.order == 0
        assert verdict.tag == "vertex-inapplicable"

    def test_nodal_witness_plane(self, impedance, nodal):
        v = VertexCorner.canonical(1.0 / 3.0, math.pi / 2, math.pi / 2, [impedance, impedance, nodal])
        verdict = predict_vertex(v, 10)
        assert verdict.order == 1
        assert any(rec.tag == "vertex-nodal-witness" for rec in verdict.conditions)

    def test_dispatch(self, nodal):
        assert predict(EdgeCorner(0.5, nodal, nodal), 5).subject == "edge"
        assert predict(VertexCorner(OCTANT, (nodal,) * 3), 5).subject == "vertex"
        with pytest.raises(DomainError):
            predict("octant", 5)  # type: ignore[arg-type]


# ── Rendering ─────────────────────────────────────────────────────────────────


class TestTheoremTrace:
    def test_edge_trace_lists_every_condition(self, nodal):
        verdict = predict_edge(EdgeCorner(1.0 / 3.0, nodal, nodal), 10)
        text = theorem_trace(verdict)
        assert text.startswith("Edge corner Nodal/Nodal")
        assert "Finite{3}" in text
        assert len(text.splitlines()) == 2 + len(verdict.conditions)

    def test_vertex_trace_names_the_pair(self, nodal):
        text = theorem_trace(predict_vertex(VertexCorner(OCTANT, (nodal,) * 3), 10))
        assert "decided by plane pair" in text

    def test_inapplicable_trace(self):
        singular = BoundaryCondition.singular()
        text = theorem_trace(predict_edge(EdgeCorner(0.5, singular, singular), 10))
        assert INAPPLICABLE in text.splitlines()[0]

    def test_trace_prints_tag_values(self, nodal):
        text = theorem_trace(predict_edge(EdgeCorner(1.0 / 3.0, nodal, nodal), 10))
        assert "[nodal-nodal-edge]" in text.splitlines()[0]
        assert "VerdictTag" not in text


class TestVerdictTags:
    @pytest.mark.parametrize("alpha", [0.5, 1.0 / 3.0, 1.0 / math.sqrt(2.0)])
    def test_every_tag_is_an_enum_member(self, alpha, nodal, singular, impedance):
        for bc1, bc2 in [(nodal, nodal), (nodal, impedance), (singular, singular), (impedance, impedance)]:
            verdict = predict_edge(EdgeCorner(alpha, bc1, bc2), 10)
            assert isinstance(verdict.tag, VerdictTag)
            assert all(isinstance(rec.tag, VerdictTag) for rec in verdict.conditions)

    def test_tags_serialise_as_stable_strings(self, nodal):
        verdict = predict_edge(EdgeCorner(1.0 / math.sqrt(2.0), nodal, nodal), 10)
        assert verdict.model_dump(mode="json")["tag"] == "irrational-edge"
        assert VanishingVerdict.model_validate_json(verdict.model_dump_json()).tag is VerdictTag.IRRATIONAL_EDGE

    def test_unknown_tag_rejected(self):
        with pytest.raises(ValueError):
            VanishingVerdict(subject="edge", label="x", order=1, tag="free-form", requested=10)
