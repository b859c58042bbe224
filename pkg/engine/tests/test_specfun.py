"""Special functions: spherical Bessel, associated Legendre, harmonics."""

import math

import numpy as np
import pytest
from scipy import linalg, special

from app.core.errors import DomainError
from app.core.sampling import cartesian_to_spherical, sphere_quadrature
from app.core.specfun import (
    ModeIndex,
    assoc_legendre,
    assoc_legendre_dtheta,
    bessel_gram,
    bessel_independence,
    column_independence,
    harmonic_norm,
    legendre_column,
    legendre_orthogonality,
    legendre_orthogonality_norm,
    legendre_table,
    mode_arrays,
    mode_count,
    sph_bessel_j,
    sph_bessel_j_recurrence,
    sph_bessel_j_series,
    sph_bessel_jp_table,
    sph_bessel_series_table,
    sph_bessel_table,
)


# ── Mode bookkeeping ───────────────────────────────────────────────────────────


class TestModeIndex:
    def test_flat_index_layout(self):
        assert ModeIndex(0, 0).flat == 0
        assert ModeIndex(1, -1).flat == 1
        assert ModeIndex(1, 1).flat == 3
        assert ModeIndex(2, -2).flat == 4

    def test_from_flat_inverts_flat(self):
        for k in range(mode_count(10)):
            assert ModeIndex.from_flat(k).flat == k

    def test_mode_arrays_match_flat_index(self):
        degrees, orders = mode_arrays(6)
        for k, (n, m) in enumerate(zip(degrees, orders)):
            assert ModeIndex(int(n), int(m)).flat == k

    def test_invalid_order_rejected(self):
        with pytest.raises(DomainError):
            ModeIndex(2, 3)
        with pytest.raises(DomainError):
            ModeIndex(-1, 0)


# ── Spherical Bessel ───────────────────────────────────────────────────────────


class TestSphericalBessel:
    def test_series_and_recurrence_agree(self):
        t = np.linspace(0.1, 10.0, 60)
        for n in range(21):
            np.testing.assert_allclose(sph_bessel_j_series(n, t), sph_bessel_j_recurrence(n, t), rtol=0, atol=1e-10)

    def test_table_matches_scipy(self):
        t = np.linspace(0.0, 30.0, 301)
        table = sph_bessel_table(20, t)
        for n in range(21):
            np.testing.assert_allclose(table[n], special.spherical_jn(n, t), rtol=0, atol=1e-11)

    def test_value_at_origin(self):
        assert sph_bessel_j(0, 0.0) == pytest.approx(1.0)
        for n in range(1, 8):
            assert sph_bessel_j(n, 0.0) == 0.0

    def test_small_argument_leading_term(self):
        t = 1e-3
        for n in range(6):
            lead = t**n / math.prod(range(1, 2 * n + 2, 2))
            assert sph_bessel_j(n, t) == pytest.approx(lead, rel=1e-6)

    def test_derivative_matches_scipy(self):
        t = np.linspace(0.0, 12.0, 97)
        table = sph_bessel_jp_table(12, t)
        for n in range(13):
            np.testing.assert_allclose(table[n], special.spherical_jn(n, t, derivative=True), rtol=0, atol=1e-11)

    def test_complex_series_matches_scipy(self):
        z = 3.0 * np.exp(2j * np.pi * np.arange(16) / 16)
        table = sph_bessel_series_table(18, z)
        for n in range(19):
            np.testing.assert_allclose(table[n], special.spherical_jn(n, z), rtol=1e-10, atol=1e-14)

    def test_negative_argument_rejected(self):
        with pytest.raises(DomainError):
            sph_bessel_j(1, -0.5)

    def test_non_integer_degree_rejected(self):
        with pytest.raises(DomainError):
            sph_bessel_j(1.5, 1.0)  # type: ignore[arg-type]


class TestBesselIndependence:
    def test_bessel_columns_are_independent(self):
        report = bessel_independence(12, 1.0)
        assert not report.dependent
        assert report.columns.sigma_min > 1e-12
        assert report.gram_sigma_min > 0.0

    def test_dependent_column_is_flagged(self):
        t = np.linspace(0.05, 1.0, 80)
        table = sph_bessel_table(4, t).T
        design = np.column_stack([table, table[:, 2] + 0.5 * table[:, 3]])
        report = column_independence(design)
        assert report.dependent
        expected = np.array([0.0, 0.0, 1.0, 0.5, 0.0, -1.0])
        assert abs(report.null_vector @ expected) / np.linalg.norm(expected) == pytest.approx(1.0, abs=1e-8)

    def test_zero_column_is_dependent(self):
        design = np.column_stack([np.ones(10), np.zeros(10)])
        assert column_independence(design).dependent

    def test_too_few_samples_rejected(self):
        with pytest.raises(DomainError):
            column_independence(np.ones((2, 3)))

    def test_gram_positive_definite(self):
        gram = bessel_gram(4, 1.0)
        np.testing.assert_allclose(gram, gram.T, atol=1e-15)
        linalg.cholesky(gram)  # raises LinAlgError when not positive definite


# ── Associated Legendre ────────────────────────────────────────────────────────


class TestLegendre:
    def test_table_matches_scipy(self):
        x = np.linspace(-1.0, 1.0, 41)
        table = legendre_table(10, x)
        for n in range(11):
            for m in range(n + 1):
                ref = special.lpmv(m, n, x)
                scale = max(1.0, float(np.abs(ref).max()))
                np.testing.assert_allclose(table[n, m], ref, rtol=1e-10, atol=1e-12 * scale)

    def test_condon_shortley_phase(self):
        assert assoc_legendre(1, 1, 0.0) == pytest.approx(-1.0)
        assert assoc_legendre(2, 1, 0.5) == pytest.approx(-3.0 * 0.5 * math.sqrt(0.75))

    def test_column_matches_table(self):
        x = np.linspace(-0.9, 0.9, 7)
        table = legendre_table(9, x)
        for m in range(10):
            np.testing.assert_allclose(legendre_column(9, m, x), table[:, m], rtol=1e-12, atol=1e-12)

    def test_column_above_degree_is_zero(self):
        assert np.all(legendre_column(3, 5, [0.2, 0.4]) == 0.0)

    def test_dtheta_matches_finite_difference(self):
        h = 1e-6
        for theta in (0.3, 1.1, 2.4):
            for n, m in [(1, 0), (3, 0), (3, 2), (5, 1), (6, 6)]:
                fd = (assoc_legendre(n, m, math.cos(theta + h)) - assoc_legendre(n, m, math.cos(theta - h))) / (2 * h)
                assert assoc_legendre_dtheta(n, m, theta) == pytest.approx(fd, rel=1e-6, abs=1e-6)

    def test_dtheta_rejects_poles(self):
        with pytest.raises(DomainError):
            assoc_legendre_dtheta(2, 1, 0.0)

    def test_argument_outside_interval_rejected(self):
        with pytest.raises(DomainError):
            legendre_table(3, 1.5)

    def test_orthogonality_identity(self):
        for n in range(1, 11):
            for m in range(n + 1):
                for l in range(n + 1):
                    if m == 0 and l == 0:
                        continue
                    value = legendre_orthogonality(n, m, l)
                    scale = legendre_orthogonality_norm(n, max(m, l))
                    expected = scale if m == l else 0.0
                    assert abs(value - expected) <= 1e-8 * scale, (n, m, l)

    def test_orthogonality_rejects_divergent_case(self):
        with pytest.raises(DomainError):
            legendre_orthogonality(3, 0, 0)


# ── Spherical harmonics ───────────────────────────────────────────────────────


class TestHarmonics:
    def test_orthonormal_on_sphere(self):
        dirs, weights = sphere_quadrature(16)
        _, theta, phi = cartesian_to_spherical(dirs)
        degrees, orders = mode_arrays(4)
        table = legendre_table(4, np.cos(theta))
        ys = np.array(
            [
                harmonic_norm(int(n), int(m)) * table[n, abs(m)] * np.exp(1j * m * phi)
                for n, m in zip(degrees, orders)
            ]
        )
        gram = (ys * weights) @ ys.conj().T
        np.testing.assert_allclose(gram, np.eye(ys.shape[0]), atol=1e-12)

    def test_norm_of_axisymmetric_mode(self):
        assert harmonic_norm(0, 0) == pytest.approx(1.0 / math.sqrt(4.0 * math.pi))
        assert harmonic_norm(3, -2) == harmonic_norm(3, 2)
