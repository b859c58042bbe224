"""Spherical-wave expansions: evaluation, traces, plane waves, fitting."""

import math

import numpy as np
import pytest

from app.core.errors import ConditioningError, DomainError
from app.core.expansion import (
    Expansion,
    edge_line_trace,
    evaluate,
    fit_from_samples,
    impedance_trace,
    mode_gradient,
    mode_matrix,
    phi_trace,
    plane_trace_matrix,
    plane_wave_expansion,
    points_from_spherical,
    ray_impedance_trace,
)
from app.core.geometry import Ray
from app.core.sampling import fibonacci_sphere
from app.core.specfun import ModeIndex, mode_count, sph_bessel_j


# ── Helpers ────────────────────────────────────────────────────────────────────


def _random_expansion(n_max: int, lam: float = 2.0, seed: int = 7) -> Expansion:
    rng = np.random.default_rng(seed)
    k = mode_count(n_max)
    return Expansion(lam, rng.normal(size=k) + 1j * rng.normal(size=k))


def _ball_points(count: int, radius: float, seed: int = 3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    dirs = fibonacci_sphere(count)
    return dirs * radius * rng.uniform(0.2, 1.0, size=(count, 1))


# ── Value type ────────────────────────────────────────────────────────────────


class TestExpansion:
    def test_single_axisymmetric_mode(self):
        e = Expansion.from_modes(1.0, 2, {ModeIndex(0, 0): 1.0})
        value = evaluate(e, 0.7, 1.1, 0.3)
        assert value == pytest.approx(math.sqrt(4.0 * math.pi) * sph_bessel_j(0, 0.7))

    def test_value_at_origin(self):
        e = _random_expansion(4)
        assert evaluate(e, 0.0, 0.0, 0.0) == pytest.approx(math.sqrt(4.0 * math.pi) * e.coeffs[0])

    def test_leading_degree(self):
        e = Expansion.from_modes(1.0, 5, {ModeIndex(3, -2): 1.0, ModeIndex(5, 0): 0.5})
        assert e.leading_degree() == 3
        assert Expansion.zeros(1.0, 3).leading_degree() is None

    def test_linear_combination(self):
        a, b = _random_expansion(3), _random_expansion(5, seed=11)
        pts = _ball_points(20, 0.8)
        combined = 2.0 * a + b
        np.testing.assert_allclose(combined(pts), 2.0 * a(pts) + b(pts), atol=1e-12)

    def test_adding_different_eigenvalues_rejected(self):
        with pytest.raises(DomainError):
            _ = _random_expansion(2, lam=1.0) + _random_expansion(2, lam=2.0)

    def test_json_preserves_coefficients(self):
        e = _random_expansion(3)
        back = Expansion.from_json(e.to_json())
        assert back.lam == e.lam
        np.testing.assert_array_equal(back.coeffs, e.coeffs)

    def test_coefficients_are_read_only(self):
        e = _random_expansion(2)
        with pytest.raises(ValueError):
            e.coeffs[0] = 1.0

    def test_wrong_coefficient_count_rejected(self):
        with pytest.raises(DomainError):
            Expansion(1.0, np.zeros(5, dtype=complex))

    def test_nonpositive_eigenvalue_rejected(self):
        with pytest.raises(DomainError):
            Expansion.zeros(0.0, 2)


class TestHelmholtz:
    def test_expansion_solves_helmholtz(self):
        """Second differences of the truncated sum match −λ u."""
        lam = 3.0
        e = _random_expansion(4, lam=lam)
        x0 = np.array([0.21, -0.13, 0.34])
        h = 1e-3
        lap = -6.0 * e(x0[None])[0]
        for axis in range(3):
            step = np.zeros(3)
            step[axis] = h
            lap += e((x0 + step)[None])[0] + e((x0 - step)[None])[0]
        lap /= h * h
        assert abs(lap + lam * e(x0[None])[0]) <= 1e-3 * max(1.0, abs(e(x0[None])[0]))

    def test_gradient_matches_finite_difference(self):
        e = _random_expansion(4)
        x0 = np.array([0.3, 0.2, -0.25])
        h = 1e-6
        grad = e.gradient(x0[None])[0]
        for axis in range(3):
            step = np.zeros(3)
            step[axis] = h
            fd = (e((x0 + step)[None])[0] - e((x0 - step)[None])[0]) / (2 * h)
            assert grad[axis] == pytest.approx(fd, rel=1e-6, abs=1e-8)

    def test_gradient_rejects_axis_points(self):
        with pytest.raises(DomainError):
            mode_gradient(1.0, 2, [[0.0, 0.0, 0.5]])


# ── Traces ────────────────────────────────────────────────────────────────────


class TestTraces:
    def test_phi_trace_matches_evaluation(self):
        e = _random_expansion(3)
        samples = phi_trace(e, 0.8, [0.2, 0.4], [0.5, 1.9])
        for s in samples:
            assert s.value == pytest.approx(evaluate(e, s.r, s.theta, s.phi))
            assert s.phi == 0.8

    def test_impedance_trace_is_normal_derivative(self):
        """On φ = φ₀ the outward normal of the +1 side is φ̂."""
        e = _random_expansion(3)
        phi0, eta = 0.9, 0.4 - 0.2j
        r, theta = 0.35, 1.2
        sample = impedance_trace(e, phi0, 1, eta, [r], [theta])[0]
        point = points_from_spherical(r, theta, phi0)
        phi_hat = np.array([-math.sin(phi0), math.cos(phi0), 0.0])
        expected = e.gradient(point[None])[0] @ phi_hat + eta * e(point[None])[0]
        assert sample.value == pytest.approx(expected, rel=1e-10)

    def test_ray_impedance_trace_matches_gradient(self):
        e = _random_expansion(3)
        ray = Ray(1.0, 0.6)
        d = ray.direction()
        nu = np.cross(d, [0.0, 0.0, 1.0])
        nu /= np.linalg.norm(nu)
        eta = 0.7
        sample = ray_impedance_trace(e, ray, nu, eta, [0.3])[0]
        point = 0.3 * d
        expected = e.gradient(point[None])[0] @ nu + eta * e(point[None])[0]
        assert sample.value == pytest.approx(expected, rel=1e-10)

    def test_ray_impedance_trace_rejects_radial_normal(self):
        ray = Ray(1.0, 0.6)
        with pytest.raises(DomainError):
            ray_impedance_trace(_random_expansion(2), ray, ray.direction(), 1.0, [0.3])

    def test_plane_trace_matches_gradient(self):
        e = _random_expansion(3)
        nu = np.array([0.3, -0.5, 0.8]) / np.linalg.norm([0.3, -0.5, 0.8])
        e1 = np.cross(nu, [1.0, 0.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(nu, e1)
        dirs = np.vstack([e1, (e1 + e2) / math.sqrt(2.0)])
        radii = np.array([0.3, 0.55])
        eta = 0.6 + 0.1j
        rows = plane_trace_matrix(e.lam, e.n_max, radii, dirs, nu, eta) @ e.coeffs
        points = radii[:, None] * dirs
        expected = radii * (e.gradient(points) @ nu + eta * e(points))
        np.testing.assert_allclose(rows, expected, rtol=1e-10)

    def test_plane_trace_rejects_out_of_plane_directions(self):
        with pytest.raises(DomainError):
            plane_trace_matrix(1.0, 2, [0.3], [[1.0, 0.0, 0.0]], [1.0, 0.0, 0.0], 1.0)

    def test_complex_radii_continue_the_real_rows(self):
        theta, phi = np.array([0.4, 1.3]), np.array([0.2, 2.5])
        real = mode_matrix(1.5, 6, [0.5, 1.2], theta, phi)
        continued = mode_matrix(1.5, 6, np.array([0.5 + 0j, 1.2 + 0j]), theta, phi)
        np.testing.assert_allclose(continued, real, rtol=1e-12, atol=1e-15)

    def test_edge_line_keeps_only_axisymmetric_modes(self):
        e = Expansion.from_modes(1.0, 3, {ModeIndex(2, 1): 1.0, ModeIndex(3, -3): 2.0})
        for s in edge_line_trace(e, [0.1, 0.5]) + edge_line_trace(e, [0.3], side=-1):
            assert s.value == 0

    def test_edge_line_parity(self):
        e = Expansion.from_modes(1.0, 3, {ModeIndex(3, 0): 1.0})
        up = edge_line_trace(e, [0.4], side=1)[0].value
        down = edge_line_trace(e, [0.4], side=-1)[0].value
        assert down == pytest.approx(-up)


# ── Plane waves & fitting ─────────────────────────────────────────────────────


class TestPlaneWave:
    def test_truncation_converges(self):
        k, d = 2.0, np.array([0.3, -0.4, 0.866])
        d = d / np.linalg.norm(d)
        e = plane_wave_expansion(k, d, 20)
        pts = _ball_points(40, 1.0)
        np.testing.assert_allclose(e(pts), np.exp(1j * k * pts @ d), atol=1e-10)

    def test_default_truncation(self):
        assert plane_wave_expansion(1.0, [0.0, 0.0, 1.0]).n_max == 20


class TestFit:
    def test_recovers_coefficients(self):
        e = _random_expansion(4, lam=1.5)
        pts = _ball_points(200, 0.9)
        fit = fit_from_samples(pts, e(pts), 1.5, 4)
        np.testing.assert_allclose(fit.expansion.coeffs, e.coeffs, atol=1e-8)
        assert fit.residual < 1e-10

    def test_too_few_samples_rejected(self):
        pts = _ball_points(10, 0.5)
        with pytest.raises(DomainError):
            fit_from_samples(pts, np.zeros(10), 1.0, 4)

    def test_degenerate_sampling_rejected(self):
        """Samples on one axis cannot separate the orders m."""
        pts = np.column_stack([np.zeros(60), np.zeros(60), np.linspace(0.1, 0.9, 60)])
        with pytest.raises(ConditioningError):
            fit_from_samples(pts, np.ones(60), 1.0, 2)
