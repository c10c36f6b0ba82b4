"""Tests for hermsplit.hermite."""

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose

from hermsplit.hermite import (
    GridField,
    MassMismatchError,
    SpectralField,
    build_basis,
    build_rule,
    chemical_potential,
    eval_hermite_function,
    forward,
    hamiltonian,
    hermite_function_table,
    inverse,
    mass_norm,
    quadratic_energy,
    quartic_integral,
)


def _random_coeffs(M: int, seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((M + 1, M + 1)) + 1j * rng.standard_normal((M + 1, M + 1))


class TestBuildRule:
    def test_single_node(self):
        rule = build_rule(1.0, 0)
        assert_allclose(rule.nodes, [0.0], atol=1e-15)
        assert_allclose(rule.weights, [math.sqrt(math.pi)], rtol=1e-14)

    def test_two_nodes(self):
        rule = build_rule(1.0, 1)
        assert_allclose(rule.nodes, [-1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-14)

    def test_scaled_two_nodes(self):
        rule = build_rule(4.0, 1)
        half = 1 / (2 * math.sqrt(2))
        assert_allclose(rule.nodes, [-half, half], atol=1e-14)

    @pytest.mark.parametrize("M", [4, 16, 33])
    def test_nodes_sorted_and_symmetric(self, M):
        rule = build_rule(1.0, M)
        assert rule.size == M + 1
        assert np.all(np.diff(rule.nodes) > 0)
        assert_allclose(rule.nodes, -rule.nodes[::-1], atol=1e-13)
        assert np.all(rule.weights > 0)
        assert_allclose(rule.weights, rule.weights[::-1], rtol=1e-13)

    @pytest.mark.parametrize("M", [4, 16])
    def test_matches_numpy_gauss_hermite(self, M):
        x, w = np.polynomial.hermite.hermgauss(M + 1)
        rule = build_rule(1.0, M)
        assert_allclose(rule.nodes, x, atol=1e-13)
        assert_allclose(rule.weights, w * np.exp(x**2), rtol=1e-11)

    def test_gamma_scaling(self):
        unit, scaled = build_rule(1.0, 16), build_rule(2.25, 16)
        assert_allclose(scaled.nodes, unit.nodes / 1.5, atol=1e-14)
        assert_allclose(scaled.weights, unit.weights / 1.5, rtol=1e-14)

    def test_integrate_gaussian(self):
        rule = build_rule(1.0, 16)
        # exp(-z^2) is the Gauss weight itself; the rule is exact for it
        assert rule.integrate(np.exp(-rule.nodes**2)) == pytest.approx(math.sqrt(math.pi), rel=1e-13)

    def test_large_basis_stays_finite(self):
        rule = build_rule(1.0, 64)
        assert np.all(np.isfinite(rule.nodes))
        assert np.all(np.isfinite(rule.weights))
        assert np.all(np.diff(rule.nodes) > 0)

    @pytest.mark.parametrize("gamma, M", [(0.0, 4), (-1.0, 4), (1.0, -1)])
    def test_invalid_arguments(self, gamma, M):
        with pytest.raises(ValueError):
            build_rule(gamma, M)


class TestHermiteFunctions:
    def test_ground_mode_at_origin(self):
        assert eval_hermite_function(0, 1.0, 0.0) == pytest.approx(math.pi**-0.25, rel=1e-15)

    def test_first_mode_vanishes_at_origin(self):
        assert eval_hermite_function(1, 1.0, 0.0) == 0.0

    def test_high_order_matches_extended_precision(self):
        z = float(build_rule(1.0, 16).nodes[3])
        with mpmath.workdps(100):
            n = 16
            x = mpmath.mpf(z)
            oracle = (
                mpmath.pi ** mpmath.mpf(-0.25)
                / mpmath.sqrt(mpmath.mpf(2) ** n * mpmath.factorial(n))
                * mpmath.exp(-x * x / 2)
                * mpmath.hermite(n, x)
            )
            expected = float(oracle)
        assert eval_hermite_function(16, 1.0, z) == pytest.approx(expected, rel=1e-13)

    def test_table_agrees_with_pointwise(self):
        z = np.linspace(-3.0, 3.0, 11)
        table = hermite_function_table(9, 2.0, z)
        assert table.shape == (11, 10)
        for n in (0, 1, 5, 9):
            expected = [eval_hermite_function(n, 2.0, float(x)) for x in z]
            assert_allclose(table[:, n], expected, rtol=1e-13, atol=1e-15)

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            eval_hermite_function(-1, 1.0, 0.0)


class TestSpectralBasis:
    @pytest.mark.parametrize("gamma", [1.0, 2.5, 4.0])
    @pytest.mark.parametrize("M", [8, 16, 32])
    def test_discrete_orthogonality(self, gamma, M):
        basis = build_basis(gamma, M)
        assert_allclose(basis.transform @ basis.eval_table, np.eye(M + 1), atol=5e-14)

    def test_eigenvalues(self):
        basis = build_basis(2.0, 4)
        assert basis.mu[0, 0] == 2.0
        assert basis.mu[1, 3] == 10.0
        assert np.all(basis.mu > 0)
        assert_allclose(basis.mu, basis.mu.T)

    def test_basis_is_cached_and_readonly(self):
        basis = build_basis(1.0, 16)
        assert build_basis(1.0, 16) is basis
        with pytest.raises(ValueError):
            basis.eval_table[0, 0] = 1.0

    def test_sample_out_of_range(self):
        with pytest.raises(ValueError, match="outside the basis"):
            build_basis(1.0, 4).sample(5, 0)


class TestTransforms:
    def test_forward_of_vacuum(self):
        basis = build_basis(1.0, 16)
        coeffs = forward(basis, basis.sample(0, 0)).coeffs
        expected = np.zeros((17, 17))
        expected[0, 0] = 1.0
        assert_allclose(coeffs, expected, atol=1e-12)

    def test_forward_of_zero(self):
        basis = build_basis(1.0, 16)
        zero = GridField(np.zeros((17, 17)))
        assert not np.any(forward(basis, zero).coeffs)

    def test_forward_of_combination(self):
        basis = build_basis(1.0, 16)
        field = 0.1 * basis.sample(0, 1) + basis.sample(1, 1)
        coeffs = forward(basis, field).coeffs
        expected = np.zeros((17, 17))
        expected[0, 1], expected[1, 1] = 0.1, 1.0
        assert_allclose(coeffs, expected, atol=1e-12)

    def test_inverse_reproduces_basis_function(self):
        basis = build_basis(1.0, 16)
        coeffs = np.zeros((17, 17))
        coeffs[2, 3] = 1.0
        field = inverse(basis, SpectralField(coeffs))
        assert_allclose(field.values, basis.sample(2, 3).values, atol=1e-15)

    @pytest.mark.parametrize("M", [4, 16, 32])
    def test_roundtrip(self, M):
        basis = build_basis(1.0, M)
        a = _random_coeffs(M)
        assert_allclose(forward(basis, inverse(basis, SpectralField(a))).coeffs, a, atol=1e-12)

    def test_inverse_matches_brute_force_series(self):
        basis = build_basis(1.5, 4)
        a = _random_coeffs(4, seed=3)
        z = basis.rule.nodes
        expected = np.zeros((5, 5), dtype=complex)
        for r in range(5):
            for s in range(5):
                expected[r, s] = sum(
                    a[k, l] * eval_hermite_function(k, 1.5, z[r]) * eval_hermite_function(l, 1.5, z[s])
                    for k in range(5)
                    for l in range(5)  # noqa: E741
                )
        assert_allclose(inverse(basis, SpectralField(a)).values, expected, atol=1e-13)

    def test_shape_mismatch(self):
        basis = build_basis(1.0, 4)
        with pytest.raises(ValueError, match="does not match basis shape"):
            forward(basis, GridField(np.zeros((3, 3))))
        with pytest.raises(ValueError, match="does not match basis shape"):
            inverse(basis, SpectralField(np.zeros((6, 6))))

    def test_non_square_field_rejected(self):
        with pytest.raises(ValueError, match="square"):
            GridField(np.zeros((3, 4)))


class TestNormsAndEnergies:
    def test_mass_of_vacuum(self):
        basis = build_basis(1.0, 16)
        assert mass_norm(basis, basis.sample(0, 0)) == pytest.approx(1.0, rel=1e-13)

    def test_mass_is_homogeneous(self):
        basis = build_basis(1.0, 16)
        assert mass_norm(basis, 2.5 * basis.sample(0, 0)) == pytest.approx(2.5, rel=1e-13)

    def test_mass_pythagoras(self):
        basis = build_basis(1.0, 16)
        field = (3.0 * basis.sample(1, 0) + 4.0 * basis.sample(0, 1)) * 0.2
        assert mass_norm(basis, field) == pytest.approx(1.0, rel=1e-13)

    def test_parseval(self):
        basis = build_basis(2.0, 12)
        a = _random_coeffs(12, seed=11)
        field = inverse(basis, SpectralField(a))
        assert mass_norm(basis, field) ** 2 == pytest.approx(np.sum(np.abs(a) ** 2), rel=1e-12)

    def test_mass_equals_weighted_grid_norm(self):
        basis = build_basis(1.0, 10)
        field = inverse(basis, SpectralField(_random_coeffs(10, seed=5)))
        w = basis.rule.weights
        grid = math.sqrt(float(w @ np.abs(field.values) ** 2 @ w))
        assert mass_norm(basis, field) == pytest.approx(grid, rel=1e-12)

    @pytest.mark.parametrize("gamma", [1.0, 3.0])
    @pytest.mark.parametrize("k, l", [(0, 0), (1, 1), (2, 5)])  # noqa: E741
    def test_linear_energy_is_eigenvalue(self, gamma, k, l):  # noqa: E741
        basis = build_basis(gamma, 16)
        field = basis.sample(k, l)
        assert hamiltonian(basis, field, 0.0) == pytest.approx(gamma * (k + l + 1), rel=1e-12)
        assert chemical_potential(basis, field, 0.0, 1.0) == pytest.approx(
            gamma * (k + l + 1), rel=1e-12
        )

    def test_quadratic_energy_from_coefficients(self):
        basis = build_basis(1.0, 4)
        a = np.zeros((5, 5))
        a[0, 0], a[2, 1] = 0.6, 0.8
        assert quadratic_energy(basis, SpectralField(a)) == pytest.approx(0.36 + 0.64 * 4, rel=1e-14)

    def test_quartic_integral_of_vacuum(self):
        basis = build_basis(1.0, 16)
        exact = 1.0 / (2.0 * math.pi)
        native = quartic_integral(basis, basis.sample(0, 0))
        refined = quartic_integral(basis, basis.sample(0, 0), refine=True)
        assert native == pytest.approx(exact, rel=1e-3)
        assert refined == pytest.approx(exact, rel=1e-7)
        assert abs(refined - exact) < abs(native - exact)

    def test_hamiltonian_adds_half_beta_quartic(self):
        basis = build_basis(1.0, 16)
        field = basis.sample(0, 0)
        quartic = quartic_integral(basis, field)
        assert hamiltonian(basis, field, 2.0) == pytest.approx(1.0 + quartic, rel=1e-13)
        assert chemical_potential(basis, field, 2.0, 1.0) == pytest.approx(1.0 + 2.0 * quartic, rel=1e-13)

    def test_chemical_potential_requires_matching_mass(self):
        basis = build_basis(1.0, 16)
        with pytest.raises(MassMismatchError, match="mass constraint"):
            chemical_potential(basis, 2.0 * basis.sample(0, 0), 2.0, 1.0)

    def test_chemical_potential_scales_with_mass(self):
        basis = build_basis(1.0, 16)
        c = 0.5
        field = c * basis.sample(0, 0)
        expected = (c * c + 2.0 * quartic_integral(basis, field)) / (c * c)
        assert chemical_potential(basis, field, 2.0, c) == pytest.approx(expected, rel=1e-13)

    def test_chemical_potential_rejects_nonpositive_mass(self):
        basis = build_basis(1.0, 4)
        with pytest.raises(ValueError, match="positive"):
            chemical_potential(basis, basis.sample(0, 0), 0.0, 0.0)
