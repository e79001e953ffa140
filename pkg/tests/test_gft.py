"""Tests for the group Fourier transform of radial functions."""

import math

import numpy as np
import pytest

from errors import ContractError, DomainError, TruncationError
from gft import (
    SpectralTable,
    box_chihat_grid,
    box_limit,
    box_profile,
    box_table,
    build_table,
    chihat_box,
    chihat_box_dilated,
    dims,
    gaussian_l2_norm_sq,
    gaussian_profile,
    gaussian_table,
    gft_radial,
    gft_radial_all,
    plancherel_energy,
    reconstruct,
    special_hermite_check,
    spectral_constant,
)
from quadrature import hybrid_grid


class TestConstants:
    def test_spectral_constant(self):
        assert spectral_constant(1) == pytest.approx(2 * math.pi)
        assert spectral_constant(2) == pytest.approx((2 * math.pi) ** 2 / math.sqrt(2))

    def test_dims(self):
        assert list(dims(3, 1)) == [1, 1, 1, 1]
        assert list(dims(3, 2)) == [1, 2, 3, 4]
        assert list(dims(2, 3)) == [1, 3, 6]


class TestBoxCoefficients:
    @pytest.mark.parametrize("lam", [0.1, 1.0, 2.5, 7.0, 19.3, 50.0])
    def test_closed_form_k0(self, lam):
        exact = 4 * math.sin(lam) / lam**2 * (1 - math.exp(-lam / 4))
        assert chihat_box(lam, 0, 1, tol=1e-12) == pytest.approx(exact, abs=1e-10)

    def test_even_in_lambda(self):
        assert chihat_box(-3.2, 2, 1) == chihat_box(3.2, 2, 1)

    @pytest.mark.parametrize(("k", "n"), [(0, 1), (3, 1), (0, 2), (2, 2), (1, 3)])
    def test_limit_at_zero(self, k, n):
        assert chihat_box(1e-4, k, n) == pytest.approx(box_limit(n), rel=1e-3)

    def test_zero_lambda(self):
        with pytest.raises(DomainError):
            chihat_box(0.0, 0, 1)

    @pytest.mark.parametrize("n", [1, 2])
    def test_cumulative_grid_matches_quadrature(self, n):
        lams = np.array([0.3, 1.7, 4.0, 11.5])
        grid = box_chihat_grid(lams, 5, n)
        for i, lam in enumerate(lams):
            for k in range(6):
                assert grid[i, k] == pytest.approx(chihat_box(lam, k, n, tol=1e-12), abs=1e-9)

    def test_profile_quadrature_matches_closed_path(self):
        values = gft_radial_all(box_profile(), 2.3, 4, 1)
        for k in range(5):
            assert values[k].real == pytest.approx(chihat_box(2.3, k, 1), abs=1e-8)
            assert abs(values[k].imag) < 1e-12

    def test_dilation(self):
        rho, lam = 0.6, 3.0
        assert chihat_box_dilated(rho, lam, 1, 1) == pytest.approx(
            rho**4 * chihat_box(rho * rho * lam, 1, 1))

    def test_dilation_radius(self):
        with pytest.raises(ContractError):
            chihat_box_dilated(1.5, 1.0, 0, 1)


class TestGaussian:
    @pytest.mark.parametrize(("lam", "n"), [(0.7, 1), (3.0, 1), (1.5, 2)])
    def test_closed_form_matches_quadrature(self, lam, n):
        table = gaussian_table(1.3, 0.8, [lam], 6, n)
        numeric = gft_radial_all(gaussian_profile(1.3, 0.8), lam, 6, n, tol=1e-12)
        assert np.allclose(table.values[0], numeric, atol=1e-9)

    def test_plancherel_energy_n2(self):
        table = gaussian_table(1.0, 1.0, hybrid_grid(12.0, 0.01), 400, 2)
        assert plancherel_energy(table).energy == pytest.approx(gaussian_l2_norm_sq(1.0, 1.0, 2),
                                                                rel=1e-2)

    def test_plancherel_energy(self):
        table = gaussian_table(1.0, 1.0, hybrid_grid(12.0, 0.01), 400, 1)
        exact = gaussian_l2_norm_sq(1.0, 1.0, 1)
        energy = plancherel_energy(table).energy
        assert energy == pytest.approx(exact, rel=1e-2)
        assert table.tail_bound == pytest.approx(max(exact - energy, 0.0))

    def test_single_coefficient(self):
        value = gft_radial(gaussian_profile(1.0, 1.0), 1.0, 2, 1)
        assert value == pytest.approx(complex(gaussian_table(1.0, 1.0, [1.0], 2, 1).values[0, 2]),
                                      abs=1e-9)

    def test_build_table_matches_closed_form(self):
        profile = gaussian_profile(1.3, 0.8)
        exact = gaussian_l2_norm_sq(1.3, 0.8, 1)
        table = build_table(profile, [0.7, 3.0], 4, 1, workers=2, reference_energy=exact)
        closed = gaussian_table(1.3, 0.8, [0.7, 3.0], 4, 1)
        assert np.allclose(table.values, closed.values, atol=1e-9)
        assert table.tail_bound == pytest.approx(max(exact - plancherel_energy(table).energy, 0.0))
        assert build_table(profile, [0.7], 2, 1).tail_bound == 0.0


class TestPlancherelAndReconstruction:
    @pytest.mark.slow
    def test_box_energy_is_box_volume(self):
        table = box_table(hybrid_grid(200.0, 0.02), 200, 1)
        energy = plancherel_energy(table).energy
        assert energy == pytest.approx(2 * math.pi, rel=5e-3)

    @pytest.mark.slow
    def test_dilated_box_energy(self):
        rho = 0.5
        table = box_table(hybrid_grid(200.0 / rho**2, 0.02 / rho**2, lower=1e-4 / rho**2), 200, 1,
                          rho=rho)
        assert plancherel_energy(table).energy == pytest.approx(rho**4 * 2 * math.pi, rel=5e-3)

    def test_dilation_scales_energy(self):
        rho = 0.5
        grid = hybrid_grid(20.0, 0.05)
        full = plancherel_energy(box_table(grid, 20, 1)).energy
        dilated = box_table(grid / rho**2, 20, 1, rho=rho)
        assert plancherel_energy(dilated).energy == pytest.approx(rho**4 * full, rel=1e-9)

    def test_reconstruct_refuses_coarse_tables(self):
        table = SpectralTable.zeros(1, np.array([1.0, 2.0]), 3)
        table.tail_bound = 0.5
        with pytest.raises(TruncationError):
            reconstruct(table, 0.0, 0.0, tol=1e-3)

    def test_reconstruct_checks_dimension(self):
        table = SpectralTable.zeros(2, np.array([1.0]), 0)
        with pytest.raises(ContractError):
            reconstruct(table, 0.0, 0.0)


class TestSpectralTable:
    def test_csv_round_trip(self):
        table = box_table(np.array([0.5, 1.0, 2.0]), 3, 1)
        restored = SpectralTable.from_csv(table.to_csv())
        assert np.array_equal(restored.values, table.values)
        assert np.array_equal(restored.lambda_grid, table.lambda_grid)
        assert restored.tail_bound == table.tail_bound

    def test_malformed_csv(self):
        with pytest.raises(ContractError):
            SpectralTable.from_csv("n,k_max\n1,2\n")

    @pytest.mark.parametrize("grid", [[0.0, 1.0], [2.0, 1.0]])
    def test_bad_grid(self, grid):
        with pytest.raises(ContractError):
            SpectralTable.zeros(1, np.array(grid), 2)


class TestSpecialHermite:
    @pytest.mark.parametrize("k", [0, 1, 2])
    @pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("z", [0.3 + 0.2j, -0.7 + 0.1j, 1.1 - 0.5j])
    def test_matrix_coefficient_is_laguerre(self, k, lam, z):
        lhs, rhs = special_hermite_check(lam, k, z)
        assert abs(lhs - rhs) < 1e-6
