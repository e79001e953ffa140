"""Tests for special functions and the Frenzen-Wong approximation."""

import math

import numpy as np
import pytest
from scipy import integrate

from errors import DomainError
from specfun import (
    FW_THRESHOLD,
    FWRegime,
    NuIndex,
    airy,
    airy_IAi,
    alpha_0,
    bessel_J,
    bracket,
    eta_0,
    fn_A,
    fn_Theta,
    fw_approx,
    hermite_h,
    hermite_table,
    j_tilde,
    laguerre_L,
    laguerre_Lambda,
    laguerre_Lambda_table,
    phi_k,
)


class TestLaguerre:
    @pytest.mark.parametrize(
        ("k", "delta", "t", "expected"),
        [
            (0, 1.5, 2.0, 1.0),
            (1, 1.0, 0.5, 1.5),
            (2, 0.0, 1.5, -0.875),
            (3, 0.0, 0.0, 1.0),
            (2, 1.0, 0.0, 3.0),
        ],
    )
    def test_polynomial_values(self, k, delta, t, expected):
        assert laguerre_L(k, delta, t) == pytest.approx(expected)

    @pytest.mark.parametrize("delta", [0.0, 1.0, 2.0])
    def test_functions_are_orthonormal(self, delta):
        for j in range(4):
            for k in range(j, 4):
                value, _ = integrate.quad(
                    lambda x: laguerre_Lambda(j, delta, x) * laguerre_Lambda(k, delta, x),
                    0.0, 200.0, limit=200)
                assert value == pytest.approx(1.0 if j == k else 0.0, abs=1e-8)

    def test_table_matches_scalar(self):
        x = np.linspace(0.0, 30.0, 25)
        table = laguerre_Lambda_table(6, 1.0, x)
        for k in range(7):
            assert np.allclose(table[k], laguerre_Lambda(k, 1.0, x), atol=1e-13)

    def test_large_index_stays_finite_and_bounded(self):
        x = np.array([1.0, 4.0e4, 8.0e4, 2.0e5])
        row = laguerre_Lambda_table(20_000, 0.0, x)[-1]
        assert np.all(np.isfinite(row))
        # |L_k(x) e^{-x/2}| <= 1 for delta = 0
        assert np.all(np.abs(row) <= 1.0 + 1e-9)

    def test_negative_argument_is_rejected(self):
        with pytest.raises(DomainError):
            laguerre_Lambda(1, 0.0, -0.1)

    def test_phi_k_at_origin(self):
        # phi_k^lambda(0) = (|lambda|/2pi)^n dim(k)
        assert phi_k(2.0, 3, 2, [0.0, 0.0]) == pytest.approx((1 / math.pi) ** 2 * 4)


class TestHermiteBesselAiry:
    def test_hermite_functions_are_orthonormal(self):
        x = np.linspace(-20.0, 20.0, 8001)
        table = hermite_table(5, x)
        gram = integrate.trapezoid(table[:, None, :] * table[None, :, :], x, axis=-1)
        assert np.allclose(gram, np.eye(6), atol=1e-10)

    def test_hermite_values(self):
        h0 = math.pi**-0.25
        assert hermite_h(0, 0.0) == pytest.approx(h0)
        assert hermite_h(1, 1.0) == pytest.approx(math.sqrt(2.0) * h0 * math.exp(-0.5))
        assert hermite_h(2, 0.0) == pytest.approx(-math.sqrt(0.5) * h0)

    def test_bessel_values(self):
        assert bessel_J(0, 0.0) == pytest.approx(1.0)
        assert abs(bessel_J(0, 2.404825557695773)) < 1e-12
        with pytest.raises(DomainError):
            bessel_J(0, -1.0)

    def test_airy_at_zero(self):
        ai, bi, aip = airy(0.0)
        assert (ai, bi, aip) == pytest.approx((0.3550280538878172, 0.6149266274460007,
                                               -0.2588194037928068))

    def test_bracket(self):
        assert bracket(0.0) == 1.0
        assert bracket(3.0) == pytest.approx(math.sqrt(10.0))

    def test_j_tilde_never_vanishes(self):
        x = np.linspace(0.01, 60.0, 5000)
        for m in (0, 1, 2):
            assert np.all(np.asarray(j_tilde(m, x)) > 0)

    def test_airy_integrals_at_zero(self):
        iai, iiai = airy_IAi(0.0)
        assert iai == pytest.approx(2.0 / 3.0)
        assert iiai == pytest.approx(0.2588194037928068)

    def test_airy_integral_tends_to_one(self):
        iai, _ = airy_IAi(12.0)
        assert iai == pytest.approx(1.0, abs=1e-10)


class TestMaps:
    def test_A_values(self):
        assert fn_A(0.0) == 0.0
        assert fn_A(0.5) == pytest.approx(0.5 * (math.pi / 4 + 0.5))

    def test_A_outside_domain(self):
        with pytest.raises(DomainError):
            fn_A(1.0)

    def test_theta_is_continuous_through_one(self):
        t = np.array([1 - 2e-4, 1 - 5e-5, 1.0, 1 + 5e-5, 1 + 2e-4])
        values = np.asarray(fn_Theta(t))
        assert values[2] == 0.0
        assert np.all(np.diff(values) > 0)
        assert np.allclose(values, (t - 1) * 0.5 ** (2.0 / 3.0), atol=1e-6)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_eta_0_at_turning_point(self, n):
        assert eta_0(1.0, n) == pytest.approx(2 ** (1.0 / 3.0))

    @pytest.mark.parametrize("n", [1, 2])
    def test_alpha_0_tends_to_one(self, n):
        assert alpha_0(0.0, n) == 1.0
        assert alpha_0(1e-6, n) == pytest.approx(1.0, abs=1e-5)


class TestFrenzenWong:
    def test_index(self):
        idx = NuIndex(3, 2)
        assert idx.nu == 16
        assert idx.dim == 4

    @pytest.mark.parametrize("x", [0.0, 5.0, 40.0, 80.0, 120.0])
    def test_regime_and_envelope(self, x):
        idx = NuIndex(24, 2)
        result = fw_approx(idx, x)
        expected = FWRegime.BESSEL if x / idx.nu <= FW_THRESHOLD else FWRegime.AIRY
        assert result.regime is expected
        assert result.envelope > 0

    def test_bessel_regime_tracks_exact_values(self):
        idx = NuIndex(100, 1)
        x = idx.nu * np.linspace(0.05, 0.4, 50)
        exact = laguerre_Lambda_table(idx.k, 0.0, x)[idx.k]
        approx = np.array([fw_approx(idx, float(v)) for v in x])
        errors = [abs(e - r.value) / r.amplitude for e, r in zip(exact, approx)]
        assert max(errors) < 0.05

    def test_negative_argument(self):
        with pytest.raises(DomainError):
            fw_approx(NuIndex(1, 1), -1.0)


class TestInvariants:
    def test_recurrence_residual(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            k = int(rng.integers(1, 201))
            delta = float(rng.integers(0, 3))
            t = float(rng.uniform(0.0, 400.0))
            terms = ((k + 1) * laguerre_L(k + 1, delta, t),
                     (2 * k + 1 + delta - t) * laguerre_L(k, delta, t),
                     (k + delta) * laguerre_L(k - 1, delta, t))
            residual = abs(terms[0] - terms[1] + terms[2])
            assert residual <= 1e-10 * max(abs(term) for term in terms)

    @pytest.mark.parametrize("n", [1, 2])
    @pytest.mark.parametrize("k", range(7))
    def test_laguerre_integral(self, n, k):
        value, _ = integrate.quad(
            lambda x: laguerre_L(k, n - 1, x) * math.exp(-0.5 * x) * x ** (n - 1),
            0.0, 200.0, limit=200)
        expected = (-1) ** k * 2**n * math.gamma(k + n) / math.factorial(k)
        assert value == pytest.approx(expected, rel=1e-8, abs=1e-8)

    def test_theta_is_increasing_and_bounded(self):
        t = np.linspace(0.0, 3.0, 10_001)[1:]
        theta = np.asarray(fn_Theta(t))
        assert np.all(np.diff(theta) > 0)
        far = np.linspace(1.5, 50.0, 500)
        assert np.all(np.asarray(fn_Theta(far)) <= (0.75 * far) ** (2.0 / 3.0))

    def test_A_bounds(self):
        t = np.linspace(0.0, 1.0, 1000, endpoint=False)
        A = np.asarray(fn_A(t))
        root = np.sqrt(t)
        assert np.all(A >= math.pi / 4 * root - 1e-12)
        assert np.all(A <= root + 1e-12)

    @pytest.mark.parametrize("m", range(5))
    def test_j_tilde_envelope(self, m):
        x = np.geomspace(1e-3, 1e3, 4000)
        ratio = np.asarray(j_tilde(m, x)) * np.asarray(bracket(x)) ** (m + 0.5) / x**m
        assert ratio.min() > 1e-3
        assert ratio.max() < 10.0

    def test_airy_decay(self):
        def gap(u):
            ai, _, _ = airy(u)
            return (math.log(ai) + 2.0 / 3.0 * u**1.5 + 0.25 * math.log(u)
                    - math.log(1 / (2 * math.sqrt(math.pi))))

        assert abs(gap(20.0)) < 2e-3
        assert abs(gap(50.0)) < abs(gap(20.0))

    def test_airy_integral_oscillates(self):
        u = np.linspace(-60.0, -20.0, 200)
        iai, _ = airy_IAi(u)
        x = -u
        scaled = np.asarray(iai) * math.sqrt(math.pi) * x**0.75
        phase = np.cos(2.0 / 3.0 * x**1.5 + math.pi / 4)
        assert np.all(np.abs(scaled - phase) <= 2.0 * x**-1.5)
