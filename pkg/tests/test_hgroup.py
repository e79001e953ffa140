"""Tests for the Heisenberg group law, norm and boxes."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import ContractError
from hgroup import (
    GroupContext,
    HPoint,
    box_volume,
    dilate,
    group_inv,
    group_mul,
    in_box,
    in_translated_box,
    in_translated_box_arrays,
    koranyi_norm,
)
from tests.conftest import hpoints


def _close(a: HPoint, b: HPoint, tol=1e-9) -> bool:
    return np.allclose(a.as_array(), b.as_array(), atol=tol)


class TestGroupLaw:
    @given(hpoints(), hpoints(), hpoints())
    def test_associative(self, a, b, c):
        assert _close(group_mul(group_mul(a, b), c), group_mul(a, group_mul(b, c)))

    @given(hpoints(2))
    def test_inverse(self, a):
        e = HPoint.identity(2)
        assert _close(group_mul(a, group_inv(a)), e)
        assert _close(group_mul(group_inv(a), a), e)

    def test_product_of_complex_points(self):
        a = HPoint.from_complex(1j, 0.0)
        b = HPoint.from_complex(1.0, 0.0)
        # Im(i * conj(1)) = 1
        assert group_mul(a, b).t == pytest.approx(0.5)
        assert group_mul(b, a).t == pytest.approx(-0.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractError):
            group_mul(HPoint.identity(1), HPoint.identity(2))

    def test_rejects_odd_coordinates(self):
        with pytest.raises(ContractError):
            HPoint((1.0, 2.0, 3.0), 0.0)


class TestNormAndDilation:
    @given(hpoints(), st.floats(min_value=0.01, max_value=10.0))
    def test_norm_is_homogeneous(self, a, rho):
        assert koranyi_norm(dilate(rho, a)) == pytest.approx(rho * koranyi_norm(a), rel=1e-9,
                                                             abs=1e-12)

    @given(hpoints(), hpoints(), st.floats(min_value=0.1, max_value=5.0))
    def test_dilation_is_an_automorphism(self, a, b, rho):
        assert _close(dilate(rho, group_mul(a, b)), group_mul(dilate(rho, a), dilate(rho, b)),
                      tol=1e-7)

    @given(hpoints(), hpoints(), hpoints())
    def test_distance_is_left_invariant(self, g, a, b):
        before = koranyi_norm(group_mul(group_inv(a), b))
        after = koranyi_norm(group_mul(group_inv(group_mul(g, a)), group_mul(g, b)))
        assert after == pytest.approx(before, rel=1e-7, abs=1e-6)

    def test_norm_of_known_point(self):
        assert koranyi_norm(HPoint.from_complex(1.0, 3.0)) == pytest.approx(10 ** 0.25)

    def test_dilation_rejects_nonpositive(self):
        with pytest.raises(ContractError):
            dilate(0.0, HPoint.identity(1))


class TestBoxes:
    @pytest.mark.parametrize(("n", "expected"), [(1, 2 * math.pi), (2, math.pi**2),
                                                 (3, 2 * math.pi**3 / 6)])
    def test_unit_box_volume(self, n, expected):
        assert GroupContext(n).unit_box_volume == pytest.approx(expected)
        assert GroupContext(n).Q == 2 * n + 2

    def test_volume_scales_with_homogeneous_dimension(self):
        ctx = GroupContext(1)
        assert box_volume(0.5, ctx) == pytest.approx(0.5**4 * 2 * math.pi)

    def test_box_edges_are_closed(self):
        assert in_box(1.0, HPoint((1.0, 0.0), 1.0))
        assert not in_box(1.0, HPoint((1.0, 0.0), 1.0 + 1e-9))

    @settings(max_examples=200)
    @given(hpoints(), hpoints(), st.floats(min_value=0.1, max_value=2.0))
    def test_translated_box_is_left_translate(self, center, p, rho):
        local = group_mul(group_inv(center), p)
        assert in_translated_box(center, rho, p) == in_box(rho, local)

    def test_array_form_matches_scalar(self):
        rng = np.random.default_rng(0)
        centers = rng.uniform(-1, 1, (50, 3))
        points = rng.uniform(-1, 1, (50, 3))
        inside = in_translated_box_arrays(centers, 0.7, points)
        for c, p, flag in zip(centers, points, inside):
            assert flag == in_translated_box(HPoint.from_array(c), 0.7, HPoint.from_array(p))

    def test_radius_must_be_positive(self):
        with pytest.raises(ContractError):
            in_box(0.0, HPoint.identity(1))
