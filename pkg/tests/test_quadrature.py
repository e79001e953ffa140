"""Tests for panel quadrature, grids and the ordered worker map."""

import math

import numpy as np
import pytest

from errors import ContractError, QuadratureError
from parallel import map_ordered
from quadrature import hybrid_grid, integrate_panels, panel_sums


class TestIntegratePanels:
    def test_scalar_integrand(self):
        result = integrate_panels(np.sin, 0.0, math.pi, tol=1e-12)
        assert result.value == pytest.approx(2.0, abs=1e-12)
        assert result.error <= 1e-12

    def test_vector_integrand_integrates_every_row(self):
        powers = np.arange(5)[:, None]
        result = integrate_panels(lambda x: x[None, :] ** powers, 0.0, 1.0, tol=1e-13)
        assert np.allclose(result.value, 1.0 / (np.arange(5) + 1))

    def test_empty_interval(self):
        assert integrate_panels(np.cos, 1.0, 1.0).value == 0.0

    def test_reversed_interval(self):
        with pytest.raises(ContractError):
            integrate_panels(np.cos, 1.0, 0.0)

    def test_panel_cap_raises(self):
        with pytest.raises(QuadratureError) as info:
            integrate_panels(lambda x: x**-0.5, 0.0, 1.0, tol=1e-14, max_panels=4)
        assert info.value.tolerance == 1e-14

    def test_panel_sums_add_up(self):
        edges = np.linspace(0.0, 2.0, 9)
        assert panel_sums(np.exp, edges).sum() == pytest.approx(math.exp(2.0) - 1.0)


class TestHybridGrid:
    def test_shape(self):
        grid = hybrid_grid(10.0, 0.5, lower=1e-3, per_decade=10)
        assert grid[0] == pytest.approx(1e-3)
        assert grid[-1] == pytest.approx(10.0)
        assert np.all(np.diff(grid) > 0)
        assert np.allclose(np.diff(grid[grid >= 0.5]), 0.5)

    def test_upper_off_the_step(self):
        grid = hybrid_grid(1.05, 0.5)
        assert grid[-1] == 1.05
        assert np.all(np.diff(grid) > 0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ContractError):
            hybrid_grid(0.0, 0.1)


class TestMapOrdered:
    def test_threads_keep_input_order(self):
        items = list(range(40))
        assert map_ordered(lambda x: x * x, items, workers=4) == [x * x for x in items]

    def test_serial_path(self):
        assert map_ordered(str, (1, 2), workers=1) == ["1", "2"]
