import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermoflat.convex import (
    INFINITY,
    AbsSum,
    GridSampled,
    LinearShift,
    Quadratic,
    SubdiffSet,
    biconjugate,
    discrete_lft,
    growth_radius,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


class TestQuadratic:
    def test_value(self):
        g = Quadratic(2.0, dim=2)
        assert g.value(np.array([1.0, 2.0])) == pytest.approx(5.0)

    def test_conjugate_closed_form(self):
        # conjugate of beta |x|^2 / 2 is |y|^2 / (2 beta), exactly
        for beta in (0.5, 1.0, 2.0, 3.7):
            g = Quadratic(beta)
            for y in (-2.0, 0.0, 0.3, 5.0):
                assert g.conjugate(np.array([y])) == pytest.approx(
                    y * y / (2 * beta), abs=1e-12
                )

    def test_gradient_and_subdiff_agree(self):
        g = Quadratic(1.5, dim=2)
        x = np.array([0.4, -1.1])
        sd = g.subdiff(x)
        assert sd.is_singleton
        np.testing.assert_allclose(sd.midpoint, g.gradient(x))

    def test_beta_positive_required(self):
        with pytest.raises(ValueError):
            Quadratic(0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            Quadratic(1.0, dim=2).value(np.array([1.0]))

    @given(finite, finite)
    @settings(max_examples=60, deadline=None)
    def test_fenchel_young(self, x, y):
        g = Quadratic(2.0)
        lhs = g.value(np.array([x])) + g.conjugate(np.array([y]))
        assert lhs >= x * y - 1e-9
        # equality iff y is the gradient at x
        if abs(y - 2.0 * x) < 1e-12:
            assert lhs == pytest.approx(x * y, abs=1e-9)


class TestAbsSum:
    def test_value(self):
        g = AbsSum(dim=2)
        assert g.value(np.array([-1.5, 2.0])) == pytest.approx(3.5)

    def test_conjugate_is_ball_indicator(self):
        g = AbsSum(dim=2)
        assert g.conjugate(np.array([0.7, -1.0])) == 0.0
        assert g.conjugate(np.array([1.2, 0.0])) == INFINITY

    def test_subdiff_at_zero_and_away(self):
        g = AbsSum(dim=1)
        sd0 = g.subdiff(np.array([0.0]))
        assert sd0.contains(np.array([0.3]))
        assert not sd0.contains(np.array([1.3]))
        sd = g.subdiff(np.array([2.0]))
        assert sd.is_singleton
        np.testing.assert_allclose(sd.midpoint, [1.0])

    @given(finite, finite)
    @settings(max_examples=60, deadline=None)
    def test_fenchel_young(self, x, y):
        g = AbsSum(dim=1)
        c = g.conjugate(np.array([y]))
        if c == INFINITY:
            assert abs(y) > 1.0
        else:
            assert g.value(np.array([x])) + c >= x * y - 1e-9


class TestGridSampled:
    def test_matches_quadratic_on_nodes(self):
        grid = np.linspace(-3, 3, 61)
        g = GridSampled([grid], grid**2)
        assert g.value(np.array([1.0])) == pytest.approx(1.0)
        assert g.value(np.array([0.55])) == pytest.approx(0.55**2, abs=3e-3)

    def test_rejects_nonconvex_samples(self):
        grid = np.linspace(-1, 1, 11)
        with pytest.raises(ValueError, match="convex"):
            GridSampled([grid], -(grid**2))

    def test_conjugate_against_closed_form(self):
        grid = np.linspace(-6, 6, 481)
        g = GridSampled([grid], grid**2 / 2.0)
        # conjugate of x^2/2 is y^2/2 (within grid resolution)
        for y in (-1.0, 0.0, 0.8, 2.0):
            assert g.conjugate(np.array([y])) == pytest.approx(
                y * y / 2.0, abs=2e-3
            )

    def test_subdiff_interval_at_kink(self):
        grid = np.array([-1.0, 0.0, 1.0])
        g = GridSampled([grid], np.abs(grid))
        sd = g.subdiff(np.array([0.0]))
        assert not sd.is_singleton
        assert sd.contains(np.array([-1.0])) and sd.contains(np.array([1.0]))

    def test_two_axes(self):
        ax = np.linspace(-2, 2, 41)
        vals = np.add.outer(ax**2, ax**2)
        g = GridSampled([ax, ax], vals)
        assert g.value(np.array([1.0, -1.0])) == pytest.approx(2.0, abs=1e-6)

    def test_boundary_subdiff_unavailable(self):
        grid = np.linspace(-1, 1, 11)
        g = GridSampled([grid], grid**2)
        with pytest.raises(ValueError, match="boundary"):
            g.subdiff(np.array([1.0]))


class TestLinearShift:
    def test_conjugate_shift_rule(self):
        # (g(. - a))* (y) = g*(y) + <a, y> is NOT this; LinearShift adds a
        # linear term: (g + <a, .>)*(y) = g*(y - a)
        base = Quadratic(1.0)
        g = LinearShift(np.array([0.7]), base)
        y = np.array([1.5])
        assert g.conjugate(y) == pytest.approx(
            base.conjugate(y - 0.7), abs=1e-12
        )

    def test_value(self):
        g = LinearShift(np.array([2.0]), Quadratic(1.0))
        assert g.value(np.array([3.0])) == pytest.approx(4.5 + 6.0)


class TestLFT:
    def test_discrete_lft_of_quadratic(self):
        primal = np.linspace(-8, 8, 801)
        g = GridSampled([primal], primal**2)
        conj = discrete_lft(g, [np.linspace(-4, 4, 81)])
        for y in (-2.0, 0.0, 1.0, 3.0):
            assert conj.value(np.array([y])) == pytest.approx(
                y * y / 4.0, abs=5e-3
            )

    def test_biconjugate_idempotence(self):
        grid = np.linspace(-4, 4, 161)
        g = GridSampled([grid], grid**2)
        primal = [np.linspace(-4, 4, 161)]
        dual = [np.linspace(-8, 8, 321)]
        bc = biconjugate(g, primal, dual)
        bc2 = biconjugate(bc, primal, dual)
        xs = np.linspace(-3.5, 3.5, 41)
        v1 = np.array([bc.value(np.array([x])) for x in xs])
        v2 = np.array([bc2.value(np.array([x])) for x in xs])
        np.testing.assert_allclose(v1, v2, atol=1e-12)


class TestGrowth:
    def test_quadratic_certificate_radius(self):
        cert = growth_radius(Quadratic(1.0), 1.0)
        # y^2/2 dominates |y| with margin 1 by radius 4
        assert cert.safe_radius == 4.0
        assert cert.lam == 1.0

    def test_zero_slope_trivial(self):
        cert = growth_radius(Quadratic(1.0), 0.0)
        assert cert.safe_radius == 1.0

    def test_abs_sum_subcritical_slope(self):
        # conjugate is the indicator of the unit ball: growth is immediate
        cert = growth_radius(AbsSum(dim=1), 0.5)
        assert cert.safe_radius <= 4.0

    def test_linear_conjugate_lacks_growth(self):
        # g = indicator-like grid with linear conjugate growth along slope
        grid = np.array([-1.0, 0.0, 1.0])
        g = GridSampled([grid], np.abs(grid))  # conjugate flat on [-1, 1]
        with pytest.raises(ArithmeticError, match="linear growth"):
            growth_radius(g, 2.0)


class TestSubdiffSet:
    def test_distance_inside_and_outside(self):
        sd = SubdiffSet(np.array([-1.0]), np.array([1.0]))
        assert sd.distance(np.array([0.5])) == 0.0
        assert sd.distance(np.array([2.0])) == pytest.approx(1.0)

    def test_singleton(self):
        sd = SubdiffSet(np.array([2.0]), np.array([2.0]))
        assert sd.is_singleton
