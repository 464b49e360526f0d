import math

import numpy as np
import pytest

from thermoflat.measures import (
    AprioriAlphabet,
    CylinderPotential,
    MarkovMeasure,
    entropy_rate,
    expectation,
)
from thermoflat.ruelle import (
    build_transfer,
    entropy_of_gibbs,
    linear_pressure,
    normalization_residual,
    rpf_solve,
)

A2 = AprioriAlphabet(2)
SPIN = CylinderPotential(A2, [1.0, -1.0], name="spin")


class TestLinearPressure:
    def test_spin_closed_form(self):
        assert linear_pressure(SPIN) == pytest.approx(
            math.log(math.cosh(1.0)), abs=1e-12
        )

    def test_zero_potential(self):
        zero = CylinderPotential.zero(A2)
        assert linear_pressure(zero) == pytest.approx(0.0, abs=1e-14)

    def test_tilted_family_matches_log_cosh(self):
        for y in (-3.0, -0.5, 0.0, 1.2, 4.0):
            assert linear_pressure(y * SPIN) == pytest.approx(
                math.log(math.cosh(y)), abs=1e-12
            )

    def test_memory2_against_dense_eigensolver(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            phi = CylinderPotential(A2, rng.normal(size=(2, 2)))
            tm = build_transfer(phi)
            dense = np.exp(tm.log_entries)
            ref = math.log(np.abs(np.linalg.eigvals(dense)).max())
            assert linear_pressure(phi) == pytest.approx(ref, abs=1e-10)

    def test_memory3_alphabet3(self):
        rng = np.random.default_rng(10)
        a3 = AprioriAlphabet(3, [0.2, 0.3, 0.5])
        phi = CylinderPotential(a3, rng.normal(size=(3, 3, 3)))
        tm = build_transfer(phi)
        dense = np.where(np.isinf(tm.log_entries), 0.0, np.exp(tm.log_entries))
        ref = math.log(np.abs(np.linalg.eigvals(dense)).max())
        assert linear_pressure(phi) == pytest.approx(ref, abs=1e-9)

    def test_convexity_in_tilt(self):
        # P_L(y phi) is convex in y
        ys = np.linspace(-2, 2, 21)
        vals = np.array([linear_pressure(y * SPIN) for y in ys])
        second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
        assert second.min() > -1e-10

    def test_lipschitz_in_potential(self):
        # |P_L(f) - P_L(g)| <= sup|f - g|
        rng = np.random.default_rng(11)
        for _ in range(10):
            f = CylinderPotential(A2, rng.normal(size=(2, 2)))
            g = CylinderPotential(A2, rng.normal(size=(2, 2)))
            lhs = abs(linear_pressure(f) - linear_pressure(g))
            assert lhs <= (f + (-1.0) * g).sup_norm + 1e-10


class TestRPF:
    def test_memory1_gibbs_is_tilted_product(self):
        rpf = rpf_solve(build_transfer(2.0 * SPIN))
        p0 = 0.5 * math.exp(2.0) / (0.5 * math.exp(2.0) + 0.5 * math.exp(-2.0))
        np.testing.assert_allclose(rpf.gibbs.stationary, [p0, 1 - p0], atol=1e-12)

    def test_normalized_operator_fixes_one(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            phi = CylinderPotential(A2, rng.normal(size=(2, 2)))
            rpf = rpf_solve(build_transfer(phi))
            assert normalization_residual(rpf) < 1e-9

    def test_eigen_relation(self):
        rng = np.random.default_rng(13)
        phi = CylinderPotential(A2, rng.normal(size=(2, 2, 2)))
        tm = build_transfer(phi)
        rpf = rpf_solve(tm)
        dense = np.where(np.isinf(tm.log_entries), 0.0, np.exp(tm.log_entries))
        lam = math.exp(rpf.log_lambda)
        np.testing.assert_allclose(dense @ rpf.h, lam * rpf.h, rtol=1e-8)
        np.testing.assert_allclose(rpf.nu @ dense, lam * rpf.nu, rtol=1e-8)

    def test_entropy_duality_randomized_memory2_suite(self):
        # log lambda - mu(f) must equal the entropy rate of the Gibbs chain
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(50):
            k = int(rng.integers(2, 4))
            w = rng.dirichlet(np.ones(k) * 3.0)
            w = np.clip(w, 0.05, None)
            alphabet = AprioriAlphabet(k, w / w.sum())
            phi = CylinderPotential(
                alphabet, rng.normal(scale=1.5, size=(k, k))
            )
            rpf = rpf_solve(build_transfer(phi))
            lhs = entropy_of_gibbs(rpf, phi)
            rhs = entropy_rate(rpf.gibbs)
            worst = max(worst, abs(lhs - rhs))
        assert worst < 1e-8

    def test_variational_inequality(self):
        # P_L(f) >= h(mu) + mu(f) for arbitrary Markov measures, equality at
        # the Gibbs measure
        rng = np.random.default_rng(14)
        phi = CylinderPotential(A2, rng.normal(size=(2, 2)))
        p = linear_pressure(phi)
        for _ in range(25):
            q = rng.dirichlet(np.ones(2) + 1.0, size=2)
            q = np.clip(q, 1e-3, None)
            q /= q.sum(axis=1, keepdims=True)
            mu = MarkovMeasure.from_transitions(A2, q)
            assert p >= entropy_rate(mu) + expectation(mu, phi) - 1e-10
        rpf = rpf_solve(build_transfer(phi))
        attained = entropy_rate(rpf.gibbs) + expectation(rpf.gibbs, phi)
        assert p == pytest.approx(attained, abs=1e-9)

    def test_cohomology_invariance(self):
        # adding a coboundary-like constant shifts pressure by the constant
        rng = np.random.default_rng(15)
        phi = CylinderPotential(A2, rng.normal(size=(2, 2)))
        c = 0.7
        shifted = phi + CylinderPotential(A2, [c, c])
        assert linear_pressure(shifted) == pytest.approx(
            linear_pressure(phi) + c, abs=1e-10
        )

    def test_gibbs_measure_invariant_under_potential_normalization(self):
        rng = np.random.default_rng(16)
        phi = CylinderPotential(A2, rng.normal(size=(2, 2)))
        rpf = rpf_solve(build_transfer(phi))
        rpf2 = rpf_solve(build_transfer(rpf.normalized_potential))
        assert rpf2.log_lambda == pytest.approx(0.0, abs=1e-9)
        assert rpf.gibbs.two_cylinder_tv(rpf2.gibbs) < 1e-8
