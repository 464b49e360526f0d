import math

import numpy as np
import pytest
from scipy.optimize import linprog

from thermoflat.convex import AbsSum, Quadratic
from thermoflat.linearizer import ModelSpec, p_nl, solve_flat
from thermoflat.measures import (
    AprioriAlphabet,
    CylinderPotential,
    MarkovMeasure,
    MixtureMeasure,
    entropy_rate,
)
from thermoflat.transport import (
    Coupling,
    DiscreteDualMeasure,
    affine_pressure_flat,
    affine_pressure_sharp,
    birkhoff_sampling,
    cost_matrix,
    delta_functional,
    delta_via_birkhoff,
    kantorovich_dual_check,
    kantorovich_primal,
    order_parameter_distribution,
)

A2 = AprioriAlphabet(2)
SPIN = CylinderPotential(A2, [1.0, -1.0], name="spin")


def cw_model(beta):
    return ModelSpec(A2, plus_potentials=[SPIN], g_plus=Quadratic(beta))


def square(z):
    return float(np.asarray(z).ravel()[0] ** 2)


class TestDeltaFunctional:
    def test_jensen_lower_bound(self):
        mu1 = MarkovMeasure.product(A2, [0.9, 0.1])
        mu2 = MarkovMeasure.product(A2, [0.2, 0.8])
        mix = MixtureMeasure([(0.4, mu1), (0.6, mu2)])
        m = cw_model(2.0)
        delta = delta_functional(m, mix, m.g_plus.value, side="plus")
        tau = m.tau_plus(mix)
        assert delta >= m.g_plus.value(tau) - 1e-12

    def test_ergodic_component_requires_flag(self):
        q = np.eye(2)
        mu = MarkovMeasure(A2, 1, [0.5, 0.5], q, ergodic=False)
        with pytest.raises(ValueError, match="ergodic decomposition"):
            delta_functional(cw_model(2.0), mu, square)

    def test_single_ergodic_reduces_to_composition(self):
        mu = MarkovMeasure.product(A2, [0.7, 0.3])
        m = cw_model(2.0)
        delta = delta_functional(m, mu, square, side="plus")
        assert delta == pytest.approx(square(m.tau_plus(mu)), abs=1e-14)


class TestDeltaBirkhoff:
    def test_uniform_spin_square_exact_values(self):
        mu = MarkovMeasure.product(A2, [0.5, 0.5])
        # E[(S_n/n)^2] = 1/n for +-1 coin flips: 0.5 at n=2, 0.25 at n=4
        assert delta_via_birkhoff([SPIN], mu, square, 2) == pytest.approx(0.5)
        assert delta_via_birkhoff([SPIN], mu, square, 4) == pytest.approx(0.25)

    def test_nonincreasing_in_n_for_convex_f(self):
        mu = MarkovMeasure.product(A2, [0.6, 0.4])
        vals = [delta_via_birkhoff([SPIN], mu, square, n) for n in (2, 4, 6, 8)]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_word_cap(self):
        mu = MarkovMeasure.product(A2, [0.5, 0.5])
        with pytest.raises(ValueError, match="too large"):
            delta_via_birkhoff([SPIN], mu, square, 22)

    def test_mixture_splits(self):
        mu1 = MarkovMeasure.product(A2, [0.9, 0.1])
        mu2 = MarkovMeasure.product(A2, [0.2, 0.8])
        mix = MixtureMeasure([(0.4, mu1), (0.6, mu2)])
        lhs = delta_via_birkhoff([SPIN], mix, square, 4)
        rhs = 0.4 * delta_via_birkhoff([SPIN], mu1, square, 4) + (
            0.6 * delta_via_birkhoff([SPIN], mu2, square, 4)
        )
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestAffinePressures:
    def test_flat_is_affine_in_decomposition(self):
        m = cw_model(2.0)
        sol = solve_flat(m)
        nu1, nu2 = (e.measure for e in sol.equilibria)
        mix = MixtureMeasure([(0.3, nu1), (0.7, nu2)])
        lhs = affine_pressure_flat(m, mix)
        rhs = 0.3 * m.direct_pressure_of(nu1) + 0.7 * m.direct_pressure_of(nu2)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_flat_attains_p_flat_on_equilibrium_mixtures(self):
        m = cw_model(2.0)
        sol = solve_flat(m)
        nu1, nu2 = (e.measure for e in sol.equilibria)
        mix = MixtureMeasure([(0.5, nu1), (0.5, nu2)])
        assert affine_pressure_flat(m, mix) == pytest.approx(
            sol.p_flat, abs=1e-8
        )

    def test_sharp_dominated_by_flat_for_plus_only(self):
        # with no minus side the two functionals coincide
        m = cw_model(1.5)
        mu = MarkovMeasure.product(A2, [0.7, 0.3])
        assert affine_pressure_sharp(m, mu) == pytest.approx(
            affine_pressure_flat(m, mu), abs=1e-14
        )

    def test_sharp_vs_flat_on_minus_mixture(self):
        # minus side evaluated at the mixed mean vs component-wise: convexity
        # of g- makes F_sharp >= F_flat
        m = ModelSpec(A2, [SPIN], [SPIN], Quadratic(3.0), Quadratic(1.0))
        mu1 = MarkovMeasure.product(A2, [0.9, 0.1])
        mu2 = MarkovMeasure.product(A2, [0.2, 0.8])
        mix = MixtureMeasure([(0.5, mu1), (0.5, mu2)])
        assert affine_pressure_sharp(m, mix) >= affine_pressure_flat(m, mix) - 1e-12


class TestOrderParameters:
    def test_gradient_pushforward(self):
        m = cw_model(2.0)
        sol = solve_flat(m)
        nu1, nu2 = (e.measure for e in sol.equilibria)
        mix = MixtureMeasure([(0.5, nu1), (0.5, nu2)])
        dist = order_parameter_distribution(m, mix)
        xs = sorted(x[1][0] for x in dist)
        ystar = abs(sol.equilibria[0].x_plus[0])
        np.testing.assert_allclose(xs, [-ystar, ystar], atol=1e-7)

    def test_kinked_coupling_rejected(self):
        m = ModelSpec(A2, [SPIN], g_plus=AbsSum(1))
        mu = MarkovMeasure.product(A2, [0.5, 0.5])
        with pytest.raises(ValueError, match="differentiable"):
            order_parameter_distribution(m, mu)


class TestCouplings:
    def test_marginal_validation(self):
        r = DiscreteDualMeasure(((0.0,), (1.0,)), (0.5, 0.5))
        c = DiscreteDualMeasure(((0.0,),), (1.0,))
        Coupling(np.array([[0.5], [0.5]]), r, c)
        with pytest.raises(ValueError, match="marginals"):
            Coupling(np.array([[0.7], [0.5]]), r, c)

    def test_weights_validation(self):
        with pytest.raises(ValueError):
            DiscreteDualMeasure(((0.0,),), (0.9,))


class TestKantorovich:
    def _instance(self, seed, nr, nc):
        rng = np.random.default_rng(seed)
        m = ModelSpec(A2, [SPIN], [SPIN], Quadratic(3.0), Quadratic(1.0))
        rows = DiscreteDualMeasure(
            tuple((float(x),) for x in rng.normal(size=nr)),
            tuple(rng.dirichlet(np.ones(nr)).tolist()),
        )
        cols = DiscreteDualMeasure(
            tuple((float(x),) for x in rng.normal(scale=0.5, size=nc)),
            tuple(rng.dirichlet(np.ones(nc)).tolist()),
        )
        return m, rows, cols

    @pytest.mark.parametrize("nr,nc", [(2, 2), (3, 3), (4, 5), (6, 4)])
    def test_matches_linprog(self, nr, nc):
        m, rows, cols = self._instance(nr * 10 + nc, nr, nc)
        value, coupling = kantorovich_primal(m, rows, cols, method="auto")
        cost = cost_matrix(m, rows.points, cols.points)
        a_eq = []
        for i in range(nr):
            row = np.zeros((nr, nc))
            row[i, :] = 1
            a_eq.append(row.ravel())
        for j in range(nc):
            col = np.zeros((nr, nc))
            col[:, j] = 1
            a_eq.append(col.ravel())
        b_eq = np.concatenate([rows.weights, cols.weights])
        res = linprog(cost.ravel(), A_eq=np.array(a_eq), b_eq=b_eq,
                      bounds=(0, None), method="highs")
        assert res.success
        assert value == pytest.approx(res.fun, abs=1e-9)

    def test_single_support_echoes_p_nl(self):
        m = ModelSpec(A2, [SPIN], [SPIN], Quadratic(3.0), Quadratic(1.0))
        rows = DiscreteDualMeasure(((1.2,),), (1.0,))
        cols = DiscreteDualMeasure(((0.4,),), (1.0,))
        value, _ = kantorovich_primal(m, rows, cols)
        assert value == pytest.approx(p_nl(m, [1.2], [0.4]), abs=1e-12)

    def test_identity_on_supercritical_model(self):
        m = ModelSpec(A2, [SPIN], [SPIN], Quadratic(3.0), Quadratic(1.0))
        sol = solve_flat(m)
        pairs = [(e.x_plus, e.x_minus) for e in sol.equilibria]
        n = len(pairs)
        rows = DiscreteDualMeasure(tuple(p for p, _ in pairs), (1.0 / n,) * n)
        cols = DiscreteDualMeasure(tuple(q for _, q in pairs), (1.0 / n,) * n)
        value, coupling = kantorovich_primal(m, rows, cols)
        assert value == pytest.approx(sol.p_flat, abs=1e-8)
        # optimal plan matches signs: mass stays on the diagonal pairs
        assert coupling.matrix[0, 1] == pytest.approx(0.0, abs=1e-12)
        check = kantorovich_dual_check(m, rows, cols, value, p_flat=sol.p_flat)
        assert check["feasible"]
        assert check["weak_duality"]
        assert abs(check["gap"]) < 1e-8

    def test_infinite_cost_rejected(self):
        m = ModelSpec(A2, [SPIN], [SPIN], Quadratic(1.0), AbsSum(1))
        rows = DiscreteDualMeasure(((0.0,),), (1.0,))
        cols = DiscreteDualMeasure(((2.0,),), (1.0,))  # outside dom g-*
        with pytest.raises(ValueError, match="infinite"):
            kantorovich_primal(m, rows, cols)


class TestBirkhoffSampling:
    def test_mean_concentrates_at_fixed_point(self):
        m = cw_model(2.0)
        sol = solve_flat(m)
        pos = max(sol.equilibria, key=lambda e: e.x_plus[0])
        ystar = pos.x_plus[0]
        out = birkhoff_sampling(m, pos.measure, n=1000, num_samples=2000, seed=7)
        xs = out["plus"][:, 0]
        se = xs.std(ddof=1) / math.sqrt(len(xs))
        assert abs(xs.mean() - ystar) < 4 * se

    def test_deterministic_in_seed(self):
        m = cw_model(2.0)
        mu = MarkovMeasure.product(A2, [0.5, 0.5])
        a = birkhoff_sampling(m, mu, 100, 50, seed=3)["plus"]
        b = birkhoff_sampling(m, mu, 100, 50, seed=3)["plus"]
        np.testing.assert_array_equal(a, b)
