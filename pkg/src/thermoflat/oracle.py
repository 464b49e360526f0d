"""Brute-force oracles for the nonlinear pressure.

Two independent routes to the same number:
  * direct variational search over explicit measure families (product or
    order-1 Markov), maximizing h - g-(tau-) + g+(tau+) on refined grids;
  * the constrained-entropy route: h(z) as a Legendre transform of the
    linear pressure, then a grid maximum of g+(z+) - g-(z-) + h(z).
Neither touches the max-min solver, so they can arbitrate it.
"""

import itertools
import math

import numpy as np
from scipy.optimize import minimize

from .measures import CylinderPotential, MarkovMeasure, expectation
from .ruelle import build_transfer, rpf_solve


def _simplex_grid(k, resolution):
    """All compositions of resolution into k nonneg parts, as probabilities,
    plus the barycenter."""
    pts = []
    for comp in itertools.combinations_with_replacement(range(k), resolution):
        counts = np.bincount(comp, minlength=k).astype(float)
        pts.append(counts / resolution)
    pts.append(np.full(k, 1.0 / k))
    return pts


def _entropy_guard(p):
    return np.clip(p, 1e-300, None)


def direct_pressure(model, resolution=41, order=0, rounds=3):
    """Grid-refined sup of the direct pressure over a measure family.

    order 0 searches product measures, order 1 searches one-step Markov
    chains (interior transition rows only). Returns (value, best measure).
    """
    if resolution < 11:
        raise ValueError("oracle resolution below 11 is rejected as too coarse")
    k = model.alphabet.k
    if order == 0:
        return _direct_product(model, resolution, rounds)
    if order == 1:
        return _direct_markov(model, resolution, rounds)
    raise ValueError("oracle supports order 0 and 1 only")


def _direct_product(model, resolution, rounds):
    k = model.alphabet.k

    def value_of(p):
        mu = MarkovMeasure.product(model.alphabet, p)
        return model.direct_pressure_of(mu)

    best_p, best_v = None, -math.inf
    for p in _simplex_grid(k, resolution):
        if p.min() < 0:
            continue
        v = value_of(_entropy_guard(p))
        if v > best_v:
            best_v, best_p = v, p
    spacing = 1.0 / resolution
    for _ in range(rounds):
        # refine on a box of 3 coarse cells at 10x density
        base = best_p[:-1]
        lo = base - 1.5 * spacing
        hi = base + 1.5 * spacing
        axes = [np.linspace(a, b, 31) for a, b in zip(lo, hi)]
        for combo in itertools.product(*axes):
            t = np.array(combo)
            last = 1.0 - t.sum()
            if t.min() < 0 or last < 0:
                continue
            p = np.append(t, last)
            v = value_of(_entropy_guard(p))
            if v > best_v:
                best_v, best_p = v, p
        spacing /= 10.0
    return best_v, MarkovMeasure.product(model.alphabet, _entropy_guard(best_p))


def _row_grids(k, resolution, eps=1e-3):
    """Interior simplex grid for one transition row."""
    pts = [p for p in _simplex_grid(k, resolution) if p.min() > eps / 2]
    out = []
    for p in pts:
        q = np.clip(p, eps, None)
        out.append(q / q.sum())
    return out


def _direct_markov(model, resolution, rounds):
    k = model.alphabet.k
    # keep the full product of row grids tractable
    res = resolution
    while (math.comb(res + k - 1, k - 1) + 1) ** k > 250_000:
        res -= 2
    rows = _row_grids(k, res)

    def value_of(q):
        mu = MarkovMeasure.from_transitions(model.alphabet, q, order=1)
        return model.direct_pressure_of(mu)

    best_q, best_v = None, -math.inf
    for combo in itertools.product(rows, repeat=k):
        q = np.stack(combo)
        v = value_of(q)
        if v > best_v:
            best_v, best_q = v, q
    spacing = 1.0 / res
    free = [(i, j) for i in range(k) for j in range(k - 1)]
    for _ in range(rounds):
        # cyclic per-coordinate refinement at 10x density
        for i, j in free:
            grid = np.linspace(
                best_q[i, j] - 1.5 * spacing, best_q[i, j] + 1.5 * spacing, 31
            )
            for t in grid:
                q = best_q.copy()
                q[i, j] = t
                q[i, -1] = 1.0 - q[i, :-1].sum()
                if q[i].min() < 1e-9:
                    continue
                v = value_of(q)
                if v > best_v:
                    best_v, best_q = v, q
        spacing /= 10.0
    return best_v, MarkovMeasure.from_transitions(model.alphabet, best_q, order=1)


# -- constrained-entropy route -------------------------------------------------


def _unique_potentials(model):
    """Deduplicate the plus/minus potential lists by table equality.

    Returns (potentials, plus_index, minus_index) mapping each side into the
    merged list, so models reusing one potential on both sides get a single
    well-posed constraint coordinate.
    """
    uniq = []
    plus_idx = []
    minus_idx = []

    def locate(p):
        for i, q in enumerate(uniq):
            if p.memory == q.memory and np.array_equal(p.table, q.table):
                return i
        uniq.append(p)
        return len(uniq) - 1

    for p in model.plus_potentials:
        plus_idx.append(locate(p))
    for p in model.minus_potentials:
        minus_idx.append(locate(p))
    return uniq, plus_idx, minus_idx


def _tilted(alphabet, potentials, y):
    memory = max(p.memory for p in potentials)
    theta = CylinderPotential.zero(alphabet, memory)
    for c, p in zip(y, potentials):
        theta = theta + float(c) * p
    return theta


def bkl_entropy(alphabet, potentials, z, radius=60.0):
    """h(z) = inf_y { P_L(sum_i y_i phi_i) - y . z }.

    The maximal entropy among shift-invariant measures with constrained
    averages tau(mu) = z, by convex duality against the linear pressure.
    Returns (value, boundary_flag); boundary_flag True means the bounded
    search hit its box, i.e. z sits on or outside the achievable set and the
    value is an upper bound only.
    """
    potentials = list(potentials)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    d = len(potentials)
    if z.shape != (d,):
        raise ValueError("constraint dimension mismatch")

    def objective(y):
        theta = _tilted(alphabet, potentials, y)
        rpf = rpf_solve(build_transfer(theta))
        tau = np.array([expectation(rpf.gibbs, p) for p in potentials])
        val = rpf.log_lambda - float(np.dot(y, z))
        return val, tau - z

    res = minimize(
        lambda y: objective(y)[0],
        np.zeros(d),
        jac=lambda y: objective(y)[1],
        method="L-BFGS-B",
        bounds=[(-radius, radius)] * d,
        options={"ftol": 1e-14, "gtol": 1e-12, "maxiter": 500},
    )
    boundary = bool(np.any(np.abs(res.x) > radius - 1e-6))
    return float(res.fun), boundary


def bkl_pressure(model, grid=41):
    """Grid maximum of g+(z+) - g-(z-) + h(z) over achievable averages.

    z ranges over a box bounded by the sup norms of the merged potentials;
    infeasible z (boundary-flagged entropy) are skipped.
    """
    uniq, plus_idx, minus_idx = _unique_potentials(model)
    bounds = [p.sup_norm for p in uniq]
    axes = [np.linspace(-b, b, grid) if b > 0 else np.zeros(1) for b in bounds]
    best = -math.inf
    best_z = None
    for combo in itertools.product(*axes):
        z = np.array(combo)
        h, boundary = bkl_entropy(model.alphabet, uniq, z)
        if boundary:
            continue
        val = h
        if model.g_plus is not None:
            val += model.g_plus.value(z[plus_idx])
        if model.g_minus is not None:
            val -= model.g_minus.value(z[minus_idx])
        if val > best:
            best, best_z = val, z
    if best_z is None:
        raise ArithmeticError("no feasible constraint point found")
    # one refinement pass around the best grid node
    spacing = [2 * b / (grid - 1) if b > 0 else 0.0 for b in bounds]
    fine_axes = [
        np.linspace(z0 - 1.5 * s, z0 + 1.5 * s, 13) if s > 0 else np.array([z0])
        for z0, s in zip(best_z, spacing)
    ]
    for combo in itertools.product(*fine_axes):
        z = np.array(combo)
        h, boundary = bkl_entropy(model.alphabet, uniq, z)
        if boundary:
            continue
        val = h
        if model.g_plus is not None:
            val += model.g_plus.value(z[plus_idx])
        if model.g_minus is not None:
            val -= model.g_minus.value(z[minus_idx])
        if val > best:
            best, best_z = val, z

    def neg(z):
        h, boundary = bkl_entropy(model.alphabet, uniq, z)
        if boundary:
            return math.inf
        val = h
        if model.g_plus is not None:
            val += model.g_plus.value(z[plus_idx])
        if model.g_minus is not None:
            val -= model.g_minus.value(z[minus_idx])
        return -val

    # continuous polish off the grid
    res = minimize(neg, best_z, method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 400})
    if -res.fun > best and np.isfinite(res.fun):
        best, best_z = -float(res.fun), res.x
    return best, best_z
