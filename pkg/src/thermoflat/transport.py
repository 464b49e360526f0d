"""Order-parameter transport: Delta-functionals over ergodic decompositions
and the finite Monge-Kantorovich reformulation of the max-min pressure.
"""

import dataclasses
import itertools
import math

import numpy as np

from . import kernels
from .convex import INFINITY
from .linearizer import p_nl
from .measures import MarkovMeasure, MixtureMeasure, entropy_rate, expectation

_WORD_CAP = 2_000_000


def _components(mu):
    """Ergodic components with weights; rejects opaque non-ergodic input."""
    if isinstance(mu, MixtureMeasure):
        out = []
        for w, nu in zip(mu.weights, mu.components):
            if not nu.ergodic:
                raise ValueError(
                    "Delta-functional requires explicit ergodic decomposition"
                )
            out.append((w, nu))
        return out
    if isinstance(mu, MarkovMeasure):
        if not mu.ergodic:
            raise ValueError(
                "Delta-functional requires explicit ergodic decomposition"
            )
        return [(1.0, mu)]
    raise TypeError("unsupported measure type")


def delta_functional(model_or_potentials, mu, func, side="plus"):
    """Delta^F(mu) = sum_i lambda_i F(tau(nu_i)) over ergodic components.

    model_or_potentials is either a ModelSpec (side picks the potential
    family) or an explicit list of potentials.
    """
    if hasattr(model_or_potentials, "plus_potentials"):
        pots = (
            model_or_potentials.plus_potentials
            if side == "plus"
            else model_or_potentials.minus_potentials
        )
    else:
        pots = list(model_or_potentials)
    total = 0.0
    for w, nu in _components(mu):
        tau = np.array([expectation(nu, p) for p in pots])
        total += w * func(tau)
    return total


def delta_via_birkhoff(potentials, mu, func, n):
    """Exact finite-n approximant: E_mu[F(n-step cyclic Birkhoff averages)].

    Enumerates all k^n words (capped); non-increasing in n for convex F by
    Jensen on the two-block split.
    """
    potentials = list(potentials)
    if isinstance(mu, MixtureMeasure):
        return sum(
            w * delta_via_birkhoff(potentials, nu, func, n)
            for w, nu in zip(mu.weights, mu.components)
        )
    k = mu.alphabet.k
    if k**n > _WORD_CAP:
        raise ValueError("word enumeration too large; reduce n")
    probs = mu.word_probs(n).ravel()
    # enumerate all words as digit arrays
    words = np.array(
        np.unravel_index(np.arange(k**n), (k,) * n), dtype=np.int64
    ).T
    averages = np.stack(
        [
            kernels.birkhoff_averages(
                np.ascontiguousarray(words), p.table.ravel(), p.memory, k
            )
            for p in potentials
        ],
        axis=1,
    )
    mask = probs > 0
    vals = np.array([func(a) for a in averages[mask]])
    return float(np.dot(probs[mask], vals))


def affine_pressure_flat(model, mu):
    """F_flat(mu) = Delta^{g+ o tau+} - Delta^{g- o tau-} + h(mu).

    Equals sum_i lambda_i P(nu_i): affine in the ergodic decomposition.
    """
    total = entropy_rate(mu)
    if model.g_plus is not None:
        total += delta_functional(model, mu, model.g_plus.value, side="plus")
    if model.g_minus is not None:
        total -= delta_functional(model, mu, model.g_minus.value, side="minus")
    return total


def affine_pressure_sharp(model, mu):
    """F_sharp(mu): the minus side is evaluated at the mixed mean, not
    component-wise, so only the plus side is affine.
    """
    total = entropy_rate(mu)
    if model.g_plus is not None:
        total += delta_functional(model, mu, model.g_plus.value, side="plus")
    if model.g_minus is not None:
        tau = np.array([expectation(mu, p) for p in model.minus_potentials])
        total -= model.g_minus.value(tau)
    return total


def order_parameter_distribution(model, mu):
    """Push-forward of the ergodic decomposition to gradient order parameters.

    Returns [(weight, x_plus, x_minus)] with x_pm = grad g_pm(tau_pm(nu_i));
    kinked couplings (no gradient) are rejected.
    """
    for g in (model.g_plus, model.g_minus):
        if g is not None and not hasattr(g, "gradient"):
            raise ValueError("order parameters require differentiable g")
    out = []
    for w, nu in _components(mu):
        xp = (
            model.g_plus.gradient(model.tau_plus(nu))
            if model.g_plus is not None
            else np.zeros(0)
        )
        xm = (
            model.g_minus.gradient(model.tau_minus(nu))
            if model.g_minus is not None
            else np.zeros(0)
        )
        out.append((w, xp, xm))
    return out


# -- finite transportation problem -------------------------------------------


@dataclasses.dataclass(frozen=True)
class DiscreteDualMeasure:
    """Finitely supported probability vector on dual (tilt) points."""

    points: tuple
    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.points) != len(w) or len(w) == 0:
            raise ValueError("points and weights must match and be nonempty")
        if w.min() <= 0 or abs(w.sum() - 1.0) > 1e-10:
            raise ValueError("weights must be positive and sum to one")


@dataclasses.dataclass
class Coupling:
    matrix: np.ndarray
    row_measure: DiscreteDualMeasure
    col_measure: DiscreteDualMeasure

    def __post_init__(self):
        n = np.asarray(self.matrix, dtype=float)
        if n.min() < -1e-12:
            raise ValueError("coupling entries must be nonnegative")
        if (
            np.abs(n.sum(axis=1) - np.asarray(self.row_measure.weights)).max()
            > 1e-10
            or np.abs(n.sum(axis=0) - np.asarray(self.col_measure.weights)).max()
            > 1e-10
        ):
            raise ValueError("coupling marginals do not match")
        self.matrix = n

    def cost(self, cost_matrix):
        return float(np.sum(self.matrix * cost_matrix))


def cost_matrix(model, rows, cols):
    """C[i, j] = P_NL(y+_i, y-_j)."""
    c = np.empty((len(rows), len(cols)))
    for i, yp in enumerate(rows):
        for j, ym in enumerate(cols):
            c[i, j] = p_nl(model, np.asarray(yp), np.asarray(ym))
    return c


def _simplex_vertices(r, c):
    """All vertices of the transportation polytope, small cases only."""
    nr, nc = len(r), len(c)
    vertices = []
    # vertices correspond to spanning forests; enumerate supports of size
    # nr + nc - 1 and solve the marginal equations
    cells = list(itertools.product(range(nr), range(nc)))
    for support in itertools.combinations(cells, nr + nc - 1):
        a = np.zeros((nr + nc, len(support)))
        for idx, (i, j) in enumerate(support):
            a[i, idx] = 1.0
            a[nr + j, idx] = 1.0
        b = np.concatenate([r, c])
        sol, residual, rank, _ = np.linalg.lstsq(a, b, rcond=None)
        if rank < len(support):
            continue
        if np.abs(a @ sol - b).max() > 1e-9 or sol.min() < -1e-9:
            continue
        m = np.zeros((nr, nc))
        for idx, (i, j) in enumerate(support):
            m[i, j] = max(sol[idx], 0.0)
        if not any(np.abs(m - v).max() < 1e-9 for v in vertices):
            vertices.append(m)
    return vertices


def _northwest_corner(r, c):
    nr, nc = len(r), len(c)
    m = np.zeros((nr, nc))
    rr, cc = r.copy(), c.copy()
    i = j = 0
    basis = []
    while i < nr and j < nc:
        t = min(rr[i], cc[j])
        m[i, j] = t
        basis.append((i, j))
        rr[i] -= t
        cc[j] -= t
        if rr[i] <= cc[j] and i < nr - 1:
            i += 1
        elif j < nc - 1:
            j += 1
        else:
            i += 1
    return m, basis


def _transport_simplex(cost, r, c, max_pivots=10_000):
    """Minimize <cost, m> over couplings via the transportation simplex.

    Northwest-corner start, MODI duals, Bland's rule on entering cells.
    """
    nr, nc = cost.shape
    m, basis = _northwest_corner(r, c)
    basis = list(dict.fromkeys(basis))
    while len(basis) < nr + nc - 1:  # degenerate start: pad the basis tree
        for cell in itertools.product(range(nr), range(nc)):
            if cell not in basis:
                trial = basis + [cell]
                if _is_forest(trial, nr, nc):
                    basis = trial
                    break
    for _ in range(max_pivots):
        u, v = _modi_duals(cost, basis, nr, nc)
        entering = None
        for i in range(nr):
            for j in range(nc):
                if (i, j) not in basis and cost[i, j] - u[i] - v[j] < -1e-11:
                    entering = (i, j)
                    break
            if entering:
                break
        if entering is None:
            return m, float(np.sum(m * cost))
        cycle = _find_cycle(basis, entering, nr, nc)
        minus = cycle[1::2]
        t = min(m[i, j] for i, j in minus)
        leave = min((cell for cell in minus if m[cell] <= t + 1e-15))
        for idx, cell in enumerate(cycle):
            m[cell] += t if idx % 2 == 0 else -t
        m[leave] = 0.0
        basis.remove(leave)
        basis.append(entering)
    raise ArithmeticError("transportation simplex failed to terminate")


def _is_forest(cells, nr, nc):
    parent = list(range(nr + nc))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in cells:
        a, b = find(i), find(nr + j)
        if a == b:
            return False
        parent[a] = b
    return True


def _modi_duals(cost, basis, nr, nc):
    u = np.full(nr, np.nan)
    v = np.full(nc, np.nan)
    u[0] = 0.0
    pending = list(basis)
    while pending:
        progressed = False
        rest = []
        for i, j in pending:
            if not math.isnan(u[i]) and math.isnan(v[j]):
                v[j] = cost[i, j] - u[i]
                progressed = True
            elif math.isnan(u[i]) and not math.isnan(v[j]):
                u[i] = cost[i, j] - v[j]
                progressed = True
            elif math.isnan(u[i]) and math.isnan(v[j]):
                rest.append((i, j))
        pending = rest
        if not progressed and pending:
            i, j = pending[0]
            u[i] = 0.0
    u = np.nan_to_num(u)
    v = np.nan_to_num(v)
    return u, v


def _find_cycle(basis, entering, nr, nc):
    """Unique alternating row/column cycle through the entering cell."""
    cells = basis + [entering]
    by_row = {}
    by_col = {}
    for cell in cells:
        by_row.setdefault(cell[0], []).append(cell)
        by_col.setdefault(cell[1], []).append(cell)

    def search(path, along_row):
        last = path[-1]
        pool = by_row[last[0]] if along_row else by_col[last[1]]
        for nxt in pool:
            if nxt == last:
                continue
            if nxt == entering and len(path) >= 4 and len(path) % 2 == 0:
                return path
            if nxt in path:
                continue
            found = search(path + [nxt], not along_row)
            if found:
                return found
        return None

    cycle = search([entering], True) or search([entering], False)
    if cycle is None:
        raise ArithmeticError("no pivot cycle found")
    return cycle


def kantorovich_primal(model, row_measure, col_measure, method="auto"):
    """min over couplings of sum n_ij P_NL(y+_i, y-_j).

    Returns (value, Coupling). Vertex enumeration for grids up to 3x3,
    transportation simplex up to 16x16.
    """
    r = np.asarray(row_measure.weights, dtype=float)
    c = np.asarray(col_measure.weights, dtype=float)
    cost = cost_matrix(model, row_measure.points, col_measure.points)
    if np.any(np.isinf(cost)):
        raise ValueError("cost matrix contains infinite entries")
    nr, nc = cost.shape
    if method == "vertices" or (method == "auto" and nr <= 3 and nc <= 3):
        best, best_m = INFINITY, None
        for m in _simplex_vertices(r, c):
            v = float(np.sum(m * cost))
            if v < best:
                best, best_m = v, m
        return best, Coupling(best_m, row_measure, col_measure)
    if nr > 16 or nc > 16:
        raise ValueError("transport instance too large")
    m, value = _transport_simplex(cost, r, c)
    return value, Coupling(m, row_measure, col_measure)


def kantorovich_dual_check(model, row_measure, col_measure, primal_value,
                           alpha=None, beta=None, p_flat=None):
    """Verify a dual pair: feasibility alpha_i + beta_j <= C_ij and weak
    duality; defaults to the canonical pair alpha_i = P_flat, beta_j = 0.
    """
    cost = cost_matrix(model, row_measure.points, col_measure.points)
    if alpha is None:
        if p_flat is None:
            raise ValueError("need p_flat for the canonical dual pair")
        alpha = np.full(len(row_measure.points), p_flat)
        beta = np.zeros(len(col_measure.points))
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    slack = cost - alpha[:, None] - beta[None, :]
    feasible = slack.min() > -1e-10
    dual_value = float(
        np.dot(alpha, row_measure.weights) + np.dot(beta, col_measure.weights)
    )
    weak = dual_value <= primal_value + 1e-8
    return {
        "feasible": bool(feasible),
        "dual_value": dual_value,
        "weak_duality": bool(weak),
        "gap": float(primal_value - dual_value),
        "min_slack": float(slack.min()),
    }


def birkhoff_sampling(model, mu, n, num_samples, seed=0):
    """Monte-Carlo order parameters: gradients of g at sampled n-step
    Birkhoff averages. Returns dict of arrays keyed by side.
    """
    for g in (model.g_plus, model.g_minus):
        if g is not None and not hasattr(g, "gradient"):
            raise ValueError("order parameters require differentiable g")
    paths = mu.sample_paths(n, num_samples, seed=seed)
    k = mu.alphabet.k
    out = {}
    for side, pots, g in (
        ("plus", model.plus_potentials, model.g_plus),
        ("minus", model.minus_potentials, model.g_minus),
    ):
        if g is None:
            continue
        avgs = np.stack(
            [
                kernels.birkhoff_averages(paths, p.table.ravel(), p.memory, k)
                for p in pots
            ],
            axis=1,
        )
        out[side] = np.array([g.gradient(a) for a in avgs])
    return out


def composite_delta(potentials, g, mu):
    """Delta^{g o tau}(mu), convenience wrapper used by the CLI."""
    return delta_functional(potentials, mu, g.value)
