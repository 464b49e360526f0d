"""Pure numpy implementations of the hot kernels.

These mirror thermoflat.kernels._ckernels step for step: state selection uses
"first index whose cumulative weight exceeds u", sums run left to right, so
the two backends produce identical paths for identical uniform draws.
"""

import numpy as np

BACKEND = "python"


def sample_state_paths(start_cum, trans_cum, uniforms):
    """Sample Markov state paths by inverse-CDF lookup.

    start_cum: (S,) cumulative initial distribution, last entry == 1.
    trans_cum: (S, S) cumulative transition rows, last column == 1.
    uniforms:  (num, steps) uniform draws; column 0 selects the initial
               state, the rest drive transitions.

    Returns (num, steps) int64 state indices.
    """
    uniforms = np.asarray(uniforms, dtype=np.float64)
    num, steps = uniforms.shape
    paths = np.empty((num, steps), dtype=np.int64)
    state = np.searchsorted(start_cum, uniforms[:, 0], side="right")
    np.clip(state, 0, len(start_cum) - 1, out=state)
    paths[:, 0] = state
    for t in range(1, steps):
        rows = trans_cum[state]
        u = uniforms[:, t]
        state = (rows <= u[:, None]).sum(axis=1)
        np.clip(state, 0, trans_cum.shape[1] - 1, out=state)
        paths[:, t] = state
    return paths


def birkhoff_averages(symbols, table, memory, k):
    """Cyclic Birkhoff averages of a word-indexed potential along paths.

    symbols: (num, n) symbol indices in [0, k).
    table:   flat potential table of length k**memory, C order.
    Returns (num,) averages over all n cyclic window positions.
    """
    symbols = np.asarray(symbols)
    num, n = symbols.shape
    acc = np.zeros(num, dtype=np.float64)
    for t in range(n):
        idx = np.zeros(num, dtype=np.int64)
        for j in range(memory):
            idx = idx * k + symbols[:, (t + j) % n]
        acc += table[idx]
    return acc / n


def power_iteration_log(log_matrix, tol, max_iter):
    """Leading eigenvalue/eigenvector of a nonnegative matrix, log domain.

    log_matrix: (D, D) entrywise logs (-inf allowed for structural zeros);
    acts on vectors as v'_i = sum_j M[i, j] v_j.  Returns (log_lambda,
    log_vec) with log_vec normalized to max 0.  Raises ArithmeticError if
    the eigenvalue estimate does not settle within max_iter steps.
    """
    log_matrix = np.asarray(log_matrix, dtype=np.float64)
    dim = log_matrix.shape[0]
    log_vec = np.zeros(dim)
    prev1 = np.full(dim, np.inf)
    prev2 = np.full(dim, np.inf)
    hits = 0
    shift = 0.0
    for it in range(max_iter):
        work = log_matrix + log_vec[None, :]
        peak = work.max(axis=1)
        new = peak + np.log(np.exp(work - peak[:, None]).sum(axis=1))
        shift = new.max()
        new -= shift
        # accept on vector stability; the two-step comparison tolerates the
        # rounding-level two-cycle driven by a near-(-lambda) subdominant
        # eigenvalue, and three consecutive hits guard against accidental
        # crossings of rotating complex modes
        scale = tol * (1.0 + abs(shift))
        d1 = np.abs(new - prev1).max() if it > 0 else np.inf
        d2 = np.abs(new - prev2).max() if it > 1 else np.inf
        hits = hits + 1 if min(d1, d2) < scale else 0
        prev2 = prev1
        prev1 = new
        log_vec = new
        if hits >= 3:
            break
    else:
        raise ArithmeticError("power iteration failed to converge")
    # Rayleigh refinement: log lambda = log(h . M h) - log(h . h).
    work = log_matrix + log_vec[None, :]
    peak = work.max(axis=1)
    log_mv = peak + np.log(np.exp(work - peak[:, None]).sum(axis=1))
    num = log_mv + log_vec
    den = 2.0 * log_vec
    hi = max(num.max(), den.max())
    log_lam = (np.log(np.exp(num - hi).sum()) - np.log(np.exp(den - hi).sum()))
    return log_lam, log_vec
