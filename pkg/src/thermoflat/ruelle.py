"""Transfer operators, Ruelle-Perron-Frobenius data and linear pressure.

The operator of a memory-m potential is realized on functions of the
leading m-1 coordinates; entries are kept as logs throughout so potentials
with |f| up to a few hundred do not overflow.
"""

import dataclasses

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .config import POWER_MAX_ITER, POWER_TOL
from .measures import CylinderPotential, MarkovMeasure, stationary_distribution

NEG_INF = -np.inf


class TransferMatrix:
    """Log-domain matrix realization of the weighted prepend-and-sum operator.

    For memory m >= 2 the states are the (m-1)-words; entry [b, b'] is
    log(m_a exp(f(a ^ b))) when b' = (a, b_1..b_{m-2}) and -inf otherwise
    (structural zeros appear only for m >= 3; the matrix stays primitive).
    Memory-1 potentials reduce to the scalar sum_a m_a exp(f(a)).
    """

    def __init__(self, phi):
        self.phi = phi
        self.alphabet = phi.alphabet
        self.memory = phi.memory
        k = self.alphabet.k
        log_m = np.log(self.alphabet.weights)
        if self.memory == 1:
            self.dim = 1
            self.log_entries = np.array(
                [[logsumexp(log_m + phi.table)]]
            )
            return
        m = self.memory
        self.dim = k ** (m - 1)
        log_b = np.full((self.dim, self.dim), NEG_INF)
        table = phi.table.reshape(k, self.dim)  # word (a, b) -> f, b a (m-1)-word
        for b in range(self.dim):
            head = b // k  # leading m-2 symbols of b
            for a in range(k):
                b_new = a * (k ** (m - 2)) + head
                log_b[b, b_new] = log_m[a] + table[a, b]
        self.log_entries = log_b

    @property
    def word_states(self):
        return max(1, self.memory - 1)


@dataclasses.dataclass
class RPFData:
    """Perron data of a transfer matrix plus the induced Gibbs chain."""

    log_lambda: float
    h: np.ndarray  # right eigenvector over states, max = 1
    nu: np.ndarray  # eigenmeasure marginal over states, sums to 1
    gibbs: MarkovMeasure
    normalized_potential: CylinderPotential


def build_transfer(phi):
    return TransferMatrix(phi)


def rpf_solve(transfer):
    """Power-iterate the transfer matrix and assemble the Gibbs chain.

    The forward chain is derived from the backward (prepend) kernel of the
    cohomologous normalized potential; its invariance properties are checked
    by the test suite rather than trusted.
    """
    phi = transfer.phi
    k = transfer.alphabet.k
    log_m = np.log(transfer.alphabet.weights)
    m = transfer.memory

    if m == 1:
        log_lam = float(transfer.log_entries[0, 0])
        log_p = log_m + phi.table - log_lam
        gibbs = MarkovMeasure.product(transfer.alphabet, np.exp(log_p))
        fbar = CylinderPotential(transfer.alphabet, phi.table - log_lam)
        return RPFData(
            log_lambda=log_lam,
            h=np.ones(1),
            nu=np.ones(1),
            gibbs=gibbs,
            normalized_potential=fbar,
        )

    log_b = transfer.log_entries
    log_lam, log_h = kernels.power_iteration_log(log_b, POWER_TOL, POWER_MAX_ITER)
    _, log_nu = kernels.power_iteration_log(
        np.ascontiguousarray(log_b.T), POWER_TOL, POWER_MAX_ITER
    )
    nu = np.exp(log_nu - logsumexp(log_nu))
    h = np.exp(log_h)  # already normalized to max 1 in log domain

    # Normalized potential: f + ln h(leading m-1) - ln h(trailing m-1) - ln lam.
    dim = transfer.dim
    shape = (k,) * m
    fbar_table = np.empty(shape)
    for idx in np.ndindex(shape):
        word_index = 0
        for s in idx:
            word_index = word_index * k + s
        lead = word_index // k  # first m-1 symbols
        trail = word_index % dim  # last m-1 symbols
        fbar_table[idx] = (
            phi.table[idx] + log_h[lead] - log_h[trail] - log_lam
        )
    fbar = CylinderPotential(transfer.alphabet, fbar_table)

    # Backward kernel p(a | b) = m_a exp(fbar(a ^ b)); rows over b sum to 1.
    flat = fbar_table.reshape(k, dim)
    backward = np.zeros((dim, dim))
    for b in range(dim):
        head = b // k
        for a in range(k):
            b_new = a * (k ** (m - 2)) + head
            backward[b, b_new] += transfer.alphabet.weights[a] * np.exp(flat[a, b])
    # rows are stochastic only up to the eigensolve error; renormalize so the
    # stationary solve is exact for the kernel actually used
    backward /= backward.sum(axis=1, keepdims=True)
    pi = stationary_distribution(backward)

    # Forward order-(m-1) chain: Q[s, s'] = P(s ^ a) / pi(s) with s' = shift(s, a).
    forward = np.zeros((dim, dim))
    for s in range(dim):
        if pi[s] <= 0:
            continue
        for a in range(k):
            s_next = (s * k + a) % dim
            w_first = s // (k ** (m - 2))  # leading symbol of the m-word s^a
            b_future = s_next
            p_word = (
                transfer.alphabet.weights[w_first]
                * np.exp(flat[w_first, b_future])
                * pi[b_future]
            )
            forward[s, s_next] += p_word / pi[s]
    forward /= forward.sum(axis=1, keepdims=True)
    # re-derive pi from the normalized forward rows so invariance is exact
    pi = stationary_distribution(forward)
    gibbs = MarkovMeasure(transfer.alphabet, m - 1, pi, forward)

    return RPFData(
        log_lambda=float(log_lam),
        h=h,
        nu=nu,
        gibbs=gibbs,
        normalized_potential=fbar,
    )


def linear_pressure(phi):
    """Topological pressure log lambda_phi of a cylinder potential."""
    if phi.memory == 1:
        # scalar fast path, exact closed form
        return float(logsumexp(np.log(phi.alphabet.weights) + phi.table))
    transfer = build_transfer(phi)
    log_lam, _ = kernels.power_iteration_log(
        transfer.log_entries, POWER_TOL, POWER_MAX_ITER
    )
    return float(log_lam)


def entropy_of_gibbs(rpf, phi):
    """Entropy of the Gibbs measure via the duality log lambda - mu(f)."""
    from .measures import expectation

    return rpf.log_lambda - expectation(rpf.gibbs, phi)


def normalization_residual(rpf):
    """Max deviation of L_fbar(1) from 1 over all states."""
    fbar = rpf.normalized_potential
    k = fbar.alphabet.k
    m = fbar.memory
    weights = fbar.alphabet.weights
    if m == 1:
        return abs(float((weights * np.exp(fbar.table)).sum()) - 1.0)
    dim = k ** (m - 1)
    flat = fbar.table.reshape(k, dim)
    sums = (weights[:, None] * np.exp(flat)).sum(axis=0)
    return float(np.abs(sums - 1.0).max())
