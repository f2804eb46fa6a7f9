"""Building blocks shared by the continuous and discrete-shifter solvers.

The weighted-MMSE reformulation alternates three closed-form blocks:
per-user linear combiners, per-user matrix weights, and a precoder step
that works in the eigenbasis of the weighted uplink Gram matrix.  The
pieces here are solver-agnostic; the solvers wire them together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import (
    PowerModel,
    StreamSelection,
    _channel_matrix,
    hardware_power,
    signal_covariances,
)

_LN2 = float(np.log(2.0))


@dataclass
class WmmseState:
    """Iterate of the alternating solver: precoders, combiners, weights."""

    digital: np.ndarray
    combiners: np.ndarray
    weights: np.ndarray
    selection: StreamSelection
    multiplier: float = 0.0


@dataclass(frozen=True)
class GramEvd:
    """Eigenbasis of the weighted interference Gram matrix.

    ``basis`` is unitary and ``eigenvalues`` are sorted descending and
    clamped at zero (the Gram matrix is Hermitian PSD up to round-off).
    """

    basis: np.ndarray
    eigenvalues: np.ndarray


def solve_hermitian(a: np.ndarray, b: np.ndarray, ridge: float = 1e-12) -> np.ndarray:
    """Solve ``a x = b`` for Hermitian ``a``, regularizing only when needed.

    A ``ridge * I`` shift is applied when the conditioning exceeds 1e12 (or
    the matrix is outright singular); well-conditioned systems are solved
    untouched.
    """
    a = 0.5 * (a + a.conj().T)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e12:
        a = a + ridge * np.eye(a.shape[0])
    return np.linalg.solve(a, b)


def update_combiner(
    channel,
    precoders: np.ndarray,
    selection: StreamSelection,
    noise_w: float,
    user: int,
) -> np.ndarray:
    """MMSE receive combiner of one user for the current precoders.

    ``(sigma^2 I + sum_j H V_j T_j T_j^H V_j^H H^H)^{-1} H V_k T_k``; the
    inverse covariance is the full received one, own signal included.
    """
    if noise_w <= 0.0:
        raise ValueError("noise power must be positive")
    h = _channel_matrix(channel)
    cov = signal_covariances(channel, precoders, selection)
    total = cov.sum(axis=0) + noise_w * np.eye(cov.shape[-1])
    target = (h @ precoders[user]) * selection.flags[user][None, :]
    return solve_hermitian(total, target)


def update_weight(mse: np.ndarray, mu: float) -> np.ndarray:
    """Optimal matrix weight ``F^{-1} / mu`` for an error covariance ``F``."""
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    gamma = solve_hermitian(np.asarray(mse), np.eye(mse.shape[0])) / mu
    return 0.5 * (gamma + gamma.conj().T)


def interference_gram_evd(channels, combiners: np.ndarray, weights: np.ndarray) -> GramEvd:
    """Eigendecomposition of ``sum_k H_k^H Z_k Gamma_k Z_k^H H_k``."""
    first = _channel_matrix(channels[0])
    gram = np.zeros((first.shape[1], first.shape[1]), dtype=complex)
    for k, channel in enumerate(channels):
        h = _channel_matrix(channel)
        hz = h.conj().T @ combiners[k]
        gram += hz @ weights[k] @ hz.conj().T
    gram = 0.5 * (gram + gram.conj().T)
    vals, vecs = np.linalg.eigh(gram)
    order = np.argsort(vals)[::-1]
    return GramEvd(basis=vecs[:, order], eigenvalues=np.clip(vals[order], 0.0, None))


def surrogate_value(
    weights: np.ndarray,
    mses: np.ndarray,
    selection: StreamSelection,
    model: PowerModel,
    n_tx: int,
    beta: float,
    mu: float,
) -> float:
    """Weighted-MMSE lower bound on the network objective.

    ``beta * sum_k [log2|Gamma_k| + (mu M_r - mu tr(Gamma_k F_k)) / ln 2]
    - (1 - beta) * P_hw``.  The trace terms share the log-determinant's
    base-2 scaling so that the combiner and weight updates are exact
    block maximizers; at a combiner/weight fixed point with ``mu = 1``
    the value coincides with the true rate objective.
    """
    total = 0.0
    for k in range(len(weights)):
        gamma = np.asarray(weights[k])
        mse = np.asarray(mses[k])
        m_r = gamma.shape[0]
        _, logdet = np.linalg.slogdet(gamma)
        bracket = logdet + mu * m_r - mu * float(np.real(np.trace(gamma @ mse)))
        total += bracket / _LN2
    return beta * total - (1.0 - beta) * hardware_power(selection, model, n_tx)
