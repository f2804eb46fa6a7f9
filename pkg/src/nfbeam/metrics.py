"""Link-level metrics: rates, hardware/transmit power, network objective.

All rate computations treat each user's active streams through a binary
per-stream mask, so a disabled stream contributes neither signal nor
interference anywhere.  Rates are in bit/s/Hz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class PowerModel:
    """Static hardware power: one RF chain plus phase shifters per stream."""

    rf_chain_w: float = 0.2
    shifter_w: float = 0.01

    def __post_init__(self):
        if self.rf_chain_w < 0.0 or self.shifter_w < 0.0:
            raise ValueError("power terms must be non-negative")


@dataclass
class StreamSelection:
    """Binary on/off flags per (user, stream)."""

    flags: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.flags)
        if f.ndim != 2:
            raise ValueError("flags must be a (users, streams) array")
        if not np.all((f == 0) | (f == 1)):
            raise ValueError("flags must be 0/1")
        self.flags = f.astype(int)

    @property
    def active_count(self) -> int:
        return int(self.flags.sum())

    def user_diagonal(self, k: int) -> np.ndarray:
        return np.diag(self.flags[k].astype(float))

    def copy(self) -> "StreamSelection":
        return StreamSelection(self.flags.copy())


@dataclass
class HybridBeamformer:
    """Two-shifter-per-entry analog stage plus per-user baseband matrices.

    ``analog`` is the element-wise sum of the unit-modulus layers
    ``layer_a`` and ``layer_b`` (entries therefore live in the radius-2
    disk); ``baseband`` stacks one (rf_chains x streams) matrix per user.
    """

    analog: np.ndarray
    layer_a: np.ndarray
    layer_b: np.ndarray
    baseband: np.ndarray

    def effective_precoder(self, k: int) -> np.ndarray:
        return self.analog @ self.baseband[k]

    def effective_precoders(self) -> np.ndarray:
        return np.einsum("tr,krm->ktm", self.analog, self.baseband)


def _channel_matrix(channel) -> np.ndarray:
    return getattr(channel, "matrix", channel)


def _masked_precoders(precoders: np.ndarray, selection: StreamSelection) -> np.ndarray:
    return np.asarray(precoders) * selection.flags[:, None, :]


def signal_covariances(
    channel, precoders: np.ndarray, selection: StreamSelection
) -> np.ndarray:
    """Per-transmit-user received covariance H V_j T_j T_j^H V_j^H H^H at one receiver."""
    h = _channel_matrix(channel)
    v = _masked_precoders(precoders, selection)
    hv = np.einsum("rt,ktm->krm", h, v)
    return np.einsum("krm,ksm->krs", hv, hv.conj())


def interference_covariance(
    channel,
    precoders: np.ndarray,
    selection: StreamSelection,
    noise_w: float,
    user: int,
) -> np.ndarray:
    """Noise-plus-interference covariance seen by ``user`` (own signal excluded)."""
    if noise_w <= 0.0:
        raise ValueError("noise power must be positive")
    cov = signal_covariances(channel, precoders, selection)
    m_r = cov.shape[-1]
    total = cov.sum(axis=0) - cov[user]
    return total + noise_w * np.eye(m_r)


def achievable_rate(
    channels,
    precoders: np.ndarray,
    selection: StreamSelection,
    noise_w: float,
) -> np.ndarray:
    """Per-user achievable rates under Gaussian signaling, bit/s/Hz.

    ``channels`` holds one (user elements x BS elements) matrix per user and
    ``precoders`` one effective (BS elements x streams) matrix per user;
    disabled streams are masked out before any covariance is formed.
    """
    if noise_w <= 0.0:
        raise ValueError("noise power must be positive")
    rates = np.zeros(len(channels))
    for k, channel in enumerate(channels):
        cov = signal_covariances(channel, precoders, selection)
        m_r = cov.shape[-1]
        noise_eye = noise_w * np.eye(m_r)
        q_k = cov.sum(axis=0) - cov[k] + noise_eye
        total = q_k + cov[k]
        _, logdet_total = np.linalg.slogdet(total)
        _, logdet_q = np.linalg.slogdet(q_k)
        rates[k] = (logdet_total - logdet_q) / _LN2
    return rates


def hardware_power(selection, model: PowerModel, n_tx: int) -> float:
    """Static consumption of the active chains: (P_rf + 2 n_tx P_ps) per stream."""
    n_active = selection.active_count if isinstance(selection, StreamSelection) else int(selection)
    if n_active < 0:
        raise ValueError("active stream count must be non-negative")
    return (model.rf_chain_w + 2.0 * n_tx * model.shifter_w) * n_active


def transmit_power(precoders: np.ndarray, selection: StreamSelection) -> float:
    """Total radiated power: squared Frobenius norm over active columns."""
    v = _masked_precoders(precoders, selection)
    return float(np.sum(np.abs(v) ** 2))


def network_objective(rates: np.ndarray, hardware_w: float, beta: float) -> float:
    """Weighted rate-vs-power utility ``beta * sum(rates) - (1 - beta) * P_hw``."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    return float(beta * np.sum(rates) - (1.0 - beta) * hardware_w)


def mse_matrix(
    combiner: np.ndarray,
    channel,
    precoder: np.ndarray,
    flags: np.ndarray,
    interference_cov: np.ndarray,
) -> np.ndarray:
    """Stream-level error covariance of a linear combiner.

    ``Z^H Qdot Z + (I - Z^H H V T)(I - Z^H H V T)^H`` with ``Qdot`` the
    noise-plus-interference covariance; the result is Hermitian PSD.
    """
    h = _channel_matrix(channel)
    z = np.asarray(combiner)
    t = np.asarray(flags, dtype=float)
    hv = (h @ precoder) * t[None, :]
    eye = np.eye(z.shape[1])
    mismatch = eye - z.conj().T @ hv
    f = z.conj().T @ interference_cov @ z + mismatch @ mismatch.conj().T
    return 0.5 * (f + f.conj().T)
