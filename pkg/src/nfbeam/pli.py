"""Penalty-driven solver for quantized double-phase-shifter beamforming.

With discrete phase shifters the analog stage can no longer absorb an
arbitrary digital precoder, so the digital solution and the hybrid
factorization are coupled through a quadratic proximity penalty whose
weight tightens over an outer loop.  Each inner pass alternates the
weighted-MMSE blocks with a least-squares analog refit projected onto
the finite two-phasor alphabet and a pseudo-inverse baseband refit;
once the penalty is small the hybrid beamformer reproduces the digital
one to working accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import (
    HybridBeamformer,
    PowerModel,
    StreamSelection,
    _channel_matrix,
    achievable_rate,
    hardware_power,
    interference_covariance,
    mse_matrix,
    network_objective,
)
from .wmmse_core import (
    GramEvd,
    WmmseState,
    interference_gram_evd,
    solve_hermitian,
    update_combiner,
    update_weight,
)
from .wmmse_ts import (
    StreamMetrics,
    bisection_solve,
    eigen_projections,
    hybrid_factorize,
    wmmse_ts_solve,
)

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class DiscreteAlphabet:
    """All values reachable by a sum of two quantized unit phasors.

    Phases live on the ``2 pi q / 2^bits`` lattice; the atom list is
    deduplicated (1e-9 grid) and ordered by its lexicographically smallest
    generating phase pair, which also fixes how projection ties resolve.
    """

    bits: int
    atoms: np.ndarray
    phase_pairs: np.ndarray

    @classmethod
    def from_bits(cls, bits: int) -> "DiscreteAlphabet":
        if not 1 <= int(bits) <= 8:
            raise ValueError("shifter resolution must be between 1 and 8 bits")
        bits = int(bits)
        n = 1 << bits
        angles = 2.0 * np.pi * np.arange(n) / n
        phasors = np.exp(1j * angles)
        atoms: list[complex] = []
        pairs: list[tuple[float, float]] = []
        seen: dict[tuple[float, float], int] = {}
        for q1 in range(n):
            for q2 in range(q1, n):
                value = phasors[q1] + phasors[q2]
                key = (round(value.real, 9) + 0.0, round(value.imag, 9) + 0.0)
                if key not in seen:
                    seen[key] = len(atoms)
                    atoms.append(value)
                    pairs.append((angles[q1], angles[q2]))
        return cls(bits=bits, atoms=np.asarray(atoms), phase_pairs=np.asarray(pairs))

    @property
    def size(self) -> int:
        return len(self.atoms)


def discrete_project(
    alphabet: DiscreteAlphabet, values: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nearest-atom projection; returns (atoms, phase_a, phase_b).

    Euclidean nearest neighbour in the complex plane; exact distance ties
    go to the atom with the lexicographically smallest phase pair.
    """
    v = np.asarray(values, dtype=complex)
    flat = v.ravel()
    idx = np.empty(flat.shape, dtype=int)
    step = max(1, int(2e6 // max(alphabet.size, 1)))
    for start in range(0, flat.size, step):
        chunk = flat[start : start + step]
        dist = np.abs(chunk[:, None] - alphabet.atoms[None, :])
        idx[start : start + step] = np.argmin(dist, axis=1)
    atoms = alphabet.atoms[idx].reshape(v.shape)
    th1 = alphabet.phase_pairs[idx, 0].reshape(v.shape)
    th2 = alphabet.phase_pairs[idx, 1].reshape(v.shape)
    return atoms, th1, th2


def penalized_targets(
    channels,
    combiners: np.ndarray,
    weights: np.ndarray,
    analog: np.ndarray,
    baseband: np.ndarray,
    rho: float,
) -> np.ndarray:
    """Per-stream targets ``H^H Z Gamma + P W / (2 rho)`` of the proximal step."""
    if rho <= 0.0:
        raise ValueError("penalty weight must be positive")
    out = []
    for k, channel in enumerate(channels):
        h = _channel_matrix(channel)
        out.append(h.conj().T @ combiners[k] @ weights[k] + (analog @ baseband[k]) / (2.0 * rho))
    return np.asarray(out)


def penalized_contribution(
    projections: np.ndarray,
    eigenvalues: np.ndarray,
    multiplier: float,
    rho: float,
) -> np.ndarray:
    """Per-stream value of the proximal weighted-MSE part at its optimum.

    ``E[k, j] = -sum_i y (J_i + 1/rho + 2 xi) / (J_i + 1/(2 rho) + xi)^2``.
    """
    shift = 0.5 / rho
    den = (eigenvalues + shift + multiplier) ** 2
    num = eigenvalues + 2.0 * shift + 2.0 * multiplier
    return -(projections * (num / den)[None, None, :]).sum(axis=-1)


def penalized_bisection(
    metrics: StreamMetrics,
    evd: GramEvd,
    rho: float,
    p_max: float,
    beta: float,
    mu: float,
    model: PowerModel,
    n_tx: int,
    rf_limit: int,
    eps_power: float = 1e-6,
    frozen: StreamSelection | None = None,
) -> tuple[float, StreamSelection, np.ndarray]:
    """Budget bisection of the proximal precoder step.

    The proximity term only shifts every Gram eigenvalue by ``1/(2 rho)``
    (and the pricing numerator by another ``1/(2 rho)``), so this reuses
    the plain bisection on the shifted spectrum.
    """
    shift = 0.5 / rho
    shifted = GramEvd(basis=evd.basis, eigenvalues=evd.eigenvalues + shift)
    return bisection_solve(
        metrics,
        shifted,
        p_max,
        beta,
        mu,
        model,
        n_tx,
        rf_limit,
        eps_power=eps_power,
        frozen=frozen,
        shift=shift,
    )


def analog_update(
    digital: np.ndarray,
    baseband: np.ndarray,
    selection: StreamSelection,
    alphabet: DiscreteAlphabet,
    analog: np.ndarray,
) -> np.ndarray:
    """Least-squares analog refit over active streams, snapped to the alphabet.

    Solves ``min_P sum_active ||wbar_j - P wtil_j||^2`` over the leading
    active columns (inactive columns keep their previous values), then
    projects every entry onto the two-phasor alphabet.  A singular
    normal-equation matrix falls back to the previous analog stage.
    """
    t_s = selection.active_count
    new_analog = analog.copy()
    if t_s == 0:
        return new_analog
    flat = np.concatenate(list(np.asarray(digital)), axis=1)
    tilde = np.concatenate(list(np.asarray(baseband)), axis=1)[:t_s]
    active = np.flatnonzero(selection.flags.ravel())
    wbar = flat[:, active]
    wtil = tilde[:, active]
    a = wbar @ wtil.conj().T
    b = wtil @ wtil.conj().T
    with np.errstate(all="ignore"):
        solved = solve_hermitian(b, a.conj().T, ridge=1e-10).conj().T
    if not np.all(np.isfinite(solved)):
        return new_analog
    new_analog[:, :t_s] = discrete_project(alphabet, solved)[0]
    return new_analog


def baseband_update(
    digital: np.ndarray,
    analog: np.ndarray,
    selection: StreamSelection,
) -> np.ndarray:
    """Pseudo-inverse baseband refit; disabled streams get zero columns."""
    digital = np.asarray(digital)
    n_users, _, m_r = digital.shape
    rf_total = analog.shape[1]
    t_s = selection.active_count
    baseband = np.zeros((n_users, rf_total, m_r), dtype=complex)
    if t_s == 0:
        return baseband
    pinv = np.linalg.pinv(analog[:, :t_s])
    for k in range(n_users):
        baseband[k, :t_s] = pinv @ (digital[k] * selection.flags[k][None, :])
    return baseband


def penalty_value(
    digital: np.ndarray,
    analog: np.ndarray,
    baseband: np.ndarray,
    selection: StreamSelection,
) -> float:
    """Total squared mismatch between digital and hybrid active columns."""
    t_s = selection.active_count
    if t_s == 0:
        return 0.0
    total = 0.0
    for k in range(len(digital)):
        recon = analog[:, :t_s] @ baseband[k][:t_s]
        diff = (digital[k] - recon) * selection.flags[k][None, :]
        total += float(np.sum(np.abs(diff) ** 2))
    return total


def penalty_schedule(rho: float, shrink: float) -> float:
    """Geometric tightening of the penalty weight."""
    if rho <= 0.0:
        raise ValueError("penalty weight must be positive")
    if not 0.0 < shrink < 1.0:
        raise ValueError("shrink factor must lie in (0, 1)")
    return rho * shrink


@dataclass
class PliResult:
    """Outcome of the penalty solver: discrete hybrid plus diagnostics."""

    state: WmmseState
    beamformer: HybridBeamformer
    rates: np.ndarray
    objective_trace: np.ndarray
    surrogate_traces: list[np.ndarray]
    penalty_trace: np.ndarray
    converged: bool
    n_outer: int
    n_inner_total: int
    warning: str | None = None

    @property
    def objective(self) -> float:
        return float(
            network_objective(self.rates, float(self.hardware_w), self._beta)
        )

    # populated by pli_solve so the objective reflects the hybrid rates
    hardware_w: float = 0.0
    _beta: float = 0.7


def _penalized_surrogate(
    weights: np.ndarray,
    mses: np.ndarray,
    penalty: float,
    selection: StreamSelection,
    model: PowerModel,
    n_tx: int,
    beta: float,
    mu: float,
    rho: float,
) -> float:
    """Proximal weighted-MMSE bound: the plain surrogate minus the scaled penalty."""
    total = 0.0
    for k in range(len(weights)):
        gamma = np.asarray(weights[k])
        m_r = gamma.shape[0]
        _, logdet = np.linalg.slogdet(gamma)
        bracket = logdet + mu * m_r - mu * float(np.real(np.trace(gamma @ mses[k])))
        total += bracket / _LN2
    total -= mu * penalty / (2.0 * rho) / _LN2
    return beta * total - (1.0 - beta) * hardware_power(selection, model, n_tx)


def pli_solve(
    channels,
    p_max: float,
    noise_w: float,
    model: PowerModel,
    bits: int,
    beta: float = 0.7,
    mu: float = 1.5,
    rf_limit: int | None = None,
    rho0: float = 100.0,
    shrink: float = 0.75,
    eps_converge: float = 1e-2,
    eps_power: float = 1e-6,
    eps_penalty: float = 1e-2,
    max_outer: int = 60,
    max_inner: int = 100,
) -> PliResult:
    """Run the penalty solver to a small digital-vs-hybrid mismatch.

    A converged continuous solve seeds the digital precoder and the stream
    selection; a full-width exact factorization snapped to the alphabet
    seeds the analog stage.  Inner passes alternate combiners, weights,
    the budgeted proximal precoder step, the projected analog refit and
    the baseband refit until the rate objective settles; the outer loop
    then tightens the penalty weight until the mismatch drops below
    ``eps_penalty``.
    """
    n_users = len(channels)
    mats = [_channel_matrix(c) for c in channels]
    m_r, m_t = mats[0].shape
    if rf_limit is None:
        rf_limit = n_users * m_r

    warm = wmmse_ts_solve(
        channels,
        p_max,
        noise_w,
        model,
        beta=beta,
        mu=mu,
        rf_limit=rf_limit,
        eps_converge=eps_converge,
        eps_power=eps_power,
        max_iters=200,
        warn_on_max=False,
    )
    digital = warm.state.digital
    selection = warm.state.selection
    combiners = warm.state.combiners.copy()
    weights = warm.state.weights.copy()

    alphabet = DiscreteAlphabet.from_bits(bits)
    if selection.active_count > 0:
        seed = hybrid_factorize(digital, rf_limit, selection)
        analog = discrete_project(alphabet, seed.beamformer.analog)[0]
    else:
        analog = np.full((m_t, rf_limit), alphabet.atoms[0], dtype=complex)
    baseband = baseband_update(digital, analog, selection)

    rho = rho0
    objective_trace: list[float] = []
    surrogate_traces: list[np.ndarray] = []
    penalty_trace: list[float] = []
    converged = False
    n_outer = 0
    n_inner_total = 0
    multiplier = 0.0

    for n_outer in range(1, max_outer + 1):
        inner_surrogates: list[float] = []
        prev_obj = None
        for _ in range(max_inner):
            n_inner_total += 1
            mses = np.zeros((n_users, m_r, m_r), dtype=complex)
            for k in range(n_users):
                combiners[k] = update_combiner(channels[k], digital, selection, noise_w, k)
                qdot = interference_covariance(channels[k], digital, selection, noise_w, k)
                mses[k] = mse_matrix(
                    combiners[k], channels[k], digital[k], selection.flags[k], qdot
                )
                weights[k] = update_weight(mses[k], mu)
            evd = interference_gram_evd(channels, combiners, weights)
            targets = penalized_targets(channels, combiners, weights, analog, baseband, rho)
            metrics = StreamMetrics(
                projections=eigen_projections(targets, evd.basis), targets=targets
            )
            multiplier, selection, digital = penalized_bisection(
                metrics, evd, rho, p_max, beta, mu, model, m_t, rf_limit,
                eps_power=eps_power,
            )
            analog = analog_update(digital, baseband, selection, alphabet, analog)
            baseband = baseband_update(digital, analog, selection)

            rates = achievable_rate(channels, digital, selection, noise_w)
            objective = network_objective(
                rates, hardware_power(selection, model, m_t), beta
            )
            objective_trace.append(objective)
            inner_surrogates.append(
                _penalized_surrogate(
                    weights,
                    mses,
                    penalty_value(digital, analog, baseband, selection),
                    selection,
                    model,
                    m_t,
                    beta,
                    mu,
                    rho,
                )
            )
            if prev_obj is not None:
                if abs(objective - prev_obj) <= eps_converge * max(abs(prev_obj), 1e-12):
                    break
            prev_obj = objective
        surrogate_traces.append(np.asarray(inner_surrogates))
        penalty = penalty_value(digital, analog, baseband, selection)
        penalty_trace.append(penalty)
        if penalty <= eps_penalty:
            converged = True
            break
        rho = penalty_schedule(rho, shrink)

    warning = None
    if not converged:
        warning = (
            f"digital/hybrid mismatch {penalty_trace[-1]:.3e} still above "
            f"{eps_penalty:g} after {max_outer} outer iterations"
        )

    layer_a = np.zeros_like(analog)
    layer_b = np.zeros_like(analog)
    _, th1, th2 = discrete_project(alphabet, analog)
    layer_a = np.exp(1j * th1)
    layer_b = np.exp(1j * th2)
    beamformer = HybridBeamformer(
        analog=analog, layer_a=layer_a, layer_b=layer_b, baseband=baseband
    )
    hybrid_rates = achievable_rate(
        channels, beamformer.effective_precoders(), selection, noise_w
    )
    state = WmmseState(
        digital=digital,
        combiners=combiners,
        weights=weights,
        selection=selection,
        multiplier=multiplier,
    )
    result = PliResult(
        state=state,
        beamformer=beamformer,
        rates=hybrid_rates,
        objective_trace=np.asarray(objective_trace),
        surrogate_traces=surrogate_traces,
        penalty_trace=np.asarray(penalty_trace),
        converged=converged,
        n_outer=n_outer,
        n_inner_total=n_inner_total,
        warning=warning,
    )
    result.hardware_w = hardware_power(selection, model, m_t)
    result._beta = beta
    return result
