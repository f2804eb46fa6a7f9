"""Two-stage weighted-MMSE solver with dynamic per-stream selection.

Stage one solves the fully-digital problem by block-coordinate ascent:
MMSE combiners, matrix weights, then a precoder step in the eigenbasis
of the weighted uplink Gram matrix, where a bisection on the power
multiplier prices every stream against its static hardware cost and
switches unprofitable streams off.  Stage two factorizes the digital
precoder exactly into a double-phase-shifter analog stage and a
low-dimensional baseband stage, so the hybrid architecture loses no
rate relative to the digital solution.
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
    transmit_power,
)
from .wmmse_core import (
    GramEvd,
    WmmseState,
    interference_gram_evd,
    update_combiner,
    update_weight,
)

BISECTION_BOUNDS = (0.0, 1e8)
_MAX_HALVINGS = 500


@dataclass(frozen=True)
class StreamMetrics:
    """Per-stream quantities in the Gram eigenbasis.

    ``projections[k, j, i]`` is the squared modulus of eigen-direction i of
    stream j of user k's target vector; ``targets[k]`` stacks the raw
    target columns ``H_k^H Z_k Gamma_k``.
    """

    projections: np.ndarray
    targets: np.ndarray


@dataclass
class FactorizationResult:
    """Exact hybrid factorization with its reconstruction residual."""

    beamformer: HybridBeamformer
    residual: float
    column_scale: np.ndarray


def eigen_projections(targets: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Squared moduli of per-stream targets in a basis, shape (K, streams, dims)."""
    proj = np.abs(np.einsum("ti,ktm->kim", basis.conj(), np.asarray(targets))) ** 2
    return np.transpose(proj, (0, 2, 1))


def stream_metrics(channels, combiners: np.ndarray, weights: np.ndarray, evd: GramEvd) -> StreamMetrics:
    """Eigenbasis projections of the per-stream target vectors."""
    targets = np.asarray(
        [
            _channel_matrix(channel).conj().T @ combiners[k] @ weights[k]
            for k, channel in enumerate(channels)
        ]
    )
    proj = eigen_projections(targets, evd.basis)
    # Round-off leaves spurious mass on the Gram's numerical null space even
    # though the targets lie in its range; zero it so tiny eigenvalues never
    # blow up the power curve near multiplier zero.
    eig = evd.eigenvalues
    if eig.size and eig[0] > 0.0:
        proj = np.where(eig[None, None, :] <= 1e-13 * eig[0], 0.0, proj)
    return StreamMetrics(projections=proj, targets=targets)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    den = np.asarray(den, dtype=float)
    return np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)


def stream_contribution(
    projections: np.ndarray,
    eigenvalues: np.ndarray,
    multiplier: float,
    shift: float = 0.0,
) -> np.ndarray:
    """Optimal per-stream value of the weighted-MSE part of the precoder step.

    ``C[k, j] = -sum_i x[k, j, i] (J_i + 2 xi + shift) / (J_i + xi)^2``;
    always non-positive, and shrinking toward zero as the multiplier grows.
    The ``shift`` is zero for the plain solver; the penalized solver passes
    the extra curvature its proximity term adds to the numerator.
    """
    j_xi = eigenvalues + multiplier
    ratio = _safe_ratio(eigenvalues + 2.0 * multiplier + shift, j_xi**2)
    return -(projections * ratio[None, None, :]).sum(axis=-1)


def select_streams(
    contributions: np.ndarray,
    beta: float,
    mu: float,
    model: PowerModel,
    n_tx: int,
    rf_limit: int,
) -> StreamSelection:
    """Switch on exactly the streams whose utility beats their hardware cost.

    A stream stays on iff ``beta mu C + (1 - beta) (P_rf + 2 n_tx P_ps)``
    is strictly negative (boundary cases switch off); if more streams
    qualify than there are RF chains, the most negative scores win.
    """
    cost = model.rf_chain_w + 2.0 * n_tx * model.shifter_w
    score = beta * mu * contributions + (1.0 - beta) * cost
    flags = (score < 0.0).astype(int)
    if flags.sum() > rf_limit:
        order = np.argsort(score.ravel(), kind="stable")
        keep = order[:rf_limit]
        flags = np.zeros_like(flags).ravel()
        flags[keep] = 1
        flags = flags.reshape(score.shape)
    return StreamSelection(flags)


def digital_precoder(
    metrics: StreamMetrics,
    evd: GramEvd,
    multiplier: float,
    selection: StreamSelection,
) -> np.ndarray:
    """Regularized precoder ``G (J + xi I)^{-1} G^H f`` per active stream.

    Eigen-directions whose projection mass is exactly zero are skipped, so
    the radiated power agrees with ``power_at_multiplier`` on the same
    metrics even at multiplier zero, where a spurious near-null eigenvalue
    would otherwise amplify round-off mass into the precoder.
    """
    targets = metrics.targets
    inv = _safe_ratio(np.ones_like(evd.eigenvalues), evd.eigenvalues + multiplier)
    out = np.empty_like(targets)
    for k in range(targets.shape[0]):
        coeff = evd.basis.conj().T @ targets[k]
        coeff = np.where(metrics.projections[k].T > 0.0, coeff, 0.0)
        out[k] = evd.basis @ (coeff * inv[:, None])
    return out * selection.flags[:, None, :]


def power_at_multiplier(
    projections: np.ndarray,
    eigenvalues: np.ndarray,
    multiplier: float,
    selection: StreamSelection,
) -> float:
    """Transmit power of the active optimal precoders at a multiplier value."""
    inv2 = _safe_ratio(np.ones_like(eigenvalues), (eigenvalues + multiplier) ** 2)
    per_stream = (projections * inv2[None, None, :]).sum(axis=-1)
    return float((per_stream * selection.flags).sum())


def bisection_solve(
    metrics: StreamMetrics,
    evd: GramEvd,
    p_max: float,
    beta: float,
    mu: float,
    model: PowerModel,
    n_tx: int,
    rf_limit: int,
    eps_power: float = 1e-6,
    bounds: tuple[float, float] = BISECTION_BOUNDS,
    frozen: StreamSelection | None = None,
    shift: float = 0.0,
) -> tuple[float, StreamSelection, np.ndarray]:
    """Find the power multiplier meeting the budget, selection in the loop.

    Returns ``(multiplier, selection, digital precoders)``.  The budget may
    be met with equality (binding, ``|power - p_max| <= eps_power``) or be
    slack at multiplier zero (interior optimum).  The bracket is narrowed
    until it collapses around the budget crossing, not merely until the
    power tolerance is met: on ill-conditioned instances the power curve
    is nearly flat in the multiplier, and accepting the first in-tolerance
    midpoint can overshoot the complementary-slackness point by orders of
    magnitude, which stalls the outer alternation.  When the embedded
    on/off selection makes the power curve jump across the budget, the
    selection on the feasible side is frozen and the now-continuous curve
    is re-bisected, so a binding budget is always met to tolerance.
    """
    if p_max <= 0.0:
        raise ValueError("power budget must be positive")

    def pick(multiplier: float) -> StreamSelection:
        if frozen is not None:
            return frozen
        contrib = stream_contribution(metrics.projections, evd.eigenvalues, multiplier, shift)
        return select_streams(contrib, beta, mu, model, n_tx, rf_limit)

    def finish(multiplier: float, sel: StreamSelection):
        return multiplier, sel, digital_precoder(metrics, evd, multiplier, sel)

    lo, hi = bounds
    sel_lo = pick(lo)
    if sel_lo.active_count == 0:
        return finish(lo, sel_lo)
    if power_at_multiplier(metrics.projections, evd.eigenvalues, lo, sel_lo) <= p_max:
        return finish(lo, sel_lo)

    for _ in range(_MAX_HALVINGS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        sel = pick(mid)
        power = power_at_multiplier(metrics.projections, evd.eigenvalues, mid, sel)
        if abs(power - p_max) <= eps_power and hi - lo <= 1e-10 * max(1.0, mid):
            return finish(mid, sel)
        if power >= p_max:
            lo = mid
        else:
            hi = mid

    # Stalled on a selection discontinuity: freeze the feasible-side
    # selection and meet the budget on the continuous restriction.
    sel_hi = pick(hi)
    if sel_hi.active_count == 0:
        sel_hi = sel_lo
    lo2, hi2 = bounds[0], hi
    if power_at_multiplier(metrics.projections, evd.eigenvalues, lo2, sel_hi) <= p_max:
        return finish(lo2, sel_hi)
    for _ in range(_MAX_HALVINGS):
        mid = 0.5 * (lo2 + hi2)
        if mid <= lo2 or mid >= hi2:
            break
        power = power_at_multiplier(metrics.projections, evd.eigenvalues, mid, sel_hi)
        if abs(power - p_max) <= eps_power and hi2 - lo2 <= 1e-10 * max(1.0, mid):
            return mid, sel_hi, digital_precoder(metrics, evd, mid, sel_hi)
        if power >= p_max:
            lo2 = mid
        else:
            hi2 = mid
    return finish(hi2, sel_hi)


@dataclass
class SolveResult:
    """Outcome of the alternating digital solve."""

    state: WmmseState
    rates: np.ndarray
    objective_trace: np.ndarray
    converged: bool
    n_iters: int
    warning: str | None = None

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])


def _rank_pruned_selection(
    digital: np.ndarray, selection: StreamSelection
) -> StreamSelection | None:
    """Switch off streams whose precoder columns are linearly dependent.

    Per-stream pricing values every stream by its own weighted-MSE
    reduction, so on a rank-deficient channel several parallel columns can
    each look profitable although together they carry one stream's worth of
    information - and that configuration is a stable fixed point of the
    alternation.  Returns a selection with each user's dependent columns
    (beyond the numerical column rank) switched off, smallest norms first,
    or None when every user's active columns are independent.
    """
    flags = selection.flags.copy()
    changed = False
    for k in range(flags.shape[0]):
        active = np.flatnonzero(flags[k])
        if active.size <= 1:
            continue
        cols = digital[k][:, active]
        svals = np.linalg.svd(cols, compute_uv=False)
        if svals[0] <= 0.0:
            continue
        rank = int(np.sum(svals > 1e-8 * svals[0]))
        if rank >= active.size:
            continue
        norms = np.linalg.norm(cols, axis=0)
        drop = active[np.argsort(norms, kind="stable")[: active.size - rank]]
        flags[k, drop] = 0
        changed = True
    return StreamSelection(flags) if changed else None


def wmmse_ts_solve(
    channels,
    p_max: float,
    noise_w: float,
    model: PowerModel,
    beta: float = 0.7,
    mu: float = 1.5,
    rf_limit: int | None = None,
    eps_converge: float = 1e-2,
    eps_power: float = 1e-6,
    max_iters: int = 500,
    frozen: StreamSelection | None = None,
    warn_on_max: bool = True,
    initial: np.ndarray | None = None,
) -> SolveResult:
    """Run the alternating digital solve to convergence of the objective.

    Starts from power-normalized matched filters with every stream on,
    iterates combiner / weight / precoder blocks, and stops once the
    relative change of the rate-vs-hardware-power objective drops below
    ``eps_converge``.  ``frozen`` pins the on/off pattern (the fixed-stream
    baseline); otherwise the selection is re-priced every iteration and a
    converged solution with linearly dependent precoder columns gets a
    final consolidation step that drops the redundant streams whenever
    that does not cost objective.  If the iteration cap is hit, the best
    iterate seen is returned together with a warning message.

    ``initial`` supplies a warm-start precoder stack ``(K, M_t, M_r)``
    instead of the matched filter; it is rescaled to spend the full
    budget.  Useful on near-rank-deficient channels, where the matched
    filter seeds the weak eigenmodes so faintly that their MMSE weights
    take thousands of alternations to wake up.
    """
    n_users = len(channels)
    mats = [_channel_matrix(c) for c in channels]
    m_r = mats[0].shape[0]
    m_t = mats[0].shape[1]
    if rf_limit is None:
        rf_limit = n_users * m_r

    if initial is None:
        start = [h.conj().T for h in mats]
    else:
        start = np.asarray(initial, dtype=complex)
        if start.shape != (n_users, m_t, m_r):
            raise ValueError("initial precoder stack has the wrong shape")
    scale = np.sqrt(p_max / sum(np.sum(np.abs(w) ** 2) for w in start))
    digital = np.asarray([scale * w for w in start])
    selection = frozen.copy() if frozen is not None else StreamSelection(np.ones((n_users, m_r), dtype=int))
    weights = np.asarray([np.eye(m_r, dtype=complex) for _ in range(n_users)])
    combiners = np.zeros((n_users, m_r, m_r), dtype=complex)
    multiplier = 0.0

    trace: list[float] = []
    best = None
    converged = False
    n_iters = 0
    for n_iters in range(1, max_iters + 1):
        mses = np.zeros((n_users, m_r, m_r), dtype=complex)
        for k in range(n_users):
            combiners[k] = update_combiner(channels[k], digital, selection, noise_w, k)
            qdot = interference_covariance(channels[k], digital, selection, noise_w, k)
            mses[k] = mse_matrix(combiners[k], channels[k], digital[k], selection.flags[k], qdot)
            weights[k] = update_weight(mses[k], mu)
        evd = interference_gram_evd(channels, combiners, weights)
        metrics = stream_metrics(channels, combiners, weights, evd)
        multiplier, selection, digital = bisection_solve(
            metrics,
            evd,
            p_max,
            beta,
            mu,
            model,
            m_t,
            rf_limit,
            eps_power=eps_power,
            frozen=frozen,
        )
        rates = achievable_rate(channels, digital, selection, noise_w)
        objective = network_objective(rates, hardware_power(selection, model, m_t), beta)
        trace.append(objective)
        if best is None or objective > best[0]:
            best = (objective, digital.copy(), selection.copy(), combiners.copy(), weights.copy(), multiplier, rates.copy())
        if len(trace) >= 2:
            delta = abs(trace[-1] - trace[-2])
            if delta <= eps_converge * max(abs(trace[-2]), 1e-12):
                converged = True
                break

    warning = None
    if not converged:
        objective, digital, selection, combiners, weights, multiplier, rates = best
        if warn_on_max:
            warning = f"no convergence within {max_iters} iterations; best iterate returned"

    if frozen is None and converged:
        reduced = _rank_pruned_selection(digital, selection)
        if reduced is not None:
            # Re-split the budget over the surviving streams at the current
            # combiners and weights; for exactly parallel columns this keeps
            # each user's transmit covariance (hence the rates) unchanged, so
            # the objective rises by the saved hardware power.
            r_mult, r_sel, r_digital = bisection_solve(
                metrics,
                evd,
                p_max,
                beta,
                mu,
                model,
                m_t,
                rf_limit,
                eps_power=eps_power,
                frozen=reduced,
            )
            # The stale weights only ask for each survivor's old power share;
            # spend the freed budget by scaling the survivors back up.
            spent = transmit_power(r_digital, r_sel)
            if 0.0 < spent < p_max * (1.0 - 1e-12):
                r_digital = r_digital * np.sqrt(p_max / spent)
            r_rates = achievable_rate(channels, r_digital, r_sel, noise_w)
            r_objective = network_objective(
                r_rates, hardware_power(r_sel, model, m_t), beta
            )
            if r_objective >= objective - 1e-9 * max(1.0, abs(objective)):
                multiplier, selection, digital = r_mult, r_sel, r_digital
                rates, objective = r_rates, r_objective
                trace.append(r_objective)

    state = WmmseState(
        digital=digital,
        combiners=combiners,
        weights=weights,
        selection=selection,
        multiplier=multiplier,
    )
    return SolveResult(
        state=state,
        rates=rates,
        objective_trace=np.asarray(trace),
        converged=converged,
        n_iters=n_iters,
        warning=warning,
    )


def phase_split(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split radius-2 disk values into two unit-modulus phasors.

    For ``v = a exp(i theta)`` with ``a <= 2`` returns
    ``exp(i (arccos(a / 2) + theta))`` and ``exp(-i (arccos(a / 2) - theta))``,
    whose sum reproduces ``v`` exactly.
    """
    v = np.asarray(values, dtype=complex)
    a = np.abs(v)
    if np.any(a > 2.0 + 1e-9):
        raise ValueError("modulus exceeds the reach of two unit phasors")
    half = np.arccos(np.clip(a / 2.0, -1.0, 1.0))
    theta = np.angle(v)
    return np.exp(1j * (half + theta)), np.exp(-1j * (half - theta))


def hybrid_factorize(
    digital: np.ndarray,
    n_cols: int,
    selection: StreamSelection | None = None,
) -> FactorizationResult:
    """Exact two-stage factorization of a rank-limited digital precoder.

    Writes the stacked per-user precoder (zero columns for disabled
    streams) as ``analog @ baseband`` where the analog stage has
    ``n_cols`` columns, each entry a sum of two unit-modulus phasors.
    Orthonormalize the active columns, re-express the basis through a
    second triangular factorization, then rescale every basis column so
    its largest modulus is exactly 2 and push the inverse scaling into
    the baseband - the reconstruction is exact up to round-off.
    """
    digital = np.asarray(digital)
    n_users, m_t, m_r = digital.shape
    if n_cols < 1:
        raise ValueError("need at least one analog column")
    if n_cols > m_t:
        raise ValueError("analog stage cannot exceed the antenna count")
    wbar = np.concatenate(list(digital), axis=1)
    if selection is not None:
        active = np.flatnonzero(selection.flags.ravel())
    else:
        active = np.flatnonzero(np.abs(wbar).sum(axis=0) > 0.0)
    if active.size == 0:
        raise ValueError("factorization needs at least one active stream")
    if active.size > n_cols:
        raise ValueError(
            f"{active.size} active streams do not fit {n_cols} analog columns"
        )

    padded = np.concatenate([wbar[:, active], np.eye(m_t, dtype=complex)], axis=1)
    q_full, r_full = np.linalg.qr(padded, mode="reduced")
    v1 = q_full[:, :n_cols]
    w1 = np.zeros((n_cols, wbar.shape[1]), dtype=complex)
    w1[:, active] = r_full[:n_cols, : active.size]

    q2, r2 = np.linalg.qr(v1, mode="reduced")
    scale = np.max(np.abs(q2), axis=0) / 2.0
    if np.any(scale <= 0.0):
        raise ValueError("degenerate analog column in factorization")
    analog = q2 / scale[None, :]
    baseband_flat = (scale[:, None] * r2.conj().T) @ w1
    layer_a, layer_b = phase_split(analog)

    baseband = np.stack(
        [baseband_flat[:, k * m_r : (k + 1) * m_r] for k in range(n_users)]
    )
    beamformer = HybridBeamformer(
        analog=analog, layer_a=layer_a, layer_b=layer_b, baseband=baseband
    )
    norm = np.linalg.norm(wbar)
    residual = float(np.linalg.norm(analog @ baseband_flat - wbar) / max(norm, 1e-300))
    return FactorizationResult(beamformer=beamformer, residual=residual, column_scale=scale)
