"""Monte-Carlo experiment drivers: scenario sampling, trials, sweeps, CSV I/O.

Every trial is fully determined by ``(config, seed)``; sweep trials derive
their seeds as ``seed XOR trial_index`` so that different sweep points
reuse common random scenarios.  Results are written as one CSV row per
trial with a fixed column set regardless of solver (penalty-specific
columns stay empty for the continuous solver), floats in shortest
round-trip form.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import (
    Placement,
    Scatterer,
    Scenario,
    UpaConfig,
    User,
    assemble_channel,
    analytic_dof,
    edof,
)
from .config import ExperimentConfig
from .metrics import (
    StreamSelection,
    achievable_rate,
    hardware_power,
    network_objective,
    transmit_power,
)
from .pli import pli_solve
from .wmmse_ts import hybrid_factorize, wmmse_ts_solve

SOLVERS = ("wmmse-ts", "pli", "fixed")
SWEEP_AXES = ("p_max_dbm", "beta", "mu", "bits", "distance")

RESULT_COLUMNS_FIXED = [
    "sweep_axis",
    "sweep_value",
    "trial",
    "seed",
    "sum_rate_bps_hz",
]
RESULT_COLUMNS_TAIL = [
    "t_s",
    "hpc_w",
    "tx_power_w",
    "objective",
    "iters_inner",
    "iters_outer",
    "penalty_final",
    "wall_ms",
]

EDOF_COLUMNS = ["distance_m", "edof_near", "edof_far", "dof_analytic"]
TRACE_COLUMNS = ["iteration", "objective", "penalty"]


@dataclass
class TrialRecord:
    """One solved scenario, ready for a CSV row."""

    sweep_axis: str | None
    sweep_value: float | None
    trial: int
    seed: int
    rates: np.ndarray
    t_s: int
    hpc_w: float
    tx_power_w: float
    objective: float
    iters_inner: int
    iters_outer: int | None
    penalty_final: float | None
    wall_ms: float
    warning: str | None = None
    objective_trace: np.ndarray | None = None
    penalty_trace: np.ndarray | None = None

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rates))


def result_columns(k_users: int) -> list[str]:
    rates = [f"rate_u{k + 1}" for k in range(k_users)]
    return RESULT_COLUMNS_FIXED + rates + RESULT_COLUMNS_TAIL


def sample_scenario(config: ExperimentConfig, seed: int) -> Scenario:
    """Draw one scenario; the draw order below is part of the contract.

    Users first (range, azimuth, elevation per user), then scatterers
    (range, azimuth, elevation, phase per scatterer).  User ranges are
    uniform on the ring, azimuths uniform on [-pi/2, pi/2], elevations
    uniform on [pi/4, 3 pi/4]; scatterer ranges are uniform on
    (0, scatter_radius].
    """
    rng = np.random.default_rng(seed)
    lam = 299792458.0 / config.carrier_hz
    spacing = lam / 2.0
    bs = UpaConfig(config.mt_v, config.mt_h, spacing)
    user_upa = UpaConfig(config.mr_v, config.mr_h, spacing)

    users = []
    for _ in range(config.k_users):
        r = rng.uniform(config.ring_inner_m, config.ring_inner_m + config.ring_width_m)
        az = rng.uniform(-np.pi / 2.0, np.pi / 2.0)
        el = rng.uniform(np.pi / 4.0, 3.0 * np.pi / 4.0)
        gain = lam / (4.0 * np.pi * r)
        users.append(User(upa=user_upa, placement=Placement(r, az, el), gain=complex(gain)))

    scatterers = []
    for _ in range(config.l_scatterers):
        r = config.scatter_radius_m * (1.0 - rng.random())
        az = rng.uniform(-np.pi / 2.0, np.pi / 2.0)
        el = rng.uniform(np.pi / 4.0, 3.0 * np.pi / 4.0)
        phase = rng.uniform(-np.pi, np.pi)
        scatterers.append(
            Scatterer(placement=Placement(r, az, el), gain=complex(np.exp(1j * phase)))
        )

    return Scenario(
        bs=bs,
        users=users,
        scatterers=scatterers,
        carrier_hz=config.carrier_hz,
        noise_w=config.noise_w,
    )


def _apply_axis(config: ExperimentConfig, axis: str | None, value: float | None) -> ExperimentConfig:
    if axis is None:
        return config
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    if axis == "distance":
        return config.replace(ring_inner_m=float(value), ring_width_m=0.0)
    if axis == "bits":
        return config.replace(bits=int(value))
    return config.replace(**{axis: float(value)})


def run_trial(
    config: ExperimentConfig,
    seed: int,
    solver: str = "wmmse-ts",
    mode: str = "near",
    trial: int = 0,
    sweep_axis: str | None = None,
    sweep_value: float | None = None,
    fixed_streams: int | None = None,
) -> TrialRecord:
    """Sample, solve and measure one scenario end to end."""
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")
    cfg = _apply_axis(config, sweep_axis, sweep_value)
    scenario = sample_scenario(cfg, seed)
    with warnings.catch_warnings():
        warnings.simplefilter("once")
        channels = assemble_channel(scenario, mode)

    model = cfg.power_model
    start = time.perf_counter()
    penalty_final = None
    iters_outer = None
    penalty_trace = None
    if solver == "pli":
        res = pli_solve(
            channels,
            cfg.p_max_w,
            cfg.noise_w,
            model,
            bits=cfg.bits,
            beta=cfg.beta,
            mu=cfg.mu,
            rf_limit=cfg.rf_chains,
            rho0=cfg.rho0,
            shrink=cfg.shrink,
            eps_converge=cfg.eps3,
            eps_power=cfg.eps1,
            eps_penalty=cfg.eps4,
        )
        selection = res.state.selection
        rates = res.rates
        effective = res.beamformer.effective_precoders()
        iters_inner = res.n_inner_total
        iters_outer = res.n_outer
        penalty_final = float(res.penalty_trace[-1])
        penalty_trace = res.penalty_trace
        trace = res.objective_trace
        warning = res.warning
    else:
        frozen = None
        if solver == "fixed":
            per_user = cfg.m_r if fixed_streams is None else int(fixed_streams)
            if not 0 <= per_user <= cfg.m_r:
                raise ValueError("fixed_streams must lie in 0..mr_v*mr_h")
            flags = np.zeros((cfg.k_users, cfg.m_r), dtype=int)
            flags[:, :per_user] = 1
            frozen = StreamSelection(flags)
        res = wmmse_ts_solve(
            channels,
            cfg.p_max_w,
            cfg.noise_w,
            model,
            beta=cfg.beta,
            mu=cfg.mu,
            rf_limit=cfg.rf_chains,
            eps_converge=cfg.eps2,
            eps_power=cfg.eps1,
            frozen=frozen,
        )
        selection = res.state.selection
        if selection.active_count > 0:
            fact = hybrid_factorize(res.state.digital, selection.active_count, selection)
            effective = fact.beamformer.effective_precoders()
            rates = achievable_rate(channels, effective, selection, cfg.noise_w)
        else:
            effective = np.zeros_like(res.state.digital)
            rates = np.zeros(cfg.k_users)
        iters_inner = res.n_iters
        trace = res.objective_trace
        warning = res.warning
    wall_ms = (time.perf_counter() - start) * 1e3

    hpc = hardware_power(selection, model, cfg.m_t)
    record = TrialRecord(
        sweep_axis=sweep_axis,
        sweep_value=sweep_value,
        trial=trial,
        seed=seed,
        rates=np.asarray(rates, dtype=float),
        t_s=selection.active_count,
        hpc_w=hpc,
        tx_power_w=transmit_power(effective, selection),
        objective=network_objective(rates, hpc, cfg.beta),
        iters_inner=iters_inner,
        iters_outer=iters_outer,
        penalty_final=penalty_final,
        wall_ms=wall_ms,
        warning=warning,
        objective_trace=trace,
        penalty_trace=penalty_trace,
    )
    return record


def run_sweep(
    config: ExperimentConfig,
    axis: str,
    grid,
    solver: str = "wmmse-ts",
    mode: str = "near",
    fixed_streams: int | None = None,
) -> tuple[list[TrialRecord], list[dict]]:
    """All trials of a sweep plus per-point mean/std aggregates."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    records: list[TrialRecord] = []
    aggregates: list[dict] = []
    for value in grid:
        point: list[TrialRecord] = []
        for trial in range(config.trials):
            seed = config.seed ^ trial
            point.append(
                run_trial(
                    config,
                    seed,
                    solver=solver,
                    mode=mode,
                    trial=trial,
                    sweep_axis=axis,
                    sweep_value=float(value),
                    fixed_streams=fixed_streams,
                )
            )
        records.extend(point)
        sums = np.asarray([r.sum_rate for r in point])
        aggregates.append(
            {
                "sweep_axis": axis,
                "sweep_value": float(value),
                "mean_sum_rate": float(sums.mean()),
                "std_sum_rate": float(sums.std(ddof=1)) if len(point) > 1 else 0.0,
                "mean_hpc_w": float(np.mean([r.hpc_w for r in point])),
                "mean_objective": float(np.mean([r.objective for r in point])),
                "mean_t_s": float(np.mean([r.t_s for r in point])),
            }
        )
    return records, aggregates


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_results(
    records: list[TrialRecord],
    path: str,
    k_users: int,
    include_timing: bool = False,
) -> None:
    """Write trial rows to CSV (UTF-8, LF, shortest round-trip floats).

    ``wall_ms`` is only populated when ``include_timing`` is set, so that
    identical ``(config, seed)`` runs produce byte-identical files by
    default.
    """
    columns = result_columns(k_users)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            if len(rec.rates) != k_users:
                raise ValueError("record user count does not match the header")
            row = [
                rec.sweep_axis or "",
                _fmt(rec.sweep_value),
                _fmt(rec.trial),
                _fmt(rec.seed),
                _fmt(rec.sum_rate),
                *[_fmt(r) for r in rec.rates],
                _fmt(rec.t_s),
                _fmt(rec.hpc_w),
                _fmt(rec.tx_power_w),
                _fmt(rec.objective),
                _fmt(rec.iters_inner),
                _fmt(rec.iters_outer),
                _fmt(rec.penalty_final),
                _fmt(rec.wall_ms) if include_timing else "",
            ]
            writer.writerow(row)


def read_results(path: str) -> list[dict]:
    """Read a results CSV back into typed per-trial dicts."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            row = {}
            for key, value in raw.items():
                if value == "" or value is None:
                    row[key] = None
                elif key in ("trial", "seed", "t_s", "iters_inner", "iters_outer"):
                    row[key] = int(value)
                elif key == "sweep_axis":
                    row[key] = value
                else:
                    row[key] = float(value)
            rows.append(row)
        return rows


def write_trace(record: TrialRecord, path: str) -> None:
    """Per-iteration objective (and penalty, when available) of one trial."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        trace = record.objective_trace if record.objective_trace is not None else []
        pen = record.penalty_trace
        for i, value in enumerate(trace):
            pen_value = ""
            if pen is not None and i < len(pen):
                pen_value = _fmt(float(pen[i]))
            writer.writerow([str(i + 1), _fmt(float(value)), pen_value])


def edof_grid(config: ExperimentConfig, distances) -> list[dict]:
    """Near/far effective DoF and the closed-form DoF over a distance grid.

    Uses a deterministic broadside single-user placement with no
    scatterers, so the grid isolates pure aperture geometry.
    """
    lam = 299792458.0 / config.carrier_hz
    spacing = lam / 2.0
    bs = UpaConfig(config.mt_v, config.mt_h, spacing)
    user_upa = UpaConfig(config.mr_v, config.mr_h, spacing)
    rows = []
    for r in distances:
        placement = Placement(float(r), 0.0, np.pi / 2.0)
        user = User(upa=user_upa, placement=placement, gain=complex(lam / (4.0 * np.pi * r)))
        scenario = Scenario(
            bs=bs, users=[user], scatterers=[], carrier_hz=config.carrier_hz,
            noise_w=config.noise_w,
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            near = assemble_channel(scenario, "near")[0].matrix
            far = assemble_channel(scenario, "far")[0].matrix
        rows.append(
            {
                "distance_m": float(r),
                "edof_near": edof(near),
                "edof_far": edof(far),
                "dof_analytic": analytic_dof(bs, user_upa, float(r), lam, 0),
            }
        )
    return rows


def write_edof(rows: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EDOF_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in EDOF_COLUMNS])


def run_validation(config: ExperimentConfig, seed: int) -> list[tuple[str, bool, str]]:
    """Spot-check the library invariants on one seeded scenario.

    Returns ``(name, passed, detail)`` triples; meant for the ``validate``
    CLI subcommand rather than exhaustive testing.
    """
    from .channel import antenna_positions, array_response, pairwise_distance
    from .wmmse_ts import phase_split

    checks: list[tuple[str, bool, str]] = []
    rng = np.random.default_rng(seed)
    scenario = sample_scenario(config, seed)
    lam = scenario.wavelength_m

    # Closed-form link distance against the coordinate norm.
    worst = 0.0
    d = scenario.bs.spacing_m
    for _ in range(1000):
        r = rng.uniform(1.0, 20.0)
        az = rng.uniform(-np.pi / 2, np.pi / 2)
        el = rng.uniform(np.pi / 4, 3 * np.pi / 4)
        m_t = (rng.integers(0, 8), rng.integers(0, 8))
        m_r = (rng.integers(0, 2), rng.integers(0, 2))
        dv = m_r[0] - m_t[0]
        dh = m_r[1] - m_t[1]
        closed = np.sqrt(
            r * r
            + (dv * d) ** 2
            + (dh * d) ** 2
            + 2 * r * np.sin(az) * np.sin(el) * dv * d
            + 2 * r * np.cos(el) * dh * d
        )
        bs_el = np.array([0.0, m_t[0] * d, m_t[1] * d])
        user_el = Placement(r, az, el).position + np.array([0.0, m_r[0] * d, m_r[1] * d])
        direct = float(np.linalg.norm(user_el - bs_el))
        worst = max(worst, abs(closed - direct) / direct)
    checks.append(("link_distance_closed_form", worst <= 1e-12, f"max rel err {worst:.2e}"))

    # Array response modulus.
    resp = array_response(scenario.bs, scenario.users[0].placement.position, lam)
    err = float(np.max(np.abs(np.abs(resp) - 1.0)))
    checks.append(("array_response_unit_modulus", err <= 1e-12, f"max dev {err:.2e}"))

    # Direct-path-only channel matches the explicit entry formula.
    bare = Scenario(
        bs=scenario.bs, users=scenario.users[:1], scatterers=[],
        carrier_hz=scenario.carrier_hz, noise_w=scenario.noise_w,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        h = assemble_channel(bare, "near")[0].matrix
    user = bare.users[0]
    dist = pairwise_distance(
        antenna_positions(user.upa, user.placement), antenna_positions(bare.bs)
    )
    manual = user.gain * np.exp(-2j * np.pi * user.placement.range_m / lam) * np.exp(
        -2j * np.pi * dist / lam
    )
    err = float(np.max(np.abs(h - manual)) / np.max(np.abs(manual)))
    checks.append(("direct_path_entries", err <= 1e-12, f"max rel err {err:.2e}"))

    # EDoF bounds and far-field rank collapse.
    val = edof(h)
    top = min(h.shape)
    checks.append(("edof_bounds", 1.0 <= val <= top + 1e-9, f"edof {val:.4f}"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        far = assemble_channel(bare, "far")[0].matrix
    s = np.linalg.svd(far, compute_uv=False)
    ratio = float(s[1] / s[0]) if len(s) > 1 else 0.0
    checks.append(("far_field_rank_one", ratio <= 1e-10, f"sigma2/sigma1 {ratio:.2e}"))

    # Phase split identity on a random batch.
    vals = rng.uniform(0, 2, 256) * np.exp(1j * rng.uniform(-np.pi, np.pi, 256))
    p1, p2 = phase_split(vals)
    err = float(np.max(np.abs(p1 + p2 - vals)))
    checks.append(("phase_split_identity", err <= 1e-12, f"max err {err:.2e}"))

    # One solved trial: budget, factorization, objective bookkeeping, trace.
    record = run_trial(config, seed)
    budget_ok = record.tx_power_w <= config.p_max_w + config.eps1
    checks.append(
        ("transmit_power_budget", budget_ok,
         f"tx {record.tx_power_w:.6e} W vs cap {config.p_max_w:.6e} W")
    )
    obj = network_objective(record.rates, record.hpc_w, config.beta)
    err = abs(obj - record.objective)
    checks.append(("objective_bookkeeping", err <= 1e-9, f"abs err {err:.2e}"))
    trace = record.objective_trace
    dips = float(np.min(np.diff(trace))) if trace is not None and len(trace) > 1 else 0.0
    checks.append(("objective_trace_monotone", dips >= -1e-6, f"worst step {dips:.2e}"))
    return checks
