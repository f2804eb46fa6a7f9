"""The standard figure set: one renderer per figure id, batch driver on top.

Figure ids and their content: 4 EDoF vs distance, 5 rate and hardware
power vs distance, 6 solver convergence trace, 7 performance vs power
budget per scheme, 8 the rate/hardware tradeoff over beta, 9 objective
vs phase-shifter resolution against the continuous reference.
"""

import warnings
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .tables import SchemaError, Table, load_results, mean_by

FIGURE_IDS = (4, 5, 6, 7, 8, 9)

_RC = {
    "figure.figsize": (7.0, 4.5),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "font.size": 10,
}


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render: id, input CSVs, output path without suffix."""

    figure: int
    inputs: tuple[str, ...]
    output: str

    def __post_init__(self):
        if self.figure not in FIGURE_IDS:
            raise SchemaError(f"unknown figure id {self.figure}")
        if not self.inputs:
            raise SchemaError(f"fig{self.figure}: no input CSVs")


def _fig4(tables, labels):
    (table,) = tables[:1]
    fig, ax = plt.subplots()
    ax.plot(table.column("distance_m"), table.column("edof_near"), "o-",
            label="spherical model")
    ax.plot(table.column("distance_m"), table.column("edof_far"), "s--",
            label="planar model")
    ax.set_xlabel("BS-user distance (m)")
    ax.set_ylabel("effective DoF")
    ax.legend()
    return fig


def _fig5(tables, labels):
    (table,) = tables[:1]
    x, rate = mean_by(table, "sweep_value", "sum_rate_bps_hz")
    _, hpc = mean_by(table, "sweep_value", "hpc_w")
    fig, ax = plt.subplots()
    ax.plot(x, rate, "o-", color="tab:blue", label="sum rate")
    ax.set_xlabel("BS-user distance (m)")
    ax.set_ylabel("sum rate (bit/s/Hz)", color="tab:blue")
    twin = ax.twinx()
    twin.plot(x, hpc, "s--", color="tab:red", label="hardware power")
    twin.set_ylabel("hardware power (W)", color="tab:red")
    twin.grid(False)
    return fig


def _fig6(tables, labels):
    (table,) = tables[:1]
    iters = table.column("iteration")
    fig, ax = plt.subplots()
    ax.plot(iters, table.column("objective"), "-", color="tab:blue")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective", color="tab:blue")
    pen = [(i, p) for i, p in zip(iters, table.column("penalty")) if p is not None]
    if pen:
        twin = ax.twinx()
        twin.semilogy([i for i, _ in pen], [p for _, p in pen], "--",
                      color="tab:red")
        twin.set_ylabel("digital/hybrid mismatch", color="tab:red")
        twin.grid(False)
    return fig


def _fig7(tables, labels):
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7.0, 8.0))
    rows = [("objective", "objective"),
            ("sum_rate_bps_hz", "sum rate (bit/s/Hz)"),
            ("hpc_w", "hardware power (W)")]
    for ax, (column, name) in zip(axes, rows):
        for table, label in zip(tables, labels):
            x, y = mean_by(table, "sweep_value", column)
            ax.plot(x, y, "o-", label=label)
        ax.set_ylabel(name)
    axes[-1].set_xlabel("transmit power budget (dBm)")
    axes[0].legend()
    return fig


def _fig8(tables, labels):
    fig, (left, right) = plt.subplots(1, 2, figsize=(10.0, 4.5))
    twin = left.twinx()
    for table, label in zip(tables, labels):
        beta, rate = mean_by(table, "sweep_value", "sum_rate_bps_hz")
        _, hpc = mean_by(table, "sweep_value", "hpc_w")
        line, = left.plot(beta, rate, "o-", label=label)
        twin.plot(beta, hpc, "s--", color=line.get_color())
        order = sorted(range(len(beta)), key=lambda i: hpc[i])
        right.plot([hpc[i] for i in order], [rate[i] for i in order], "o-",
                   label=label)
    left.set_xlabel("rate weight beta")
    left.set_ylabel("sum rate (bit/s/Hz), solid")
    twin.set_ylabel("hardware power (W), dashed")
    twin.grid(False)
    left.legend()
    right.set_xlabel("hardware power (W)")
    right.set_ylabel("sum rate (bit/s/Hz)")
    right.legend()
    fig.tight_layout()
    return fig


def _fig9(tables, labels):
    fig, ax = plt.subplots()
    x, y = mean_by(tables[0], "sweep_value", "objective")
    ax.plot(x, y, "o-", label="discrete shifters")
    if len(tables) > 1:
        ref = tables[1].column("objective")
        vals = [v for v in ref if v is not None]
        if vals:
            ax.axhline(sum(vals) / len(vals), linestyle="--", color="tab:red",
                       label="continuous shifters")
    ax.set_xlabel("phase-shifter resolution (bits)")
    ax.set_ylabel("objective")
    ax.legend()
    return fig


_RENDERERS = {4: _fig4, 5: _fig5, 6: _fig6, 7: _fig7, 8: _fig8, 9: _fig9}


def _save(fig, base: str, deterministic: bool) -> list[str]:
    png_meta = {"Software": None} if deterministic else None
    svg_meta = {"Date": None} if deterministic else None
    paths = []
    for suffix, meta in ((".png", png_meta), (".svg", svg_meta)):
        path = base + suffix
        fig.savefig(path, metadata=meta)
        paths.append(path)
    return paths


def render_figures(specs, deterministic: bool = False) -> tuple[list[str], list[int]]:
    """Render each spec to a PNG + SVG pair; skip figures with empty inputs.

    Returns the written paths and the skipped figure ids.  With
    ``deterministic`` set, styling is pinned and volatile metadata
    (timestamps, tool versions, randomized SVG ids) is stripped so a
    re-render is byte-identical.
    """
    rc = dict(_RC)
    if deterministic:
        rc["svg.hashsalt"] = "nfplots"
    written: list[str] = []
    skipped: list[int] = []
    with matplotlib.rc_context(rc):
        for spec in specs:
            tables = [load_results(path) for path in spec.inputs]
            empty = [p for t, p in zip(tables, spec.inputs) if t.empty]
            if empty:
                warnings.warn(f"fig{spec.figure}: empty table {empty[0]}; skipped")
                skipped.append(spec.figure)
                continue
            labels = [Path(path).stem for path in spec.inputs]
            fig = _RENDERERS[spec.figure](tables, labels)
            try:
                written.extend(_save(fig, spec.output, deterministic))
            finally:
                plt.close(fig)
    return written, skipped
