"""Typed loading of harness CSVs: result rows, EDoF grids, iteration traces.

The loader is strict on purpose — a figure silently rendered from a
mislabeled column is worse than an error — so headers must match one of
the three known schemas exactly and every cell must parse.
"""

import csv
import re
from dataclasses import dataclass, field


class SchemaError(ValueError):
    """Header or cell content does not match a known harness schema."""


RESULT_HEAD = ["sweep_axis", "sweep_value", "trial", "seed", "sum_rate_bps_hz"]
RESULT_TAIL = [
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

_TEXT_COLUMNS = {"sweep_axis"}
_RATE = re.compile(r"rate_u(\d+)$")


@dataclass
class Table:
    """Columnar view of one CSV: ``schema`` is results/edof/trace."""

    schema: str
    header: list[str]
    columns: dict[str, list] = field(repr=False)

    @property
    def n_rows(self) -> int:
        return len(self.columns[self.header[0]])

    @property
    def empty(self) -> bool:
        return self.n_rows == 0

    def column(self, name: str) -> list:
        if name not in self.columns:
            raise SchemaError(f"missing column {name!r} (have a {self.schema} table)")
        return self.columns[name]


def _classify(header: list[str]) -> str:
    """Match the header to a schema; name the first offending column."""
    if header == EDOF_COLUMNS:
        return "edof"
    if header == TRACE_COLUMNS:
        return "trace"
    expected = list(RESULT_HEAD)
    rates = sum(1 for name in header if _RATE.match(name))
    expected += [f"rate_u{k + 1}" for k in range(rates)] + RESULT_TAIL
    for got, want in zip(header, expected):
        if got != want:
            raise SchemaError(f"unexpected column {got!r} (expected {want!r})")
    if len(header) < len(expected):
        raise SchemaError(f"missing column {expected[len(header)]!r}")
    if len(header) > len(expected):
        raise SchemaError(f"unexpected column {header[len(expected)]!r}")
    if rates == 0:
        raise SchemaError("missing column 'rate_u1'")
    return "results"


def load_results(path: str) -> Table:
    """Parse one harness CSV into typed columns.

    Numeric cells become floats, blanks become None and ``sweep_axis``
    stays text; a header-only file is an empty table, not an error.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: no header row") from None
        schema = _classify(header)
        columns: dict[str, list] = {name: [] for name in header}
        for i, row in enumerate(reader):
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}: row {i + 1} has {len(row)} cells, header has {len(header)}"
                )
            for name, cell in zip(header, row):
                if name in _TEXT_COLUMNS:
                    columns[name].append(cell)
                elif cell == "":
                    columns[name].append(None)
                else:
                    try:
                        columns[name].append(float(cell))
                    except ValueError:
                        raise SchemaError(
                            f"{path}: row {i + 1}, column {name!r}: "
                            f"could not parse {cell!r}"
                        ) from None
    return Table(schema=schema, header=header, columns=columns)


def mean_by(table: Table, key: str, value: str) -> tuple[list[float], list[float]]:
    """Per-group means of ``value`` grouped by ``key``, sorted by key."""
    groups: dict[float, list[float]] = {}
    for k, v in zip(table.column(key), table.column(value)):
        if k is None or v is None:
            continue
        groups.setdefault(float(k), []).append(float(v))
    keys = sorted(groups)
    return keys, [sum(groups[k]) / len(groups[k]) for k in keys]
