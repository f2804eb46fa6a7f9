"""Figure rendering for near-field beamforming experiment CSVs.

Consumes the harness result/EDoF/trace CSVs purely as files — no imports
from the solver package — and renders the standard figure set as PNG +
SVG pairs, with a determinism mode for byte-identical re-renders.
"""

from .figures import FIGURE_IDS, FigureSpec, render_figures
from .tables import EDOF_COLUMNS, SchemaError, Table, TRACE_COLUMNS, load_results, mean_by

__version__ = "0.1.0"

__all__ = [
    "EDOF_COLUMNS",
    "FIGURE_IDS",
    "FigureSpec",
    "SchemaError",
    "TRACE_COLUMNS",
    "Table",
    "load_results",
    "mean_by",
    "render_figures",
]
