"""Figure rendering from synthetic CSVs: outputs, skips, determinism."""

from pathlib import Path

import pytest

from nfplots.figures import FigureSpec, render_figures
from nfplots.tables import SchemaError

RESULT_HEADER = (
    "sweep_axis,sweep_value,trial,seed,sum_rate_bps_hz,rate_u1,rate_u2,"
    "t_s,hpc_w,tx_power_w,objective,iters_inner,iters_outer,penalty_final,wall_ms"
)


def result_csv(tmp_path, name, axis, values):
    rows = [RESULT_HEADER]
    for trial, value in enumerate(values):
        rate = 8.0 + value + 0.5 * trial
        rows.append(
            f"{axis},{value},{trial},{trial},{rate},{rate / 2},{rate / 2},"
            f"3,{4.0 + 0.2 * value},0.03,{0.7 * rate},10,,,"
        )
    path = tmp_path / name
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return str(path)


def edof_csv(tmp_path, name="edof.csv"):
    text = (
        "distance_m,edof_near,edof_far,dof_analytic\n"
        "2.0,3.6,1.0,4.5\n5.0,2.1,1.0,1.8\n10.0,1.4,1.0,1.1\n"
    )
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def trace_csv(tmp_path, name="trace.csv"):
    rows = ["iteration,objective,penalty"]
    for i in range(1, 9):
        rows.append(f"{i},{5.0 + 0.3 * i},{0.5 * 0.5 ** i}")
    path = tmp_path / name
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return str(path)


def render_one(tmp_path, figure, inputs, deterministic=False):
    spec = FigureSpec(figure=figure, inputs=tuple(inputs),
                      output=str(tmp_path / f"fig{figure}"))
    return render_figures([spec], deterministic=deterministic)


class TestRendering:
    def test_fig4_from_edof_grid(self, tmp_path):
        written, skipped = render_one(tmp_path, 4, [edof_csv(tmp_path)])
        assert skipped == []
        assert sorted(Path(p).suffix for p in written) == [".png", ".svg"]
        for path in written:
            assert Path(path).stat().st_size > 0

    def test_fig5_from_distance_sweep(self, tmp_path):
        csv = result_csv(tmp_path, "dist.csv", "distance", [5.0, 5.0, 8.0, 8.0])
        written, skipped = render_one(tmp_path, 5, [csv])
        assert skipped == [] and len(written) == 2

    def test_fig6_from_trace(self, tmp_path):
        written, skipped = render_one(tmp_path, 6, [trace_csv(tmp_path)])
        assert skipped == [] and len(written) == 2

    def test_fig7_multi_scheme(self, tmp_path):
        inputs = [
            result_csv(tmp_path, f"pmax_{name}.csv", "p_max_dbm", [5.0, 15.0])
            for name in ("a", "b", "c")
        ]
        written, skipped = render_one(tmp_path, 7, inputs)
        assert skipped == [] and len(written) == 2

    def test_fig8_beta_tradeoff(self, tmp_path):
        inputs = [
            result_csv(tmp_path, f"beta_p{p}.csv", "beta", [0.1, 0.5, 0.9])
            for p in (15, 20)
        ]
        written, skipped = render_one(tmp_path, 8, inputs)
        assert skipped == [] and len(written) == 2

    def test_fig9_bits_with_reference(self, tmp_path):
        bits = result_csv(tmp_path, "bits.csv", "bits", [1.0, 2.0, 3.0])
        ref = result_csv(tmp_path, "continuous.csv", "", [0.0])
        written, skipped = render_one(tmp_path, 9, [bits, ref])
        assert skipped == [] and len(written) == 2


class TestContracts:
    def test_empty_input_skips_with_warning(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(RESULT_HEADER + "\n", encoding="utf-8")
        with pytest.warns(UserWarning, match="fig5.*skipped"):
            written, skipped = render_one(tmp_path, 5, [str(path)])
        assert written == [] and skipped == [5]

    def test_wrong_table_kind_names_missing_column(self, tmp_path):
        with pytest.raises(SchemaError, match="'distance_m'"):
            render_one(tmp_path, 4, [trace_csv(tmp_path)])

    def test_unknown_figure_id_rejected(self, tmp_path):
        with pytest.raises(SchemaError, match="figure id"):
            FigureSpec(figure=3, inputs=("x.csv",), output="x")

    def test_spec_requires_inputs(self):
        with pytest.raises(SchemaError, match="no input"):
            FigureSpec(figure=4, inputs=(), output="x")

    def test_inputs_never_modified(self, tmp_path):
        csv = edof_csv(tmp_path)
        before = open(csv, "rb").read()
        render_one(tmp_path, 4, [csv])
        assert open(csv, "rb").read() == before


class TestDeterminism:
    def test_rerender_is_byte_identical(self, tmp_path):
        csv = trace_csv(tmp_path)
        first, _ = render_one(tmp_path, 6, [csv], deterministic=True)
        snapshots = {path: open(path, "rb").read() for path in first}
        second, _ = render_one(tmp_path, 6, [csv], deterministic=True)
        assert second == first
        for path in second:
            assert open(path, "rb").read() == snapshots[path]
