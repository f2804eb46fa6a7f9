"""Spec-file parsing, exit codes, and the full CSV-to-figures pipeline."""

import subprocess
import sys
from pathlib import Path

import pytest

from nfplots import cli
from nfplots.tables import SchemaError

GOOD_SPEC = """\
# the standard set
fig4 = edof.csv

fig7 = pmax_a.csv, pmax_b.csv  # two schemes
"""


class TestSpecParsing:
    def test_inputs_resolve_against_in_dir(self):
        specs = cli.parse_figure_spec(GOOD_SPEC, "data", "figures")
        assert [s.figure for s in specs] == [4, 7]
        assert specs[0].inputs == (str(Path("data") / "edof.csv"),)
        assert specs[1].inputs == (
            str(Path("data") / "pmax_a.csv"),
            str(Path("data") / "pmax_b.csv"),
        )
        assert specs[1].output == str(Path("figures") / "fig7")

    def test_line_without_equals(self):
        with pytest.raises(SchemaError, match="line 2: expected"):
            cli.parse_figure_spec("# ok\nfig4 edof.csv\n", ".", ".")

    def test_unknown_key(self):
        with pytest.raises(SchemaError, match="unknown key 'figure4'"):
            cli.parse_figure_spec("figure4 = edof.csv\n", ".", ".")

    def test_unknown_figure_id(self):
        with pytest.raises(SchemaError, match="line 1: unknown figure id 3"):
            cli.parse_figure_spec("fig3 = edof.csv\n", ".", ".")

    def test_duplicate_key(self):
        text = "fig4 = a.csv\nfig5 = b.csv\nfig4 = c.csv\n"
        with pytest.raises(SchemaError, match="line 3: duplicate key 'fig4'"):
            cli.parse_figure_spec(text, ".", ".")

    def test_missing_inputs(self):
        with pytest.raises(SchemaError, match="no input CSVs for fig4"):
            cli.parse_figure_spec("fig4 =\n", ".", ".")

    def test_comment_only_file(self):
        with pytest.raises(SchemaError, match="names no figures"):
            cli.parse_figure_spec("# nothing here\n\n", ".", ".")


class TestMainExitCodes:
    def run_main(self, tmp_path, spec_text, capsys):
        spec = tmp_path / "figs.cfg"
        spec.write_text(spec_text, encoding="utf-8")
        code = cli.main([
            "--spec", str(spec), "--in", str(tmp_path), "--out", str(tmp_path),
        ])
        out, err = capsys.readouterr()
        return code, out, err

    def test_missing_spec_file(self, tmp_path, capsys):
        code = cli.main(["--spec", str(tmp_path / "nope.cfg")])
        _, err = capsys.readouterr()
        assert code == cli.EXIT_USAGE
        assert "spec file not found" in err

    def test_schema_error_is_usage_error(self, tmp_path, capsys):
        (tmp_path / "edof.csv").write_text(
            "distance_m,edof_near\n2.0,3.0\n", encoding="utf-8"
        )
        code, _, err = self.run_main(tmp_path, "fig4 = edof.csv\n", capsys)
        assert code == cli.EXIT_USAGE
        assert err.startswith("error:")

    def test_empty_table_skips_and_flags(self, tmp_path, capsys):
        (tmp_path / "edof.csv").write_text(
            "distance_m,edof_near,edof_far,dof_analytic\n", encoding="utf-8"
        )
        code, out, err = self.run_main(tmp_path, "fig4 = edof.csv\n", capsys)
        assert code == cli.EXIT_SKIPPED
        assert out == ""
        assert "warning:" in err and "skipped 1 figure(s): fig4" in err

    def test_renders_and_lists_outputs(self, tmp_path, capsys):
        (tmp_path / "edof.csv").write_text(
            "distance_m,edof_near,edof_far,dof_analytic\n"
            "2.0,3.5,1.0,4.0\n8.0,1.5,1.0,1.2\n",
            encoding="utf-8",
        )
        code, out, err = self.run_main(tmp_path, "fig4 = edof.csv\n", capsys)
        assert code == cli.EXIT_OK and err == ""
        listed = out.splitlines()
        assert sorted(Path(p).name for p in listed) == ["fig4.png", "fig4.svg"]
        for path in listed:
            assert Path(path).stat().st_size > 0


SMALL_CFG = """\
mt_v = 4
mt_h = 4
mr_v = 1
mr_h = 2
k_users = 2
l_scatterers = 2
rf_chains = 4
trials = 2
seed = 7
"""

FIGS_CFG = """\
fig4 = edof.csv
fig5 = dist.csv
fig6 = trace.csv
fig7 = pmax_wmmse-ts.csv, pmax_pli.csv, pmax_fixed.csv
fig8 = beta_p15.csv, beta_p20.csv
fig9 = bits.csv, continuous.csv
"""


def run_harness(data_dir, *args):
    """Run one ``nfbeam`` command; a solver advisory (exit 1) is fine here."""
    proc = subprocess.run(
        [sys.executable, "-m", "nfbeam", *args],
        cwd=data_dir, capture_output=True, text=True,
    )
    assert proc.returncode in (0, 1), proc.stderr
    return proc


@pytest.fixture(scope="module")
def harness_csvs(tmp_path_factory):
    """Generate the six figures' input CSVs with the experiment CLI."""
    data = tmp_path_factory.mktemp("harness")
    (data / "small.cfg").write_text(SMALL_CFG, encoding="utf-8")
    for p_max in (15, 20):
        (data / f"small_p{p_max}.cfg").write_text(
            SMALL_CFG + f"p_max_dbm = {p_max}\n", encoding="utf-8"
        )

    run_harness(data, "edof", "--config", "small.cfg",
                "--grid", "2,6,12", "--out", "edof.csv")
    run_harness(data, "sweep", "--config", "small.cfg", "--axis", "distance",
                "--grid", "4,8", "--out", "dist.csv")
    run_harness(data, "solve", "--config", "small.cfg", "--solver", "pli",
                "--trace-out", "trace.csv")
    for solver in ("wmmse-ts", "pli", "fixed"):
        run_harness(data, "sweep", "--config", "small.cfg",
                    "--axis", "p_max_dbm", "--grid", "5,15",
                    "--solver", solver, "--out", f"pmax_{solver}.csv")
    for p_max in (15, 20):
        run_harness(data, "sweep", "--config", f"small_p{p_max}.cfg",
                    "--axis", "beta", "--grid", "0.2,0.8",
                    "--out", f"beta_p{p_max}.csv")
    run_harness(data, "sweep", "--config", "small.cfg", "--axis", "bits",
                "--grid", "2,3", "--solver", "pli", "--out", "bits.csv")
    run_harness(data, "solve", "--config", "small.cfg", "--out", "continuous.csv")

    for name in ("edof.csv", "dist.csv", "trace.csv", "pmax_wmmse-ts.csv",
                 "pmax_pli.csv", "pmax_fixed.csv", "beta_p15.csv",
                 "beta_p20.csv", "bits.csv", "continuous.csv"):
        lines = (data / name).read_text(encoding="utf-8").splitlines()
        assert len(lines) >= 2, f"{name} has no data rows"
    (data / "figs.cfg").write_text(FIGS_CFG, encoding="utf-8")
    return data


def run_plots(data, out_dir):
    return subprocess.run(
        [sys.executable, "-m", "nfplots.cli",
         "--spec", str(data / "figs.cfg"), "--in", str(data),
         "--out", str(out_dir), "--deterministic"],
        capture_output=True, text=True,
    )


class TestEndToEnd:
    def test_all_six_figures_render(self, harness_csvs, tmp_path):
        out = tmp_path / "figures"
        proc = run_plots(harness_csvs, out)
        assert proc.returncode == 0, proc.stderr
        listed = proc.stdout.splitlines()
        assert len(listed) == 12
        for n in (4, 5, 6, 7, 8, 9):
            for suffix in (".png", ".svg"):
                path = out / f"fig{n}{suffix}"
                assert path.stat().st_size > 0
                assert str(path) in listed

    def test_deterministic_rerun_is_byte_identical(self, harness_csvs, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        assert run_plots(harness_csvs, first).returncode == 0
        assert run_plots(harness_csvs, second).returncode == 0
        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(p.name for p in second.iterdir())
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name
