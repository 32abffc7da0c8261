import math
import subprocess
import sys
from pathlib import Path

import pytest

from omnical_plots.render import fit_loglog_slope, render_table
from omnical_plots.tables import SchemaMismatch, interval_span, read_table

FIXTURES = Path(__file__).parent / "fixtures"
SWEEP_METRICS = ("max_event_bias", "ccv", "swap_regret", "dynamic_regret")


def write_sweep(path, rows):
    lines = ["# schema=sweep.v1", "horizon,metric,median,max,median_over_sqrt_t,median_over_t23,undefined"]
    for horizon, metric, median, mx, und in rows:
        med = "" if median is None else repr(median)
        m = "" if mx is None else repr(mx)
        lines.append(f"{horizon},{metric},{med},{m},,,{int(und)}")
    path.write_text("\n".join(lines) + "\n")


class TestTables:
    def test_reads_golden_sweep(self):
        schema, rows = read_table(FIXTURES / "golden_sweep.csv")
        assert schema == "sweep.v1"
        assert {r["metric"] for r in rows} == set(SWEEP_METRICS)

    def test_schema_mismatch_raises(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("# schema=unknown.v9\na,b\n1,2\n")
        with pytest.raises(SchemaMismatch):
            read_table(bad)

    def test_interval_span_forms(self):
        assert interval_span("interval:5-9") == (5, 9)
        assert interval_span("dyadic:3:9-16") == (9, 16)
        assert interval_span("prefix:250") == (1, 250)
        assert interval_span("full") is None
        assert interval_span("feat:1") is None


class TestGoldenSweepRender:
    def test_expected_figure_set(self, tmp_path):
        written = render_table(FIXTURES / "golden_sweep.csv", tmp_path)
        names = {Path(p).name for p in written}
        assert names == {f"trend_{m}.png" for m in SWEEP_METRICS}
        for p in written:
            assert Path(p).stat().st_size > 0

    def test_rerun_is_byte_identical(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        render_table(FIXTURES / "golden_sweep.csv", a)
        render_table(FIXTURES / "golden_sweep.csv", b)
        for pa in sorted(a.iterdir()):
            pb = b / pa.name
            assert pa.read_bytes() == pb.read_bytes()


class TestSlopeAnnotation:
    def test_exact_sqrt_table_slope(self, tmp_path):
        table = tmp_path / "sweep.csv"
        rows = [
            (t, "swap_regret", 3.0 * math.sqrt(t), 3.5 * math.sqrt(t), False)
            for t in (100, 200, 400, 800)
        ]
        write_sweep(table, rows)
        written = render_table(table, tmp_path / "figs")
        (path, slope), = written.items()
        assert Path(path).name == "trend_swap_regret.png"
        assert slope == pytest.approx(0.50, abs=0.01)

    def test_fit_excludes_undefined(self):
        slope = fit_loglog_slope([10, 20, 40], [1.0, None, 4.0])
        assert slope == pytest.approx(1.0, abs=1e-9)


class TestUndefinedMarkers:
    def test_gaps_do_not_crash(self, tmp_path):
        table = tmp_path / "sweep.csv"
        rows = [
            (100, "ccv", 2.0, 2.5, False),
            (200, "ccv", None, None, True),
            (400, "ccv", 4.0, 4.5, False),
            (100, "dynamic_regret", None, None, True),
            (200, "dynamic_regret", None, None, True),
            (400, "dynamic_regret", None, None, True),
        ]
        write_sweep(table, rows)
        written = render_table(table, tmp_path / "figs")
        assert len(written) == 2
        for p in written:
            assert Path(p).stat().st_size > 0


class TestMetricsHeatmap:
    def test_golden_metrics_renders_heatmap(self, tmp_path):
        written = render_table(FIXTURES / "golden_metrics.csv", tmp_path)
        names = {Path(p).name for p in written}
        assert "heatmap_delta_swap_regret.png" in names
        for p in written:
            assert Path(p).stat().st_size > 0


class TestCli:
    def _run(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "omnical_plots.cli", *args],
            capture_output=True,
            text=True,
        )

    def test_render_roundtrip(self, tmp_path):
        r = self._run(
            "render", "--in", str(FIXTURES / "golden_sweep.csv"), "--out", str(tmp_path)
        )
        assert r.returncode == 0, r.stderr
        assert "trend_ccv.png" in r.stdout

    def test_schema_mismatch_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("# schema=nope.v1\nx\n")
        r = self._run("render", "--in", str(bad), "--out", str(tmp_path / "figs"))
        assert r.returncode == 2
        assert "schema mismatch" in r.stderr
