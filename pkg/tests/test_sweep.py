import math
from dataclasses import replace

import pytest

from speamp import analytics, sweep
from speamp.config import ProtocolConfig
from speamp.models import ParameterError, SweepSpec


class TestGrid:
    def test_endpoints_and_spacing(self):
        points = sweep.grid(0.05, 0.6, 12)
        assert len(points) == 12
        assert points[0] == 0.05
        assert points[-1] == pytest.approx(0.6)
        assert points[1] == pytest.approx(0.1)

    def test_figure_grid_hits_anchors(self):
        points = sweep.grid(0.0, 1.0, 201)
        assert points[50] == 0.25
        assert points[100] == 0.5

    def test_too_few_steps(self):
        with pytest.raises(ParameterError):
            sweep.grid(0.0, 1.0, 1)


class TestSweepSpec:
    @pytest.mark.parametrize(
        "variable,start,stop,steps",
        [
            ("t1", 0.1, 0.5, 1),
            ("t1", 0.5, 0.1, 5),
            ("t1", 0.0, 0.5, 5),
            ("a2", 0.2, 1.0, 5),
            ("t2", 0.1, 0.5, 5),
        ],
    )
    def test_rejects(self, variable, start, stop, steps):
        with pytest.raises(ParameterError):
            SweepSpec(variable=variable, start=start, stop=stop, steps=steps)

    def test_eta_may_touch_ends(self):
        assert SweepSpec(variable="eta", start=0.0, stop=1.0, steps=3).steps == 3


class TestRunSweep:
    def test_default_t1_sweep(self):
        rows = sweep.run_sweep(SweepSpec("t1", 0.05, 0.45, 9), ProtocolConfig())
        assert len(rows) == 9
        assert list(rows[0]) == list(sweep.SWEEP_COLUMNS)
        assert [r["t1"] for r in rows] == pytest.approx([0.05 * i for i in range(1, 10)])
        gains = [r["gain_sim"] for r in rows]
        assert all(x > y for x, y in zip(gains, gains[1:]))
        for row in rows:
            assert row["gain_sim"] == pytest.approx(row["gain_closed"], abs=1e-10)
            assert row["pt_sim"] == pytest.approx(row["pt_closed"], abs=1e-10)

    def test_eta_sweep(self):
        base = ProtocolConfig(a2=0.3, t1=0.2)
        rows = sweep.run_sweep(SweepSpec("eta", 0.2, 1.0, 3), base)
        assert [r["eta"] for r in rows] == pytest.approx([0.2, 0.6, 1.0])
        assert rows[-1]["eta_out_sim"] == pytest.approx(1.0)
        assert rows[-1]["gain_sim"] == pytest.approx(1.0)

    def test_explicit_t2_is_kept(self):
        rows = sweep.run_sweep(SweepSpec("a2", 0.2, 0.6, 3), ProtocolConfig(t2=0.4))
        assert all(r["t2"] == 0.4 for r in rows)
        for row in rows:
            assert row["p1_sim"] == pytest.approx(row["p1_closed"], abs=1e-12)


class TestValidation:
    def test_single_point(self):
        report = sweep.validate_grid([0.8], [0.3], [0.2])
        assert report.passed
        assert report.points == 1
        assert report.worst.delta <= 1e-10

    def test_small_grid(self):
        report = sweep.validate_grid([0.0, 0.5, 1.0], [0.2, 0.7], [0.05, 0.3, 0.55])
        assert report.passed
        assert report.points == 18

    def test_default_grid(self):
        etas, a2s, t1s = sweep.default_validation_grid()
        assert (len(etas), len(a2s), len(t1s)) == (9, 9, 12)
        report = sweep.validate_grid(etas, a2s, t1s)
        assert report.passed, [str(d) for d in report.offenders[:5]]
        assert report.points == 972

    def test_reports_offenders(self, monkeypatch):
        original = analytics.closed_form_report

        def shifted(*args, **kwargs):
            report = original(*args, **kwargs)
            return replace(report, p1=report.p1 + 1e-3)

        monkeypatch.setattr(analytics, "closed_form_report", shifted)
        report = sweep.validate_grid([0.5, 0.8], [0.3], [0.2])
        assert not report.passed
        assert {d.metric for d in report.offenders} == {"p1"}
        assert report.worst.delta == pytest.approx(1e-3, rel=1e-6)

    def test_none_against_value_is_infinite(self):
        assert sweep._delta(None, None) == 0.0
        assert sweep._delta(None, 0.5) == math.inf

    def test_tolerance_must_be_positive(self):
        with pytest.raises(ParameterError):
            sweep.validate_grid([0.5], [0.3], [0.2], tolerance=0.0)


class TestFigures:
    def test_matched_t2_curves(self):
        rows = sweep.figure_rows(2)
        assert {r["curve"] for r in rows} == {"A", "B", "C", "D", "E", "F", "G"}
        assert len(rows) == 7 * 201
        point = next(r for r in rows if r["curve"] == "D" and r["t1"] == 0.25)
        assert point["t2"] == pytest.approx(0.25)

    def test_threshold_curve(self):
        rows = sweep.figure_rows(3)
        assert list(rows[0]) == ["a2", "threshold"]
        point = next(r for r in rows if r["a2"] == 0.5)
        assert point["threshold"] == pytest.approx(0.5)

    def test_gain_curves_approach_limit(self):
        rows = sweep.figure_rows(4)
        assert len(rows) == 2 * 3 * 201
        first = [r for r in rows if r["panel"] == "a" and r["t1"] == 0.001]
        assert len(first) == 3
        for row in first:
            assert abs(row["gain"] - 1.0 / row["eta"]) <= 0.01

    def test_panel_b_lags_limit_at_low_fidelity(self):
        rows = sweep.figure_rows(4)
        row = next(r for r in rows if r["panel"] == "b" and r["eta"] == 0.3 and r["t1"] == 0.001)
        assert row["gain"] == pytest.approx(0.5994 / 0.18052, rel=1e-9)
        assert 1.0 / 0.3 - row["gain"] == pytest.approx(0.012926, abs=1e-5)
        # the remaining panel b curves are within 0.01 already
        for r in rows:
            if r["panel"] == "b" and r["t1"] == 0.001 and r["eta"] != 0.3:
                assert abs(r["gain"] - 1.0 / r["eta"]) <= 0.01

    def test_probability_columns(self):
        rows = sweep.figure_rows(5)
        assert list(rows[0]) == ["panel", "a2", "eta", "t1", "pt"]

    @pytest.mark.parametrize("n,column", [(4, "gain"), (5, "pt")])
    def test_simulated_columns(self, monkeypatch, n, column):
        monkeypatch.setattr(sweep, "FIGURE_POINTS", 5)
        rows = sweep.figure_rows(n, simulate=True)
        assert len(rows) == 2 * 3 * 5
        for row in rows:
            assert row[f"{column}_sim"] == pytest.approx(row[column], abs=1e-10)

    def test_unknown_figure(self):
        with pytest.raises(ParameterError):
            sweep.figure_rows(6)
