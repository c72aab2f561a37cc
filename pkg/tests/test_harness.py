import numpy as np
import pytest

from cc_miso.channel import sample_channel
from cc_miso.cli import main
from cc_miso.combinatorics import SystemConfig
from cc_miso.harness import (
    SweepResult,
    SweepRow,
    SweepSpec,
    db_to_linear,
    emit_csv,
    emit_plot,
    estimate_dof,
    find_crossover,
    read_sweep_csv,
    run_sweep,
)
from cc_miso.rates import symrate_complex, symrate_finite

EXAMPLE = SystemConfig(K=3, L=2, N=3, M=1)


def _result_from_table(table):
    """table: {scheme: [(snr_db, mean)]} -> synthetic SweepResult."""
    rows = [
        SweepRow(snr_db=x, scheme=s, mean_rsym=m, stderr=0.0, trials=1)
        for s, pairs in table.items()
        for x, m in pairs
    ]
    return SweepResult(rows=rows, meta={})


class TestRunSweep:
    def test_single_trial_matches_direct_calls(self):
        spec = SweepSpec(cfg=EXAMPLE, snr_db=(20.0,), trials=1, base_seed=77, schemes=(2, 3))
        result = run_sweep(spec)
        cm = sample_channel(EXAMPLE, 77)  # seed rule: base_seed + trial
        cfg = SystemConfig(K=3, L=2, N=3, M=1, snr=db_to_linear(20.0))
        want2 = symrate_complex(cm, cfg).rsym
        want3 = symrate_finite(cm, cfg).rsym
        assert len(result.rows) == 2
        assert abs(result.mean(2, 20.0) - want2) < 1e-12
        assert abs(result.mean(3, 20.0) - want3) < 1e-12
        assert all(r.stderr == 0.0 for r in result.rows)

    def test_deterministic(self):
        spec = SweepSpec(cfg=EXAMPLE, snr_db=(10.0, 20.0), trials=3, base_seed=5, schemes=(1, 3))
        a, b = run_sweep(spec), run_sweep(spec)
        assert a.rows == b.rows
        assert a.meta == b.meta

    def test_row_count_and_order(self):
        spec = SweepSpec(cfg=EXAMPLE, snr_db=(10.0, 20.0, 30.0), trials=2, schemes=(2, 3))
        result = run_sweep(spec)
        assert len(result.rows) == 6
        assert [(r.snr_db, r.scheme) for r in result.rows] == [
            (10.0, 2), (10.0, 3), (20.0, 2), (20.0, 3), (30.0, 2), (30.0, 3)
        ]

    def test_spec_validation(self):
        with pytest.raises(ValueError, match="trials"):
            SweepSpec(cfg=EXAMPLE, snr_db=(10.0,), trials=0)
        with pytest.raises(ValueError, match="sorted"):
            SweepSpec(cfg=EXAMPLE, snr_db=(20.0, 10.0), trials=1)
        with pytest.raises(ValueError, match="schemes"):
            SweepSpec(cfg=EXAMPLE, snr_db=(10.0,), trials=1, schemes=(7,))
        with pytest.raises(ValueError, match="solver"):
            SweepSpec(cfg=EXAMPLE, snr_db=(10.0,), trials=1, solver="exact")


class TestFindCrossover:
    def test_interpolated_sign_change(self):
        result = _result_from_table({
            1: [(10.0, 5.0), (20.0, 1.0)],
            3: [(10.0, 3.0), (20.0, 3.0)],
        })
        # diff: +2 at 10, -2 at 20 -> crossover at 15
        assert abs(find_crossover(result, 1, 3) - 15.0) < 1e-12

    def test_none_when_separated(self):
        result = _result_from_table({
            1: [(10.0, 5.0), (20.0, 4.0)],
            3: [(10.0, 3.0), (20.0, 3.5)],
        })
        assert find_crossover(result, 1, 3) is None

    def test_scheme_against_itself_is_none(self):
        result = _result_from_table({1: [(10.0, 5.0), (20.0, 4.0)]})
        assert find_crossover(result, 1, 1) is None

    def test_zero_run_skipped(self):
        result = _result_from_table({
            1: [(10.0, 2.0), (15.0, 3.0), (20.0, 4.0)],
            3: [(10.0, 1.0), (15.0, 3.0), (20.0, 5.0)],
        })
        # diff: +1, 0, -1 -> crossover interpolated between 10 and 20
        assert abs(find_crossover(result, 1, 3) - 15.0) < 1e-12

    def test_missing_scheme(self):
        result = _result_from_table({1: [(10.0, 5.0)]})
        with pytest.raises(ValueError, match="not present"):
            find_crossover(result, 1, 2)


class TestEstimateDof:
    def test_scheme2_smoke(self):
        est = estimate_dof(EXAMPLE, 2, trials=10, base_seed=3)
        assert abs(est - 1.5) < 0.15

    def test_scheme1_grid_smoke(self):
        est = estimate_dof(EXAMPLE, 1, trials=5, base_seed=3, grid_resolution=2e-2)
        assert abs(est - 1.0) < 0.1

    def test_window_invariance(self):
        a = estimate_dof(EXAMPLE, 3, snr_lo_db=50, snr_hi_db=70, trials=10, base_seed=1)
        b = estimate_dof(EXAMPLE, 3, snr_lo_db=70, snr_hi_db=90, trials=10, base_seed=1)
        assert abs(a - b) <= 0.1 * 1.5

    def test_bad_window(self):
        with pytest.raises(ValueError):
            estimate_dof(EXAMPLE, 2, snr_lo_db=80, snr_hi_db=60, trials=1)


class TestCsvRoundTrip:
    def test_round_trip_identical(self, tmp_path):
        spec = SweepSpec(cfg=EXAMPLE, snr_db=(10.0, 20.0), trials=2, base_seed=9, schemes=(2, 3))
        result = run_sweep(spec)
        path = tmp_path / "out.csv"
        emit_csv(result, path)
        back = read_sweep_csv(path)
        assert back.rows == result.rows
        assert back.meta["solver"] == "sdr"
        assert int(back.meta["trials"]) == 2

    def test_two_row_layout(self, tmp_path):
        result = _result_from_table({2: [(10.0, 1.5)], 3: [(10.0, 2.5)]})
        result.meta = {"solver": "sdr", "base_seed": 0}
        path = tmp_path / "two.csv"
        emit_csv(result, path)
        lines = [l for l in path.read_text().splitlines() if l and not l.startswith("#")]
        assert len(lines) == 3  # header + 2 data rows
        assert lines[0] == "snr_db,scheme,mean_rsym_bits,stderr,trials,solver,seed"

    def test_empty_result_refused(self, tmp_path):
        with pytest.raises(ValueError, match="empty"):
            emit_csv(SweepResult(rows=[], meta={}), tmp_path / "x.csv")


def test_emit_plot_svg(tmp_path):
    spec = SweepSpec(cfg=EXAMPLE, snr_db=(10.0, 20.0), trials=2, schemes=(2, 3))
    result = run_sweep(spec)
    path = tmp_path / "rates.svg"
    emit_plot(result, path)
    head = path.read_text()[:500]
    assert "<svg" in head


class TestCli:
    def test_sweep_writes_outputs(self, tmp_path, capsys):
        csv_path = tmp_path / "s.csv"
        svg_path = tmp_path / "s.svg"
        rc = main([
            "sweep", "--K", "3", "--L", "2", "--N", "3", "--M", "1",
            "--snr-db", "10:10:30", "--trials", "2", "--schemes", "2,3",
            "--seed", "1", "--csv", str(csv_path), "--plot", str(svg_path),
        ])
        out = capsys.readouterr().out
        assert rc == 0
        assert csv_path.exists() and svg_path.exists()
        assert "crossover scheme 2 vs 3" in out
        parsed = read_sweep_csv(csv_path)
        assert len(parsed.rows) == 6

    @pytest.mark.parametrize("algorithm", ["complex", "finite"])
    def test_verify_passes(self, tmp_path, capsys, algorithm):
        dump = tmp_path / "t.txt"
        rc = main([
            "verify", "--K", "4", "--L", "2", "--N", "4", "--M", "1",
            "--seed", "7", "--algorithm", algorithm, "--dump", str(dump),
        ])
        out = capsys.readouterr().out
        assert rc == 0
        assert "PASS" in out
        assert dump.exists()

    def test_dof_command(self, capsys):
        rc = main([
            "dof", "--scheme", "2", "--K", "3", "--L", "2", "--N", "3", "--M", "1",
            "--trials", "5",
        ])
        out = capsys.readouterr().out
        assert rc == 0
        assert "estimated DoF" in out and "3/2" in out

    def test_bad_config_exit_code(self, capsys):
        rc = main([
            "dof", "--scheme", "1", "--K", "3", "--L", "2", "--N", "3", "--M", "2",
            "--trials", "1",
        ])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_fractional_m_parses(self, capsys):
        rc = main([
            "dof", "--scheme", "1", "--K", "4", "--L", "2", "--N", "6", "--M", "3/2",
            "--trials", "2",
        ])
        assert rc == 0
