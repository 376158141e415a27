import numpy as np
import pytest

from stacontrol.dynamics import Trajectory
from stacontrol.errors import InvalidParameterError
from stacontrol.experiments import (
    DEFAULT_KAPPA_GRID,
    ScanSpec,
    completion_time,
    decay_run,
    delay_scan_grid,
    fig2_grid,
    run_decay_scan,
    run_delay_scan,
    run_detuning_scan,
    run_fig2_scenario,
    run_fig4_transfer,
)


class TestCompletionTime:
    def make_traj(self, p2):
        times = np.linspace(0.0, 1.0, len(p2))
        pops = np.column_stack([1 - np.asarray(p2), np.zeros(len(p2)), p2])
        return Trajectory(times, pops, pops[-1])

    def test_threshold_crossed(self):
        traj = self.make_traj([0.0, 0.5, 0.991, 0.999])
        assert completion_time(traj) == pytest.approx(2.0 / 3.0)

    def test_never_crossed(self):
        assert completion_time(self.make_traj([0.0, 0.3, 0.6])) is None

    def test_measured_from_grid_start(self):
        traj = self.make_traj([0.0, 0.995])
        shifted = Trajectory(traj.times - 10.0, traj.populations,
                             traj.final_state)
        assert completion_time(shifted) == completion_time(traj)


class TestFig2:
    def test_grid_is_padded_default(self):
        grid = fig2_grid(2.0)
        assert grid.t_start == pytest.approx(-2.5)
        assert grid.t_end == pytest.approx(7.5)

    def test_scenario_nu2(self):
        sc = run_fig2_scenario(2.0)
        # transitionless transfer is essentially perfect even at the fast rate
        assert sc.tqd.final_populations[2] > 0.9999
        # the plain adiabatic run is visibly imperfect at nu = 2
        assert sc.adiabatic.final_populations[2] < 0.9
        # coupling traces are normalized
        g = sc.coupling_traces
        np.testing.assert_allclose((g**2).sum(axis=1), 1.0, rtol=1e-12)
        assert sc.tqd_completion_time is not None

    def test_completion_time_scales_inversely_with_nu(self):
        t_slow = run_fig2_scenario(0.5).tqd_completion_time
        t_fast = run_fig2_scenario(2.0).tqd_completion_time
        assert t_slow / t_fast == pytest.approx(4.0, rel=1e-2)


class TestFig4:
    def test_default_transfer(self):
        res = run_fig4_transfer()
        assert res.final_p2 > 0.99
        assert res.max_phonon < 0.05
        assert res.detuning_ratio > 5

    def test_low_ratio_warns(self):
        with pytest.warns(UserWarning, match="detuning ratio"):
            run_fig4_transfer(delta=2.0)


class TestDetuningScan:
    def test_monotone_decreasing(self):
        result = run_detuning_scan([20.0, 40.0, 80.0], n_points=801)
        phonon = result.metric_values
        assert np.all(np.diff(phonon) < 0)
        assert np.all(result.convergence_deltas < 1e-6)
        assert result.meta["slope_vs_delta"] == pytest.approx(-1.0, abs=0.15)

    def test_single_point_has_no_fit(self):
        result = run_detuning_scan([40.0], n_points=401)
        assert "slope_vs_delta" not in result.meta
        assert len(result.rows) == 1


class TestDelayScan:
    def test_baseline_matches_unshifted(self):
        result = run_delay_scan([0.0], "G1", n_points=1201)
        grid = delay_scan_grid(2.0, n_points=1201)
        direct = run_fig4_transfer(grid=grid)
        assert result.metric_values[0] == pytest.approx(direct.final_p2, abs=1e-10)

    def test_simultaneous_shift_is_translation(self):
        result = run_delay_scan([0.0, 0.4], "both", n_points=1201)
        f0, f1 = result.metric_values
        assert abs(f1 - f0) < 1e-8

    def test_single_pulse_shift_degrades(self):
        result = run_delay_scan([0.0, 0.5], "G1", n_points=1201)
        f0, f1 = result.metric_values
        assert f1 < f0

    def test_deterministic_and_worker_invariant(self):
        a = run_delay_scan([0.0, 0.2], "G2", n_points=801)
        b = run_delay_scan([0.0, 0.2], "G2", n_points=801, workers=2)
        np.testing.assert_array_equal(a.metric_values, b.metric_values)
        assert a.provenance["config_hash"] == b.provenance["config_hash"]

    def test_window_validated(self):
        with pytest.raises(InvalidParameterError):
            run_delay_scan([3.0], "G1", nu=2.0)


class TestDecayScan:
    def test_default_kappa_grid(self):
        assert DEFAULT_KAPPA_GRID[0] == 0.0
        assert np.all(np.diff(DEFAULT_KAPPA_GRID) > 0)

    def test_bad_protocol(self):
        with pytest.raises(InvalidParameterError):
            decay_run(0.0, "mystery", 2.0)

    @pytest.mark.filterwarnings("ignore::stacontrol.dynamics.TruncationWarning")
    def test_tqd_beats_adiabatic(self):
        kappas = [0.0, 0.05]
        tqd = run_decay_scan(kappas, "tqd", n_points=201)
        adiab = run_decay_scan(kappas, "adiabatic", n_points=201)
        assert np.all(tqd.metric_values > adiab.metric_values)
        assert np.all(np.diff(tqd.metric_values) < 0)
        assert np.all(np.diff(adiab.metric_values) < 0)


class TestScanSpec:
    def test_unknown_parameter(self):
        with pytest.raises(InvalidParameterError):
            ScanSpec("mystery", (1.0,), "final-p2")

    def test_unknown_metric(self):
        with pytest.raises(InvalidParameterError):
            ScanSpec("decay-kappa", (1.0,), "mystery")

    def test_empty_values(self):
        with pytest.raises(InvalidParameterError):
            ScanSpec("decay-kappa", (), "fidelity-F")

    def test_non_finite_values(self):
        with pytest.raises(InvalidParameterError):
            ScanSpec("decay-kappa", (0.0, np.inf), "fidelity-F")

    def test_values_coerced_to_float(self):
        spec = ScanSpec("decay-kappa", (0, 1), "fidelity-F")
        assert spec.values == (0.0, 1.0)
