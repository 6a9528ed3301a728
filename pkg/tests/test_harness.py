from dataclasses import replace

import numpy as np
import pytest

from flapsim.errors import ValidationError
from flapsim.harness import (TRACE_COLUMNS, run_scenario, sweep, validate_setup,
                             write_summary_json, write_sweep_csv,
                             write_trace_csv)
from flapsim.model import (GaitSchedule, JointWave, scenario_from_dict,
                           scenario_to_dict)


def col(rows, name):
    return rows[:, TRACE_COLUMNS.index(name)]


def short_scenario(scenario, **patch):
    raw = scenario_to_dict(scenario)
    raw.update(patch)
    return scenario_from_dict(raw)


@pytest.fixture(scope="module")
def tethered_result(robot, gait, scenario):
    return run_scenario(robot, gait, scenario)


def test_statics_mount_carries_weight(robot, scenario):
    """Zero-amplitude gait, zero wind, aero off: mount force is the weight
    vector, constant in time."""
    gait0 = GaitSchedule("sinusoid", 2.0, JointWave(0.0, 0.1, 0.0),
                         JointWave(0.0, 0.0, 0.0)).validate()
    sc = short_scenario(scenario, wind_mps=0.0, aero_model="off",
                        duration_s=0.5, transient_cycles=0,
                        initial={"euler_rad": [0.0, 0.0, 0.0]})
    res = run_scenario(robot, gait0, sc)
    w = robot.total_mass_kg * 9.81
    fz = col(res.rows, "mount_fz_n")
    assert fz == pytest.approx(np.full_like(fz, w), abs=1e-12)
    assert col(res.rows, "mount_fx_n") == pytest.approx(np.zeros_like(fz), abs=1e-12)
    assert col(res.rows, "mount_mx_nm") == pytest.approx(np.zeros_like(fz), abs=1e-12)
    assert col(res.rows, "lift_total_n") == pytest.approx(np.zeros_like(fz))


def test_trace_row_count_and_monotone_time(tethered_result, scenario):
    n_expected = int(round(scenario.duration_s / scenario.dt_s)) // scenario.output_decimation
    assert tethered_result.rows.shape[0] == n_expected
    t = col(tethered_result.rows, "t_s")
    assert np.all(np.diff(t) > 0)


def test_flap_phase_wraps(tethered_result):
    phase = col(tethered_result.rows, "flap_phase")
    assert np.all((phase >= 0.0) & (phase < 1.0))


def test_periodic_steady_state(tethered_result, gait, scenario):
    """After the transient, the lift trace repeats with the flap period
    (autocorrelation peak at a one-period shift)."""
    rows = tethered_result.rows
    t = col(rows, "t_s")
    lift = col(rows, "lift_total_n")
    period = gait.period_s
    sel = lift[t > scenario.transient_cycles * period]
    lag = int(round(period / (scenario.dt_s * scenario.output_decimation)))
    a = sel[:-lag] - sel[:-lag].mean()
    b = sel[lag:] - sel[lag:].mean()
    corr = float(a @ b / np.sqrt((a @ a) * (b @ b)))
    assert corr > 0.999
    # and the shifted trace nearly overlays itself
    assert np.max(np.abs(sel[:-lag] - sel[lag:])) < 0.02 * np.max(np.abs(sel))


def test_tethered_force_balance(tethered_result, robot):
    """Cycle-mean mount vertical force = weight - cycle-mean lift."""
    stats = tethered_result.summary["cycle_stats"]
    weight = robot.total_mass_kg * 9.81
    assert stats["mean_mount_force_n"][2] == pytest.approx(
        weight - stats["mean_lift_n"], abs=2e-5)


def test_determinism_bitwise(robot, gait, scenario, tmp_path):
    sc = short_scenario(scenario, duration_s=1.0)
    r1 = run_scenario(robot, gait, sc)
    r2 = run_scenario(robot, gait, sc)
    assert np.array_equal(r1.rows, r2.rows, equal_nan=True)
    p1 = write_trace_csv(tmp_path / "a.csv", r1)
    p2 = write_trace_csv(tmp_path / "b.csv", r2)
    assert p1.read_bytes() == p2.read_bytes()
    s1 = write_summary_json(tmp_path / "a.json", r1.summary)
    s2 = write_summary_json(tmp_path / "b.json", r2.summary)
    assert s1.read_bytes() == s2.read_bytes()


def test_free_mode_mount_columns_are_nan(robot, gait, scenario):
    sc = short_scenario(scenario, mode="free_flight", duration_s=0.05,
                        transient_cycles=0)
    res = run_scenario(robot, gait, sc)
    assert np.all(np.isnan(col(res.rows, "mount_fz_n")))
    assert np.all(np.isfinite(col(res.rows, "lambda_s_nm")))


def test_guard_mode_runs_and_stabilizes(robot, gait, scenario):
    sc = short_scenario(scenario, mode="guard_stabilized", duration_s=1.0,
                        wind_mps=0.5, transient_cycles=0,
                        initial={"euler_rad": [0.15, -0.1, 0.0]})
    res = run_scenario(robot, gait, sc)
    roll = col(res.rows, "roll_rad")
    assert abs(roll[-1]) < abs(roll[0])
    assert np.all(np.abs(col(res.rows, "pitch_rad")) < 0.5)


def test_validate_setup_rejects_hover_unsteady(robot, gait, scenario):
    sc = short_scenario(scenario, wind_mps=0.0)
    with pytest.raises(ValidationError):
        validate_setup(robot, gait, sc)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def sweep_result(robot, gait, scenario):
    sc = replace(scenario, duration_s=3.0)
    return sweep(robot, gait, sc)


def test_sweep_grid_order_and_monotone_lift(sweep_result, scenario):
    winds = [p["wind_mps"] for p in sweep_result.points]
    assert winds == list(scenario.sweep_wind_mps)
    lifts = [p["lift_unsteady_n"] for p in sweep_result.points]
    assert all(a < b for a, b in zip(lifts, lifts[1:]))
    assert all(p["status"] == "ok" for p in sweep_result.points)


def test_sweep_model_variants_differ(sweep_result):
    for p in sweep_result.points:
        gap = abs(p["lift_unsteady_n"] - p["lift_quasisteady_n"])
        scale = max(abs(p["lift_unsteady_n"]), abs(p["lift_quasisteady_n"]))
        assert gap / scale > 0.01


def test_single_point_sweep_matches_run(robot, gait, scenario):
    sc = short_scenario(scenario, duration_s=3.0,
                        sweep={"wind_mps": [1.0], "frequency_hz": [2.0]})
    sw = sweep(robot, gait, sc)
    assert len(sw.points) == 1
    run = run_scenario(robot, gait, replace(sc, aero_model="unsteady"))
    assert sw.points[0]["lift_unsteady_n"] == pytest.approx(
        run.summary["cycle_stats"]["mean_lift_n"])


def test_sweep_permutation_permutes_rows(robot, gait, scenario):
    sc1 = short_scenario(scenario, duration_s=2.5, transient_cycles=2,
                         sweep={"wind_mps": [0.5, 1.5], "frequency_hz": [2.0]})
    sc2 = short_scenario(scenario, duration_s=2.5, transient_cycles=2,
                         sweep={"wind_mps": [1.5, 0.5], "frequency_hz": [2.0]})
    s1 = sweep(robot, gait, sc1)
    s2 = sweep(robot, gait, sc2)
    assert s1.points[0] == s2.points[1]
    assert s1.points[1] == s2.points[0]


def test_sweep_point_failure_recorded(robot, gait, scenario):
    """A sub-floor wind point fails (unsteady) but the sweep continues."""
    sc = short_scenario(scenario, duration_s=2.0, transient_cycles=1,
                        sweep={"wind_mps": [0.05, 1.0], "frequency_hz": [2.0]})
    sw = sweep(robot, gait, sc)
    assert sw.points[0]["status"] == "failed"
    assert "freestream" in sw.points[0]["error"]
    assert sw.points[1]["status"] == "ok"


def test_parallel_sweep_matches_serial(robot, gait, scenario):
    """Grid points own their state; worker count cannot change the results."""
    sc = short_scenario(scenario, duration_s=2.0, transient_cycles=1,
                        sweep={"wind_mps": [0.5, 1.5], "frequency_hz": [2.0]})
    serial = sweep(robot, gait, sc, jobs=1)
    parallel = sweep(robot, gait, sc, jobs=2)
    assert parallel.points == serial.points


def test_empty_sweep_rejected(robot, gait, scenario):
    sc = short_scenario(scenario, sweep={"wind_mps": [], "frequency_hz": []})
    with pytest.raises(ValidationError):
        sweep(robot, gait, sc)


def test_sweep_csv_writer(sweep_result, tmp_path):
    path = write_sweep_csv(tmp_path / "sweep.csv", sweep_result)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("wind_mps,frequency_hz,")
    assert len(lines) == 1 + len(sweep_result.points)
