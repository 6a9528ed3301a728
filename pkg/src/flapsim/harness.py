"""Scenario execution: tethered load-cell emulation, free flight,
guard-stabilized flight, parameter sweeps, and trace recording.

Traces are CSV with a fixed column order (see TRACE_COLUMNS and the README);
summaries are JSON.  Floats are written with Python's shortest round-trip
representation, so identical configs produce byte-identical outputs.
"""

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .control import CascadeState, VelocitySetpoint, cascade, mix, allocation_matrix
from .dynamics import Simulator
from .errors import FlapsimError, MixerError, SimulationError, ValidationError
from .kinematics import thruster_generalized_force, GeneralizedState
from .model import GaitSchedule

log = logging.getLogger("flapsim.harness")

TRACE_COLUMNS = (
    "t_s",
    "px_m", "py_m", "pz_m", "roll_rad", "pitch_rad", "yaw_rad", "qs_rad", "qe_rad",
    "vx_mps", "vy_mps", "vz_mps",
    "droll_radps", "dpitch_radps", "dyaw_radps", "dqs_radps", "dqe_radps",
    "lift_left_n", "drag_left_n", "lift_right_n", "drag_right_n",
    "lift_total_n", "drag_total_n",
    "mount_fx_n", "mount_fy_n", "mount_fz_n",
    "mount_mx_nm", "mount_my_nm", "mount_mz_nm",
    "lambda_s_nm", "lambda_e_nm",
    "flap_phase",
)

SWEEP_COLUMNS = (
    "wind_mps", "frequency_hz",
    "lift_unsteady_n", "drag_unsteady_n",
    "lift_quasisteady_n", "drag_quasisteady_n",
    "status", "error",
)


@dataclass(eq=False)
class ScenarioResult:
    columns: tuple
    rows: np.ndarray          # (n_rows, n_columns)
    summary: dict


@dataclass(eq=False)
class SweepResult:
    columns: tuple
    points: list              # one dict per grid point, grid order


def validate_setup(model, gait, scenario):
    """Cross-config checks that need more than one file."""
    if scenario.aero_model == "unsteady":
        if scenario.mode == "tethered":
            airspeed = float(np.linalg.norm(scenario.wind_mps))
        else:
            airspeed = float(np.linalg.norm(
                scenario.wind_mps - scenario.initial.velocity_mps))
        if airspeed < model.min_freestream_mps:
            raise ValidationError(
                "wind_mps",
                f"freestream {airspeed:.3g} m/s is below the "
                f"{model.min_freestream_mps:.3g} m/s floor required by the "
                "unsteady wake model (use aero_model=quasi_steady for hover)",
            )
    if scenario.mode == "guard_stabilized":
        if len(model.thrusters) < 4:
            raise MixerError(
                f"guard mode needs at least 4 thrusters, model has {len(model.thrusters)}")
        A = allocation_matrix(model)
        if np.linalg.matrix_rank(A[1:, :], tol=1e-12) < 2:
            raise MixerError("thruster layout spans no roll/pitch moment space")
    n_cycles = scenario.duration_s * gait.frequency_hz
    if n_cycles < scenario.transient_cycles + 1:
        log.warning(
            "duration %.3g s covers only %.2f flap cycles; cycle averages "
            "will be empty", scenario.duration_s, n_cycles)


def _wind_axes(wind):
    """(downstream, lift) unit vectors of the wind-axes decomposition."""
    norm = float(np.linalg.norm(wind))
    down = wind / norm if norm > 1e-12 else np.array([-1.0, 0.0, 0.0])
    zhat = np.array([0.0, 0.0, 1.0])
    lift = zhat - (zhat @ down) * down
    ln = float(np.linalg.norm(lift))
    lift = lift / ln if ln > 1e-9 else zhat
    return down, lift


def _emit_row(sim, full, u_t, gait, wind):
    diag = sim.diagnostics(full, u_t)
    forces = diag["forces"]
    left = diag["elements_y"] >= 0.0
    down, liftdir = _wind_axes(wind)
    f_left = forces[left].sum(axis=0)
    f_right = forces[~left].sum(axis=0)
    f_tot = f_left + f_right
    phase = (full.t * gait.frequency_hz) % 1.0
    row = [full.t]
    row.extend(full.q.tolist())
    row.extend(full.qd.tolist())
    row.extend([
        float(f_left @ liftdir), float(f_left @ down),
        float(f_right @ liftdir), float(f_right @ down),
        float(f_tot @ liftdir), float(f_tot @ down),
    ])
    row.extend(diag["mount_force"].tolist())
    row.extend(diag["mount_torque"].tolist())
    row.extend(diag["lambda"].tolist())
    row.append(phase)
    return row


def _cycle_stats(rows, columns, gait, scenario):
    """Trapezoid means over whole flap cycles after the transient skip."""
    t = rows[:, 0]
    period = gait.period_s
    total_cycles = math.floor(scenario.duration_s / period + 1e-9)
    first = scenario.transient_cycles
    last = total_cycles
    if scenario.average_cycles is not None:
        last = min(last, first + scenario.average_cycles)
    if last <= first:
        return None
    t0, t1 = first * period, last * period
    mask = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
    if int(mask.sum()) < 4:
        return None
    sel = rows[mask]
    ts = sel[:, 0]
    idx = {name: k for k, name in enumerate(columns)}

    def mean(name):
        vals = sel[:, idx[name]]
        if np.any(~np.isfinite(vals)):
            return None
        return float(np.trapezoid(vals, ts) / (ts[-1] - ts[0]))

    stats = {
        "cycles_averaged": last - first,
        "window_s": [t0, t1],
        "mean_lift_n": mean("lift_total_n"),
        "mean_drag_n": mean("drag_total_n"),
        "mean_lift_left_n": mean("lift_left_n"),
        "mean_lift_right_n": mean("lift_right_n"),
        "mean_mount_force_n": [mean("mount_fx_n"), mean("mount_fy_n"), mean("mount_fz_n")],
        "mean_mount_torque_nm": [mean("mount_mx_nm"), mean("mount_my_nm"), mean("mount_mz_nm")],
        "max_abs_lambda_nm": float(np.max(np.abs(sel[:, idx["lambda_s_nm"]:idx["lambda_e_nm"] + 1]))),
    }
    return stats


def run_scenario(model, gait, scenario, check_residuals=False):
    """Integrate one scenario and return its trace and summary.

    Deterministic given the configs and seed: repeated runs produce
    identical rows bit for bit.
    """
    validate_setup(model, gait, scenario)
    tethered = scenario.mode == "tethered"
    clamp_pose = None
    if tethered:
        clamp_pose = np.concatenate([scenario.initial.position_m,
                                     scenario.initial.euler_rad])
    sim = Simulator(model, gait, scenario.wind_mps,
                    aero_model=scenario.aero_model,
                    clamp_body=tethered, clamp_pose=clamp_pose,
                    check_residuals=check_residuals)
    full = sim.initial_state(scenario.initial)

    guard = scenario.mode == "guard_stabilized"
    ctl_state = CascadeState()
    setpoint = VelocitySetpoint()
    u_t = np.zeros(8)

    dt = scenario.dt_s
    n_steps = int(round(scenario.duration_s / dt))
    dec = scenario.output_decimation
    rows = []
    for k in range(1, n_steps + 1):
        if guard:
            command, ctl_state = cascade(
                scenario.gains, full.q, full.qd, setpoint, dt, ctl_state)
            mix_out = mix((command.tau_x_nm, command.tau_y_nm),
                          command.collective_n, model)
            u_t = thruster_generalized_force(
                model, GeneralizedState(full.q, full.qd), mix_out.thrusts)
        full = sim.step(full, dt, u_t=u_t)
        if k % dec == 0:
            rows.append(_emit_row(sim, full, u_t, gait, scenario.wind_mps))

    rows = np.asarray(rows, dtype=float)
    stats = _cycle_stats(rows, TRACE_COLUMNS, gait, scenario) if rows.size else None
    summary = {
        "mode": scenario.mode,
        "aero_model": scenario.aero_model,
        "wind_mps": scenario.wind_mps.tolist(),
        "flap_frequency_hz": gait.frequency_hz,
        "duration_s": scenario.duration_s,
        "dt_s": dt,
        "output_decimation": dec,
        "n_steps": n_steps,
        "n_rows": int(rows.shape[0]) if rows.size else 0,
        "seed": scenario.seed,
        "robot": {
            "name": model.name,
            "total_mass_kg": model.total_mass_kg,
            "span_m": model.span_m,
            "n_elements": model.n_elements,
        },
        "cycle_stats": stats,
        "constraint_residual_max": sim.max_constraint_residual,
        "collocation_residual_max": sim.max_collocation_residual,
        "final": {
            "t_s": full.t,
            "position_m": full.q[0:3].tolist(),
            "euler_rad": full.q[3:6].tolist(),
        },
    }
    return ScenarioResult(columns=TRACE_COLUMNS, rows=rows, summary=summary)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _sweep_point(args):
    model, gait, scenario, wind, freq = args
    gait_pt = GaitSchedule(waveform=gait.waveform, frequency_hz=freq,
                           shoulder=gait.shoulder, elbow=gait.elbow).validate()
    point = {
        "wind_mps": wind, "frequency_hz": freq,
        "lift_unsteady_n": float("nan"), "drag_unsteady_n": float("nan"),
        "lift_quasisteady_n": float("nan"), "drag_quasisteady_n": float("nan"),
        "status": "ok", "error": "",
    }
    for variant, tag in (("unsteady", "unsteady"), ("quasi_steady", "quasisteady")):
        sc = replace(scenario, wind_mps=np.array([-wind, 0.0, 0.0]),
                     aero_model=variant)
        try:
            result = run_scenario(model, gait_pt, sc)
            stats = result.summary["cycle_stats"]
            if stats is None:
                raise SimulationError("no full flap cycles to average")
            point[f"lift_{tag}_n"] = stats["mean_lift_n"]
            point[f"drag_{tag}_n"] = stats["mean_drag_n"]
        except FlapsimError as exc:
            point["status"] = "failed"
            point["error"] = f"{variant}: {exc}"
            log.warning("sweep point wind=%.3g f=%.3g failed: %s", wind, freq, exc)
    return point


def sweep(model, gait, scenario, jobs=1):
    """Run both aero-model variants over the scenario's sweep grid.

    Points run independently (optionally in parallel); results keep grid
    order (wind outer, frequency inner).  Per-point failures are recorded
    and the sweep continues.
    """
    winds = scenario.sweep_wind_mps
    freqs = scenario.sweep_frequency_hz or (gait.frequency_hz,)
    if not winds:
        raise ValidationError("sweep.wind_mps", "sweep grid is empty")
    tasks = [(model, gait, scenario, w, f) for w in winds for f in freqs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_sweep_point, tasks))
    else:
        points = [_sweep_point(t) for t in tasks]
    return SweepResult(columns=SWEEP_COLUMNS, points=points)


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def _fmt(value):
    if isinstance(value, str):
        return value
    return repr(float(value))


def write_trace_csv(path, result):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(result.columns) + "\n")
        for row in result.rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_summary_json(path, summary):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
    return path


def write_sweep_csv(path, sweep_result):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(sweep_result.columns) + "\n")
        for point in sweep_result.points:
            f.write(",".join(_fmt(point[c]) for c in sweep_result.columns) + "\n")
    return path
