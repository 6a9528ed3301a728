"""Domain types and configuration ingestion.

Robot, gait, and scenario descriptions are loaded from strict-schema JSON
(unknown keys rejected, units spelled out in field names).  Loaded objects
are treated as immutable and may be shared freely across concurrent runs.
"""

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigError, ValidationError

GRAVITY_MPS2 = 9.81
MAX_FLAP_FREQUENCY_HZ = 8.0  # mechanism limit used for default validation

_MIRROR = np.diag([1.0, -1.0, 1.0])  # reflection across the body x-z plane


def _vec3(value, path):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ValidationError(path, f"expected 3 numbers, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(path, "values must be finite")
    return arr


def _mat3(value, path):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3, 3):
        raise ValidationError(path, f"expected a 3x3 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(path, "values must be finite")
    return arr


def _positive(value, path):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ValidationError(path, f"expected a number, got {value!r}") from None
    if not math.isfinite(out) or out <= 0.0:
        raise ValidationError(path, f"must be a positive finite number, got {out}")
    return out


def _finite(value, path):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ValidationError(path, f"expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ValidationError(path, "must be finite")
    return out


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ValidationError(path, f"expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ValidationError(
            f"{path}.{unknown[0]}" if path else unknown[0],
            f"unknown field (allowed: {', '.join(sorted(allowed))})",
        )


def _require_spd(inertia, path):
    if not np.allclose(inertia, inertia.T, atol=1e-12):
        raise ValidationError(path, "inertia tensor must be symmetric")
    eigvals = np.linalg.eigvalsh(inertia)
    if np.min(eigvals) <= 0.0:
        raise ValidationError(
            path, f"inertia tensor must be positive definite (min eigenvalue {np.min(eigvals):.3g})"
        )


def _unit(vec, path):
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        raise ValidationError(path, "axis must be non-zero")
    return vec / norm


# ---------------------------------------------------------------------------
# robot model
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class WingSegment:
    mass_kg: float
    inertia_kgm2: np.ndarray  # 3x3, segment frame
    com_offset_m: np.ndarray  # from the segment's joint, segment frame


@dataclass(eq=False)
class WingChain:
    shoulder_offset_m: np.ndarray  # body COM -> shoulder joint, body frame
    shoulder_axis: np.ndarray
    elbow_offset_m: np.ndarray     # shoulder -> elbow, proximal frame
    elbow_axis: np.ndarray
    proximal: WingSegment
    distal: WingSegment


@dataclass(eq=False)
class Thruster:
    position_m: np.ndarray  # body frame
    axis: np.ndarray        # body frame, unit
    max_thrust_n: float


class KinParams(NamedTuple):
    """Packed float arrays consumed by the jit kernels."""

    masses: np.ndarray     # (5,)
    inertias: np.ndarray   # (5,3,3) local frames, right side mirrored
    r_sh: np.ndarray       # (2,3) [left, right]
    ax_s: np.ndarray       # (2,3)
    r_el: np.ndarray       # (2,3)
    ax_e: np.ndarray       # (2,3)
    r_pcom: np.ndarray     # (2,3)
    r_dcom: np.ndarray     # (2,3)


class ElementGeometry(NamedTuple):
    """Collocation stations across the full span and their chain placement."""

    theta: np.ndarray    # (m,) in (0, pi), theta_i = i*pi/(m+1)
    y: np.ndarray        # (m,) spanwise station, y = (S/2) cos(theta)
    chord: np.ndarray    # (m,)
    bhalf: np.ndarray    # (m,) half chord
    dy: np.ndarray       # (m,) strip width
    body: np.ndarray     # (m,) int64 owning body index
    local: np.ndarray    # (m,3) offset from the body anchor, body frame


@dataclass(eq=False)
class RobotModel:
    """Morphology, inertia, wing geometry, and aero constants."""

    name: str
    body_mass_kg: float
    body_inertia_kgm2: np.ndarray
    span_m: float
    chord_station_y_m: np.ndarray
    chord_m: np.ndarray
    lift_slope_per_rad: float
    air_density_kgpm3: float
    n_elements: int
    profile_drag_coeff: float
    min_freestream_mps: float
    left_wing: WingChain
    thrusters: tuple
    mount_offset_m: np.ndarray

    @property
    def total_mass_kg(self):
        wing = self.left_wing
        return self.body_mass_kg + 2.0 * (wing.proximal.mass_kg + wing.distal.mass_kg)

    @property
    def half_span_m(self):
        return 0.5 * self.span_m

    @property
    def chord0_m(self):
        return self.chord_at(0.0)

    def chord_at(self, y):
        return np.interp(y, self.chord_station_y_m, self.chord_m)

    @cached_property
    def kin_params(self):
        w = self.left_wing
        inertias = np.empty((5, 3, 3))
        inertias[0] = self.body_inertia_kgm2
        inertias[1] = w.proximal.inertia_kgm2
        inertias[2] = w.distal.inertia_kgm2
        inertias[3] = _MIRROR @ w.proximal.inertia_kgm2 @ _MIRROR
        inertias[4] = _MIRROR @ w.distal.inertia_kgm2 @ _MIRROR
        masses = np.array([
            self.body_mass_kg,
            w.proximal.mass_kg, w.distal.mass_kg,
            w.proximal.mass_kg, w.distal.mass_kg,
        ])

        def pair(v):
            return np.ascontiguousarray(np.stack([v, _MIRROR @ v]))

        return KinParams(
            masses=masses,
            inertias=np.ascontiguousarray(inertias),
            r_sh=pair(w.shoulder_offset_m),
            ax_s=pair(w.shoulder_axis),
            r_el=pair(w.elbow_offset_m),
            ax_e=pair(w.elbow_axis),
            r_pcom=pair(w.proximal.com_offset_m),
            r_dcom=pair(w.distal.com_offset_m),
        )

    @cached_property
    def elements(self):
        """Blade-element stations; see DESIGN notes in the README.

        Stations sit at theta_i = i*pi/(m+1), strictly interior, so the
        spanwise downwash kernel sin(n theta)/sin(theta) stays finite.
        """
        m = self.n_elements
        i = np.arange(1, m + 1, dtype=float)
        theta = i * np.pi / (m + 1)
        half = self.half_span_m
        y = half * np.cos(theta)
        chord = self.chord_at(y)
        dtheta = np.pi / (m + 1)
        dy = self.span_m * np.sin(theta) * np.sin(0.5 * dtheta)

        w = self.left_wing
        y_root = abs(w.shoulder_offset_m[1])
        y_elbow = y_root + abs(w.elbow_offset_m[1])
        body = np.empty(m, dtype=np.int64)
        local = np.empty((m, 3))
        for k in range(m):
            s = abs(y[k])
            left = y[k] >= 0.0
            sgn = 1.0 if left else -1.0
            if s <= y_root:
                body[k] = 0
                local[k] = (w.shoulder_offset_m[0], sgn * s, w.shoulder_offset_m[2])
            elif s <= y_elbow:
                body[k] = 1 if left else 3
                local[k] = (0.0, sgn * (s - y_root), 0.0)
            else:
                body[k] = 2 if left else 4
                local[k] = (0.0, sgn * (s - y_elbow), 0.0)
        return ElementGeometry(
            theta=theta, y=y, chord=chord, bhalf=0.5 * chord, dy=dy,
            body=body, local=np.ascontiguousarray(local),
        )

    @cached_property
    def thruster_arrays(self):
        if not self.thrusters:
            return (np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0))
        pos = np.ascontiguousarray([t.position_m for t in self.thrusters])
        axis = np.ascontiguousarray([t.axis for t in self.thrusters])
        tmax = np.array([t.max_thrust_n for t in self.thrusters])
        return pos, axis, tmax

    def validate(self):
        if self.span_m <= 0.0:
            raise ValidationError("span_m", "wingspan must be positive")
        if self.body_mass_kg <= 0.0:
            raise ValidationError("body_mass_kg", "mass must be positive")
        _require_spd(self.body_inertia_kgm2, "body_inertia_kgm2")
        if self.n_elements < 2:
            raise ValidationError("n_elements", "need at least 2 blade elements")
        if self.lift_slope_per_rad <= 0.0:
            raise ValidationError("lift_slope_per_rad", "lift slope must be positive")
        if self.air_density_kgpm3 <= 0.0:
            raise ValidationError("air_density_kgpm3", "density must be positive")
        if self.profile_drag_coeff < 0.0:
            raise ValidationError("profile_drag_coeff", "drag coefficient cannot be negative")
        if self.min_freestream_mps <= 0.0:
            raise ValidationError("min_freestream_mps", "freestream floor must be positive")

        ys = self.chord_station_y_m
        if ys.ndim != 1 or ys.size < 2:
            raise ValidationError("chord_table.station_y_m", "need at least two stations")
        if np.any(np.diff(ys) <= 0.0):
            raise ValidationError("chord_table.station_y_m", "stations must be strictly increasing")
        if self.chord_m.shape != ys.shape:
            raise ValidationError("chord_table.chord_m", "length must match station_y_m")
        half = self.half_span_m
        if ys[0] > -half or ys[-1] < half:
            raise ValidationError(
                "chord_table.station_y_m",
                f"table must cover the full span [-{half}, {half}]",
            )
        interior = np.linspace(-half, half, 101)[1:-1]
        if np.any(self.chord_at(interior) <= 0.0):
            raise ValidationError("chord_table.chord_m", "chord must be positive on the open span")

        for side_name, seg in (("proximal", self.left_wing.proximal),
                               ("distal", self.left_wing.distal)):
            if seg.mass_kg <= 0.0:
                raise ValidationError(f"left_wing.{side_name}.mass_kg", "mass must be positive")
            _require_spd(seg.inertia_kgm2, f"left_wing.{side_name}.inertia_kgm2")

        y_root = abs(self.left_wing.shoulder_offset_m[1])
        y_elbow = y_root + abs(self.left_wing.elbow_offset_m[1])
        if y_elbow >= half:
            raise ValidationError(
                "left_wing.elbow_offset_m",
                f"elbow at |y|={y_elbow:.4g} m must sit inside the half span {half:.4g} m",
            )
        for t_idx, thr in enumerate(self.thrusters):
            if thr.max_thrust_n <= 0.0:
                raise ValidationError(f"thrusters[{t_idx}].max_thrust_n", "must be positive")
        return self


_SEGMENT_KEYS = {"mass_kg", "inertia_kgm2", "com_offset_m"}
_WING_KEYS = {"shoulder_offset_m", "shoulder_axis", "elbow_offset_m", "elbow_axis",
              "proximal", "distal"}
_THRUSTER_KEYS = {"position_m", "axis", "max_thrust_n"}
_ROBOT_KEYS = {"name", "body_mass_kg", "body_inertia_kgm2", "span_m", "chord_table",
               "lift_slope_per_rad", "air_density_kgpm3", "n_elements",
               "profile_drag_coeff", "min_freestream_mps", "left_wing", "thrusters",
               "mount_offset_m"}


def _segment_from_dict(raw, path):
    _check_keys(raw, _SEGMENT_KEYS, path)
    try:
        inertia = _mat3(raw["inertia_kgm2"], f"{path}.inertia_kgm2")
        return WingSegment(
            mass_kg=_positive(raw["mass_kg"], f"{path}.mass_kg"),
            inertia_kgm2=inertia,
            com_offset_m=_vec3(raw["com_offset_m"], f"{path}.com_offset_m"),
        )
    except KeyError as exc:
        raise ValidationError(f"{path}.{exc.args[0]}", "missing required field") from None


def robot_from_dict(raw):
    _check_keys(raw, _ROBOT_KEYS, "")
    try:
        wing_raw = raw["left_wing"]
        _check_keys(wing_raw, _WING_KEYS, "left_wing")
        chord_raw = raw["chord_table"]
        _check_keys(chord_raw, {"station_y_m", "chord_m"}, "chord_table")
        wing = WingChain(
            shoulder_offset_m=_vec3(wing_raw["shoulder_offset_m"], "left_wing.shoulder_offset_m"),
            shoulder_axis=_unit(_vec3(wing_raw["shoulder_axis"], "left_wing.shoulder_axis"),
                                "left_wing.shoulder_axis"),
            elbow_offset_m=_vec3(wing_raw["elbow_offset_m"], "left_wing.elbow_offset_m"),
            elbow_axis=_unit(_vec3(wing_raw["elbow_axis"], "left_wing.elbow_axis"),
                             "left_wing.elbow_axis"),
            proximal=_segment_from_dict(wing_raw["proximal"], "left_wing.proximal"),
            distal=_segment_from_dict(wing_raw["distal"], "left_wing.distal"),
        )
        thrusters = []
        for idx, t_raw in enumerate(raw.get("thrusters", [])):
            _check_keys(t_raw, _THRUSTER_KEYS, f"thrusters[{idx}]")
            thrusters.append(Thruster(
                position_m=_vec3(t_raw["position_m"], f"thrusters[{idx}].position_m"),
                axis=_unit(_vec3(t_raw["axis"], f"thrusters[{idx}].axis"),
                           f"thrusters[{idx}].axis"),
                max_thrust_n=_positive(t_raw["max_thrust_n"], f"thrusters[{idx}].max_thrust_n"),
            ))
        n_elements = raw["n_elements"]
        if not isinstance(n_elements, int) or isinstance(n_elements, bool):
            raise ValidationError("n_elements", f"expected an integer, got {n_elements!r}")
        model = RobotModel(
            name=str(raw.get("name", "unnamed")),
            body_mass_kg=_finite(raw["body_mass_kg"], "body_mass_kg"),
            body_inertia_kgm2=_mat3(raw["body_inertia_kgm2"], "body_inertia_kgm2"),
            span_m=_finite(raw["span_m"], "span_m"),
            chord_station_y_m=np.asarray(chord_raw["station_y_m"], dtype=float),
            chord_m=np.asarray(chord_raw["chord_m"], dtype=float),
            lift_slope_per_rad=_finite(raw["lift_slope_per_rad"], "lift_slope_per_rad"),
            air_density_kgpm3=_finite(raw["air_density_kgpm3"], "air_density_kgpm3"),
            n_elements=n_elements,
            profile_drag_coeff=_finite(raw.get("profile_drag_coeff", 0.02), "profile_drag_coeff"),
            min_freestream_mps=_finite(raw.get("min_freestream_mps", 0.1), "min_freestream_mps"),
            left_wing=wing,
            thrusters=tuple(thrusters),
            mount_offset_m=_vec3(raw.get("mount_offset_m", (0.0, 0.0, 0.0)), "mount_offset_m"),
        )
    except KeyError as exc:
        raise ValidationError(str(exc.args[0]), "missing required field") from None
    return model.validate()


def robot_to_dict(model):
    w = model.left_wing

    def seg(s):
        return {
            "mass_kg": s.mass_kg,
            "inertia_kgm2": s.inertia_kgm2.tolist(),
            "com_offset_m": s.com_offset_m.tolist(),
        }

    return {
        "name": model.name,
        "body_mass_kg": model.body_mass_kg,
        "body_inertia_kgm2": model.body_inertia_kgm2.tolist(),
        "span_m": model.span_m,
        "chord_table": {
            "station_y_m": model.chord_station_y_m.tolist(),
            "chord_m": model.chord_m.tolist(),
        },
        "lift_slope_per_rad": model.lift_slope_per_rad,
        "air_density_kgpm3": model.air_density_kgpm3,
        "n_elements": model.n_elements,
        "profile_drag_coeff": model.profile_drag_coeff,
        "min_freestream_mps": model.min_freestream_mps,
        "left_wing": {
            "shoulder_offset_m": w.shoulder_offset_m.tolist(),
            "shoulder_axis": w.shoulder_axis.tolist(),
            "elbow_offset_m": w.elbow_offset_m.tolist(),
            "elbow_axis": w.elbow_axis.tolist(),
            "proximal": seg(w.proximal),
            "distal": seg(w.distal),
        },
        "thrusters": [
            {"position_m": t.position_m.tolist(), "axis": t.axis.tolist(),
             "max_thrust_n": t.max_thrust_n}
            for t in model.thrusters
        ],
        "mount_offset_m": model.mount_offset_m.tolist(),
    }


# ---------------------------------------------------------------------------
# gait schedule
# ---------------------------------------------------------------------------

class GaitState(NamedTuple):
    q_s: float
    q_e: float
    qd_s: float
    qd_e: float
    qdd_s: float
    qdd_e: float


@dataclass(eq=False)
class JointWave:
    amplitude_rad: float
    offset_rad: float
    phase_rad: float
    # Fourier representation of the tabulated base waveform over one cycle;
    # empty for the analytic sinusoid.
    coef_cos: np.ndarray = field(default_factory=lambda: np.zeros(0))
    coef_sin: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def eval(self, theta, omega):
        """Position, velocity, acceleration at cycle angle theta (omega = 2 pi f)."""
        if self.coef_cos.size == 0:
            s = math.sin(theta)
            c = math.cos(theta)
            q = self.offset_rad + self.amplitude_rad * s
            qd = self.amplitude_rad * omega * c
            qdd = -self.amplitude_rad * omega * omega * s
            return q, qd, qdd
        j = np.arange(self.coef_cos.size)
        cj = np.cos(j * theta)
        sj = np.sin(j * theta)
        w = float(self.coef_cos @ cj + self.coef_sin @ sj)
        wp = float(-(j * self.coef_cos) @ sj + (j * self.coef_sin) @ cj)
        wpp = float(-(j * j * self.coef_cos) @ cj - (j * j * self.coef_sin) @ sj)
        a = self.amplitude_rad
        return (self.offset_rad + a * w, a * omega * wp, a * omega * omega * wpp)


def _tabulate(samples, path):
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 1 or arr.size < 8:
        raise ValidationError(path, "tabulated waveform needs at least 8 samples over one cycle")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(path, "samples must be finite")
    n = arr.size
    c = np.fft.rfft(arr) / n
    coef_cos = np.zeros(c.size)
    coef_sin = np.zeros(c.size)
    coef_cos[0] = c[0].real
    for j in range(1, c.size):
        scale = 1.0 if (n % 2 == 0 and j == n // 2) else 2.0
        coef_cos[j] = scale * c[j].real
        coef_sin[j] = -scale * c[j].imag
    return coef_cos, coef_sin


@dataclass(eq=False)
class GaitSchedule:
    """Prescribed shoulder/elbow trajectories: q(t) = offset + A*w(2 pi f t + phase)."""

    waveform: str
    frequency_hz: float
    shoulder: JointWave
    elbow: JointWave

    @property
    def period_s(self):
        return 1.0 / self.frequency_hz

    def eval(self, t):
        omega = 2.0 * math.pi * self.frequency_hz
        th_s = omega * t + self.shoulder.phase_rad
        th_e = omega * t + self.elbow.phase_rad
        q_s, qd_s, qdd_s = self.shoulder.eval(th_s, omega)
        q_e, qd_e, qdd_e = self.elbow.eval(th_e, omega)
        return GaitState(q_s, q_e, qd_s, qd_e, qdd_s, qdd_e)

    def y_ks(self, t):
        g = self.eval(t)
        return np.array([g.qdd_s, g.qdd_e])

    def validate(self, max_frequency_hz=MAX_FLAP_FREQUENCY_HZ):
        if self.waveform not in ("sinusoid", "tabulated"):
            raise ValidationError("waveform", f"unknown waveform {self.waveform!r}")
        if self.frequency_hz <= 0.0:
            raise ValidationError("frequency_hz", "flap frequency must be positive")
        if self.frequency_hz > max_frequency_hz:
            raise ValidationError(
                "frequency_hz",
                f"{self.frequency_hz} Hz exceeds the {max_frequency_hz} Hz mechanism limit",
            )
        return self


def gait_eval(gait, t):
    """Joint position/rate/acceleration triple at time t (>= 0)."""
    return gait.eval(t)


_JOINT_KEYS = {"amplitude_rad", "offset_rad", "phase_rad", "samples"}
_GAIT_KEYS = {"waveform", "frequency_hz", "shoulder", "elbow"}


def _joint_from_dict(raw, path, tabulated):
    _check_keys(raw, _JOINT_KEYS, path)
    amp = _finite(raw.get("amplitude_rad", 1.0 if tabulated else 0.0), f"{path}.amplitude_rad")
    offset = _finite(raw.get("offset_rad", 0.0), f"{path}.offset_rad")
    phase = _finite(raw.get("phase_rad", 0.0), f"{path}.phase_rad")
    if tabulated:
        if "samples" not in raw:
            raise ValidationError(f"{path}.samples", "missing required field")
        coef_cos, coef_sin = _tabulate(raw["samples"], f"{path}.samples")
        return JointWave(amp, offset, phase, coef_cos, coef_sin)
    if "samples" in raw:
        raise ValidationError(f"{path}.samples", "samples only allowed for tabulated waveform")
    return JointWave(amp, offset, phase)


def gait_from_dict(raw):
    _check_keys(raw, _GAIT_KEYS, "")
    try:
        waveform = raw["waveform"]
        tabulated = waveform == "tabulated"
        gait = GaitSchedule(
            waveform=waveform,
            frequency_hz=_finite(raw["frequency_hz"], "frequency_hz"),
            shoulder=_joint_from_dict(raw["shoulder"], "shoulder", tabulated),
            elbow=_joint_from_dict(raw["elbow"], "elbow", tabulated),
        )
    except KeyError as exc:
        raise ValidationError(str(exc.args[0]), "missing required field") from None
    return gait.validate()


def gait_to_dict(gait):
    def joint(j):
        out = {
            "amplitude_rad": j.amplitude_rad,
            "offset_rad": j.offset_rad,
            "phase_rad": j.phase_rad,
        }
        return out

    return {
        "waveform": gait.waveform,
        "frequency_hz": gait.frequency_hz,
        "shoulder": joint(gait.shoulder),
        "elbow": joint(gait.elbow),
    }


# ---------------------------------------------------------------------------
# scenario configuration
# ---------------------------------------------------------------------------

MODES = ("tethered", "free_flight", "guard_stabilized")
AERO_MODELS = ("unsteady", "quasi_steady", "off")


@dataclass(eq=False)
class PidGains:
    kp: float
    ki: float
    kd: float
    i_clamp: float
    out_clamp: float

    def validate(self, path):
        for name in ("kp", "ki", "kd"):
            _finite(getattr(self, name), f"{path}.{name}")
        if self.i_clamp <= 0.0:
            raise ValidationError(f"{path}.i_clamp", "integrator clamp must be positive")
        if self.out_clamp <= 0.0:
            raise ValidationError(f"{path}.out_clamp", "output clamp must be positive")
        return self


@dataclass(eq=False)
class ControllerGains:
    roll: PidGains
    pitch: PidGains
    vx: PidGains
    vy: PidGains
    collective_n: float


# Defaults tuned against the linearized attitude/velocity plant; see
# scripts/tune_gains.py for the derivation and achieved margins.
def default_gains():
    return ControllerGains(
        roll=PidGains(kp=0.014, ki=1.4e-3, kd=1.6e-3, i_clamp=0.5, out_clamp=0.05),
        pitch=PidGains(kp=0.014, ki=1.4e-3, kd=1.6e-3, i_clamp=0.5, out_clamp=0.05),
        vx=PidGains(kp=0.18, ki=0.02, kd=0.0, i_clamp=1.0, out_clamp=0.35),
        vy=PidGains(kp=0.18, ki=0.02, kd=0.0, i_clamp=1.0, out_clamp=0.35),
        collective_n=0.3924,  # hover trim for the 40 g default robot
    )


@dataclass(eq=False)
class InitialState:
    position_m: np.ndarray
    euler_rad: np.ndarray
    velocity_mps: np.ndarray
    euler_rates_radps: np.ndarray


def default_initial():
    return InitialState(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))


@dataclass(eq=False)
class ScenarioConfig:
    mode: str
    wind_mps: np.ndarray          # world frame; headwind U is (-U, 0, 0)
    duration_s: float
    dt_s: float
    output_decimation: int
    aero_model: str
    transient_cycles: int
    average_cycles: Optional[int]
    seed: int
    initial: InitialState
    sweep_wind_mps: tuple
    sweep_frequency_hz: tuple
    gains: ControllerGains

    def validate(self):
        if self.mode not in MODES:
            raise ValidationError("mode", f"must be one of {MODES}, got {self.mode!r}")
        if self.aero_model not in AERO_MODELS:
            raise ValidationError("aero_model", f"must be one of {AERO_MODELS}")
        if self.dt_s <= 0.0:
            raise ValidationError("dt_s", "time step must be positive")
        if self.duration_s < self.dt_s:
            raise ValidationError("duration_s", "duration must cover at least one step")
        if not np.all(np.isfinite(self.wind_mps)):
            raise ValidationError("wind_mps", "wind must be finite")
        if self.output_decimation < 1:
            raise ValidationError("output_decimation", "decimation must be >= 1")
        if self.transient_cycles < 0:
            raise ValidationError("transient_cycles", "cannot be negative")
        if self.average_cycles is not None and self.average_cycles < 1:
            raise ValidationError("average_cycles", "must be >= 1 when given")
        if abs(self.initial.euler_rad[1]) >= 0.5 * math.pi:
            raise ValidationError("initial.euler_rad", "initial pitch hits the gimbal guard")
        for name, grid in (("sweep.wind_mps", self.sweep_wind_mps),
                           ("sweep.frequency_hz", self.sweep_frequency_hz)):
            for v in grid:
                _finite(v, name)
        for loop in ("roll", "pitch", "vx", "vy"):
            getattr(self.gains, loop).validate(f"gains.{loop}")
        _finite(self.gains.collective_n, "gains.collective_n")
        return self


_PID_KEYS = {"kp", "ki", "kd", "i_clamp", "out_clamp"}
_GAINS_KEYS = {"roll", "pitch", "vx", "vy", "collective_n"}
_INITIAL_KEYS = {"position_m", "euler_rad", "velocity_mps", "euler_rates_radps"}
_SWEEP_KEYS = {"wind_mps", "frequency_hz"}
_SCENARIO_KEYS = {"mode", "wind_mps", "duration_s", "dt_s", "output_decimation",
                  "aero_model", "transient_cycles", "average_cycles", "seed",
                  "initial", "sweep", "gains"}


def _pid_from_dict(raw, path, default):
    if raw is None:
        return default
    _check_keys(raw, _PID_KEYS, path)
    merged = PidGains(
        kp=_finite(raw.get("kp", default.kp), f"{path}.kp"),
        ki=_finite(raw.get("ki", default.ki), f"{path}.ki"),
        kd=_finite(raw.get("kd", default.kd), f"{path}.kd"),
        i_clamp=_finite(raw.get("i_clamp", default.i_clamp), f"{path}.i_clamp"),
        out_clamp=_finite(raw.get("out_clamp", default.out_clamp), f"{path}.out_clamp"),
    )
    return merged


def _wind_from_value(value, path):
    if isinstance(value, (int, float)):
        # scalar = headwind speed along -x by convention
        return np.array([-float(value), 0.0, 0.0])
    return _vec3(value, path)


def scenario_from_dict(raw):
    _check_keys(raw, _SCENARIO_KEYS, "")
    defaults = default_gains()
    gains_raw = raw.get("gains") or {}
    if gains_raw:
        _check_keys(gains_raw, _GAINS_KEYS, "gains")
    gains = ControllerGains(
        roll=_pid_from_dict(gains_raw.get("roll"), "gains.roll", defaults.roll),
        pitch=_pid_from_dict(gains_raw.get("pitch"), "gains.pitch", defaults.pitch),
        vx=_pid_from_dict(gains_raw.get("vx"), "gains.vx", defaults.vx),
        vy=_pid_from_dict(gains_raw.get("vy"), "gains.vy", defaults.vy),
        collective_n=_finite(gains_raw.get("collective_n", defaults.collective_n),
                             "gains.collective_n"),
    )
    init_raw = raw.get("initial") or {}
    if init_raw:
        _check_keys(init_raw, _INITIAL_KEYS, "initial")
    initial = InitialState(
        position_m=_vec3(init_raw.get("position_m", (0, 0, 0)), "initial.position_m"),
        euler_rad=_vec3(init_raw.get("euler_rad", (0, 0, 0)), "initial.euler_rad"),
        velocity_mps=_vec3(init_raw.get("velocity_mps", (0, 0, 0)), "initial.velocity_mps"),
        euler_rates_radps=_vec3(init_raw.get("euler_rates_radps", (0, 0, 0)),
                                "initial.euler_rates_radps"),
    )
    sweep_raw = raw.get("sweep") or {}
    if sweep_raw:
        _check_keys(sweep_raw, _SWEEP_KEYS, "sweep")
    try:
        avg = raw.get("average_cycles")
        scenario = ScenarioConfig(
            mode=raw["mode"],
            wind_mps=_wind_from_value(raw.get("wind_mps", 0.0), "wind_mps"),
            duration_s=_finite(raw["duration_s"], "duration_s"),
            dt_s=_finite(raw["dt_s"], "dt_s"),
            output_decimation=int(raw.get("output_decimation", 1)),
            aero_model=raw.get("aero_model", "unsteady"),
            transient_cycles=int(raw.get("transient_cycles", 3)),
            average_cycles=None if avg is None else int(avg),
            seed=int(raw.get("seed", 0)),
            initial=initial,
            sweep_wind_mps=tuple(float(v) for v in sweep_raw.get("wind_mps", ())),
            sweep_frequency_hz=tuple(float(v) for v in sweep_raw.get("frequency_hz", ())),
            gains=gains,
        )
    except KeyError as exc:
        raise ValidationError(str(exc.args[0]), "missing required field") from None
    return scenario.validate()


def scenario_to_dict(scenario):
    def pid(g):
        return {"kp": g.kp, "ki": g.ki, "kd": g.kd,
                "i_clamp": g.i_clamp, "out_clamp": g.out_clamp}

    return {
        "mode": scenario.mode,
        "wind_mps": scenario.wind_mps.tolist(),
        "duration_s": scenario.duration_s,
        "dt_s": scenario.dt_s,
        "output_decimation": scenario.output_decimation,
        "aero_model": scenario.aero_model,
        "transient_cycles": scenario.transient_cycles,
        "average_cycles": scenario.average_cycles,
        "seed": scenario.seed,
        "initial": {
            "position_m": scenario.initial.position_m.tolist(),
            "euler_rad": scenario.initial.euler_rad.tolist(),
            "velocity_mps": scenario.initial.velocity_mps.tolist(),
            "euler_rates_radps": scenario.initial.euler_rates_radps.tolist(),
        },
        "sweep": {
            "wind_mps": list(scenario.sweep_wind_mps),
            "frequency_hz": list(scenario.sweep_frequency_hz),
        },
        "gains": {
            "roll": pid(scenario.gains.roll),
            "pitch": pid(scenario.gains.pitch),
            "vx": pid(scenario.gains.vx),
            "vy": pid(scenario.gains.vy),
            "collective_n": scenario.gains.collective_n,
        },
    }


# ---------------------------------------------------------------------------
# file I/O and overrides
# ---------------------------------------------------------------------------

def _load_json(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return raw


def default_config_path(name):
    return Path(resources.files("flapsim").joinpath(f"data/{name}"))


def load_robot(path=None, overrides=None):
    raw = _load_json(path if path else default_config_path("aerobat.json"))
    for key, value in (overrides or {}).items():
        apply_override(raw, key, value)
    return robot_from_dict(raw)


def load_gait(path=None, overrides=None):
    raw = _load_json(path if path else default_config_path("gait_2hz.json"))
    for key, value in (overrides or {}).items():
        apply_override(raw, key, value)
    return gait_from_dict(raw)


def load_scenario(path=None, overrides=None):
    raw = _load_json(path if path else default_config_path("scenario_tethered.json"))
    for key, value in (overrides or {}).items():
        apply_override(raw, key, value)
    return scenario_from_dict(raw)


def apply_override(raw, dotted, value):
    """Set a dotted-path key in a raw config dict, type-checked when present.

    ``value`` may be a string (parsed as JSON, falling back to a bare
    string) or an already-parsed object.  New keys are allowed only when
    the parent object exists; the strict schema check later rejects typos.
    """
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            pass
    parts = dotted.split(".")
    node = raw
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ValidationError(dotted, f"no config section {part!r} to override")
        node = node[part]
    if not isinstance(node, dict):
        raise ValidationError(dotted, "override path does not address an object")
    leaf = parts[-1]
    if leaf in node and node[leaf] is not None and value is not None:
        old, new = node[leaf], value
        numeric = (int, float)
        compatible = (
            isinstance(old, numeric) and isinstance(new, numeric) and
            not isinstance(old, bool) and not isinstance(new, bool)
        ) or type(old) is type(new) or (
            # scalar wind may be widened to a vector and vice versa
            leaf == "wind_mps" and isinstance(new, (list, int, float))
        )
        if not compatible:
            raise ValidationError(
                dotted,
                f"override type {type(new).__name__} does not match {type(old).__name__}",
            )
    node[leaf] = value
    return raw
