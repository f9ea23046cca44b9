"""Vessel motion models, parameter files, PID command tracking, and currents.

Conventions used throughout:

* World frame is planar ENU: x East, y North, both in meters. Heading psi is
  measured counterclockwise from East and kept in (-pi, pi].
* Body frame: u is surge (forward, m/s), v is sway (port-positive, m/s), r is
  the yaw rate (rad/s, counterclockwise positive). A positive rudder angle
  produces a positive (port) turn.
* u and v are components of the ground velocity. Where a model reacts to
  water flow (the full hydrodynamic model), forces are evaluated on the
  through-water velocity, i.e. ground velocity minus the ambient current.

Three model tiers share one state layout and one stepping interface:

* ``mmg3dof``: surge/sway/yaw equations of motion with hull derivatives,
  propeller thrust, and rudder normal force. Coefficients come from a named
  parameter file; the bundled set is a published benchmark hull, validated
  here by self-convergence and qualitative turning behavior only.
* ``nomoto1``: first-order yaw response r_dot = (K*delta - r)/T riding on a
  commanded speed; current is pure position drift.
* ``kinematic``: rate-limited heading/speed slew toward a commanded target;
  current is pure position drift.

Integration uses equal sub-steps of a control interval with either
semi-implicit Euler or classic fourth-order Runge-Kutta. Actuators update
once per sub-step and are held constant inside integrator stages: the rudder
slews toward its command at a rate limit, the propeller setting follows a
first-order lag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import kernels
from .angles import wrap_pi

MODEL_KINDS = ("mmg3dof", "nomoto1", "kinematic")

_MODEL_IDS = {
    "mmg3dof": kernels.MODEL_MMG,
    "nomoto1": kernels.MODEL_NOMOTO,
    "kinematic": kernels.MODEL_KINEMATIC,
}

_INTEGRATOR_IDS = {
    "euler": kernels.INTEGRATOR_EULER,
    "semi-implicit-euler": kernels.INTEGRATOR_EULER,
    "rk4": kernels.INTEGRATOR_RK4,
}

HYDRO_KEYS = ("R0", "Xvv", "Xvr", "Xrr", "Xvvvv",
              "Yv", "Yr", "Yvvv", "Yvvr", "Yvrr", "Yrrr",
              "Nv", "Nr", "Nvvv", "Nvvr", "Nvrr", "Nrrr")
PROP_KEYS = ("tP", "wP0", "DP", "k0", "k1", "k2", "n_max")
RUDDER_KEYS = ("AR", "f_alpha", "tR", "aH", "xR", "xH", "eps", "gammaR")


@dataclass
class VesselState:
    """Pose, body-frame velocities, and actuator positions of one vessel.

    ``rudder`` is the actual rudder angle in radians (not the command);
    ``rpm`` is the normalized propeller setting in [0, 1].
    """

    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    u: float = 0.0
    v: float = 0.0
    r: float = 0.0
    rudder: float = 0.0
    rpm: float = 0.0

    def as_row(self) -> np.ndarray:
        """Kernel-layout row [x, y, cos psi, sin psi, u, v, r, rudder, rpm]."""
        return np.array([self.x, self.y, math.cos(self.psi), math.sin(self.psi),
                         self.u, self.v, self.r, self.rudder, self.rpm])

    @classmethod
    def from_row(cls, row: np.ndarray) -> "VesselState":
        return cls(x=float(row[kernels.IX]), y=float(row[kernels.IY]),
                   psi=wrap_pi(math.atan2(row[kernels.IS], row[kernels.IC])),
                   u=float(row[kernels.IU]), v=float(row[kernels.IV]),
                   r=float(row[kernels.IR]), rudder=float(row[kernels.IRUD]),
                   rpm=float(row[kernels.IRPM]))

    def finite(self) -> bool:
        return all(math.isfinite(f) for f in
                   (self.x, self.y, self.psi, self.u, self.v, self.r,
                    self.rudder, self.rpm))


@dataclass
class ShipParams:
    """Mass/geometry, model coefficients, and actuator limits for one hull.

    Only the fields relevant to ``model_kind`` are consulted by the stepper;
    ``validate`` enforces the per-model requirements. Angles are radians,
    rates rad/s.
    """

    model_kind: str
    length: float
    beam: float
    safety_radius: float
    service_speed: float  # straight-line speed at full propeller setting
    draft: float = 0.0
    rho: float = 1025.0
    mass: float = 0.0
    i_z: float = 0.0
    rudder_max: float = math.radians(35.0)
    rudder_rate: float = math.radians(5.0)
    rpm_tau: float = 0.0
    hydro: dict = field(default_factory=dict)
    prop: dict = field(default_factory=dict)
    rudder: dict = field(default_factory=dict)
    nomoto_k: float = 0.0
    nomoto_t: float = 0.0
    kin_turn_rate_max: float = 0.0
    kin_accel_max: float = 0.0

    def validate(self) -> None:
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"model_kind must be one of {MODEL_KINDS}, "
                             f"got {self.model_kind!r}")
        if self.safety_radius <= 0:
            raise ValueError("safety_radius must be > 0")
        if self.length <= 0 or self.beam <= 0:
            raise ValueError("length and beam must be > 0")
        if self.service_speed <= 0:
            raise ValueError("service_speed must be > 0")
        if self.model_kind == "mmg3dof":
            if self.mass <= 0 or self.i_z <= 0:
                raise ValueError("mmg3dof requires mass > 0 and i_z > 0")
            if self.draft <= 0:
                raise ValueError("mmg3dof requires draft > 0")
            for name, keys, table in (("hydro", HYDRO_KEYS, self.hydro),
                                      ("prop", PROP_KEYS, self.prop),
                                      ("rudder", RUDDER_KEYS, self.rudder)):
                missing = [k for k in keys if k not in table]
                if missing:
                    raise ValueError(f"mmg3dof {name} table missing {missing}")
        elif self.model_kind == "nomoto1":
            if self.nomoto_t <= 0:
                raise ValueError("nomoto1 requires nomoto_t > 0")
        else:
            if self.kin_turn_rate_max <= 0:
                raise ValueError("kinematic requires kin_turn_rate_max > 0")
            if self.kin_accel_max <= 0:
                raise ValueError("kinematic requires kin_accel_max > 0")

    @property
    def model_id(self) -> int:
        return _MODEL_IDS[self.model_kind]

    def pack(self) -> np.ndarray:
        """Flat float64 vector in the layout the compiled kernels consume."""
        self.validate()
        p = np.zeros(kernels.N_PARAMS)
        p[kernels.P_MODEL] = self.model_id
        p[kernels.P_LEN] = self.length
        p[kernels.P_DRAFT] = self.draft
        p[kernels.P_RHO] = self.rho
        p[kernels.P_M] = self.mass
        p[kernels.P_IZ] = self.i_z
        if self.model_kind == "mmg3dof":
            h = self.hydro
            p[kernels.P_R0] = h["R0"]
            p[kernels.P_XVV] = h["Xvv"]
            p[kernels.P_XVR] = h["Xvr"]
            p[kernels.P_XRR] = h["Xrr"]
            p[kernels.P_XVVVV] = h["Xvvvv"]
            p[kernels.P_YV] = h["Yv"]
            p[kernels.P_YR] = h["Yr"]
            p[kernels.P_YVVV] = h["Yvvv"]
            p[kernels.P_YVVR] = h["Yvvr"]
            p[kernels.P_YVRR] = h["Yvrr"]
            p[kernels.P_YRRR] = h["Yrrr"]
            p[kernels.P_NV] = h["Nv"]
            p[kernels.P_NR] = h["Nr"]
            p[kernels.P_NVVV] = h["Nvvv"]
            p[kernels.P_NVVR] = h["Nvvr"]
            p[kernels.P_NVRR] = h["Nvrr"]
            p[kernels.P_NRRR] = h["Nrrr"]
            pp = self.prop
            p[kernels.P_TP] = pp["tP"]
            p[kernels.P_WP0] = pp["wP0"]
            p[kernels.P_DP] = pp["DP"]
            p[kernels.P_K0] = pp["k0"]
            p[kernels.P_K1] = pp["k1"]
            p[kernels.P_K2] = pp["k2"]
            p[kernels.P_NMAX] = pp["n_max"]
            rd = self.rudder
            p[kernels.P_AR] = rd["AR"]
            p[kernels.P_FALPHA] = rd["f_alpha"]
            p[kernels.P_TR] = rd["tR"]
            p[kernels.P_AH] = rd["aH"]
            p[kernels.P_XR] = rd["xR"]
            p[kernels.P_XH] = rd["xH"]
            p[kernels.P_REPS] = rd["eps"]
            p[kernels.P_GAMR] = rd["gammaR"]
        p[kernels.P_RUDMAX] = self.rudder_max
        p[kernels.P_RUDRATE] = self.rudder_rate
        p[kernels.P_RPMTAU] = self.rpm_tau
        p[kernels.P_NK] = self.nomoto_k
        p[kernels.P_NT] = self.nomoto_t
        p[kernels.P_KTURN] = self.kin_turn_rate_max
        p[kernels.P_KACC] = self.kin_accel_max
        p[kernels.P_VSRV] = self.service_speed
        return p


# ---------------------------------------------------------------------------
# Parameter files
# ---------------------------------------------------------------------------

_TOP_KEYS = {
    "model_kind": str,
    "length": float, "beam": float, "draft": float, "rho": float,
    "mass": float, "i_z": float, "safety_radius": float,
    "service_speed": float, "rpm_tau": float,
    "rudder_max_deg": float, "rudder_rate_deg": float,
    "nomoto_k": float, "nomoto_t": float,
    "kin_turn_rate_max_deg": float, "kin_accel_max": float,
}


def parse_ship_params(text: str, source: str = "<string>") -> ShipParams:
    """Parse the key/value ship parameter format.

    One ``key = value`` pair per line; ``#`` starts a comment; dotted keys
    fill the hydro/prop/rudder coefficient tables. Keys ending in ``_deg``
    are converted from degrees. Unknown keys are rejected by name so typos
    never silently become defaults.
    """
    values: dict[str, float] = {}
    tables: dict[str, dict[str, float]] = {"hydro": {}, "prop": {}, "rudder": {}}
    model_kind = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if "." in key:
            table, _, coeff = key.partition(".")
            allowed = {"hydro": HYDRO_KEYS, "prop": PROP_KEYS, "rudder": RUDDER_KEYS}.get(table)
            if allowed is None or coeff not in allowed:
                raise ValueError(f"{source}:{lineno}: unknown key '{key}'")
            tables[table][coeff] = float(val)
        elif key == "model_kind":
            if val not in MODEL_KINDS:
                raise ValueError(f"{source}:{lineno}: model_kind must be one of "
                                 f"{MODEL_KINDS}, got '{val}'")
            model_kind = val
        elif key in _TOP_KEYS:
            values[key] = float(val)
        else:
            raise ValueError(f"{source}:{lineno}: unknown key '{key}'")
    if model_kind is None:
        raise ValueError(f"{source}: missing required key 'model_kind'")

    def deg(key: str, default: float) -> float:
        return math.radians(values.pop(key)) if key in values else default

    params = ShipParams(
        model_kind=model_kind,
        length=values.pop("length", 0.0),
        beam=values.pop("beam", 0.0),
        draft=values.pop("draft", 0.0),
        rho=values.pop("rho", 1025.0),
        mass=values.pop("mass", 0.0),
        i_z=values.pop("i_z", 0.0),
        safety_radius=values.pop("safety_radius", 0.0),
        service_speed=values.pop("service_speed", 0.0),
        rpm_tau=values.pop("rpm_tau", 0.0),
        rudder_max=deg("rudder_max_deg", math.radians(35.0)),
        rudder_rate=deg("rudder_rate_deg", math.radians(5.0)),
        nomoto_k=values.pop("nomoto_k", 0.0),
        nomoto_t=values.pop("nomoto_t", 0.0),
        kin_turn_rate_max=deg("kin_turn_rate_max_deg", 0.0),
        kin_accel_max=values.pop("kin_accel_max", 0.0),
        hydro=tables["hydro"],
        prop=tables["prop"],
        rudder=tables["rudder"],
    )
    params.validate()
    return params


def load_ship_params(path: Union[str, Path]) -> ShipParams:
    path = Path(path)
    return parse_ship_params(path.read_text(), source=str(path))


def bundled_data_path(name: str) -> Path:
    """Path of a data file shipped with the package (params, scenarios)."""
    return Path(__file__).parent / "data" / name


# ---------------------------------------------------------------------------
# Commands and PID tracking
# ---------------------------------------------------------------------------

@dataclass
class ControlCommand:
    """High-level command every model tier understands."""

    target_heading: float
    target_speed: float

    def __post_init__(self) -> None:
        if self.target_speed < 0:
            raise ValueError("target_speed must be >= 0")
        self.target_heading = wrap_pi(self.target_heading)


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    integral_clamp: float = 1.0

    def __post_init__(self) -> None:
        if min(self.kp, self.ki, self.kd, self.integral_clamp) < 0:
            raise ValueError("PID gains must be >= 0")


# Tuned against the bundled first-order yaw model: critically damped-ish
# response, settles a large step command well inside two minutes.
DEFAULT_HEADING_GAINS = PidGains(kp=2.0, ki=0.02, kd=25.0, integral_clamp=0.5)
DEFAULT_SPEED_GAINS = PidGains(kp=0.4, ki=0.05, kd=0.0, integral_clamp=0.5)


class PidController:
    """Heading + speed loops turning a ControlCommand into actuator commands.

    The heading loop acts on the wrapped error and uses the measured yaw rate
    as its derivative term (the setpoint derivative is zero between command
    changes, and rate feedback avoids kick on command steps). The speed loop
    adds its correction to a feedforward trim: target speed scaled into the
    normalized propeller range. Integrators are clamped, and do not
    accumulate while the corresponding actuator command is saturated.
    """

    def __init__(self, ship: ShipParams,
                 heading_gains: PidGains = DEFAULT_HEADING_GAINS,
                 speed_gains: PidGains = DEFAULT_SPEED_GAINS):
        self.ship = ship
        self.hg = heading_gains
        self.sg = speed_gains
        self.i_heading = 0.0
        self.i_speed = 0.0
        self._prev_speed_err: Optional[float] = None

    def reset(self) -> None:
        self.i_heading = 0.0
        self.i_speed = 0.0
        self._prev_speed_err = None

    def track(self, state: VesselState, cmd: ControlCommand,
              dt: float) -> tuple[float, float]:
        """One controller update; returns (rudder_cmd rad, rpm_cmd [0,1])."""
        if dt <= 0:
            raise ValueError("dt must be > 0")
        err = wrap_pi(cmd.target_heading - state.psi)
        rudder = self.hg.kp * err + self.hg.ki * self.i_heading - self.hg.kd * state.r
        lim = self.ship.rudder_max
        if -lim < rudder < lim:
            self.i_heading = _clamp(self.i_heading + err * dt,
                                    -self.hg.integral_clamp, self.hg.integral_clamp)
        rudder = _clamp(rudder, -lim, lim)

        trim = _clamp(cmd.target_speed / self.ship.service_speed, 0.0, 1.0)
        s_err = cmd.target_speed - state.u
        d_term = 0.0
        if self._prev_speed_err is not None:
            d_term = (s_err - self._prev_speed_err) / dt
        self._prev_speed_err = s_err
        rpm = (trim + self.sg.kp * s_err + self.sg.ki * self.i_speed
               + self.sg.kd * d_term)
        if 0.0 < rpm < 1.0:
            self.i_speed = _clamp(self.i_speed + s_err * dt,
                                  -self.sg.integral_clamp, self.sg.integral_clamp)
        rpm = _clamp(rpm, 0.0, 1.0)
        return rudder, rpm


def pid_track(state: VesselState, cmd: ControlCommand, pid: PidController,
              dt: float) -> tuple[float, float]:
    """Functional alias for PidController.track (the controller owns state)."""
    return pid.track(state, cmd, dt)


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else (hi if x > hi else x)


# ---------------------------------------------------------------------------
# Ambient current
# ---------------------------------------------------------------------------

@dataclass
class CurrentField:
    """Slowly varying ambient current: main set plus a bounded perturbation.

    The realized velocity is ``A * f(t) * d_main + eps * d_random(t)`` where
    f(t) stays inside f_range and d_random(t) is a unit vector that drifts
    smoothly, re-drawn once per f_period.
    """

    d_main: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0]))
    A: float = 0.0
    f_range: tuple[float, float] = (0.8, 1.0)
    eps: float = 0.0
    f_period: float = 60.0

    def __post_init__(self) -> None:
        self.d_main = np.asarray(self.d_main, dtype=float)
        norm = float(np.hypot(*self.d_main))
        if norm < 1e-12:
            raise ValueError("d_main must be a nonzero direction")
        if abs(norm - 1.0) > 1e-9:
            self.d_main = self.d_main / norm
        if self.A < 0 or self.eps < 0 or self.f_period <= 0:
            raise ValueError("A >= 0, eps >= 0, f_period > 0 required")
        lo, hi = self.f_range
        if not (0 <= lo <= hi):
            raise ValueError("f_range must satisfy 0 <= lo <= hi")


class CurrentRealization:
    """One episode's current as a pure function of time.

    All randomness (fluctuation phase, perturbation direction knots) is
    derived from counter-based seed sequences, so sample(t) is deterministic
    per (field, seed) and smooth in t.
    """

    def __init__(self, field_: CurrentField, seed: int):
        self.field = field_
        self.seed = int(seed)
        self._phase = self._uniform(0xFA5E, 0) * 2.0 * math.pi

    def _uniform(self, tag: int, k: int) -> float:
        ss = np.random.SeedSequence([self.seed, tag, k])
        return float(ss.generate_state(1)[0]) / 2.0**32

    def _knot_angle(self, k: int) -> float:
        return self._uniform(0xD1CE, k) * 2.0 * math.pi

    def sample(self, t: float) -> np.ndarray:
        f = self.field
        lo, hi = f.f_range
        mult = lo + (hi - lo) * (0.5 + 0.5 * math.sin(
            2.0 * math.pi * t / f.f_period + self._phase))
        out = f.A * mult * f.d_main
        if f.eps > 0.0:
            k = math.floor(t / f.f_period)
            frac = t / f.f_period - k
            a0 = self._knot_angle(int(k))
            a1 = self._knot_angle(int(k) + 1)
            ang = a0 + frac * wrap_pi(a1 - a0)
            out = out + f.eps * np.array([math.cos(ang), math.sin(ang)])
        return out


def sample_current(field_: CurrentField, t: float, seed: int) -> np.ndarray:
    """World-frame current velocity at time t for a given episode seed."""
    return CurrentRealization(field_, seed).sample(t)


# ---------------------------------------------------------------------------
# Single-vessel stepping (thin wrappers over the batch kernels)
# ---------------------------------------------------------------------------

def _integrator_id(name: str) -> int:
    try:
        return _INTEGRATOR_IDS[name]
    except KeyError:
        raise ValueError(f"unknown integrator {name!r}; choose from "
                         f"{sorted(_INTEGRATOR_IDS)}") from None


def _step_single(state: VesselState, params: ShipParams, cmd_a: float,
                 cmd_b: float, current, dt: float, integrator: str,
                 substeps: int) -> VesselState:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    if not state.finite():
        raise ValueError(f"non-finite vessel state rejected: {state}")
    rows = state.as_row()[None, :].copy()
    pr = params.pack()
    a = np.array([float(cmd_a)])
    b = np.array([float(cmd_b)])
    cur = np.array([[float(current[0]), float(current[1])]])
    h = dt / substeps
    integ = _integrator_id(integrator)
    for _ in range(substeps):
        kernels.substep_range(rows, pr, params.model_id, integ, a, b, cur, h, 0, 1)
    return VesselState.from_row(rows[0])


def step_mmg(state: VesselState, params: ShipParams, rudder_cmd: float,
             rpm_cmd: float, current=(0.0, 0.0), dt: float = 1.0,
             integrator: str = "rk4", substeps: int = 10) -> VesselState:
    """Advance the full hydrodynamic model by one control step."""
    if params.model_kind != "mmg3dof":
        raise ValueError(f"step_mmg needs mmg3dof params, got {params.model_kind}")
    return _step_single(state, params, rudder_cmd, rpm_cmd, current, dt,
                        integrator, substeps)


def step_nomoto(state: VesselState, params: ShipParams, rudder_cmd: float,
                speed: float, dt: float = 1.0, integrator: str = "rk4",
                substeps: int = 10) -> VesselState:
    """Advance the first-order yaw-response model by one control step."""
    if params.model_kind != "nomoto1":
        raise ValueError(f"step_nomoto needs nomoto1 params, got {params.model_kind}")
    return _step_single(state, params, rudder_cmd, speed, (0.0, 0.0), dt,
                        integrator, substeps)


def step_nomoto_current(state: VesselState, params: ShipParams,
                        rudder_cmd: float, speed: float, current,
                        dt: float = 1.0, integrator: str = "rk4",
                        substeps: int = 10) -> VesselState:
    """step_nomoto with an ambient drift current."""
    if params.model_kind != "nomoto1":
        raise ValueError(f"step_nomoto needs nomoto1 params, got {params.model_kind}")
    return _step_single(state, params, rudder_cmd, speed, current, dt,
                        integrator, substeps)


def step_kinematic(state: VesselState, params: ShipParams,
                   cmd: ControlCommand, current=(0.0, 0.0), dt: float = 1.0,
                   substeps: int = 10) -> VesselState:
    """Advance the rate-limited kinematic model by one control step."""
    if params.model_kind != "kinematic":
        raise ValueError(f"step_kinematic needs kinematic params, got {params.model_kind}")
    return _step_single(state, params, cmd.target_heading, cmd.target_speed,
                        current, dt, "euler", substeps)
