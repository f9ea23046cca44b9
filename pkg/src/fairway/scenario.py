"""Scenario files: map geometry, traffic spawners, rewards, randomization.

Scenarios are YAML with a mandatory integer version key
(``fairway_scenario``). The loader is strict: unknown versions and unknown
keys are errors, so a typo fails loudly instead of silently changing an
experiment.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .dynamics import bundled_data_path
from .geometry import CircleObstacle, PolylineObstacle, WaypointLoop

SCENARIO_VERSION = 1

TWO_PI = 2.0 * math.pi


class ScenarioError(ValueError):
    """Raised for malformed or internally inconsistent scenario files."""


@dataclass
class RewardWeights:
    """Scales of the per-step reward terms.

    w_progress rewards each meter of distance-to-goal improvement;
    r_success / r_collision are terminal (the collision penalty also covers
    boundary infringement); c_time is charged every step; w_gradient
    penalizes combined obstacle-gradient magnitude above
    gradient_threshold.
    """

    w_progress: float = 1.0
    r_success: float = 200.0
    r_collision: float = -200.0
    c_time: float = 0.1
    w_gradient: float = 0.5
    gradient_threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.r_success <= 0:
            raise ValueError("r_success must be > 0")
        if self.r_collision >= 0:
            raise ValueError("r_collision must be < 0")
        if self.c_time < 0:
            raise ValueError("c_time must be >= 0")
        if self.w_gradient < 0 or self.gradient_threshold < 0:
            raise ValueError("gradient penalty terms must be >= 0")


@dataclass
class MovingSpawner:
    """Randomized traffic: each draw places `count` discs on waypoint loops."""

    count: int = 0
    radius_range: tuple = (0.0, 0.0)
    speed_range: tuple = (0.0, 0.0)
    routes: list = field(default_factory=list)  # each (k, 2) waypoint array
    start_frac: tuple = (0.0, 1.0)

    def sample(self, rng: np.random.Generator) -> list:
        obstacles = []
        for i in range(self.count):
            wps = self.routes[int(rng.integers(len(self.routes)))]
            speed = float(rng.uniform(*self.speed_range))
            radius = float(rng.uniform(*self.radius_range))
            loop = WaypointLoop(np.array(wps, dtype=float), speed)
            s = float(rng.uniform(*self.start_frac)) * loop.length
            pos, vel = loop.sample(s)
            obstacles.append(CircleObstacle(f"mov{i}", pos.copy(), radius,
                                            vel.copy(), route=loop, route_s=s))
        return obstacles


@dataclass
class Randomization:
    """Episode randomization scales; all-zero means fully deterministic.

    Angles are radians internally (the file format takes degrees). Current
    amplitude and main direction are drawn uniformly per episode; sigma_*
    are Gaussian scales for sensor and command perturbations.
    """

    current_amp: tuple = (0.0, 0.0)
    current_dir: tuple = (0.0, TWO_PI)
    f_range: tuple = (0.8, 1.0)
    eps: float = 0.0
    period: float = 60.0
    sigma_pos: float = 0.0
    sigma_heading: float = 0.0
    sigma_cmd_heading: float = 0.0


@dataclass
class Scenario:
    name: str
    extent: tuple
    step_budget: int
    polylines: list = field(default_factory=list)
    static_circles: list = field(default_factory=list)
    spawner: MovingSpawner = field(default_factory=MovingSpawner)
    departure_rect: tuple = (0.0, 0.0, 0.0, 0.0)
    heading_jitter: float = math.radians(10.0)
    goal_p: tuple = (0.0, 0.0)
    goal_radius: float = 1.0
    reward: RewardWeights = field(default_factory=RewardWeights)
    rand: Randomization = field(default_factory=Randomization)

    def validate(self) -> None:
        w, h = self.extent
        if w <= 0 or h <= 0:
            raise ScenarioError("extent must be positive")
        if self.step_budget <= 0:
            raise ScenarioError("step_budget must be > 0")
        x0, y0, x1, y1 = self.departure_rect
        if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
            raise ScenarioError("departure rect must be a proper rectangle "
                                "inside the map extent")
        gx, gy = self.goal_p
        if not (0 <= gx <= w and 0 <= gy <= h):
            raise ScenarioError("goal must lie inside the map extent")
        if self.goal_radius <= 0:
            raise ScenarioError("goal radius must be > 0")
        for ob in self.static_circles:
            if math.hypot(gx - ob.center[0], gy - ob.center[1]) <= ob.radius:
                raise ScenarioError(f"goal lies inside obstacle '{ob.id}'")
        for poly in self.polylines:
            if poly.contains(gx, gy):
                raise ScenarioError(f"goal lies inside closed polyline "
                                    f"'{poly.id}'")
        if self.spawner.count > 0 and not self.spawner.routes:
            raise ScenarioError("moving_spawner with count > 0 needs at "
                                "least one route")
        for lo, hi, what in ((self.spawner.radius_range + ("radius",)),
                             (self.spawner.speed_range + ("speed",)),
                             (self.spawner.start_frac + ("start_frac",))):
            if lo > hi:
                raise ScenarioError(f"moving_spawner {what} range is inverted")
        if self.spawner.count > 0 and self.spawner.radius_range[0] <= 0:
            raise ScenarioError("moving_spawner radius must be > 0")


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

def _check_keys(table: dict, allowed, ctx: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ScenarioError(f"{ctx}: unknown key(s) {unknown}")


def _floats(val, n: int, ctx: str) -> tuple:
    if not isinstance(val, (list, tuple)) or len(val) != n:
        raise ScenarioError(f"{ctx}: expected a list of {n} numbers")
    try:
        return tuple(float(v) for v in val)
    except (TypeError, ValueError):
        raise ScenarioError(f"{ctx}: expected a list of {n} numbers") from None


def _vertices(val, ctx: str) -> np.ndarray:
    if not isinstance(val, list) or len(val) < 2:
        raise ScenarioError(f"{ctx}: need at least 2 vertices")
    return np.array([_floats(v, 2, ctx) for v in val])


def _parse_polylines(entries, ctx) -> list:
    out = []
    for i, e in enumerate(entries or []):
        where = f"{ctx}: polylines[{i}]"
        _check_keys(e, ("id", "closed", "vertices"), where)
        out.append(PolylineObstacle(str(e.get("id", f"poly{i}")),
                                    _vertices(e.get("vertices"), where),
                                    closed=bool(e.get("closed", False))))
    return out


def _parse_circles(entries, ctx) -> list:
    out = []
    for i, e in enumerate(entries or []):
        where = f"{ctx}: static_circles[{i}]"
        _check_keys(e, ("id", "center", "radius"), where)
        try:
            out.append(CircleObstacle(str(e.get("id", f"circle{i}")),
                                      np.array(_floats(e.get("center"), 2, where)),
                                      float(e.get("radius", 0.0))))
        except ValueError as err:
            raise ScenarioError(f"{where}: {err}") from None
    return out


def _parse_spawner(table, ctx) -> MovingSpawner:
    if not table:
        return MovingSpawner()
    where = f"{ctx}: moving_spawner"
    _check_keys(table, ("count", "radius", "speed", "routes", "start_frac"),
                where)
    routes = [_vertices(r, f"{where}: routes[{i}]")
              for i, r in enumerate(table.get("routes") or [])]
    return MovingSpawner(
        count=int(table.get("count", 0)),
        radius_range=_floats(table.get("radius", [0.0, 0.0]), 2, where),
        speed_range=_floats(table.get("speed", [0.0, 0.0]), 2, where),
        routes=routes,
        start_frac=_floats(table.get("start_frac", [0.0, 1.0]), 2, where))


def _parse_randomization(table, ctx) -> Randomization:
    if not table:
        return Randomization()
    where = f"{ctx}: randomization"
    _check_keys(table, ("current", "sensor_noise", "command_noise"), where)
    kw = {}
    cur = table.get("current") or {}
    _check_keys(cur, ("amplitude", "direction_deg", "f_range", "eps", "period"),
                f"{where}: current")
    if "amplitude" in cur:
        kw["current_amp"] = _floats(cur["amplitude"], 2, where)
    if "direction_deg" in cur:
        lo, hi = _floats(cur["direction_deg"], 2, where)
        kw["current_dir"] = (math.radians(lo), math.radians(hi))
    if "f_range" in cur:
        kw["f_range"] = _floats(cur["f_range"], 2, where)
    kw["eps"] = float(cur.get("eps", 0.0))
    kw["period"] = float(cur.get("period", 60.0))
    sens = table.get("sensor_noise") or {}
    _check_keys(sens, ("sigma_pos", "sigma_heading_deg"), f"{where}: sensor_noise")
    kw["sigma_pos"] = float(sens.get("sigma_pos", 0.0))
    kw["sigma_heading"] = math.radians(float(sens.get("sigma_heading_deg", 0.0)))
    cmd = table.get("command_noise") or {}
    _check_keys(cmd, ("sigma_heading_deg",), f"{where}: command_noise")
    kw["sigma_cmd_heading"] = math.radians(float(cmd.get("sigma_heading_deg", 0.0)))
    return Randomization(**kw)


_TOP_KEYS = ("fairway_scenario", "name", "extent", "step_budget", "polylines",
             "static_circles", "moving_spawner", "departure", "goal",
             "reward", "randomization")


def load_scenario(path) -> Scenario:
    """Parse and validate one scenario file."""
    path = str(path)
    ctx = path.rsplit("/", 1)[-1]
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as err:
            raise ScenarioError(f"{ctx}: not parseable: {err}") from None
    if not isinstance(raw, dict):
        raise ScenarioError(f"{ctx}: top level must be a mapping")

    version = raw.get("fairway_scenario")
    if version is None:
        raise ScenarioError(f"{ctx}: missing the 'fairway_scenario' version key")
    if version != SCENARIO_VERSION:
        raise ScenarioError(f"{ctx}: unsupported scenario version {version!r} "
                            f"(this build reads version {SCENARIO_VERSION})")
    _check_keys(raw, _TOP_KEYS, ctx)

    dep = raw.get("departure") or {}
    _check_keys(dep, ("rect", "heading_jitter_deg"), f"{ctx}: departure")
    goal = raw.get("goal") or {}
    _check_keys(goal, ("position", "radius"), f"{ctx}: goal")

    rw_table = raw.get("reward") or {}
    _check_keys(rw_table, tuple(RewardWeights.__dataclass_fields__), f"{ctx}: reward")
    try:
        reward = RewardWeights(**rw_table)
    except ValueError as err:
        raise ScenarioError(f"{ctx}: reward: {err}") from None

    sc = Scenario(
        name=str(raw.get("name", ctx)),
        extent=_floats(raw.get("extent"), 2, f"{ctx}: extent"),
        step_budget=int(raw.get("step_budget", 0)),
        polylines=_parse_polylines(raw.get("polylines"), ctx),
        static_circles=_parse_circles(raw.get("static_circles"), ctx),
        spawner=_parse_spawner(raw.get("moving_spawner"), ctx),
        departure_rect=_floats(dep.get("rect"), 4, f"{ctx}: departure rect"),
        heading_jitter=math.radians(float(dep.get("heading_jitter_deg", 10.0))),
        goal_p=_floats(goal.get("position"), 2, f"{ctx}: goal position"),
        goal_radius=float(goal.get("radius", 0.0)),
        reward=reward,
        rand=_parse_randomization(raw.get("randomization"), ctx))
    try:
        sc.validate()
    except ScenarioError as err:
        raise ScenarioError(f"{ctx}: {err}") from None
    return sc


def bundled_scenario_path(name: str) -> str:
    """Path of a scenario file shipped inside the package."""
    return bundled_data_path(name)
