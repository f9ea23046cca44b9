"""Feature encoding for policies: barrier gradients, vectors, history, BEV.

Obstacle proximity is summarized through a log-barrier potential whose
gradient magnitude is ``alpha * (2 log(d/d0) (d - d0) + (d - d0)(1 - d0/d))``
for a surface distance d, zero beyond a cutoff. Per-category gradient sums
(polylines, circles, goal composite) are squashed through g / (1 + |g|) so
every entry stays inside (-1, 1) no matter how crowded the scene gets.

The flat observation layout is frozen by OBS_SPEC; consumers should treat
index positions as stable within one spec string. Gradient vectors are
expressed in the world frame (heading sin/cos is part of the agent block,
so the frame is recoverable).
"""

import math
from dataclasses import dataclass

import numpy as np

from .angles import wrap_pi
from .dynamics import ShipParams, VesselState
from .geometry import ObstacleSet

OBS_DIM = 21
OBS_SPEC = ("obs/v1 d=21: agent[x01,y01,cos,sin,u,v,r,cmd_speed] "
            "goal[dist,cos_rel,sin_rel] grad[poly2,circle2,composite2,mag3] "
            "step[frac]; squash g/(1+|g|); world-frame gradients")

# BEV channel order
CH_LINES = 0
CH_STATIC = 1
CH_MOVING = 2
CH_GOAL = 3


@dataclass
class PotentialConfig:
    """Log-barrier shape: strength, rest distance, influence cutoff (m)."""

    alpha: float = 1.0
    d0: float = 1.0
    cutoff: float = 10.0

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.d0 <= 0:
            raise ValueError("d0 must be > 0")
        if self.cutoff < self.d0:
            raise ValueError("cutoff must be >= d0")

    @classmethod
    def for_ship(cls, ship: ShipParams, alpha: float = 1.0) -> "PotentialConfig":
        d0 = 3.0 * ship.safety_radius
        return cls(alpha=alpha, d0=d0, cutoff=10.0 * d0)


def barrier_gradient(d: float, cfg: PotentialConfig) -> float:
    """Radial derivative of the log-barrier potential at surface distance d.

    Positive everywhere except d == d0 where both factors vanish.
    Interpenetration (d <= 0) is a domain error here; collision handling
    belongs to episode termination, not the encoder.
    """
    if d <= 0.0:
        raise ValueError("barrier gradient needs a positive distance")
    if d >= cfg.cutoff:
        return 0.0
    dd = d - cfg.d0
    return cfg.alpha * (2.0 * math.log(d / cfg.d0) * dd + dd * (1.0 - cfg.d0 / d))


def _squash(gx: float, gy: float):
    n = math.hypot(gx, gy)
    k = 1.0 / (1.0 + n)
    return gx * k, gy * k, n * k


def _closest_on_segment(px, py, ax, ay, bx, by):
    abx, aby = bx - ax, by - ay
    denom = abx * abx + aby * aby
    if denom == 0.0:
        return ax, ay
    t = ((px - ax) * abx + (py - ay) * aby) / denom
    t = min(1.0, max(0.0, t))
    return ax + t * abx, ay + t * aby


def aggregate_gradients(agent_p, obs_set: ObstacleSet, goal_p,
                        cfg: PotentialConfig) -> np.ndarray:
    """Nine-entry gradient block: poly(2), circle(2), composite(2), mags(3).

    Category sums run over obstacles whose surface lies inside the cutoff;
    each contribution is the barrier gradient times the unit vector from the
    obstacle toward the agent. Contacts are clamped to a tiny positive
    distance (the episode is over anyway) and coincident points are skipped.
    The composite adds a goal pull d/(d+d0) toward the goal to the raw
    repulsive sums before squashing.
    """
    px, py = float(agent_p[0]), float(agent_p[1])
    floor = 1e-6 * cfg.d0

    reach = cfg.cutoff + obs_set.max_circle_radius
    circle_idx, seg_idx = obs_set.query_split(px, py, reach)

    cx_sum = cy_sum = 0.0
    for i in circle_idx:
        ob = obs_set.circles[i]
        dx, dy = px - ob.center[0], py - ob.center[1]
        dist_c = math.hypot(dx, dy)
        if dist_c == 0.0:
            continue
        d = dist_c - ob.radius
        if d >= cfg.cutoff:
            continue
        g = barrier_gradient(max(d, floor), cfg)
        cx_sum += g * dx / dist_c
        cy_sum += g * dy / dist_c

    # nearest approach per polyline, not per segment, so a wall made of many
    # segments contributes once
    nearest: dict[int, tuple[float, float, float]] = {}
    for pi, si in seg_idx:
        seg = obs_set.segment(pi, si)
        qx, qy = _closest_on_segment(px, py, seg[0, 0], seg[0, 1],
                                     seg[1, 0], seg[1, 1])
        d = math.hypot(px - qx, py - qy)
        if pi not in nearest or d < nearest[pi][0]:
            nearest[pi] = (d, qx, qy)

    px_sum = py_sum = 0.0
    for d, qx, qy in nearest.values():
        if d == 0.0 or d >= cfg.cutoff:
            continue
        g = barrier_gradient(max(d, floor), cfg)
        px_sum += g * (px - qx) / d
        py_sum += g * (py - qy) / d

    gx, gy = float(goal_p[0]) - px, float(goal_p[1]) - py
    dg = math.hypot(gx, gy)
    if dg > 0.0:
        ax, ay = gx / (dg + cfg.d0), gy / (dg + cfg.d0)
    else:
        ax = ay = 0.0
    comp_x = ax + cx_sum + px_sum
    comp_y = ay + cy_sum + py_sum

    p0, p1, pm = _squash(px_sum, py_sum)
    c0, c1, cm = _squash(cx_sum, cy_sum)
    k0, k1, km = _squash(comp_x, comp_y)
    return np.array([p0, p1, c0, c1, k0, k1, pm, cm, km])


def turn_rate_scale(ship: ShipParams) -> float:
    """Characteristic yaw rate used to normalize r into [-1, 1]."""
    if ship.model_kind == "nomoto1":
        s = abs(ship.nomoto_k) * ship.rudder_max
    elif ship.model_kind == "kinematic":
        s = ship.kin_turn_rate_max
    else:
        s = ship.service_speed / ship.length
    return s if s > 0.0 else 1.0


def build_observation(state: VesselState, ship: ShipParams,
                      obs_set: ObstacleSet, goal_p, extent,
                      step_index: int, budget: int, cmd_speed: float,
                      cfg: PotentialConfig) -> np.ndarray:
    """Assemble the flat observation vector described by OBS_SPEC.

    extent is the (width, height) of the playable map in meters; positions
    normalize against it, the goal distance against its diagonal. All
    entries are clamped to [-1, 1] even for out-of-envelope states.
    """
    width, height = float(extent[0]), float(extent[1])
    svc = ship.service_speed
    obs = np.empty(OBS_DIM)

    obs[0] = min(1.0, max(0.0, state.x / width))
    obs[1] = min(1.0, max(0.0, state.y / height))
    obs[2] = math.cos(state.psi)
    obs[3] = math.sin(state.psi)
    obs[4] = min(1.0, max(-1.0, state.u / svc))
    obs[5] = min(1.0, max(-1.0, state.v / svc))
    scale = turn_rate_scale(ship)
    obs[6] = min(1.0, max(-1.0, state.r / scale))
    obs[7] = min(1.0, max(0.0, cmd_speed / svc))

    gx, gy = float(goal_p[0]) - state.x, float(goal_p[1]) - state.y
    dist = math.hypot(gx, gy)
    diag = math.hypot(width, height)
    obs[8] = min(1.0, dist / diag)
    if dist > 0.0:
        rel = wrap_pi(math.atan2(gy, gx) - state.psi)
        obs[9] = math.cos(rel)
        obs[10] = math.sin(rel)
    else:
        obs[9] = 1.0
        obs[10] = 0.0

    obs[11:20] = aggregate_gradients((state.x, state.y), obs_set, goal_p, cfg)
    obs[20] = min(1.0, step_index / budget) if budget > 0 else 0.0
    return obs


class HistoryBuffer:
    """Fixed-length window of past observations, oldest row first.

    Reset floods the window with the initial frame so the emitted tensor is
    always (k, dim) with no warm-up special case downstream.
    """

    def __init__(self, k: int = 8, dim: int = OBS_DIM):
        if k <= 0 or dim <= 0:
            raise ValueError("k and dim must be positive")
        self.k = k
        self.dim = dim
        self._buf = np.zeros((k, dim))

    def _check(self, obs) -> np.ndarray:
        arr = np.asarray(obs, dtype=float)
        if arr.shape != (self.dim,):
            raise ValueError(f"expected shape ({self.dim},), got {arr.shape}")
        return arr

    def reset(self, obs) -> None:
        self._buf[:] = self._check(obs)[None, :]

    def push(self, obs) -> None:
        arr = self._check(obs)
        self._buf[:-1] = self._buf[1:]
        self._buf[-1] = arr

    def tensor(self) -> np.ndarray:
        return self._buf.copy()


@dataclass
class BevConfig:
    """Raster geometry: image size plus the dynamic view-range envelope."""

    height: int = 64
    width: int = 64
    base_range: float = 200.0
    max_range: float = 500.0

    def __post_init__(self) -> None:
        if self.height <= 0 or self.width <= 0:
            raise ValueError("image dimensions must be positive")
        if self.base_range <= 0 or self.max_range < self.base_range:
            raise ValueError("need 0 < base_range <= max_range")


def render_bev(state: VesselState, obs_set: ObstacleSet, goal_p,
               goal_radius: float, cfg: BevConfig) -> np.ndarray:
    """Agent-centered, heading-up raster, shape (H, W, 4), cells in {0, 1}.

    Channels: polyline outlines, static discs, moving discs, goal disc.
    Forward is up. The half view range is max(base_range, 1.2 * goal
    distance) clamped to max_range, so the goal stays in frame until it is
    genuinely far. Discs fill every cell whose center they cover; polylines
    are sampled at half-cell steps for single-cell-wide strokes.
    """
    h, w = cfg.height, cfg.width
    img = np.zeros((h, w, 4), dtype=np.float32)

    gx, gy = float(goal_p[0]) - state.x, float(goal_p[1]) - state.y
    view = min(max(cfg.base_range, 1.2 * math.hypot(gx, gy)), cfg.max_range)
    cell = 2.0 * view / h
    half_h, half_w = h / 2.0, w / 2.0

    c, s = math.cos(state.psi), math.sin(state.psi)

    def to_frame(wx: float, wy: float):
        dx, dy = wx - state.x, wy - state.y
        return c * dx + s * dy, s * dx - c * dy  # (forward, starboard)

    fwd_centers = (half_h - np.arange(h) - 0.5) * cell
    right_centers = (np.arange(w) - half_w + 0.5) * cell

    def fill_disc(ch: int, fx: float, rx: float, radius: float) -> None:
        dr = fwd_centers - fx
        dc = right_centers - rx
        mask = dr[:, None] ** 2 + dc[None, :] ** 2 <= radius * radius
        img[..., ch][mask] = 1.0

    reach = view * math.hypot(1.0, w / h) + obs_set.max_circle_radius
    circle_idx, seg_idx = obs_set.query_split(state.x, state.y, reach)

    for pi, si in seg_idx:
        seg = obs_set.segment(pi, si)
        f0, r0 = to_frame(seg[0, 0], seg[0, 1])
        f1, r1 = to_frame(seg[1, 0], seg[1, 1])
        length = math.hypot(f1 - f0, r1 - r0)
        n = min(int(length / (0.5 * cell)) + 2, 20000)
        ts = np.linspace(0.0, 1.0, n)
        fs = f0 + ts * (f1 - f0)
        rs = r0 + ts * (r1 - r0)
        rows = np.floor(half_h - fs / cell).astype(np.int64)
        cols = np.floor(half_w + rs / cell).astype(np.int64)
        ok = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
        img[rows[ok], cols[ok], CH_LINES] = 1.0

    for i in circle_idx:
        ob = obs_set.circles[i]
        fx, rx = to_frame(ob.center[0], ob.center[1])
        fill_disc(CH_MOVING if ob.moving else CH_STATIC, fx, rx, ob.radius)

    gf, gr = to_frame(float(goal_p[0]), float(goal_p[1]))
    fill_disc(CH_GOAL, gf, gr, max(goal_radius, 0.75 * cell))
    return img
