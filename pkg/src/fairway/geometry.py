"""Obstacle shapes, hash-grid broad phase, and continuous (swept) collision tests.

All geometry is planar. Vessels are treated as discs of their safety radius;
circle obstacles may move, polyline obstacles are static. Collision queries
over a step treat motion as linear between the step's endpoints and solve for
the earliest contact time exactly, so fast movers cannot tunnel through thin
geometry between discrete states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

_EPS = 1e-12


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

def min_dist_point_segment(px: float, py: float, ax: float, ay: float,
                           bx: float, by: float) -> float:
    """Distance from point p to segment [a, b] (clamped projection)."""
    ex, ey = bx - ax, by - ay
    ll = ex * ex + ey * ey
    if ll < _EPS:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * ex + (py - ay) * ey) / ll
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return math.hypot(px - (ax + t * ex), py - (ay + t * ey))


def seg_seg_intersect(a1, a2, b1, b2) -> tuple[bool, Optional[tuple[float, float]]]:
    """Whether segments [a1,a2] and [b1,b2] intersect; returns a witness point.

    Collinear overlap counts as intersecting (witness is a point of the
    overlap). Degenerate zero-length segments are treated as points.
    """
    a1x, a1y = a1
    a2x, a2y = a2
    b1x, b1y = b1
    b2x, b2y = b2
    rx, ry = a2x - a1x, a2y - a1y
    sx, sy = b2x - b1x, b2y - b1y
    denom = rx * sy - ry * sx
    qpx, qpy = b1x - a1x, b1y - a1y
    if abs(denom) < _EPS:
        # Parallel: intersect only if collinear and overlapping.
        if abs(qpx * ry - qpy * rx) > 1e-9 * max(1.0, abs(rx), abs(ry)):
            return False, None
        rr = rx * rx + ry * ry
        if rr < _EPS:  # a is a point
            if min_dist_point_segment(a1x, a1y, b1x, b1y, b2x, b2y) < 1e-9:
                return True, (a1x, a1y)
            return False, None
        t0 = (qpx * rx + qpy * ry) / rr
        t1 = t0 + (sx * rx + sy * ry) / rr
        lo, hi = min(t0, t1), max(t0, t1)
        if hi < 0.0 or lo > 1.0:
            return False, None
        t = max(lo, 0.0)
        return True, (a1x + t * rx, a1y + t * ry)
    t = (qpx * sy - qpy * sx) / denom
    u = (qpx * ry - qpy * rx) / denom
    if -1e-12 <= t <= 1.0 + 1e-12 and -1e-12 <= u <= 1.0 + 1e-12:
        return True, (a1x + t * rx, a1y + t * ry)
    return False, None


def seg_seg_distance(a1, a2, b1, b2) -> float:
    """Minimum distance between two segments (0 if they intersect)."""
    hit, _ = seg_seg_intersect(a1, a2, b1, b2)
    if hit:
        return 0.0
    return min(
        min_dist_point_segment(a1[0], a1[1], b1[0], b1[1], b2[0], b2[1]),
        min_dist_point_segment(a2[0], a2[1], b1[0], b1[1], b2[0], b2[1]),
        min_dist_point_segment(b1[0], b1[1], a1[0], a1[1], a2[0], a2[1]),
        min_dist_point_segment(b2[0], b2[1], a1[0], a1[1], a2[0], a2[1]),
    )


def point_in_polygon(px: float, py: float, vertices: np.ndarray) -> bool:
    """Ray-cast containment test against a closed polygon."""
    inside = False
    n = len(vertices)
    j = n - 1
    for i in range(n):
        xi, yi = vertices[i]
        xj, yj = vertices[j]
        if (yi > py) != (yj > py):
            x_cross = xi + (py - yi) * (xj - xi) / (yj - yi)
            if px < x_cross:
                inside = not inside
        j = i
    return inside


# ---------------------------------------------------------------------------
# Obstacles
# ---------------------------------------------------------------------------

@dataclass
class WaypointLoop:
    """Closed way-point route traversed at constant speed."""

    waypoints: np.ndarray  # (k, 2)
    speed: float

    def __post_init__(self) -> None:
        self.waypoints = np.asarray(self.waypoints, dtype=float)
        if self.waypoints.shape[0] < 2:
            raise ValueError("route needs at least 2 waypoints")
        if self.speed < 0:
            raise ValueError("route speed must be >= 0")
        pts = np.vstack([self.waypoints, self.waypoints[:1]])
        self._seg_vec = np.diff(pts, axis=0)
        self._seg_len = np.hypot(self._seg_vec[:, 0], self._seg_vec[:, 1])
        self._cum = np.concatenate([[0.0], np.cumsum(self._seg_len)])
        self.length = float(self._cum[-1])

    def sample(self, s: float) -> tuple[np.ndarray, np.ndarray]:
        """Position and velocity at arc length s (wrapped around the loop)."""
        s = s % self.length if self.length > 0 else 0.0
        i = int(np.searchsorted(self._cum, s, side="right") - 1)
        i = min(i, len(self._seg_len) - 1)
        seg_len = self._seg_len[i]
        frac = (s - self._cum[i]) / seg_len if seg_len > 0 else 0.0
        pos = self.waypoints[i] + frac * self._seg_vec[i]
        tangent = self._seg_vec[i] / seg_len if seg_len > 0 else np.zeros(2)
        return pos, tangent * self.speed


@dataclass
class CircleObstacle:
    """Disc obstacle; static if velocity is zero and no route is attached."""

    id: str
    center: np.ndarray
    radius: float
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    route: Optional[WaypointLoop] = None
    route_s: float = 0.0

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        if self.radius <= 0:
            raise ValueError(f"obstacle {self.id}: radius must be > 0")

    @property
    def moving(self) -> bool:
        return self.route is not None or bool(np.any(self.velocity != 0.0))

    def advance(self, dt: float) -> None:
        """Move along the route (or current velocity) for dt seconds."""
        if self.route is not None:
            self.route_s += self.route.speed * dt
            self.center, self.velocity = self.route.sample(self.route_s)
            self.center = self.center.copy()
        else:
            self.center = self.center + self.velocity * dt


@dataclass
class PolylineObstacle:
    """Chain of segments; closed chains bound land / no-go regions."""

    id: str
    vertices: np.ndarray
    closed: bool = False

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=float)
        if self.vertices.shape[0] < 2:
            raise ValueError(f"polyline {self.id}: needs >= 2 vertices")
        d = np.diff(self.vertices, axis=0)
        if np.any(np.hypot(d[:, 0], d[:, 1]) < 1e-9):
            raise ValueError(f"polyline {self.id}: consecutive vertices coincide")

    def segments(self) -> np.ndarray:
        """(n_seg, 2, 2) array of segment endpoints."""
        v = self.vertices
        if self.closed:
            v = np.vstack([v, v[:1]])
        return np.stack([v[:-1], v[1:]], axis=1)

    def contains(self, px: float, py: float) -> bool:
        return self.closed and point_in_polygon(px, py, self.vertices)


@dataclass(frozen=True)
class CollisionEvent:
    """Earliest contact within a step, t in [0, 1] of the step interval."""

    obstacle_id: str
    t: float
    point: tuple[float, float]
    agent_id: int = -1


# ---------------------------------------------------------------------------
# Hash-grid broad phase
# ---------------------------------------------------------------------------

class HashGrid:
    """Uniform grid over integer cell coordinates mapping to obstacle refs.

    Circles are inserted into every cell their radius-inflated bounding box
    touches; polyline segments into every cell of their segment bounding box.
    Queries return a superset of everything intersecting the query disc.
    """

    def __init__(self, cell_size: float):
        if cell_size <= 0:
            raise ValueError("cell_size must be > 0")
        self.cell_size = cell_size
        self._cells: dict[tuple[int, int], list[tuple]] = {}

    def _span(self, x0: float, y0: float, x1: float, y1: float):
        s = self.cell_size
        ix0, ix1 = math.floor(x0 / s), math.floor(x1 / s)
        iy0, iy1 = math.floor(y0 / s), math.floor(y1 / s)
        for ix in range(ix0, ix1 + 1):
            for iy in range(iy0, iy1 + 1):
                yield ix, iy

    def insert_box(self, ref: tuple, x0: float, y0: float, x1: float, y1: float) -> None:
        for key in self._span(x0, y0, x1, y1):
            self._cells.setdefault(key, []).append(ref)

    def query(self, px: float, py: float, radius: float) -> list[tuple]:
        """Deduplicated refs from all cells the query disc's box overlaps."""
        out: list[tuple] = []
        seen = set()
        for key in self._span(px - radius, py - radius, px + radius, py + radius):
            for ref in self._cells.get(key, ()):
                if ref not in seen:
                    seen.add(ref)
                    out.append(ref)
        return out

    def clear(self) -> None:
        self._cells.clear()


class ObstacleSet:
    """Circles + polylines with a rebuildable hash-grid index.

    Refs handed out by queries are ('c', i) for circles[i] and
    ('p', i, j) for segment j of polylines[i].
    """

    def __init__(self, circles: Iterable[CircleObstacle] = (),
                 polylines: Iterable[PolylineObstacle] = (),
                 cell_size: Optional[float] = None):
        self.circles: list[CircleObstacle] = list(circles)
        self.polylines: list[PolylineObstacle] = list(polylines)
        self._poly_segs = [p.segments() for p in self.polylines]
        if cell_size is None:
            # Low per-cell occupancy while keeping query fan-out bounded.
            max_r = max((c.radius for c in self.circles), default=0.0)
            cell_size = 4.0 * max_r if max_r > 0 else 100.0
        self.grid = HashGrid(cell_size)
        self.rebuild()

    @property
    def max_circle_radius(self) -> float:
        return max((c.radius for c in self.circles), default=0.0)

    @property
    def max_circle_speed(self) -> float:
        return max((float(np.hypot(*c.velocity)) for c in self.circles), default=0.0)

    def segment(self, poly_idx: int, seg_idx: int) -> np.ndarray:
        return self._poly_segs[poly_idx][seg_idx]

    def rebuild(self) -> None:
        """Re-index everything; call after any obstacle has moved."""
        self.grid.clear()
        for i, c in enumerate(self.circles):
            r = c.radius
            self.grid.insert_box(("c", i), c.center[0] - r, c.center[1] - r,
                                 c.center[0] + r, c.center[1] + r)
        for i, segs in enumerate(self._poly_segs):
            for j, seg in enumerate(segs):
                x0 = min(seg[0, 0], seg[1, 0])
                x1 = max(seg[0, 0], seg[1, 0])
                y0 = min(seg[0, 1], seg[1, 1])
                y1 = max(seg[0, 1], seg[1, 1])
                self.grid.insert_box(("p", i, j), x0, y0, x1, y1)

    def query(self, px: float, py: float, radius: float) -> list[tuple]:
        return self.grid.query(px, py, radius)

    def query_split(self, px: float, py: float, radius: float):
        """Query refs split into (circle indices, (poly, seg) index pairs)."""
        circles: list[int] = []
        segs: list[tuple[int, int]] = []
        for ref in self.query(px, py, radius):
            if ref[0] == "c":
                circles.append(ref[1])
            else:
                segs.append((ref[1], ref[2]))
        return circles, segs


# ---------------------------------------------------------------------------
# Continuous collision detection
# ---------------------------------------------------------------------------

def ccd_circle(p0, p1, agent_radius: float, obs: CircleObstacle,
               obs_p0, obs_p1) -> Optional[CollisionEvent]:
    """Earliest contact of two linearly moving discs within one step.

    Solves |rel0 + rel_v * t| = agent_radius + obs.radius exactly on t in
    [0, 1]; returns None when the combined discs never touch.
    """
    rx = p0[0] - obs_p0[0]
    ry = p0[1] - obs_p0[1]
    vx = (p1[0] - p0[0]) - (obs_p1[0] - obs_p0[0])
    vy = (p1[1] - p0[1]) - (obs_p1[1] - obs_p0[1])
    rr = agent_radius + obs.radius
    c = rx * rx + ry * ry - rr * rr
    if c <= 0.0:  # already overlapping at step start
        return CollisionEvent(obs.id, 0.0, _disc_contact(p0, obs_p0, agent_radius, rr))
    a = vx * vx + vy * vy
    b = 2.0 * (rx * vx + ry * vy)
    if a < _EPS:
        return None
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return None
    t = (-b - math.sqrt(disc)) / (2.0 * a)
    if t < 0.0 or t > 1.0:
        return None
    ax = p0[0] + (p1[0] - p0[0]) * t
    ay = p0[1] + (p1[1] - p0[1]) * t
    ox = obs_p0[0] + (obs_p1[0] - obs_p0[0]) * t
    oy = obs_p0[1] + (obs_p1[1] - obs_p0[1]) * t
    return CollisionEvent(obs.id, t, _disc_contact((ax, ay), (ox, oy), agent_radius, rr))


def _disc_contact(p, o, agent_radius: float, combined: float) -> tuple[float, float]:
    dx, dy = o[0] - p[0], o[1] - p[1]
    d = math.hypot(dx, dy)
    if d < _EPS or combined < _EPS:
        return (p[0], p[1])
    s = agent_radius / d
    return (p[0] + dx * s, p[1] + dy * s)


def swept_disc_segment_hits(p0, p1, radius: float, ax: float, ay: float,
                            bx: float, by: float) -> Optional[tuple[float, tuple[float, float]]]:
    """Earliest t in [0,1] at which a disc moving p0 -> p1 touches segment [a,b].

    Exact per-feature root isolation: the first contact is either with an
    endpoint (point-circle quadratic) or with the segment interior
    (perpendicular offset crossing +/- radius). No sampling.
    """
    d0 = min_dist_point_segment(p0[0], p0[1], ax, ay, bx, by)
    if d0 <= radius:
        return 0.0, _closest_on_segment(p0[0], p0[1], ax, ay, bx, by)
    mx, my = p1[0] - p0[0], p1[1] - p0[1]
    candidates: list[float] = []

    # Endpoint contacts: |p0 + m t - e| = radius
    for ex, ey in ((ax, ay), (bx, by)):
        qx, qy = p0[0] - ex, p0[1] - ey
        a = mx * mx + my * my
        b = 2.0 * (qx * mx + qy * my)
        c = qx * qx + qy * qy - radius * radius
        if a < _EPS:
            continue
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            continue
        sq = math.sqrt(disc)
        candidates.extend([(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)])

    # Interior contact: signed perpendicular offset reaches +/- radius.
    ex, ey = bx - ax, by - ay
    seg_len = math.hypot(ex, ey)
    if seg_len > _EPS:
        nx, ny = -ey / seg_len, ex / seg_len
        g0 = (p0[0] - ax) * nx + (p0[1] - ay) * ny
        gv = mx * nx + my * ny
        if abs(gv) > _EPS:
            for target in (radius, -radius, 0.0 if radius == 0.0 else None):
                if target is None:
                    continue
                t = (target - g0) / gv
                candidates.append(t)

    best = None
    tol = 1e-7 * max(1.0, radius, abs(mx) + abs(my))
    for t in candidates:
        if t < -1e-12 or t > 1.0 + 1e-12:
            continue
        t = min(max(t, 0.0), 1.0)
        px, py = p0[0] + mx * t, p0[1] + my * t
        if abs(min_dist_point_segment(px, py, ax, ay, bx, by) - radius) <= tol:
            if best is None or t < best:
                best = t
    if best is None:
        return None
    px, py = p0[0] + mx * best, p0[1] + my * best
    return best, _closest_on_segment(px, py, ax, ay, bx, by)


def _closest_on_segment(px, py, ax, ay, bx, by) -> tuple[float, float]:
    ex, ey = bx - ax, by - ay
    ll = ex * ex + ey * ey
    if ll < _EPS:
        return (ax, ay)
    t = ((px - ax) * ex + (py - ay) * ey) / ll
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return (ax + t * ex, ay + t * ey)


def ccd_polyline(p0, p1, agent_radius: float,
                 obs: PolylineObstacle) -> Optional[CollisionEvent]:
    """Earliest contact of a moving disc with any segment of a polyline."""
    best_t = None
    best_point = None
    for seg in obs.segments():
        hit = swept_disc_segment_hits(p0, p1, agent_radius,
                                      seg[0, 0], seg[0, 1], seg[1, 0], seg[1, 1])
        if hit is not None and (best_t is None or hit[0] < best_t):
            best_t, best_point = hit
    if best_t is None:
        return None
    return CollisionEvent(obs.id, best_t, best_point)
