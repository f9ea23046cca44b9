import math

import numpy as np
import pytest

from fairway.geometry import (
    CircleObstacle,
    ObstacleSet,
    PolylineObstacle,
    WaypointLoop,
    ccd_circle,
    ccd_polyline,
    min_dist_point_segment,
    point_in_polygon,
    seg_seg_distance,
    seg_seg_intersect,
    swept_disc_segment_hits,
)


def make_circle(cid, cx, cy, r, vx=0.0, vy=0.0):
    return CircleObstacle(cid, np.array([cx, cy]), r, np.array([vx, vy]))


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

def test_point_segment_distance_regions():
    # beyond endpoint a, beyond endpoint b, interior projection
    assert min_dist_point_segment(-3.0, 4.0, 0.0, 0.0, 10.0, 0.0) == pytest.approx(5.0)
    assert min_dist_point_segment(13.0, -4.0, 0.0, 0.0, 10.0, 0.0) == pytest.approx(5.0)
    assert min_dist_point_segment(5.0, 2.5, 0.0, 0.0, 10.0, 0.0) == pytest.approx(2.5)
    # degenerate segment is a point
    assert min_dist_point_segment(3.0, 4.0, 0.0, 0.0, 0.0, 0.0) == pytest.approx(5.0)


def test_seg_seg_intersection_cases():
    hit, pt = seg_seg_intersect((0, 0), (10, 0), (5, -5), (5, 5))
    assert hit and pt == pytest.approx((5.0, 0.0))
    hit, _ = seg_seg_intersect((0, 0), (10, 0), (0, 1), (10, 1))
    assert not hit
    # collinear overlap
    hit, pt = seg_seg_intersect((0, 0), (10, 0), (5, 0), (15, 0))
    assert hit and pt[1] == pytest.approx(0.0)
    # touching at an endpoint counts
    hit, pt = seg_seg_intersect((0, 0), (5, 0), (5, 0), (5, 9))
    assert hit and pt == pytest.approx((5.0, 0.0))


def test_seg_seg_distance_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a1, a2, b1, b2 = rng.uniform(-10, 10, size=(4, 2))
        d = seg_seg_distance(tuple(a1), tuple(a2), tuple(b1), tuple(b2))
        ts = np.linspace(0, 1, 1001)
        pa = a1[None, :] + ts[:, None] * (a2 - a1)[None, :]
        brute = min(
            min_dist_point_segment(p[0], p[1], b1[0], b1[1], b2[0], b2[1]) for p in pa
        )
        assert d <= brute + 1e-9
        assert brute - d < 0.05  # sampling resolution slack


def test_point_in_polygon_square_and_concave():
    square = np.array([[0, 0], [10, 0], [10, 10], [0, 10]], dtype=float)
    assert point_in_polygon(5, 5, square)
    assert not point_in_polygon(15, 5, square)
    # concave "C" shape: the notch is outside
    c_shape = np.array([[0, 0], [10, 0], [10, 3], [3, 3], [3, 7], [10, 7], [10, 10], [0, 10]], dtype=float)
    assert point_in_polygon(1, 5, c_shape)
    assert not point_in_polygon(7, 5, c_shape)


# ---------------------------------------------------------------------------
# Obstacle types
# ---------------------------------------------------------------------------

def test_waypoint_loop_wraps_and_keeps_speed():
    loop = WaypointLoop(np.array([[0, 0], [10, 0], [10, 10], [0, 10]], dtype=float), speed=2.0)
    assert loop.length == pytest.approx(40.0)
    pos, vel = loop.sample(5.0)
    np.testing.assert_allclose(pos, [5.0, 0.0])
    np.testing.assert_allclose(vel, [2.0, 0.0])
    pos, vel = loop.sample(15.0)
    np.testing.assert_allclose(pos, [10.0, 5.0])
    np.testing.assert_allclose(vel, [0.0, 2.0])
    # wrap past the perimeter returns to the start leg
    pos_w, _ = loop.sample(45.0)
    pos_0, _ = loop.sample(5.0)
    np.testing.assert_allclose(pos_w, pos_0)


def test_moving_obstacle_advance_follows_route():
    loop = WaypointLoop(np.array([[0, 0], [100, 0]], dtype=float), speed=5.0)
    obs = CircleObstacle("m1", np.array([0.0, 0.0]), 10.0, route=loop)
    obs.advance(4.0)
    np.testing.assert_allclose(obs.center, [20.0, 0.0])
    np.testing.assert_allclose(obs.velocity, [5.0, 0.0])
    # past the far end the loop doubles back along the return leg
    obs.advance(18.0)  # s = 110 -> 10 into the return leg
    np.testing.assert_allclose(obs.center, [90.0, 0.0])
    np.testing.assert_allclose(obs.velocity, [-5.0, 0.0])


def test_polyline_rejects_degenerate_input():
    with pytest.raises(ValueError):
        PolylineObstacle("bad", np.array([[0.0, 0.0]]))
    with pytest.raises(ValueError):
        PolylineObstacle("dup", np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(ValueError):
        CircleObstacle("r0", np.array([0.0, 0.0]), 0.0)


def test_closed_polyline_containment_and_segments():
    poly = PolylineObstacle("land", np.array([[0, 0], [10, 0], [10, 10], [0, 10]], dtype=float), closed=True)
    assert poly.contains(5, 5)
    assert not poly.contains(-1, 5)
    assert poly.segments().shape == (4, 2, 2)
    open_poly = PolylineObstacle("wall", np.array([[0, 0], [10, 0], [10, 10]], dtype=float))
    assert open_poly.segments().shape == (2, 2, 2)
    assert not open_poly.contains(5, 5)


# ---------------------------------------------------------------------------
# Hash grid: no false negatives against brute force
# ---------------------------------------------------------------------------

def test_grid_query_superset_of_brute_force():
    rng = np.random.default_rng(42)
    circles = [
        make_circle(f"c{i}", *rng.uniform(0, 2000, 2), rng.uniform(5, 80))
        for i in range(200)
    ]
    polys = []
    for i in range(20):
        start = rng.uniform(0, 2000, 2)
        steps = rng.uniform(-150, 150, (4, 2))
        polys.append(PolylineObstacle(f"p{i}", np.vstack([start, start + np.cumsum(steps, axis=0)])))
    obs_set = ObstacleSet(circles, polys)

    for _ in range(100):
        px, py = rng.uniform(0, 2000, 2)
        radius = rng.uniform(10, 300)
        got_c, got_s = obs_set.query_split(px, py, radius)
        got_c, got_s = set(got_c), set(got_s)
        for i, c in enumerate(circles):
            if math.hypot(px - c.center[0], py - c.center[1]) <= radius + c.radius:
                assert i in got_c
        for i, p in enumerate(polys):
            for j, seg in enumerate(p.segments()):
                if min_dist_point_segment(px, py, seg[0, 0], seg[0, 1], seg[1, 0], seg[1, 1]) <= radius:
                    assert (i, j) in got_s


def test_grid_rebuild_after_motion_drops_stale_entries():
    obs = make_circle("m", 100.0, 100.0, 10.0, vx=50.0)
    obs_set = ObstacleSet([obs], cell_size=40.0)
    assert ("c", 0) in obs_set.query(100.0, 100.0, 5.0)
    obs.advance(10.0)  # center moves to (600, 100)
    obs_set.rebuild()
    assert ("c", 0) not in obs_set.query(100.0, 100.0, 5.0)
    assert ("c", 0) in obs_set.query(600.0, 100.0, 5.0)


# ---------------------------------------------------------------------------
# Continuous collision: frozen cases
# ---------------------------------------------------------------------------

def test_ccd_point_vs_static_circle_exact_root():
    # Point from (0,0) to (10,0); circle at (5,3), radius 4.
    # (10t-5)^2 + 9 = 16  =>  t = (5 - sqrt(7)) / 10
    obs = make_circle("c", 5.0, 3.0, 4.0)
    ev = ccd_circle((0, 0), (10, 0), 0.0, obs, obs.center, obs.center)
    assert ev is not None
    assert ev.t == pytest.approx((5.0 - math.sqrt(7.0)) / 10.0, abs=1e-12)
    assert ev.obstacle_id == "c"
    # contact point sits on the circle boundary
    d = math.hypot(ev.point[0] - 5.0, ev.point[1] - 3.0)
    assert d == pytest.approx(4.0, abs=1e-9)


def test_ccd_head_on_symmetric_meets_at_half():
    # Closing speed 20, initial gap 20 - (2 + 8) = 10 -> contact at t = 0.5.
    obs = make_circle("o", 20.0, 0.0, 8.0)
    ev = ccd_circle((0, 0), (10, 0), 2.0, obs, (20.0, 0.0), (10.0, 0.0))
    assert ev is not None
    assert ev.t == pytest.approx(0.5, abs=1e-12)


def test_ccd_miss_and_overlap_and_receding():
    far = make_circle("f", 0.0, 50.0, 4.0)
    assert ccd_circle((0, 0), (10, 0), 1.0, far, far.center, far.center) is None
    inside = make_circle("i", 0.5, 0.0, 4.0)
    ev = ccd_circle((0, 0), (10, 0), 1.0, inside, inside.center, inside.center)
    assert ev is not None and ev.t == 0.0
    # moving directly away never collides
    behind = make_circle("b", -20.0, 0.0, 4.0)
    assert ccd_circle((0, 0), (10, 0), 1.0, behind, behind.center, behind.center) is None


def test_swept_segment_interior_and_endpoint_contacts():
    # Disc r=1 moving straight down onto a horizontal wall: touches at y=1.
    hit = swept_disc_segment_hits((5, 10), (5, -10), 1.0, 0.0, 0.0, 10.0, 0.0)
    assert hit is not None
    t, pt = hit
    assert t == pytest.approx(9.0 / 20.0, abs=1e-12)
    assert pt == pytest.approx((5.0, 0.0))
    # Passing beyond the endpoint: first contact is the endpoint cap.
    hit = swept_disc_segment_hits((10.5, 10), (10.5, -10), 1.0, 0.0, 0.0, 10.0, 0.0)
    assert hit is not None
    t, pt = hit
    # |(.5, y)| = 1  =>  y = sqrt(3)/2, from y=10 moving at speed 20
    assert t == pytest.approx((10.0 - math.sqrt(3.0) / 2.0) / 20.0, abs=1e-12)
    assert pt == pytest.approx((10.0, 0.0))
    # Clearing the endpoint entirely: no contact.
    assert swept_disc_segment_hits((11.5, 10), (11.5, -10), 1.0, 0.0, 0.0, 10.0, 0.0) is None


def test_ccd_polyline_picks_earliest_segment():
    poly = PolylineObstacle("w", np.array([[2.0, -5.0], [2.0, 5.0], [8.0, 5.0], [8.0, -5.0]]))
    ev = ccd_polyline((0.0, 0.0), (10.0, 0.0), 0.5, poly)
    assert ev is not None
    assert ev.t == pytest.approx(1.5 / 10.0, abs=1e-12)  # first wall at x=2, radius 0.5
    assert ev.point == pytest.approx((2.0, 0.0))


# ---------------------------------------------------------------------------
# Continuous collision: property checks against dense sampling
# ---------------------------------------------------------------------------

def sampled_first_contact(p0, p1, radius, dist_fn, n=4001):
    ts = np.linspace(0.0, 1.0, n)
    for t in ts:
        px = p0[0] + (p1[0] - p0[0]) * t
        py = p0[1] + (p1[1] - p0[1]) * t
        if dist_fn(px, py, t) <= radius:
            return float(t)
    return None


def test_ccd_circle_agrees_with_dense_sampling():
    rng = np.random.default_rng(123)
    checked = 0
    for k in range(300):
        p0 = rng.uniform(-50, 50, 2)
        p1 = rng.uniform(-50, 50, 2)
        if k % 2 == 0:
            # bias half the scenes toward the path so contacts are plentiful
            frac = rng.uniform(0.1, 0.9)
            oc = p0 + frac * (p1 - p0) + rng.normal(0, 4, 2)
        else:
            oc = rng.uniform(-50, 50, 2)
        ov = rng.uniform(-5, 5, 2)
        r_a = rng.uniform(0.5, 3.0)
        obs = make_circle("x", oc[0], oc[1], rng.uniform(1.0, 8.0), ov[0], ov[1])
        o1 = obs.center + ov
        ev = ccd_circle(tuple(p0), tuple(p1), r_a, obs, tuple(obs.center), tuple(o1))
        rr = r_a + obs.radius

        def rel_dist(px, py, t):
            ox = oc[0] + ov[0] * t
            oy = oc[1] + ov[1] * t
            return math.hypot(px - ox, py - oy)

        t_s = sampled_first_contact(tuple(p0), tuple(p1), rr, rel_dist)
        if ev is None:
            # sampling may only find grazing contacts CCD reports as tangent misses
            assert t_s is None or rel_dist(
                p0[0] + (p1[0] - p0[0]) * t_s, p0[1] + (p1[1] - p0[1]) * t_s, t_s
            ) > rr - 1e-6
        else:
            assert t_s is not None
            assert abs(ev.t - t_s) <= 1.1 / 4000.0
            checked += 1
    assert checked > 50  # scene generator actually produced collisions


def test_swept_segment_agrees_with_dense_sampling():
    rng = np.random.default_rng(321)
    checked = 0
    for _ in range(300):
        p0 = rng.uniform(-40, 40, 2)
        p1 = rng.uniform(-40, 40, 2)
        a = rng.uniform(-40, 40, 2)
        b = rng.uniform(-40, 40, 2)
        if math.hypot(*(b - a)) < 1e-6:
            continue
        r = rng.uniform(0.5, 5.0)
        hit = swept_disc_segment_hits(tuple(p0), tuple(p1), r, a[0], a[1], b[0], b[1])

        def seg_dist(px, py, _t):
            return min_dist_point_segment(px, py, a[0], a[1], b[0], b[1])

        t_s = sampled_first_contact(tuple(p0), tuple(p1), r, seg_dist)
        if hit is None:
            assert t_s is None or seg_dist(
                p0[0] + (p1[0] - p0[0]) * t_s, p0[1] + (p1[1] - p0[1]) * t_s, t_s
            ) > r - 1e-6
        else:
            assert t_s is not None
            assert abs(hit[0] - t_s) <= 1.1 / 4000.0
            checked += 1
    assert checked > 50


def test_ccd_invariant_under_rigid_motion():
    rng = np.random.default_rng(5)
    for _ in range(100):
        p0 = rng.uniform(-20, 20, 2)
        p1 = rng.uniform(-20, 20, 2)
        oc = rng.uniform(-20, 20, 2)
        r_a, r_o = rng.uniform(0.5, 2.0), rng.uniform(1.0, 6.0)
        obs = make_circle("x", oc[0], oc[1], r_o)
        ev = ccd_circle(tuple(p0), tuple(p1), r_a, obs, tuple(oc), tuple(oc))

        theta = rng.uniform(0, 2 * math.pi)
        shift = rng.uniform(-100, 100, 2)
        rot = np.array([[math.cos(theta), -math.sin(theta)],
                        [math.sin(theta), math.cos(theta)]])
        tp0, tp1, toc = (rot @ p0 + shift, rot @ p1 + shift, rot @ oc + shift)
        obs2 = make_circle("x", toc[0], toc[1], r_o)
        ev2 = ccd_circle(tuple(tp0), tuple(tp1), r_a, obs2, tuple(toc), tuple(toc))

        assert (ev is None) == (ev2 is None)
        if ev is not None:
            assert ev.t == pytest.approx(ev2.t, abs=1e-9)


def test_ccd_split_step_finds_same_contact_time():
    rng = np.random.default_rng(9)
    found = 0
    for k in range(200):
        p0 = rng.uniform(-30, 30, 2)
        p1 = rng.uniform(-30, 30, 2)
        if k % 2 == 0:
            frac = rng.uniform(0.1, 0.9)
            oc = p0 + frac * (p1 - p0) + rng.normal(0, 3, 2)
        else:
            oc = rng.uniform(-30, 30, 2)
        obs = make_circle("x", oc[0], oc[1], rng.uniform(1, 6))
        ev = ccd_circle(tuple(p0), tuple(p1), 1.0, obs, tuple(oc), tuple(oc))
        if ev is None or ev.t == 0.0:
            continue
        mid = 0.5 * (p0 + p1)
        ev_a = ccd_circle(tuple(p0), tuple(mid), 1.0, obs, tuple(oc), tuple(oc))
        if ev.t <= 0.5:
            assert ev_a is not None
            assert ev_a.t * 0.5 == pytest.approx(ev.t, abs=1e-9)
        else:
            assert ev_a is None
            ev_b = ccd_circle(tuple(mid), tuple(p1), 1.0, obs, tuple(oc), tuple(oc))
            assert ev_b is not None
            assert 0.5 + ev_b.t * 0.5 == pytest.approx(ev.t, abs=1e-9)
        found += 1
    assert found > 30
