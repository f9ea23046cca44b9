import math

import numpy as np
import pytest

from fairway.scenario import (
    RewardWeights,
    Scenario,
    ScenarioError,
    bundled_scenario_path,
    load_scenario,
)

BUNDLED = ("mini_coastline.yaml", "mini_port.yaml", "open_water.yaml")


@pytest.fixture()
def coastline():
    return load_scenario(bundled_scenario_path("mini_coastline.yaml"))


def write_scenario(tmp_path, text):
    p = tmp_path / "s.yaml"
    p.write_text(text)
    return p


MINIMAL = """\
fairway_scenario: 1
name: probe
extent: [1000.0, 800.0]
step_budget: 300
departure:
  rect: [100.0, 100.0, 300.0, 250.0]
goal:
  position: [800.0, 600.0]
  radius: 30.0
"""


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def test_bundled_scenarios_load():
    for name in BUNDLED:
        sc = load_scenario(bundled_scenario_path(name))
        assert isinstance(sc, Scenario)
        assert sc.step_budget > 0
        w, h = sc.extent
        assert w == 2000.0 or name == "open_water.yaml"
        x0, y0, x1, y1 = sc.departure_rect
        assert 0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h


def test_coastline_has_expected_shape(coastline):
    assert coastline.name == "mini-coastline"
    assert coastline.step_budget == 600
    assert len(coastline.static_circles) == 3
    assert coastline.spawner.count == 3
    assert len(coastline.spawner.routes) >= 1
    assert coastline.goal_radius > 0


def test_minimal_scenario_defaults(tmp_path):
    sc = load_scenario(write_scenario(tmp_path, MINIMAL))
    assert sc.name == "probe"
    assert sc.static_circles == []
    assert sc.polylines == []
    assert sc.spawner.count == 0
    assert sc.reward == RewardWeights()
    assert sc.rand.current_amp == (0.0, 0.0)
    assert sc.rand.sigma_pos == 0.0


def test_version_gate(tmp_path):
    bad = MINIMAL.replace("fairway_scenario: 1", "fairway_scenario: 99")
    with pytest.raises(ScenarioError, match="version"):
        load_scenario(write_scenario(tmp_path, bad))
    missing = MINIMAL.replace("fairway_scenario: 1\n", "")
    with pytest.raises(ScenarioError, match="version"):
        load_scenario(write_scenario(tmp_path, missing))


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ScenarioError, match="unknow"):
        load_scenario(write_scenario(tmp_path, MINIMAL + "typo_key: 3\n"))
    nested = MINIMAL + "reward:\n  w_progress: 1.0\n  w_bogus: 2.0\n"
    with pytest.raises(ScenarioError, match="unknow"):
        load_scenario(write_scenario(tmp_path, nested))


def test_goal_inside_obstacle_rejected(tmp_path):
    bad = MINIMAL + """\
static_circles:
  - {id: rock, center: [800.0, 600.0], radius: 50.0}
"""
    with pytest.raises(ScenarioError, match="goal"):
        load_scenario(write_scenario(tmp_path, bad))


def test_goal_inside_closed_polyline_rejected(tmp_path):
    bad = MINIMAL + """\
polylines:
  - id: farm
    closed: true
    vertices: [[700.0, 500.0], [900.0, 500.0], [900.0, 700.0], [700.0, 700.0]]
"""
    with pytest.raises(ScenarioError, match="goal"):
        load_scenario(write_scenario(tmp_path, bad))


def test_departure_outside_extent_rejected(tmp_path):
    bad = MINIMAL.replace("rect: [100.0, 100.0, 300.0, 250.0]",
                          "rect: [100.0, 100.0, 300.0, 900.0]")
    with pytest.raises(ScenarioError, match="departure"):
        load_scenario(write_scenario(tmp_path, bad))


def test_budget_must_be_positive(tmp_path):
    bad = MINIMAL.replace("step_budget: 300", "step_budget: 0")
    with pytest.raises(ScenarioError, match="budget"):
        load_scenario(write_scenario(tmp_path, bad))


def test_reward_invariants(tmp_path):
    bad = MINIMAL + "reward:\n  r_collision: 5.0\n"
    with pytest.raises(ScenarioError, match="r_collision"):
        load_scenario(write_scenario(tmp_path, bad))
    with pytest.raises(ValueError):
        RewardWeights(r_success=-1.0)
    with pytest.raises(ValueError):
        RewardWeights(c_time=-0.1)


def test_spawner_requires_routes(tmp_path):
    bad = MINIMAL + """\
moving_spawner:
  count: 2
  radius: [10.0, 20.0]
  speed: [1.0, 2.0]
  routes: []
"""
    with pytest.raises(ScenarioError, match="route"):
        load_scenario(write_scenario(tmp_path, bad))


# ---------------------------------------------------------------------------
# Spawner sampling
# ---------------------------------------------------------------------------

def test_spawner_sampling_deterministic_and_in_range(coastline):
    sp = coastline.spawner
    a = sp.sample(np.random.default_rng(99))
    b = sp.sample(np.random.default_rng(99))
    assert len(a) == len(b) == sp.count
    for oa, ob in zip(a, b):
        np.testing.assert_array_equal(oa.center, ob.center)
        assert oa.radius == ob.radius
        assert oa.route.speed == ob.route.speed
    rmin, rmax = sp.radius_range
    vmin, vmax = sp.speed_range
    for ob in a:
        assert rmin <= ob.radius <= rmax
        assert vmin <= ob.route.speed <= vmax
        assert ob.moving
        # the spawn point sits on the sampled route
        pos, _ = ob.route.sample(ob.route_s)
        np.testing.assert_allclose(pos, ob.center, atol=1e-9)


def test_spawner_draws_vary_with_seed(coastline):
    sp = coastline.spawner
    a = sp.sample(np.random.default_rng(1))
    b = sp.sample(np.random.default_rng(2))
    assert any(na.radius != nb.radius or not np.array_equal(na.center, nb.center)
               for na, nb in zip(a, b))


def test_goal_clear_of_static_field(coastline):
    gx, gy = coastline.goal_p
    for ob in coastline.static_circles:
        assert math.hypot(gx - ob.center[0], gy - ob.center[1]) > ob.radius
