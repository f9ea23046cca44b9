"""Batched navigation episodes: spawn, step, reward, terminate, measure.

One environment owns N maps x M vessels advanced in lockstep. Physics state
lives in a single (N*M, 9) array handed to the compiled kernels, so the
batch parallel strategies are purely a scheduling choice and trajectories
never depend on it. Everything stochastic draws from counter-style streams
keyed by (seed, env, agent, step, purpose); agents can be processed in any
order, or skipped once done, without shifting anyone else's randomness.

A control step is dt seconds of `substeps` physics sub-steps. Collision
checking is continuous over the step (both the agent and the traffic sweep
linearly), so fast vessels cannot tunnel through thin walls between
samples.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .angles import wrap_pi
from .dynamics import (
    ControlCommand,
    CurrentField,
    CurrentRealization,
    PidController,
    ShipParams,
    VesselState,
    bundled_data_path,
    load_ship_params,
)
from .geometry import CircleObstacle, ObstacleSet, ccd_circle, min_dist_point_segment, swept_disc_segment_hits
from .kernels import IC, IS, IU, IV, IX, IY
from .masking import ActionSet, MaskConfig, generate_mask
from .observation import (
    OBS_DIM,
    BevConfig,
    HistoryBuffer,
    PotentialConfig,
    aggregate_gradients,
    build_observation,
    render_bev,
)
from .scenario import Scenario, ScenarioError

TERM_NONE = 0
TERM_GOAL = 1
TERM_COLLISION = 2
TERM_BOUNDARY = 3
TERM_TIMEOUT = 4
TERMINATION_NAMES = ("none", "goal", "collision", "boundary", "timeout")

# stream purposes for the counter-based RNG keys
_TAG_SPAWN = 1
_TAG_TRAFFIC = 2
_TAG_CURRENT = 3
_TAG_CMD = 4
_TAG_SENSOR = 5

DEFAULT_SHIP = "coastal_nomoto.params"
DEFAULT_ACTION_SPEED = 5.144  # 10 kn, capped at the hull's service speed


@dataclass
class BatchConfig:
    """Batch geometry plus the base seed and parallel dispatch strategy."""

    n_envs: int = 1
    m_agents: int = 1
    seed: int = 0
    strategy: str = "full"

    def __post_init__(self) -> None:
        if self.n_envs < 1 or self.m_agents < 1:
            raise ValueError("n_envs and m_agents must be >= 1")
        if self.strategy not in kernels.STRATEGIES:
            raise ValueError(f"strategy must be one of {kernels.STRATEGIES}")


@dataclass
class StepResult:
    """One batched tick: everything a policy or a logger needs.

    info carries: 'unsafe' (masked-action count per agent), 'invalid_action'
    flags, 'collisions' as (agent_index, CollisionEvent) pairs, and
    'reward_parts' (B, 4) columns [progress, terminal, time_cost,
    gradient_penalty] with reward == parts[0] + parts[1] - parts[2] -
    parts[3] exactly.
    """

    obs_history: np.ndarray
    bev: np.ndarray
    mask: np.ndarray
    reward: np.ndarray
    done: np.ndarray
    termination: np.ndarray
    info: dict


def _stream(parts) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(p) for p in parts]))


class FairwayEnv:
    """Scenario + hull + batch geometry, stepped one control tick at a time."""

    def __init__(self, scenario: Scenario, ship: ShipParams = None,
                 batch: BatchConfig = None, *, action_speed: float = None,
                 mask_cfg: MaskConfig = None,
                 potential_cfg: PotentialConfig = None,
                 bev_cfg: BevConfig = None, render_bev: bool = True,
                 dt: float = 1.0, substeps: int = 10,
                 integrator: str = "rk4",
                 other_agents_are_obstacles: bool = False,
                 history_k: int = 8):
        self.scenario = scenario
        self.ship = ship if ship is not None else load_ship_params(
            bundled_data_path(DEFAULT_SHIP))
        self.batch = batch if batch is not None else BatchConfig()
        self.B = self.batch.n_envs * self.batch.m_agents
        speed = action_speed if action_speed is not None else min(
            DEFAULT_ACTION_SPEED, self.ship.service_speed)
        self.action_set = ActionSet(speed=speed)
        self.mask_cfg = mask_cfg if mask_cfg is not None else MaskConfig(5.0)
        self.potential_cfg = (potential_cfg if potential_cfg is not None
                              else PotentialConfig.for_ship(self.ship))
        self.bev_cfg = bev_cfg if bev_cfg is not None else BevConfig()
        self.render_bev_enabled = bool(render_bev)
        if dt <= 0 or substeps < 1:
            raise ValueError("need dt > 0 and substeps >= 1")
        self.dt = float(dt)
        self.substeps = int(substeps)
        self.integrator = integrator
        self._integ = (kernels.INTEGRATOR_RK4 if integrator == "rk4"
                       else kernels.INTEGRATOR_EULER)
        if integrator not in ("rk4", "euler"):
            raise ValueError("integrator must be 'rk4' or 'euler'")
        self.other_agents_are_obstacles = bool(other_agents_are_obstacles)

        self._pr = self.ship.pack()
        self._model = self.ship.model_id
        self._kinematic = self.ship.model_kind == "kinematic"
        self._pids = None if self._kinematic else [
            PidController(self.ship) for _ in range(self.B)]
        self._hist = [HistoryBuffer(history_k, OBS_DIM) for _ in range(self.B)]
        self._n_static = len(scenario.static_circles)
        self._extent = scenario.extent
        self._goal = np.asarray(scenario.goal_p, dtype=float)

        self._states = np.zeros((self.B, kernels.N_STATE))
        self._seed = self.batch.seed
        self._obs_sets = []
        self._currents = []
        self._result = None

    # -- public views ------------------------------------------------------

    @property
    def states(self) -> np.ndarray:
        return self._states.copy()

    @property
    def last_result(self) -> StepResult:
        return self._result

    def obstacle_set(self, env_idx: int) -> ObstacleSet:
        return self._obs_sets[env_idx]

    def vessel_state(self, agent_idx: int) -> VesselState:
        return VesselState.from_row(self._states[agent_idx])

    # -- reset -------------------------------------------------------------

    def reset(self, seed: int = None) -> StepResult:
        self._seed = self.batch.seed if seed is None else int(seed)
        sc = self.scenario
        n, m = self.batch.n_envs, self.batch.m_agents
        rand = sc.rand

        self._obs_sets = []
        self._currents = []
        for e in range(n):
            traffic = sc.spawner.sample(_stream([self._seed, e, _TAG_TRAFFIC]))
            self._obs_sets.append(ObstacleSet(
                list(sc.static_circles) + traffic, sc.polylines))
            rng_c = _stream([self._seed, e, _TAG_CURRENT])
            amp = float(rng_c.uniform(*rand.current_amp))
            ang = float(rng_c.uniform(*rand.current_dir))
            fld = CurrentField(np.array([math.cos(ang), math.sin(ang)]),
                               A=amp, f_range=rand.f_range, eps=rand.eps,
                               f_period=rand.period)
            self._currents.append(
                CurrentRealization(fld, int(rng_c.integers(2 ** 62))))

        self._states[:] = 0.0
        x0, y0, x1, y1 = sc.departure_rect
        gx, gy = self._goal
        self._last_cmd = np.zeros((self.B, 2))
        for e in range(n):
            placed = []
            for a in range(m):
                i = e * m + a
                rng = _stream([self._seed, e, a, _TAG_SPAWN])
                for _ in range(200):
                    px = float(rng.uniform(x0, x1))
                    py = float(rng.uniform(y0, y1))
                    if self._spawn_clear(e, px, py, placed):
                        break
                else:
                    raise ScenarioError(
                        f"could not spawn agent {a} in env {e}: departure "
                        f"region blocked after 200 attempts")
                placed.append((px, py))
                heading = math.atan2(gy - py, gx - px) + float(
                    rng.uniform(-sc.heading_jitter, sc.heading_jitter))
                self._states[i, IX] = px
                self._states[i, IY] = py
                self._states[i, IC] = math.cos(heading)
                self._states[i, IS] = math.sin(heading)
                self._last_cmd[i] = (wrap_pi(heading), 0.0)

        if self._pids is not None:
            for pid in self._pids:
                pid.reset()
        for h in self._hist:
            h.reset(np.zeros(OBS_DIM))

        d = self._states[:, :2] - self._goal[None, :]
        self._dist_prev = np.hypot(d[:, 0], d[:, 1])
        self._done = np.zeros(self.B, dtype=bool)
        self._term = np.zeros(self.B, dtype=np.int8)
        self._step_idx = 0
        self._mask = np.zeros((self.B, self.action_set.n_actions), dtype=bool)
        self._bev = (np.zeros((self.B, 4, self.bev_cfg.height,
                               self.bev_cfg.width), dtype=np.float32)
                     if self.render_bev_enabled else None)

        for i in range(self.B):
            self._refresh_agent_outputs(i, step_index=0, reset_history=True)

        zeros = np.zeros(self.B)
        self._result = self._assemble(
            reward=zeros, parts=np.zeros((self.B, 4)), collisions=[],
            invalid=np.zeros(self.B, dtype=bool))
        return self._result

    def _spawn_clear(self, e: int, px: float, py: float, placed) -> bool:
        safety = self.ship.safety_radius
        obs_set = self._obs_sets[e]
        for ob in obs_set.circles:
            if math.hypot(px - ob.center[0], py - ob.center[1]) <= ob.radius + safety:
                return False
        for pi, poly in enumerate(obs_set.polylines):
            if poly.contains(px, py):
                return False
            for seg in obs_set._poly_segs[pi]:
                if min_dist_point_segment(px, py, seg[0, 0], seg[0, 1],
                                          seg[1, 0], seg[1, 1]) <= safety:
                    return False
        if self.other_agents_are_obstacles:
            for qx, qy in placed:
                if math.hypot(px - qx, py - qy) <= 2.0 * safety:
                    return False
        return True

    # -- step --------------------------------------------------------------

    def step(self, actions) -> StepResult:
        actions = np.asarray(actions, dtype=np.int64).reshape(-1)
        if actions.shape != (self.B,):
            raise ValueError(f"expected {self.B} actions, got {actions.shape}")
        if self._result is None:
            raise RuntimeError("call reset() before step()")
        self._step_idx += 1
        t = self._step_idx
        sc = self.scenario
        n, m = self.batch.n_envs, self.batch.m_agents
        live = ~self._done

        # phase 1: the world moves (traffic sweeps linearly over the step)
        prev_centers = []
        for e in range(n):
            obs_set = self._obs_sets[e]
            moving = obs_set.circles[self._n_static:]
            prev_centers.append(np.array([ob.center for ob in moving])
                                if moving else np.zeros((0, 2)))
            for ob in moving:
                ob.advance(self.dt)
            if moving:
                obs_set.rebuild()

        # command resolution
        n_act = self.action_set.n_actions
        invalid = (actions < 0) | (actions >= n_act)
        cmd_a = np.zeros(self.B)
        cmd_b = np.zeros(self.B)
        currents = np.zeros((self.B, 2))
        t_start = (t - 1) * self.dt
        for e in range(n):
            cur = self._currents[e].sample(t_start)
            currents[e * m:(e + 1) * m] = cur
        sigma_cmd = sc.rand.sigma_cmd_heading
        for i in np.nonzero(live)[0]:
            e, a = divmod(int(i), m)
            if invalid[i]:
                heading, speed = self._last_cmd[i]
            else:
                psi = math.atan2(self._states[i, IS], self._states[i, IC])
                offset = self.action_set.offsets[actions[i]]
                heading = wrap_pi(psi + offset) if self.action_set.relative else offset
                if sigma_cmd > 0:
                    rng = _stream([self._seed, e, a, t, _TAG_CMD])
                    heading = wrap_pi(heading + rng.normal(0.0, sigma_cmd))
                speed = self.action_set.speed
                self._last_cmd[i] = (heading, speed)
            if self._kinematic:
                cmd_a[i] = heading
                cmd_b[i] = speed
            else:
                rudder, rpm = self._pids[i].track(
                    VesselState.from_row(self._states[i]),
                    ControlCommand(heading, speed), self.dt)
                cmd_a[i] = rudder
                cmd_b[i] = speed if self._model == kernels.MODEL_NOMOTO else rpm

        # phase 2: physics for everyone, then frozen rows restored
        p0 = self._states[:, :2].copy()
        frozen = self._states[self._done].copy()
        kernels.advance_batch(self._states, self._pr, self._model, self._integ,
                              cmd_a, cmd_b, currents, self.dt, self.substeps,
                              self.batch.strategy, n)
        self._states[self._done] = frozen

        rewards = np.zeros(self.B)
        parts = np.zeros((self.B, 4))
        collisions = []
        w, h = self._extent
        rw = sc.reward
        for i in np.nonzero(live)[0]:
            e = int(i) // m
            p0x, p0y = p0[i]
            p1x, p1y = self._states[i, IX], self._states[i, IY]

            event = self._sweep_collision(e, int(i), p0x, p0y, p1x, p1y,
                                          prev_centers[e])
            term = TERM_NONE
            if event is not None:
                term = TERM_COLLISION
                collisions.append((int(i), event))
            elif not (0.0 <= p1x <= w and 0.0 <= p1y <= h):
                term = TERM_BOUNDARY
            elif math.hypot(p1x - self._goal[0], p1y - self._goal[1]) <= sc.goal_radius:
                term = TERM_GOAL
            elif t >= sc.step_budget:
                term = TERM_TIMEOUT

            d_new = math.hypot(p1x - self._goal[0], p1y - self._goal[1])
            progress = rw.w_progress * (self._dist_prev[i] - d_new)
            self._dist_prev[i] = d_new
            if term == TERM_GOAL:
                terminal = rw.r_success
            elif term in (TERM_COLLISION, TERM_BOUNDARY):
                terminal = rw.r_collision
            else:
                terminal = 0.0
            block = aggregate_gradients((p1x, p1y), self._view_for(e, int(i)),
                                        self._goal, self.potential_cfg)
            pen = rw.w_gradient * max(0.0, block[6] + block[7]
                                      - rw.gradient_threshold)
            parts[i] = (progress, terminal, rw.c_time, pen)
            rewards[i] = ((progress + terminal) - rw.c_time) - pen

            self._refresh_agent_outputs(int(i), step_index=t)
            if term != TERM_NONE:
                self._done[i] = True
                self._term[i] = term

        self._result = self._assemble(reward=rewards, parts=parts,
                                      collisions=collisions, invalid=invalid)
        return self._result

    # -- helpers -----------------------------------------------------------

    def _view_for(self, e: int, i: int) -> ObstacleSet:
        """Obstacles as agent i sees them; adds peer vessels when enabled."""
        base = self._obs_sets[e]
        if not self.other_agents_are_obstacles:
            return base
        m = self.batch.m_agents
        extra = []
        for a in range(m):
            j = e * m + a
            if j == i or self._done[j]:
                continue
            st = self._states[j]
            vx = st[IU] * st[IC] - st[IV] * st[IS]
            vy = st[IU] * st[IS] + st[IV] * st[IC]
            extra.append(CircleObstacle(f"agent{j}", st[:2].copy(),
                                        self.ship.safety_radius,
                                        np.array([vx, vy])))
        if not extra:
            return base
        return ObstacleSet(base.circles + extra, base.polylines)

    def _sweep_collision(self, e: int, i: int, p0x, p0y, p1x, p1y,
                         prev_centers):
        obs_set = self._obs_sets[e]
        safety = self.ship.safety_radius
        sweep = math.hypot(p1x - p0x, p1y - p0y)
        reach = (sweep + safety + obs_set.max_circle_radius
                 + obs_set.max_circle_speed * self.dt + 1.0)
        circle_idx, seg_idx = obs_set.query_split(p0x, p0y, reach)
        best = None
        for ci in circle_idx:
            ob = obs_set.circles[ci]
            if ci >= self._n_static:
                op0 = prev_centers[ci - self._n_static]
            else:
                op0 = ob.center
            ev = ccd_circle((p0x, p0y), (p1x, p1y), safety, ob, op0, ob.center)
            if ev is not None and (best is None or ev.t < best.t):
                best = ev
        for pi, si in seg_idx:
            seg = obs_set.segment(pi, si)
            hit = swept_disc_segment_hits((p0x, p0y), (p1x, p1y), safety,
                                          seg[0, 0], seg[0, 1],
                                          seg[1, 0], seg[1, 1])
            if hit is not None and (best is None or hit[0] < best.t):
                from .geometry import CollisionEvent
                best = CollisionEvent(obs_set.polylines[pi].id, hit[0],
                                      hit[1], agent_id=i)
        if self.other_agents_are_obstacles:
            m = self.batch.m_agents
            for a in range(m):
                j = e * m + a
                if j == i or self._done[j]:
                    continue
                peer = CircleObstacle(f"agent{j}", self._states[j, :2].copy(),
                                      self.ship.safety_radius)
                # peers swept from their own pre-step positions
                ev = ccd_circle((p0x, p0y), (p1x, p1y), safety, peer,
                                self._peer_p0[j], self._states[j, :2])
                if ev is not None and (best is None or ev.t < best.t):
                    best = ev
        return best

    def _refresh_agent_outputs(self, i: int, step_index: int,
                               reset_history: bool = False) -> None:
        """Observation, BEV, and next mask for one agent from its new state."""
        e = int(i) // self.batch.m_agents
        a = int(i) % self.batch.m_agents
        view = self._view_for(e, i)
        st = self._states[i]
        x, y = st[IX], st[IY]
        psi = math.atan2(st[IS], st[IC])

        rand = self.scenario.rand
        nx, ny, npsi = x, y, psi
        if rand.sigma_pos > 0 or rand.sigma_heading > 0:
            rng = _stream([self._seed, e, a, step_index, _TAG_SENSOR])
            if rand.sigma_pos > 0:
                nx = x + rng.normal(0.0, rand.sigma_pos)
                ny = y + rng.normal(0.0, rand.sigma_pos)
            if rand.sigma_heading > 0:
                npsi = wrap_pi(psi + rng.normal(0.0, rand.sigma_heading))
        noisy = VesselState(x=nx, y=ny, psi=npsi, u=st[IU], v=st[IV],
                            r=st[kernels.IR], rudder=st[kernels.IRUD],
                            rpm=st[kernels.IRPM])

        obs = build_observation(noisy, self.ship, view, self._goal,
                                self._extent, step_index,
                                self.scenario.step_budget,
                                cmd_speed=self._last_cmd[i, 1],
                                cfg=self.potential_cfg)
        if reset_history:
            self._hist[i].reset(obs)
        else:
            self._hist[i].push(obs)
        if self._bev is not None:
            raster = render_bev(noisy, view, self._goal,
                                self.scenario.goal_radius, self.bev_cfg)
            self._bev[i] = raster.transpose(2, 0, 1)
        self._mask[i] = generate_mask((x, y), psi, self.ship.safety_radius,
                                      view, self.action_set, self.mask_cfg)

    def _assemble(self, reward, parts, collisions, invalid) -> StepResult:
        unsafe = self.action_set.n_actions - self._mask.sum(axis=1)
        return StepResult(
            obs_history=np.stack([h.tensor() for h in self._hist]),
            bev=self._bev.copy() if self._bev is not None else None,
            mask=self._mask.copy(),
            reward=reward,
            done=self._done.copy(),
            termination=self._term.copy(),
            info={"unsafe": unsafe.astype(np.int64),
                  "invalid_action": invalid,
                  "collisions": collisions,
                  "reward_parts": parts})


# ---------------------------------------------------------------------------
# Benchmark driver
# ---------------------------------------------------------------------------

@dataclass
class BenchReport:
    """Wall-clock per strategy plus cross-strategy agreement evidence."""

    n_envs: int
    m_agents: int
    n_commands: int
    substeps: int
    integrator: str
    trials: int
    times: dict
    mean: dict
    std: dict
    states_match: dict
    max_diff: dict


def run_benchmark(n_envs: int = 1024, m_agents: int = 64,
                  n_commands: int = 50, substeps: int = 10, trials: int = 3,
                  seed: int = 0, integrator: str = "rk4",
                  strategies=("full", "per-env", "per-agent"),
                  ship: ShipParams = None, dt: float = 1.0) -> BenchReport:
    """Time the batch kernel under each dispatch strategy on one workload.

    The workload follows the standard batch benchmark: full hydrodynamic
    model, n_commands control steps of `substeps` sub-steps each, same
    seeded initial states and command tape for every strategy. End states
    are compared against the first strategy run to prove the schedules are
    interchangeable.
    """
    if ship is None:
        ship = load_ship_params(bundled_data_path("tanker_7m.params"))
    pr = ship.pack()
    model = ship.model_id
    integ = (kernels.INTEGRATOR_RK4 if integrator == "rk4"
             else kernels.INTEGRATOR_EULER)
    B = n_envs * m_agents
    rng = np.random.default_rng(seed)
    init = np.zeros((B, kernels.N_STATE))
    init[:, IX] = rng.uniform(0, 2000, B)
    init[:, IY] = rng.uniform(0, 2000, B)
    psi = rng.uniform(-math.pi, math.pi, B)
    init[:, IC] = np.cos(psi)
    init[:, IS] = np.sin(psi)
    init[:, IU] = rng.uniform(0.5, 1.0, B) * ship.service_speed
    init[:, IV] = rng.uniform(-0.05, 0.05, B) * ship.service_speed
    init[:, kernels.IR] = rng.uniform(-0.02, 0.02, B)
    init[:, kernels.IRPM] = rng.uniform(0.5, 1.0, B)
    cmd_a = rng.uniform(-ship.rudder_max, ship.rudder_max, (n_commands, B))
    cmd_b = rng.uniform(0.3, 1.0, (n_commands, B))
    currents = np.zeros((B, 2))

    kernels.warmup(pr)

    times = {}
    end_states = {}
    for strategy in strategies:
        runs = []
        for _ in range(trials):
            st = init.copy()
            t0 = time.perf_counter()
            for k in range(n_commands):
                kernels.advance_batch(st, pr, model, integ, cmd_a[k], cmd_b[k],
                                      currents, dt, substeps, strategy, n_envs)
            runs.append(time.perf_counter() - t0)
        times[strategy] = runs
        end_states[strategy] = st

    ref = end_states[strategies[0]]
    states_match = {}
    max_diff = {}
    for strategy in strategies[1:]:
        diff = float(np.max(np.abs(end_states[strategy] - ref)))
        max_diff[strategy] = diff
        states_match[strategy] = (np.array_equal(end_states[strategy], ref)
                                  if integrator == "euler" else diff <= 1e-12)
    return BenchReport(
        n_envs=n_envs, m_agents=m_agents, n_commands=n_commands,
        substeps=substeps, integrator=integrator, trials=trials, times=times,
        mean={s: float(np.mean(v)) for s, v in times.items()},
        std={s: float(np.std(v)) for s, v in times.items()},
        states_match=states_match, max_diff=max_diff)


# ---------------------------------------------------------------------------
# Evaluation driver
# ---------------------------------------------------------------------------

@dataclass
class EpisodeStats:
    episode: int
    steps: int
    termination: str
    episode_return: float
    ua: float


@dataclass
class EvalMetrics:
    """Aggregate rollout metrics: SR %, episode length, unsafe actions."""

    sr: float
    length_mean: float
    length_std: float
    ua_mean: float
    ua_std: float
    n_episodes: int
    episodes: list = field(default_factory=list)


def evaluate(policy, scenario: Scenario, n_episodes: int, *,
             ship: ShipParams = None, seed: int = 0,
             action_speed: float = None, render_bev: bool = False,
             mask_cfg: MaskConfig = None, substeps: int = 10,
             integrator: str = "rk4",
             on_step=None) -> EvalMetrics:
    """Run seeded single-agent episodes and aggregate SR, length, and UA.

    The policy is called as policy(result) and must return an action index
    (or a length-1 array). UA for a decision is the number of masked
    candidates in the mask the policy saw, averaged per episode. on_step,
    when given, is called as on_step(episode, step, result, action) after
    every transition, which is enough to write full logs.
    """
    env = FairwayEnv(scenario, ship=ship,
                     batch=BatchConfig(n_envs=1, m_agents=1, seed=seed),
                     action_speed=action_speed, render_bev=render_bev,
                     mask_cfg=mask_cfg, substeps=substeps,
                     integrator=integrator)
    episodes = []
    for ep in range(n_episodes):
        ep_seed = int(np.random.SeedSequence([seed, ep]).generate_state(1)[0])
        result = env.reset(seed=ep_seed)
        steps = 0
        total = 0.0
        unsafe_seen = []
        while True:
            unsafe_seen.append(int(result.info["unsafe"][0]))
            action = int(np.atleast_1d(policy(result))[0])
            result = env.step([action])
            steps += 1
            total += float(result.reward[0])
            if on_step is not None:
                on_step(ep, steps, result, action)
            if result.done[0]:
                break
        episodes.append(EpisodeStats(
            episode=ep, steps=steps,
            termination=TERMINATION_NAMES[int(result.termination[0])],
            episode_return=total, ua=float(np.mean(unsafe_seen))))

    lengths = np.array([e.steps for e in episodes], dtype=float)
    uas = np.array([e.ua for e in episodes])
    sr = 100.0 * np.mean([e.termination == "goal" for e in episodes])
    return EvalMetrics(sr=float(sr),
                       length_mean=float(lengths.mean()),
                       length_std=float(lengths.std()),
                       ua_mean=float(uas.mean()),
                       ua_std=float(uas.std()),
                       n_episodes=n_episodes,
                       episodes=episodes)
