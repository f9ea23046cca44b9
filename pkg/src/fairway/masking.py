"""Velocity-obstacle action masking and the masked action distribution.

A candidate action is a heading at the commanded speed. Per decision step the
masker clears the bit of every candidate whose constant-velocity extrapolation
would come to grief inside the safety horizon: entering the velocity-obstacle
cone of a nearby circle with time-to-collision under the horizon, or passing
within clearance of (or through) a polyline. Bits are 1 = safe.

The mask reasons about intent under a linear-motion assumption; it is audited
against a dense constant-velocity rollout oracle (`rollout_unsafe`), which the
test suite and the audit CLI share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .angles import wrap_pi
from .geometry import (
    ObstacleSet,
    min_dist_point_segment,
    seg_seg_distance,
    swept_disc_segment_hits,
)


class NoSafeAction(Exception):
    """Raised when a mask has no set bits and a distribution is requested."""


@dataclass
class ActionSet:
    """Discrete heading candidates shared by the masker and the policies.

    Offsets are uniform over [-pi, pi). With ``relative`` set (the default)
    they are applied to the current heading each step; otherwise they are
    absolute world-frame headings.
    """

    n_actions: int = 18
    speed: float = 5.144  # 10 kn
    relative: bool = True

    def __post_init__(self) -> None:
        if self.n_actions < 2:
            raise ValueError("n_actions must be >= 2")
        if self.speed <= 0:
            raise ValueError("candidate speed must be > 0")

    @property
    def offsets(self) -> np.ndarray:
        i = np.arange(self.n_actions)
        return -math.pi + i * (2.0 * math.pi / self.n_actions)

    def headings(self, current_psi: float) -> np.ndarray:
        """Absolute candidate headings for one decision step."""
        if self.relative:
            return np.array([wrap_pi(current_psi + o) for o in self.offsets])
        return self.offsets.copy()

    def velocities(self, current_psi: float) -> np.ndarray:
        """(n, 2) candidate velocity vectors."""
        h = self.headings(current_psi)
        return np.stack([self.speed * np.cos(h), self.speed * np.sin(h)], axis=1)


def vo_cone_contains(agent_p, agent_v_candidate, obs_center, obs_velocity,
                     combined_radius: float) -> bool:
    """True iff the relative velocity points into the collision cone.

    Equivalent to: there is a t > 0 at which the relative position passes
    within combined_radius. An agent already inside the combined disc is
    always "contained".
    """
    if combined_radius <= 0:
        raise ValueError("combined_radius must be > 0")
    rpx = obs_center[0] - agent_p[0]
    rpy = obs_center[1] - agent_p[1]
    rvx = agent_v_candidate[0] - obs_velocity[0]
    rvy = agent_v_candidate[1] - obs_velocity[1]
    dist2 = rpx * rpx + rpy * rpy
    if dist2 <= combined_radius * combined_radius:
        return True
    proj = rvx * rpx + rvy * rpy
    if proj <= 0.0:
        return False
    cross = rvx * rpy - rvy * rpx
    vv = rvx * rvx + rvy * rvy
    return cross * cross <= combined_radius * combined_radius * vv


def ttc_circle(agent_p, agent_v_candidate, obs_center, obs_velocity,
               combined_radius: float) -> float:
    """Earliest t >= 0 with relative distance equal to combined_radius.

    Starting inside the combined disc returns 0. No approach returns +inf.
    """
    rpx = agent_p[0] - obs_center[0]
    rpy = agent_p[1] - obs_center[1]
    rvx = agent_v_candidate[0] - obs_velocity[0]
    rvy = agent_v_candidate[1] - obs_velocity[1]
    c = rpx * rpx + rpy * rpy - combined_radius * combined_radius
    if c <= 0.0:
        return 0.0
    a = rvx * rvx + rvy * rvy
    if a < 1e-18:
        return math.inf
    b = 2.0 * (rpx * rvx + rpy * rvy)
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return math.inf
    t = (-b - math.sqrt(disc)) / (2.0 * a)
    return t if t >= 0.0 else math.inf


def polyline_unsafe(agent_p, candidate_v, horizon_s: float, segments,
                    clearance: float) -> bool:
    """True iff the horizon path passes within clearance of any segment.

    `segments` is an iterable of ((ax, ay), (bx, by)) pairs; intersection is
    the distance-zero case, so one distance test covers both branches.
    """
    if horizon_s <= 0:
        raise ValueError("horizon must be > 0")
    p1 = (agent_p[0] + candidate_v[0] * horizon_s,
          agent_p[1] + candidate_v[1] * horizon_s)
    p0 = (agent_p[0], agent_p[1])
    for a, b in segments:
        if seg_seg_distance(p0, p1, a, b) < clearance:
            return True
    return False


@dataclass
class MaskConfig:
    """Knobs for mask generation, shared per scenario."""

    horizon_s: float
    clearance_factor: float = 0.5  # clearance = (1 + factor) * safety_radius

    def __post_init__(self) -> None:
        if self.horizon_s <= 0:
            raise ValueError("horizon must be > 0")

    def clearance(self, safety_radius: float) -> float:
        return (1.0 + self.clearance_factor) * safety_radius


def query_radius(obs_set: ObstacleSet, speed: float, horizon_s: float,
                 clearance: float) -> float:
    """Broad-phase radius that cannot miss a relevant obstacle.

    Covers the agent's own reach over the horizon, the fastest obstacle's
    reach, the largest circle radius, and the clearance band.
    """
    return ((speed + obs_set.max_circle_speed) * horizon_s
            + obs_set.max_circle_radius + clearance)


def generate_mask(agent_p, psi: float, safety_radius: float,
                  obs_set: ObstacleSet, action_set: ActionSet,
                  cfg: MaskConfig) -> np.ndarray:
    """Alg.-style per-step active mask: start all-safe, clear unsafe bits.

    A candidate is cleared when it enters a nearby circle's velocity-obstacle
    cone with TTC under the horizon, or when its horizon path violates
    polyline clearance. Bits are independent across candidates; an all-zero
    result is valid (handled by the fallback policy downstream).
    """
    clearance = cfg.clearance(safety_radius)
    radius = query_radius(obs_set, action_set.speed, cfg.horizon_s, clearance)
    circle_idx, seg_idx = obs_set.query_split(agent_p[0], agent_p[1], radius)
    segs = [(tuple(obs_set.segment(pi, si)[0]), tuple(obs_set.segment(pi, si)[1]))
            for pi, si in seg_idx]

    vels = action_set.velocities(psi)
    bits = np.ones(action_set.n_actions, dtype=bool)
    for i in range(action_set.n_actions):
        v = (vels[i, 0], vels[i, 1])
        for ci in circle_idx:
            obs = obs_set.circles[ci]
            rr = safety_radius + obs.radius
            if (vo_cone_contains(agent_p, v, obs.center, obs.velocity, rr)
                    and ttc_circle(agent_p, v, obs.center, obs.velocity, rr)
                    < cfg.horizon_s):
                bits[i] = False
                break
        if bits[i] and segs and polyline_unsafe(agent_p, v, cfg.horizon_s,
                                                segs, clearance):
            bits[i] = False
    return bits


def min_ttc(agent_p, v, obs_set: ObstacleSet, safety_radius: float,
            clearance: float, circle_idx, seg_idx) -> float:
    """Smallest time at which this velocity meets any nearby obstacle."""
    best = math.inf
    for ci in circle_idx:
        obs = obs_set.circles[ci]
        t = ttc_circle(agent_p, v, obs.center, obs.velocity,
                       safety_radius + obs.radius)
        if t < best:
            best = t
    speed = math.hypot(v[0], v[1])
    if speed > 1e-12:
        for pi, si in seg_idx:
            seg = obs_set.segment(pi, si)
            d_now = min_dist_point_segment(agent_p[0], agent_p[1],
                                           seg[0, 0], seg[0, 1],
                                           seg[1, 0], seg[1, 1])
            if d_now <= clearance:
                best = 0.0
                continue
            # first time the path point comes within clearance of the segment
            far_t = 1e6 / speed
            hit = swept_disc_segment_hits(
                (agent_p[0], agent_p[1]),
                (agent_p[0] + v[0] * far_t, agent_p[1] + v[1] * far_t),
                clearance, seg[0, 0], seg[0, 1], seg[1, 0], seg[1, 1])
            if hit is not None:
                t = hit[0] * far_t
                if t < best:
                    best = t
    return best


def fallback_action(agent_p, psi: float, safety_radius: float,
                    obs_set: ObstacleSet, action_set: ActionSet,
                    cfg: MaskConfig) -> int:
    """Least-bad action when every bit is cleared: maximize the minimum TTC.

    Ties break toward the smaller heading change, and between symmetric
    offsets toward starboard (the negative offset).
    """
    clearance = cfg.clearance(safety_radius)
    radius = query_radius(obs_set, action_set.speed, cfg.horizon_s, clearance)
    # widen the fallback lookahead so "least bad" can see past the horizon
    circle_idx, seg_idx = obs_set.query_split(agent_p[0], agent_p[1], radius * 4.0)
    vels = action_set.velocities(psi)
    offsets = action_set.offsets
    best_i = 0
    best_key = (-math.inf, -math.inf, -math.inf)
    for i in range(action_set.n_actions):
        t = min_ttc(agent_p, (vels[i, 0], vels[i, 1]), obs_set, safety_radius,
                    clearance, circle_idx, seg_idx)
        key = (t, -abs(offsets[i]), -offsets[i])
        if key > best_key:
            best_key = key
            best_i = i
    return best_i


def masked_distribution(logits, mask) -> np.ndarray:
    """Probabilities proportional to exp(logit) * bit, stabilized.

    Masked entries are exactly zero; the max logit over unmasked entries is
    subtracted before exponentiation so extreme logits stay finite.
    """
    logits = np.asarray(logits, dtype=float)
    bits = np.asarray(mask, dtype=bool)
    if logits.shape != bits.shape:
        raise ValueError("logits and mask shapes differ")
    if not bits.any():
        raise NoSafeAction("all actions masked")
    out = np.zeros(logits.shape[0])
    z = logits[bits]
    ez = np.exp(z - z.max())
    out[bits] = ez / ez.sum()
    return out


def unsafe_count(mask) -> int:
    """Number of cleared bits (the UA metric's per-step contribution)."""
    bits = np.asarray(mask, dtype=bool)
    return int(bits.shape[0] - bits.sum())


# ---------------------------------------------------------------------------
# Audit oracle
# ---------------------------------------------------------------------------

def rollout_unsafe(agent_p, v, obs_set: ObstacleSet, safety_radius: float,
                   horizon_s: float, clearance: float,
                   samples: int = 1000) -> bool:
    """Dense constant-velocity rollout: ground truth for mask audits.

    Simulates the agent and every circle obstacle at fixed velocities over
    the horizon and reports whether the agent ever violates a combined
    radius or polyline clearance. Brute force over all obstacles, on
    purpose: no grid, no cones, no root solving.
    """
    ts = np.linspace(0.0, horizon_s, samples + 1)
    px = agent_p[0] + v[0] * ts
    py = agent_p[1] + v[1] * ts
    for obs in obs_set.circles:
        ox = obs.center[0] + obs.velocity[0] * ts
        oy = obs.center[1] + obs.velocity[1] * ts
        rr = safety_radius + obs.radius
        if np.any((px - ox) ** 2 + (py - oy) ** 2 <= rr * rr):
            return True
    for poly in obs_set.polylines:
        for seg in poly.segments():
            for x, y in zip(px, py):
                if min_dist_point_segment(x, y, seg[0, 0], seg[0, 1],
                                          seg[1, 0], seg[1, 1]) < clearance:
                    return True
    return False


def continuous_margin(agent_p, v, obs_set: ObstacleSet, safety_radius: float,
                      horizon_s: float, clearance: float) -> float:
    """Signed clearance margin of a constant-velocity horizon path.

    Negative means some threshold is violated within the horizon. Closed
    form (no sampling), brute force over all obstacles; used to classify
    mask/oracle disagreements as boundary cases.
    """
    best = math.inf
    for obs in obs_set.circles:
        rpx = agent_p[0] - obs.center[0]
        rpy = agent_p[1] - obs.center[1]
        rvx = v[0] - obs.velocity[0]
        rvy = v[1] - obs.velocity[1]
        a = rvx * rvx + rvy * rvy
        t = 0.0 if a < 1e-18 else min(max(-(rpx * rvx + rpy * rvy) / a, 0.0),
                                      horizon_s)
        d = math.hypot(rpx + rvx * t, rpy + rvy * t)
        best = min(best, d - (safety_radius + obs.radius))
    p0 = (agent_p[0], agent_p[1])
    p1 = (agent_p[0] + v[0] * horizon_s, agent_p[1] + v[1] * horizon_s)
    for poly in obs_set.polylines:
        for seg in poly.segments():
            d = seg_seg_distance(p0, p1, (seg[0, 0], seg[0, 1]),
                                 (seg[1, 0], seg[1, 1]))
            best = min(best, d - clearance)
    return best
