"""Compiled per-agent physics kernels and the batch dispatch strategies.

State rows carry heading as a (cos, sin) pair so integrator stages never call
trig; the pair is renormalized after each sub-step and converted back to an
angle only at the API boundary. All kernels are strict IEEE (no fastmath) and
share one inlined per-agent sub-step, so every dispatch strategy reproduces
bit-identical trajectories.

Row layout: [x, y, cos psi, sin psi, u, v, r, rudder, rpm]
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

N_STATE = 9
IX, IY, IC, IS, IU, IV, IR, IRUD, IRPM = range(N_STATE)

# Parameter vector layout (see ShipParams.pack).
P_MODEL = 0
P_LEN, P_DRAFT, P_RHO, P_M, P_IZ = 1, 2, 3, 4, 5
P_R0, P_XVV, P_XVR, P_XRR, P_XVVVV = 6, 7, 8, 9, 10
P_YV, P_YR, P_YVVV, P_YVVR, P_YVRR, P_YRRR = 11, 12, 13, 14, 15, 16
P_NV, P_NR, P_NVVV, P_NVVR, P_NVRR, P_NRRR = 17, 18, 19, 20, 21, 22
P_TP, P_WP0, P_DP, P_K0, P_K1, P_K2, P_NMAX = 23, 24, 25, 26, 27, 28, 29
P_AR, P_FALPHA, P_TR, P_AH, P_XR, P_XH, P_REPS, P_GAMR = 30, 31, 32, 33, 34, 35, 36, 37
P_RUDMAX, P_RUDRATE, P_RPMTAU = 38, 39, 40
P_NK, P_NT = 41, 42
P_KTURN, P_KACC = 43, 44
P_VSRV = 45
N_PARAMS = 46

MODEL_MMG = 0
MODEL_NOMOTO = 1
MODEL_KINEMATIC = 2

INTEGRATOR_EULER = 0
INTEGRATOR_RK4 = 1

STRATEGIES = ("full", "per-env", "per-agent")


@njit(cache=True, inline="always")
def _wrap_pi(a):
    a = a % (2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    return a


@njit(cache=True, inline="always")
def _mmg_deriv(c, s, u, v, r, rpm, sd, cd, pr, cx, cy):
    # through-water velocity in the body frame
    ur = u - (cx * c + cy * s)
    vr = v - (-cx * s + cy * c)
    L = pr[P_LEN]
    rho = pr[P_RHO]
    U2 = ur * ur + vr * vr
    U = math.sqrt(U2)

    if U > 1e-9:
        vp = vr / U
        rp = r * L / U
        vp2 = vp * vp
        rp2 = rp * rp
        q = 0.5 * rho * L * pr[P_DRAFT] * U2
        Xh = q * (-pr[P_R0] + pr[P_XVV] * vp2 + pr[P_XVR] * vp * rp
                  + pr[P_XRR] * rp2 + pr[P_XVVVV] * vp2 * vp2)
        Yh = q * (pr[P_YV] * vp + pr[P_YR] * rp + pr[P_YVVV] * vp2 * vp
                  + pr[P_YVVR] * vp2 * rp + pr[P_YVRR] * vp * rp2
                  + pr[P_YRRR] * rp2 * rp)
        Nh = q * L * (pr[P_NV] * vp + pr[P_NR] * rp + pr[P_NVVV] * vp2 * vp
                      + pr[P_NVVR] * vp2 * rp + pr[P_NVRR] * vp * rp2
                      + pr[P_NRRR] * rp2 * rp)
    else:
        Xh = 0.0
        Yh = 0.0
        Nh = 0.0

    # propeller thrust (side force and moment from the screw are set to zero
    # in this coefficient set)
    n = rpm * pr[P_NMAX]
    if n > 1e-9:
        J = ur * (1.0 - pr[P_WP0]) / (n * pr[P_DP])
        if J < 0.0:
            J = 0.0
        elif J > 1.5:
            J = 1.5
        KT = pr[P_K0] + pr[P_K1] * J + pr[P_K2] * J * J
        D2 = pr[P_DP] * pr[P_DP]
        thrust = rho * n * n * D2 * D2 * KT
    else:
        thrust = 0.0
    Xp = (1.0 - pr[P_TP]) * thrust

    # rudder normal force from local inflow; sd/cd are sin/cos of the rudder
    # angle, constant over the sub-step
    uR = pr[P_REPS] * (1.0 - pr[P_WP0]) * ur
    vR = pr[P_GAMR] * (vr + pr[P_XR] * r)
    UR = math.sqrt(uR * uR + vR * vR)
    FN = 0.5 * rho * pr[P_AR] * pr[P_FALPHA] * UR * (uR * sd - vR * cd)
    Xr = -(1.0 - pr[P_TR]) * FN * sd
    Yr = -(1.0 + pr[P_AH]) * FN * cd
    Nr = -(pr[P_XR] + pr[P_AH] * pr[P_XH]) * FN * cd

    du = v * r + (Xh + Xp + Xr) / pr[P_M]
    dv = -u * r + (Yh + Yr) / pr[P_M]
    dr = (Nh + Nr) / pr[P_IZ]
    return (u * c - v * s, u * s + v * c, -s * r, c * r, du, dv, dr)


@njit(cache=True, inline="always")
def _nomoto_deriv(c, s, u, r, rudder, pr, cx, cy):
    dr = (pr[P_NK] * rudder - r) / pr[P_NT]
    return (u * c + cx, u * s + cy, -s * r, c * r, dr)


@njit(cache=True, inline="always")
def _renorm(c, s):
    n2 = c * c + s * s
    if abs(n2 - 1.0) > 1e-15:
        inv = 1.0 / math.sqrt(n2)
        return c * inv, s * inv
    return c, s


@njit(cache=True, inline="always")
def _slew(value, target, limit):
    d = target - value
    if d > limit:
        d = limit
    elif d < -limit:
        d = -limit
    return value + d


@njit(cache=True, inline="always")
def _agent_substep(st, pr, model, integrator, cmd_a, cmd_b, cx, cy, h, rpm_alpha):
    if model == MODEL_KINEMATIC:
        # heading and speed slew toward their targets, then drift with current
        psi = math.atan2(st[IS], st[IC])
        dpsi = _wrap_pi(cmd_a - psi)
        lim = pr[P_KTURN] * h
        if dpsi > lim:
            dpsi = lim
        elif dpsi < -lim:
            dpsi = -lim
        psi = _wrap_pi(psi + dpsi)
        c = math.cos(psi)
        s = math.sin(psi)
        u = _slew(st[IU], cmd_b, pr[P_KACC] * h)
        st[IX] += h * (u * c + cx)
        st[IY] += h * (u * s + cy)
        st[IC] = c
        st[IS] = s
        st[IU] = u
        st[IV] = 0.0
        st[IR] = dpsi / h
        return

    # rudder slews at its rate limit toward the clamped command
    rud_t = cmd_a
    if rud_t > pr[P_RUDMAX]:
        rud_t = pr[P_RUDMAX]
    elif rud_t < -pr[P_RUDMAX]:
        rud_t = -pr[P_RUDMAX]
    rudder = _slew(st[IRUD], rud_t, pr[P_RUDRATE] * h)
    st[IRUD] = rudder

    c = st[IC]
    s = st[IS]
    u = st[IU]
    v = st[IV]
    r = st[IR]
    x = st[IX]
    y = st[IY]

    if model == MODEL_NOMOTO:
        u = cmd_b  # commanded through-water speed, held
        if integrator == INTEGRATOR_RK4:
            dx1, dy1, dc1, ds1, dr1 = _nomoto_deriv(c, s, u, r, rudder, pr, cx, cy)
            h2 = 0.5 * h
            c2 = c + h2 * dc1
            s2 = s + h2 * ds1
            r2 = r + h2 * dr1
            dx2, dy2, dc2, ds2, dr2 = _nomoto_deriv(c2, s2, u, r2, rudder, pr, cx, cy)
            c3 = c + h2 * dc2
            s3 = s + h2 * ds2
            r3 = r + h2 * dr2
            dx3, dy3, dc3, ds3, dr3 = _nomoto_deriv(c3, s3, u, r3, rudder, pr, cx, cy)
            c4 = c + h * dc3
            s4 = s + h * ds3
            r4 = r + h * dr3
            dx4, dy4, dc4, ds4, dr4 = _nomoto_deriv(c4, s4, u, r4, rudder, pr, cx, cy)
            w = h / 6.0
            x += w * (dx1 + 2.0 * dx2 + 2.0 * dx3 + dx4)
            y += w * (dy1 + 2.0 * dy2 + 2.0 * dy3 + dy4)
            c += w * (dc1 + 2.0 * dc2 + 2.0 * dc3 + dc4)
            s += w * (ds1 + 2.0 * ds2 + 2.0 * ds3 + ds4)
            r += w * (dr1 + 2.0 * dr2 + 2.0 * dr3 + dr4)
        else:
            _, _, _, _, dr1 = _nomoto_deriv(c, s, u, r, rudder, pr, cx, cy)
            r += h * dr1
            x += h * (u * c + cx)
            y += h * (u * s + cy)
            c_new = c - h * s * r
            s_new = s + h * c * r
            c = c_new
            s = s_new
        c, s = _renorm(c, s)
        st[IX] = x
        st[IY] = y
        st[IC] = c
        st[IS] = s
        st[IU] = u
        st[IV] = 0.0
        st[IR] = r
        return

    # MMG: first-order rpm response, then Eq-of-motion integration
    rpm = st[IRPM] + rpm_alpha * (cmd_b - st[IRPM])
    if rpm < 0.0:
        rpm = 0.0
    elif rpm > 1.0:
        rpm = 1.0
    st[IRPM] = rpm
    sd = math.sin(rudder)
    cd = math.cos(rudder)

    if integrator == INTEGRATOR_RK4:
        dx1, dy1, dc1, ds1, du1, dv1, dr1 = _mmg_deriv(c, s, u, v, r, rpm, sd, cd, pr, cx, cy)
        h2 = 0.5 * h
        dx2, dy2, dc2, ds2, du2, dv2, dr2 = _mmg_deriv(
            c + h2 * dc1, s + h2 * ds1, u + h2 * du1, v + h2 * dv1, r + h2 * dr1,
            rpm, sd, cd, pr, cx, cy)
        dx3, dy3, dc3, ds3, du3, dv3, dr3 = _mmg_deriv(
            c + h2 * dc2, s + h2 * ds2, u + h2 * du2, v + h2 * dv2, r + h2 * dr2,
            rpm, sd, cd, pr, cx, cy)
        dx4, dy4, dc4, ds4, du4, dv4, dr4 = _mmg_deriv(
            c + h * dc3, s + h * ds3, u + h * du3, v + h * dv3, r + h * dr3,
            rpm, sd, cd, pr, cx, cy)
        w = h / 6.0
        x += w * (dx1 + 2.0 * dx2 + 2.0 * dx3 + dx4)
        y += w * (dy1 + 2.0 * dy2 + 2.0 * dy3 + dy4)
        c += w * (dc1 + 2.0 * dc2 + 2.0 * dc3 + dc4)
        s += w * (ds1 + 2.0 * ds2 + 2.0 * ds3 + ds4)
        u += w * (du1 + 2.0 * du2 + 2.0 * du3 + du4)
        v += w * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4)
        r += w * (dr1 + 2.0 * dr2 + 2.0 * dr3 + dr4)
    else:
        # semi-implicit: velocities explicit, pose advanced with new rates
        _, _, _, _, du1, dv1, dr1 = _mmg_deriv(c, s, u, v, r, rpm, sd, cd, pr, cx, cy)
        u += h * du1
        v += h * dv1
        r += h * dr1
        x += h * (u * c - v * s)
        y += h * (u * s + v * c)
        c_new = c - h * s * r
        s_new = s + h * c * r
        c = c_new
        s = s_new

    c, s = _renorm(c, s)
    st[IX] = x
    st[IY] = y
    st[IC] = c
    st[IS] = s
    st[IU] = u
    st[IV] = v
    st[IR] = r


@njit(cache=True, inline="always")
def _rpm_alpha(pr, h):
    tau = pr[P_RPMTAU]
    if tau <= 0.0:
        return 1.0
    return 1.0 - math.exp(-h / tau)


@njit(cache=True)
def substep_range(states, pr, model, integrator, cmd_a, cmd_b, currents, h, lo, hi):
    """Advance agents [lo, hi) by one physics sub-step, serially."""
    alpha = _rpm_alpha(pr, h)
    for i in range(lo, hi):
        _agent_substep(states[i], pr, model, integrator, cmd_a[i], cmd_b[i],
                       currents[i, 0], currents[i, 1], h, alpha)


@njit(cache=True, parallel=True)
def substep_all(states, pr, model, integrator, cmd_a, cmd_b, currents, h):
    """Advance every agent by one physics sub-step, data-parallel."""
    alpha = _rpm_alpha(pr, h)
    for i in prange(states.shape[0]):
        _agent_substep(states[i], pr, model, integrator, cmd_a[i], cmd_b[i],
                       currents[i, 0], currents[i, 1], h, alpha)


def advance_batch(states, pr, model, integrator, cmd_a, cmd_b, currents,
                  dt, substeps, strategy="full", n_envs=1):
    """Advance the whole batch by one control step of `substeps` sub-steps.

    The three strategies partition the same per-sub-step work along the agent
    axis: one fused dispatch ("full"), one dispatch per environment
    ("per-env"), or one dispatch per agent ("per-agent"). The per-agent math
    is shared, so results are identical; only scheduling granularity differs.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    n = states.shape[0]
    if n % n_envs != 0:
        raise ValueError("agent count not divisible by environment count")
    m = n // n_envs
    h = dt / substeps
    if strategy == "full":
        for _ in range(substeps):
            substep_all(states, pr, model, integrator, cmd_a, cmd_b, currents, h)
    elif strategy == "per-env":
        for _ in range(substeps):
            for e in range(n_envs):
                substep_range(states, pr, model, integrator, cmd_a, cmd_b,
                              currents, h, e * m, (e + 1) * m)
    else:
        for _ in range(substeps):
            for i in range(n):
                substep_range(states, pr, model, integrator, cmd_a, cmd_b,
                              currents, h, i, i + 1)


def warmup(pr) -> None:
    """Force JIT compilation of both dispatch paths for all models."""
    states = np.zeros((2, N_STATE))
    states[:, IC] = 1.0
    z = np.zeros(2)
    cur = np.zeros((2, 2))
    for model in (MODEL_MMG, MODEL_NOMOTO, MODEL_KINEMATIC):
        for integ in (INTEGRATOR_EULER, INTEGRATOR_RK4):
            substep_range(states.copy(), pr, model, integ, z, z, cur, 0.1, 0, 2)
            substep_all(states.copy(), pr, model, integ, z, z, cur, 0.1)
