"""Planar angle helpers.

Headings are measured counterclockwise from East (ENU world frame) and
normalized to (-pi, pi].
"""

from __future__ import annotations

import math

TWO_PI = 2.0 * math.pi


def wrap_pi(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = a % TWO_PI  # sign of divisor: result in [0, 2*pi)
    if a > math.pi:
        a -= TWO_PI
    return a


def angle_diff(target: float, source: float) -> float:
    """Shortest signed rotation taking `source` onto `target`, in (-pi, pi]."""
    return wrap_pi(target - source)


def heading_to_vec(psi: float) -> tuple[float, float]:
    """Unit vector pointing along heading `psi`."""
    return math.cos(psi), math.sin(psi)


def bearing(from_x: float, from_y: float, to_x: float, to_y: float) -> float:
    """World-frame bearing of point (to) as seen from point (from)."""
    return math.atan2(to_y - from_y, to_x - from_x)
