"""Small 3D helpers shared by the world simulator and feature extraction.

Everything works on plain float64 numpy arrays of shape (3,).  Angles are
radians throughout.
"""

from __future__ import annotations

import numpy as np

# Direction vectors shorter than this are treated as degenerate.
EPS_NORM = 1e-12


def unit(v: np.ndarray) -> np.ndarray:
    """Normalize v to unit length.  Raises on (near) zero vectors."""
    n = float(np.linalg.norm(v))
    if n < EPS_NORM:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Angle in [0, pi] between two directions."""
    ua, ub = unit(a), unit(b)
    # clip guards acos against 1 + 1e-16 style roundoff
    return float(np.arccos(np.clip(np.dot(ua, ub), -1.0, 1.0)))


def yaw_direction(yaw: float) -> np.ndarray:
    """Horizontal unit direction for a heading angle (x toward yaw=0)."""
    return np.array([np.cos(yaw), np.sin(yaw), 0.0])


def ray_box_intersect(origin: np.ndarray, target: np.ndarray,
                      box_min: np.ndarray, box_max: np.ndarray) -> bool:
    """True when the open segment origin->target passes through the box.

    Slab test.  Touching exactly at the endpoints does not count: an agent
    standing against a cabinet still sees objects on it.
    """
    d = np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)
    t0, t1 = 0.0, 1.0
    for k in range(3):
        if abs(d[k]) < EPS_NORM:
            if origin[k] < box_min[k] or origin[k] > box_max[k]:
                return False
            continue
        ta = (box_min[k] - origin[k]) / d[k]
        tb = (box_max[k] - origin[k]) / d[k]
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 >= t1:
            return False
    return 0.0 < t1 and t0 < 1.0


def cone_contains(apex: np.ndarray, axis: np.ndarray, point: np.ndarray,
                  half_angle: float, max_range: float | None) -> bool:
    """Membership test for a view cone with apex at `apex` looking along `axis`.

    `max_range` of None disables the range check (used for pointing rays).
    The apex itself is never contained.
    """
    offset = np.asarray(point, dtype=float) - np.asarray(apex, dtype=float)
    dist = float(np.linalg.norm(offset))
    if dist < EPS_NORM:
        return False
    if max_range is not None and dist > max_range:
        return False
    return angle_between(offset, axis) <= half_angle
