"""Hand-computed oracles for the 3D helpers."""

from __future__ import annotations

import numpy as np
import pytest

from fiveminds.geometry import (angle_between, cone_contains,
                                ray_box_intersect, unit, yaw_direction)


def test_unit_length_and_direction():
    v = np.array([3.0, 4.0, 0.0])
    u = unit(v)
    assert np.allclose(u, [0.6, 0.8, 0.0])
    assert abs(np.linalg.norm(u) - 1.0) < 1e-12


def test_unit_rejects_zero():
    with pytest.raises(ValueError):
        unit(np.zeros(3))


def test_angle_between_known_values():
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([0.0, 1.0, 0.0])
    assert abs(angle_between(x, y) - np.pi / 2) < 1e-12
    assert abs(angle_between(x, x)) < 1e-12
    assert abs(angle_between(x, -x) - np.pi) < 1e-12
    diag = np.array([1.0, 1.0, 0.0])
    assert abs(angle_between(x, diag) - np.pi / 4) < 1e-12


def test_angle_between_scale_invariant():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b = rng.normal(size=3), rng.normal(size=3)
        assert abs(angle_between(a, b) - angle_between(3.7 * a, 0.2 * b)) < 1e-9


def test_yaw_direction():
    assert np.allclose(yaw_direction(0.0), [1.0, 0.0, 0.0])
    assert np.allclose(yaw_direction(np.pi / 2), [0.0, 1.0, 0.0], atol=1e-12)


def test_ray_box_hit_and_miss():
    lo, hi = np.array([1.0, -1.0, -1.0]), np.array([2.0, 1.0, 1.0])
    origin = np.zeros(3)
    assert ray_box_intersect(origin, np.array([3.0, 0.0, 0.0]), lo, hi)
    # ray passes beside the box
    assert not ray_box_intersect(origin, np.array([3.0, 5.0, 0.0]), lo, hi)
    # box entirely behind the target point
    assert not ray_box_intersect(origin, np.array([0.5, 0.0, 0.0]), lo, hi)
    # box behind the origin
    assert not ray_box_intersect(np.array([5.0, 0.0, 0.0]),
                                 np.array([8.0, 0.0, 0.0]), lo, hi)


def test_ray_box_endpoint_touch_does_not_count():
    lo, hi = np.array([1.0, -1.0, -1.0]), np.array([2.0, 1.0, 1.0])
    # target sits exactly on the near face
    assert not ray_box_intersect(np.zeros(3), np.array([1.0, 0.0, 0.0]),
                                 lo, hi)


def test_cone_contains_basics():
    apex = np.zeros(3)
    axis = np.array([1.0, 0.0, 0.0])
    half = np.radians(15.0)
    assert cone_contains(apex, axis, np.array([2.0, 0.0, 0.0]), half, 4.0)
    # 20 degrees off axis
    p = 2.0 * np.array([np.cos(np.radians(20)), np.sin(np.radians(20)), 0.0])
    assert not cone_contains(apex, axis, p, half, 4.0)
    # beyond range
    assert not cone_contains(apex, axis, np.array([4.5, 0.0, 0.0]), half, 4.0)
    # no range limit
    assert cone_contains(apex, axis, np.array([40.0, 0.0, 0.0]), half, None)
    # the apex itself is never contained
    assert not cone_contains(apex, axis, apex, half, 4.0)
