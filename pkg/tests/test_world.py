"""
Tests for kinematics and the light-sensor model.
"""

import math

import numpy as np
import pytest

from src.core.errors import NumericError
from src.core.world import (
    LightPosition,
    RobotState,
    WorldConfig,
    env_sensor_activation,
    sensor_position,
    squared_distance,
    step_kinematics,
)

CFG = WorldConfig()


def naive_step(x, y, alpha, ml, mr, r, dt):
    return (
        x + (ml + mr) * math.cos(alpha) * dt,
        y + (ml + mr) * math.sin(alpha) * dt,
        alpha + (mr - ml) * r * dt,
    )


def naive_activation(x, y, alpha, offset, lx, ly, r, eps):
    sx = x + math.cos(alpha + offset) * r
    sy = y + math.sin(alpha + offset) * r
    dx, dy = lx - sx, ly - sy
    dist = math.sqrt(dx * dx + dy * dy)
    dot = (math.cos(alpha + offset) * dx + math.sin(alpha + offset) * dy) / dist
    return max(dot, 0.0) / (1 + dist * dist) * eps


def test_forward_step():
    """Both wheels forward move along the heading."""
    state = step_kinematics(RobotState(0.0, 0.0, 0.0), 1.0, 1.0, CFG)

    assert state.x == pytest.approx(0.02, abs=1e-15)
    assert state.y == 0.0
    assert state.alpha == 0.0


def test_turn_in_place():
    """Opposite wheels spin the robot without moving it."""
    state = step_kinematics(RobotState(0.0, 0.0, 0.0), -1.0, 1.0, CFG)

    assert state.x == 0.0
    assert state.y == 0.0
    assert state.alpha == pytest.approx(0.005, abs=1e-15)


def test_zero_motors_keep_state():
    state = RobotState(1.3, -2.1, 7.5)
    assert step_kinematics(state, 0.0, 0.0, CFG) == state


def test_non_finite_state_rejected():
    with pytest.raises(NumericError):
        step_kinematics(RobotState(float("nan"), 0.0, 0.0), 0.1, 0.1, CFG)


def test_turn_rate_independent_of_position(rng):
    """Heading change depends only on the wheel difference."""
    for _ in range(20):
        x, y = rng.uniform(-10, 10, 2)
        a = step_kinematics(RobotState(x, y, 0.3), 0.2, 0.7, CFG)
        b = step_kinematics(RobotState(0.0, 0.0, 0.3), 0.2, 0.7, CFG)
        assert a.alpha == b.alpha


def test_half_steps_agree_to_second_order():
    state = RobotState(0.0, 0.0, 0.4)
    for dt in (0.01, 0.005):
        full = step_kinematics(state, 0.3, 0.9, WorldConfig(dt=dt))
        half_cfg = WorldConfig(dt=dt / 2)
        half = step_kinematics(step_kinematics(state, 0.3, 0.9, half_cfg), 0.3, 0.9, half_cfg)
        assert abs(full.x - half.x) < 10 * dt * dt
        assert abs(full.y - half.y) < 10 * dt * dt


def test_sensor_positions():
    origin = RobotState(0.0, 0.0, 0.0)

    x, y = sensor_position(origin, math.pi / 3, CFG)
    assert x == pytest.approx(0.125)
    assert y == pytest.approx(0.21650635, abs=1e-8)

    x, y = sensor_position(origin, 0.0, CFG)
    assert (x, y) == pytest.approx((0.25, 0.0))

    x, y = sensor_position(RobotState(0.0, 0.0, math.pi / 2), -math.pi / 3, CFG)
    assert x == pytest.approx(0.21650635, abs=1e-8)
    assert y == pytest.approx(0.125)


def test_light_on_boresight():
    """Two units straight ahead of the sensor reads eps / 5."""
    state = RobotState(0.0, 0.0, 0.0)
    offset = CFG.left_offset
    sx, sy = sensor_position(state, offset, CFG)
    light = LightPosition(sx + 2 * math.cos(offset), sy + 2 * math.sin(offset))

    assert env_sensor_activation(state, offset, light, CFG) == pytest.approx(1.0, abs=1e-12)


def test_light_behind_sensor_reads_zero():
    state = RobotState(0.0, 0.0, 0.0)
    light = LightPosition(-3.0, 0.0)
    assert env_sensor_activation(state, CFG.left_offset, light, CFG) == 0.0
    assert env_sensor_activation(state, CFG.right_offset, light, CFG) == 0.0


def test_right_sensor_reading():
    state = RobotState(0.0, 0.0, 0.0)
    value = env_sensor_activation(state, CFG.right_offset, LightPosition(2.0, 0.0), CFG)
    assert value == pytest.approx(0.43545, abs=1e-4)


def test_light_on_sensor_reads_epsilon():
    state = RobotState(0.0, 0.0, 0.0)
    sx, sy = sensor_position(state, CFG.left_offset, CFG)
    value = env_sensor_activation(state, CFG.left_offset, LightPosition(sx, sy), CFG)
    assert value == CFG.epsilon


def test_oracle_equivalence(rng):
    """1000 random cases agree with a scalar re-implementation."""
    count = 1000
    x, y = rng.uniform(-5, 5, (2, count))
    alpha = rng.uniform(-10, 10, count)
    ml, mr = rng.uniform(-1, 1, (2, count))
    lx, ly = rng.uniform(-5, 5, (2, count))

    state = RobotState(x, y, alpha)
    stepped = step_kinematics(state, ml, mr, CFG)
    light = LightPosition(lx, ly)
    left = env_sensor_activation(state, CFG.left_offset, light, CFG)
    right = env_sensor_activation(state, CFG.right_offset, light, CFG)

    for i in range(count):
        expected = naive_step(x[i], y[i], alpha[i], ml[i], mr[i], CFG.radius, CFG.dt)
        assert stepped.x[i] == pytest.approx(expected[0], abs=1e-12)
        assert stepped.y[i] == pytest.approx(expected[1], abs=1e-12)
        assert stepped.alpha[i] == pytest.approx(expected[2], abs=1e-12)
        for offset, got in ((CFG.left_offset, left[i]), (CFG.right_offset, right[i])):
            want = naive_activation(
                x[i], y[i], alpha[i], offset, lx[i], ly[i], CFG.radius, CFG.epsilon
            )
            assert got == pytest.approx(want, abs=1e-12)


def test_activation_bounded_and_decreasing(rng):
    state = RobotState(0.0, 0.0, 0.0)
    offset = CFG.left_offset
    sx, sy = sensor_position(state, offset, CFG)
    distances = np.linspace(0.1, 20, 200)
    light = LightPosition(sx + distances * math.cos(offset), sy + distances * math.sin(offset))
    readings = env_sensor_activation(state, offset, light, CFG)

    assert np.all(readings >= 0)
    assert np.all(readings <= CFG.epsilon)
    assert np.all(np.diff(readings) <= 0)


def test_squared_distance():
    assert squared_distance(RobotState(0.0, 0.0, 1.0), LightPosition(0.0, 3.0)) == 9.0


def test_world_config_rejects_bad_values():
    with pytest.raises(ValueError):
        WorldConfig(radius=0.0)
    with pytest.raises(ValueError):
        WorldConfig(dt=-0.01)
