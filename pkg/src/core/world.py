"""
Kinematics and light-sensor model of the two-wheeled robot.

No knowledge of the controller. Every function broadcasts over numpy
arrays, so a RobotState holding arrays of shape (B,) describes B robots
stepped in lock-step.
"""

import math
from typing import NamedTuple, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core.errors import NumericError

Real = Union[float, np.ndarray]

LEFT_SENSOR_OFFSET = math.pi / 3
RIGHT_SENSOR_OFFSET = -math.pi / 3


class RobotState(NamedTuple):
    """Pose of the robot. alpha accumulates without wrapping."""

    x: float
    y: float
    alpha: float


class LightPosition(NamedTuple):
    x: float
    y: float


class WorldConfig(BaseModel):
    """Body and environment constants."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    radius: float = Field(default=0.25, gt=0)
    epsilon: float = Field(default=5.0, gt=0)
    dt: float = Field(default=0.01, gt=0)
    sensor_offsets: Tuple[float, float] = (LEFT_SENSOR_OFFSET, RIGHT_SENSOR_OFFSET)

    @property
    def left_offset(self) -> float:
        return self.sensor_offsets[0]

    @property
    def right_offset(self) -> float:
        return self.sensor_offsets[1]


def _require_finite(state: RobotState) -> None:
    if not (
        np.all(np.isfinite(state.x))
        and np.all(np.isfinite(state.y))
        and np.all(np.isfinite(state.alpha))
    ):
        raise NumericError(f"non-finite robot state: {state}")


def step_kinematics(
    state: RobotState, m_left: Real, m_right: Real, cfg: WorldConfig
) -> RobotState:
    """One Euler step of the differential-drive equations."""
    _require_finite(state)
    speed = m_left + m_right
    return RobotState(
        x=state.x + speed * np.cos(state.alpha) * cfg.dt,
        y=state.y + speed * np.sin(state.alpha) * cfg.dt,
        alpha=state.alpha + (m_right - m_left) * cfg.radius * cfg.dt,
    )


def sensor_position(
    state: RobotState, offset: float, cfg: WorldConfig
) -> Tuple[Real, Real]:
    """Point on the perimeter at `offset` radians from the heading."""
    angle = state.alpha + offset
    return (
        state.x + np.cos(angle) * cfg.radius,
        state.y + np.sin(angle) * cfg.radius,
    )


def env_sensor_activation(
    state: RobotState, offset: float, light: LightPosition, cfg: WorldConfig
) -> Real:
    """Directional light reading s = eps * (b.c_hat)+ / (1 + D^2).

    A light sitting exactly on the sensor (D = 0) reads eps.
    """
    angle = state.alpha + offset
    bx, by = np.cos(angle), np.sin(angle)
    sx, sy = sensor_position(state, offset, cfg)
    cx = light.x - sx
    cy = light.y - sy
    distance = np.hypot(cx, cy)

    with np.errstate(divide="ignore", invalid="ignore"):
        facing = (bx * cx + by * cy) / distance
    facing = np.where(distance > 0, np.maximum(facing, 0.0), 1.0)
    activation = facing / (1.0 + distance * distance) * cfg.epsilon

    if np.ndim(activation) == 0:
        return float(activation)
    return activation


def squared_distance(state: RobotState, light: LightPosition) -> Real:
    """Squared distance from the robot centre to the light."""
    dx = state.x - light.x
    dy = state.y - light.y
    return dx * dx + dy * dy
