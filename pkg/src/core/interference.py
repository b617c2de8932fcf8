"""
Motor-driven sensor interference.

Each sensor is perturbed by its ipsilateral motor through psi(m), and the
controller sees s' = lambda * psi + (1 - lambda) * s.
"""

from enum import Enum
from typing import NamedTuple, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import expit

from src.core.errors import ConfigError

Real = Union[float, np.ndarray]


class InterferenceKind(str, Enum):
    NULL = "null"
    SIGMOIDAL = "sigmoidal"
    SQUARED = "squared"
    SINUSOIDAL = "sinusoidal"


class InterferenceSpec(BaseModel):
    """Which psi(m) is active, its constants, and the mixing weight."""

    model_config = ConfigDict(
        frozen=True, extra="forbid", populate_by_name=True, allow_inf_nan=False
    )

    kind: InterferenceKind = InterferenceKind.NULL
    lam: float = Field(default=0.0, ge=0.0, le=1.0, alias="lambda")
    k: float = Field(default=50.0, gt=0)
    p: float = 0.5
    b: float = Field(default=0.1, ge=0)
    r_freq: float = Field(default=8.0, gt=0)
    initial_phase_left: float = 0.0
    initial_phase_right: float = 0.0


class InterferenceState(NamedTuple):
    """Sinusoid phases; held at 0 for the memoryless kinds."""

    c_left: Real
    c_right: Real


def eval_sigmoid(m: Real, k: float = 50.0, p: float = 0.5) -> Real:
    """Threshold-like (avoidable) interference."""
    return expit(k * (np.abs(m) - p))


def eval_squared(m: Real) -> Real:
    """Unavoidable interference."""
    return m * m


def sinusoid_psi(state: InterferenceState) -> Tuple[Real, Real]:
    """psi = (sin(c) + 1) / 2 at the current phases."""
    return (
        (np.sin(state.c_left) + 1.0) / 2.0,
        (np.sin(state.c_right) + 1.0) / 2.0,
    )


def step_sinusoid(
    state: InterferenceState,
    m_left: Real,
    m_right: Real,
    b: float,
    r_freq: float,
    dt: float,
) -> Tuple[InterferenceState, Real, Real]:
    """Advance both phases one Euler step, then evaluate psi."""
    if dt <= 0:
        raise ConfigError("dt must be positive", key="dt")
    advanced = InterferenceState(
        c_left=state.c_left + (b + np.abs(m_left)) * r_freq * dt,
        c_right=state.c_right + (b + np.abs(m_right)) * r_freq * dt,
    )
    psi_left, psi_right = sinusoid_psi(advanced)
    return advanced, psi_left, psi_right


def mix_input(s: Real, psi: Real, lam: float) -> Real:
    """Additive, non-saturating mix of environment and interference."""
    return lam * psi + (1.0 - lam) * s


def initial_interference_state(
    spec: InterferenceSpec, shape: Tuple[int, ...] = ()
) -> InterferenceState:
    if spec.kind is not InterferenceKind.SINUSOIDAL:
        return InterferenceState(np.zeros(shape), np.zeros(shape))
    return InterferenceState(
        np.full(shape, spec.initial_phase_left),
        np.full(shape, spec.initial_phase_right),
    )


def psi_of_motor(kind: InterferenceKind, m: Real, spec: InterferenceSpec) -> Real:
    """psi for a memoryless kind applied to a bare motor value or trace."""
    if kind is InterferenceKind.NULL:
        return np.zeros_like(np.asarray(m, dtype=float))
    if kind is InterferenceKind.SIGMOIDAL:
        return eval_sigmoid(m, spec.k, spec.p)
    if kind is InterferenceKind.SQUARED:
        return eval_squared(np.asarray(m, dtype=float))
    raise ConfigError(
        "sinusoidal interference depends on the motor history, not a single value",
        key="interference",
    )


def interference_psi(
    spec: InterferenceSpec, state: InterferenceState, m_left: Real, m_right: Real
) -> Tuple[Real, Real]:
    """psi for both sensors given the previous tick's motors."""
    if spec.kind is InterferenceKind.SINUSOIDAL:
        return sinusoid_psi(state)
    return (
        psi_of_motor(spec.kind, m_left, spec),
        psi_of_motor(spec.kind, m_right, spec),
    )
