"""
Continuous-time recurrent neural network.

State equation:  tau_i dy_i/dt = -y_i + sum_j w[j, i] sigma(y_j + beta_j) + I_i

weights[j, i] is the connection j -> i. Parameters may carry a leading
batch dimension (tau (B, n), beta (B, n), weights (B, n, n)); every
batch row is integrated independently with identical arithmetic.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from src.core.errors import ConfigError

TAU_MIN = 0.05
TAU_MAX = 3.0
BIAS_BOUND = 5.0
WEIGHT_BOUND = 5.0
OMEGA_MAX = 5.0
OMEGA_INPUT = 5.0

# 0-based; neurons 1 and 2 in 1-based numbering
DEFAULT_INPUT_IDS = (0, 1)


def sigma(x: np.ndarray) -> np.ndarray:
    """Standard (increasing) logistic."""
    return expit(x)


class NetworkState(NamedTuple):
    y: np.ndarray


@dataclass(frozen=True)
class NetworkParams:
    """Decoded per-neuron parameters."""

    tau: np.ndarray
    beta: np.ndarray
    weights: np.ndarray
    omega_max: float = OMEGA_MAX
    omega_input: float = OMEGA_INPUT
    input_ids: Tuple[int, ...] = DEFAULT_INPUT_IDS
    output_ids: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        tau = np.asarray(self.tau, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "weights", weights)

        n = tau.shape[-1]
        if beta.shape != tau.shape or weights.shape != tau.shape + (n,):
            raise ConfigError(
                f"inconsistent shapes tau={tau.shape} beta={beta.shape} "
                f"weights={weights.shape}"
            )
        if self.output_ids is None:
            object.__setattr__(self, "output_ids", (n - 2, n - 1))
        for idx in tuple(self.input_ids) + tuple(self.output_ids or ()):
            if not 0 <= idx < n:
                raise ConfigError(f"neuron index {idx} out of range for n={n}")

        if self.omega_max <= 0:
            raise ConfigError("omega_max must be positive", key="omega_max")
        if np.any(tau < TAU_MIN) or np.any(tau > TAU_MAX):
            raise ConfigError(
                f"time constants must lie in [{TAU_MIN}, {TAU_MAX}]", key="tau"
            )
        if np.any(np.abs(beta) > BIAS_BOUND):
            raise ConfigError(f"biases must lie in [-{BIAS_BOUND}, {BIAS_BOUND}]")
        if np.any(np.abs(weights) > WEIGHT_BOUND):
            raise ConfigError(
                f"weights must lie in [-{WEIGHT_BOUND}, {WEIGHT_BOUND}]"
            )
        if self.input_ids and np.any(weights[..., list(self.input_ids)] != 0):
            raise ConfigError("input neurons must have zero incoming weights")

    @property
    def n(self) -> int:
        return int(self.tau.shape[-1])

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return tuple(self.tau.shape[:-1])

    def row(self, index: int) -> "NetworkParams":
        """Single network out of a batch."""
        return NetworkParams(
            tau=self.tau[index : index + 1],
            beta=self.beta[index : index + 1],
            weights=self.weights[index : index + 1],
            omega_max=self.omega_max,
            omega_input=self.omega_input,
            input_ids=self.input_ids,
            output_ids=self.output_ids,
        )


def initial_state(params: NetworkParams) -> NetworkState:
    """Every trial starts from y = 0."""
    return NetworkState(np.zeros_like(params.tau))


def neuron_outputs(state: NetworkState, params: NetworkParams) -> np.ndarray:
    return sigma(state.y + params.beta)


def step_network(
    state: NetworkState, params: NetworkParams, inputs: np.ndarray, dt: float
) -> NetworkState:
    """One Euler step of the state equation."""
    if dt <= 0:
        raise ConfigError("dt must be positive", key="dt")
    if np.any(params.tau < TAU_MIN):
        raise ConfigError(f"time constant below stability floor {TAU_MIN}")

    out = neuron_outputs(state, params)
    # axis -2 runs over the source neuron j
    recurrent = np.sum(params.weights * out[..., :, None], axis=-2)
    dydt = (-state.y + recurrent + inputs) / params.tau
    return NetworkState(state.y + dt * dydt)


def output_scale(y: np.ndarray, omega_max: float = OMEGA_MAX) -> np.ndarray:
    """o(y) = 2 / (1 + exp(-y / sqrt(omega_max))) - 1, written as a tanh."""
    if omega_max <= 0:
        raise ConfigError("omega_max must be positive", key="omega_max")
    return np.tanh(y / (2.0 * np.sqrt(omega_max)))


def motor_outputs(
    state: NetworkState, params: NetworkParams
) -> Tuple[np.ndarray, np.ndarray]:
    """(m_left, m_right) from the two output neurons."""
    left, right = params.output_ids or ()
    return (
        output_scale(state.y[..., left], params.omega_max),
        output_scale(state.y[..., right], params.omega_max),
    )


def centre_crossing_biases(weights: np.ndarray) -> np.ndarray:
    """beta_i = -(sum_j w[j, i]) / 2, clamped to the bias bounds."""
    incoming = np.sum(np.asarray(weights, dtype=float), axis=-2)
    return np.clip(-incoming / 2.0, -BIAS_BOUND, BIAS_BOUND)


def external_inputs(
    n: int,
    drive: Sequence[np.ndarray],
    input_ids: Sequence[int],
    batch_shape: Tuple[int, ...] = (),
) -> np.ndarray:
    """Input vector I: drive on the input neurons, zero elsewhere."""
    inputs = np.zeros(batch_shape + (n,))
    for idx, value in zip(input_ids, drive):
        inputs[..., idx] = value
    return inputs
