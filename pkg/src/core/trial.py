"""
Closed-loop trial engine.

Couples the world, the controller and the interference model. Each tick:

    sense -> psi (previous motors) -> mix -> network step -> motors -> move

The engine is vectorised over a batch of (network, light) pairs; a batch
row is computed with exactly the arithmetic a single trial would use.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.ctrnn import (
    NetworkParams,
    external_inputs,
    initial_state,
    motor_outputs,
    neuron_outputs,
    step_network,
)
from src.core.errors import ConfigError, NumericError, ScriptError
from src.core.genome import NetworkGenome, decode_genes
from src.core.interference import (
    InterferenceKind,
    InterferenceSpec,
    initial_interference_state,
    interference_psi,
    mix_input,
    step_sinusoid,
)
from src.core.world import (
    LightPosition,
    RobotState,
    WorldConfig,
    env_sensor_activation,
    squared_distance,
    step_kinematics,
)

logger = logging.getLogger(__name__)

DEFAULT_INITIAL_STATE = RobotState(0.0, 0.0, math.pi / 2)
CLOCK_RADIUS = 3.0
CLOCK_COUNT = 12

BASE_COLUMNS = (
    "t",
    "x",
    "y",
    "alpha",
    "s_left",
    "s_right",
    "psi_left",
    "psi_right",
    "sprime_left",
    "sprime_right",
    "m_left",
    "m_right",
)


class NetworkConfig(BaseModel):
    """Controller size and its fixed constants."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    n: int = Field(default=10, ge=4)
    omega_max: float = Field(default=5.0, gt=0)
    omega_input: float = 5.0


class StimulusScript(BaseModel):
    """Piecewise-linear artificial stimulus replacing one sensor's reading.

    baseline until onset, linear rise to peak over `rise`, linear decay to
    plateau over `decay`, plateau until `end` (or forever), then baseline.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    onset: float = Field(ge=0)
    baseline: float = Field(default=0.0, ge=0)
    rise: float = Field(default=0.05, ge=0)
    peak: Optional[float] = Field(default=None, ge=0)
    decay: float = Field(default=0.0, ge=0)
    plateau: float = Field(default=0.0, ge=0)
    end: Optional[float] = None

    @model_validator(mode="after")
    def _ordered(self) -> "StimulusScript":
        if self.end is not None and self.end <= self.onset + self.rise + self.decay:
            raise ScriptError(
                "script end must come after the rise and decay phases", key="end"
            )
        return self

    @property
    def peak_level(self) -> float:
        return self.plateau if self.peak is None else self.peak

    def validate_within(self, duration: float) -> None:
        if self.onset > duration:
            raise ScriptError(
                f"onset {self.onset:g} lies outside the trial (duration {duration:g})",
                key="onset",
            )
        if self.end is not None and self.end > duration:
            raise ScriptError(
                f"end {self.end:g} lies outside the trial (duration {duration:g})",
                key="end",
            )

    def value_at(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        top = self.onset + self.rise
        settled = top + self.decay
        end = math.inf if self.end is None else self.end
        peak = self.peak_level

        with np.errstate(divide="ignore", invalid="ignore"):
            rising = self.baseline + (peak - self.baseline) * (t - self.onset) / self.rise
            decaying = peak + (self.plateau - peak) * (t - top) / self.decay
        return np.select(
            [t < self.onset, t < top, t < settled, t < end],
            [self.baseline, rising, decaying, self.plateau],
            default=self.baseline,
        )


class PerturbationSpec(BaseModel):
    """Lesions and scripted stimuli. The defaults are the identity."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    interference_gain_left: float = Field(default=1.0, ge=0)
    interference_gain_right: float = Field(default=1.0, ge=0)
    sensor_enabled_left: bool = True
    sensor_enabled_right: bool = True
    script_left: Optional[StimulusScript] = None
    script_right: Optional[StimulusScript] = None

    @property
    def scripted(self) -> bool:
        return self.script_left is not None or self.script_right is not None

    @property
    def is_identity(self) -> bool:
        return self == PerturbationSpec()


class TrialConfig(BaseModel):
    """Everything defining one closed-loop rollout."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    duration: float = Field(default=10.0, gt=0)
    light: Optional[LightPosition] = None
    initial_state: RobotState = DEFAULT_INITIAL_STATE
    world: WorldConfig = WorldConfig()
    network: NetworkConfig = NetworkConfig()
    interference: InterferenceSpec = InterferenceSpec()
    perturbation: PerturbationSpec = PerturbationSpec()
    log: bool = False

    @model_validator(mode="after")
    def _consistent(self) -> "TrialConfig":
        steps = self.duration / self.world.dt
        if abs(steps - round(steps)) > 1e-6:
            raise ConfigError(
                f"duration {self.duration:g} is not a whole number of dt={self.world.dt:g} steps",
                key="duration",
            )
        values = list(self.initial_state) + list(self.light or ())
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("light and initial state must be finite")
        if self.perturbation.scripted and self.light is not None:
            raise ConfigError("scripted-stimulus trials run without a light", key="light")
        for script in (self.perturbation.script_left, self.perturbation.script_right):
            if script is not None:
                script.validate_within(self.duration)
        return self

    @property
    def dt(self) -> float:
        return self.world.dt

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.world.dt))

    def with_light(self, light: Optional[LightPosition]) -> "TrialConfig":
        return self.model_copy(update={"light": light})


class FitnessRecord(BaseModel):
    """Time-weighted mean squared distance to the light (lower is better)."""

    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0)
    light: LightPosition
    genome_id: str


def log_columns(n: int) -> List[str]:
    return (
        list(BASE_COLUMNS)
        + [f"y_{i}" for i in range(1, n + 1)]
        + [f"out_{i}" for i in range(1, n + 1)]
    )


@dataclass
class TrialLog:
    """Per-step time series of one trial (one row per tick)."""

    frame: pd.DataFrame

    @property
    def n_neurons(self) -> int:
        return sum(1 for col in self.frame.columns if col.startswith("y_"))

    def __len__(self) -> int:
        return len(self.frame)

    def column(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy()


@dataclass
class Rollout:
    """Raw batch output; columns are (ticks, batch[, n]) arrays."""

    fitness: Optional[np.ndarray]
    columns: Optional[Dict[str, np.ndarray]] = None

    def log(self, row: int) -> TrialLog:
        if self.columns is None:
            raise ValueError("rollout was run without recording")
        data: Dict[str, np.ndarray] = {}
        for name in BASE_COLUMNS:
            data[name] = self.columns[name][:, row]
        n = self.columns["net_y"].shape[-1]
        for prefix, key in (("y", "net_y"), ("out", "net_out")):
            block = self.columns[key][:, row, :]
            for i in range(n):
                data[f"{prefix}_{i + 1}"] = block[:, i]
        return TrialLog(pd.DataFrame(data, columns=log_columns(n)))


def fitness_from_trajectory(distances: np.ndarray) -> np.ndarray:
    """sum_k d_k^2 k / sum_k k over step indices k = 0..K (axis 0).

    `distances` holds squared distances; the k = 0 sample carries no weight.
    Each trajectory is reduced along a contiguous axis, so a batch column
    gets the same bits as the same trajectory passed alone.
    """
    distances = np.asarray(distances, dtype=float)
    if distances.ndim == 0 or distances.shape[0] < 2:
        raise ConfigError("fitness needs at least two samples")
    k = np.arange(distances.shape[0], dtype=float)
    weights = k.reshape((-1,) + (1,) * (distances.ndim - 1))
    weighted = np.ascontiguousarray(np.moveaxis(distances * weights, 0, -1))
    return np.sum(weighted, axis=-1) / np.sum(k)


def clock_light(
    position: int, radius: float = CLOCK_RADIUS, count: int = CLOCK_COUNT
) -> LightPosition:
    """Clock-face light: 12 o'clock is (0, radius), numbering runs clockwise."""
    if not 1 <= position <= count:
        raise ConfigError(f"light position must be 1..{count}, got {position}")
    angle = math.pi / 2 - 2 * math.pi * position / count

    def snap(v: float) -> float:
        return 0.0 if abs(v) < 1e-12 else v

    return LightPosition(snap(radius * math.cos(angle)), snap(radius * math.sin(angle)))


def probe_lights_clock(
    radius: float = CLOCK_RADIUS, count: int = CLOCK_COUNT
) -> List[LightPosition]:
    """Positions 1..count in order."""
    if count < 1:
        raise ConfigError("count must be at least 1")
    return [clock_light(p, radius, count) for p in range(1, count + 1)]


def _sense(
    pose: RobotState,
    light: Optional[LightPosition],
    cfg: TrialConfig,
    t: float,
    shape: Tuple[int, ...],
) -> Tuple[np.ndarray, np.ndarray]:
    world = cfg.world
    perturbation = cfg.perturbation
    if light is not None:
        s_left = env_sensor_activation(pose, world.left_offset, light, world)
        s_right = env_sensor_activation(pose, world.right_offset, light, world)
    else:
        s_left = np.zeros(shape)
        s_right = np.zeros(shape)

    if perturbation.script_left is not None:
        s_left = np.full(shape, perturbation.script_left.value_at(t))
    if perturbation.script_right is not None:
        s_right = np.full(shape, perturbation.script_right.value_at(t))
    if not perturbation.sensor_enabled_left:
        s_left = np.zeros(shape)
    if not perturbation.sensor_enabled_right:
        s_right = np.zeros(shape)
    return s_left, s_right


def _rollout(
    params: NetworkParams,
    light: Optional[LightPosition],
    cfg: TrialConfig,
    record: bool,
) -> Rollout:
    shape = params.batch_shape
    world = cfg.world
    spec = cfg.interference
    perturbation = cfg.perturbation
    dt = cfg.dt
    n_steps = cfg.n_steps
    sinusoidal = spec.kind is InterferenceKind.SINUSOIDAL

    x0, y0, a0 = cfg.initial_state
    pose = RobotState(np.full(shape, x0), np.full(shape, y0), np.full(shape, a0))
    net = initial_state(params)
    phase = initial_interference_state(spec, shape)
    m_left, m_right = motor_outputs(net, params)

    distances = np.empty((n_steps + 1,) + shape) if light is not None else None
    trace: Dict[str, List[np.ndarray]] = {}

    for k in range(n_steps + 1):
        t = k * dt
        s_left, s_right = _sense(pose, light, cfg, t, shape)

        psi_left, psi_right = interference_psi(spec, phase, m_left, m_right)
        psi_left = psi_left * perturbation.interference_gain_left
        psi_right = psi_right * perturbation.interference_gain_right
        sp_left = mix_input(s_left, psi_left, spec.lam)
        sp_right = mix_input(s_right, psi_right, spec.lam)

        inputs = external_inputs(
            params.n,
            (params.omega_input * sp_left, params.omega_input * sp_right),
            params.input_ids,
            shape,
        )
        net = step_network(net, params, inputs, dt)
        if not np.all(np.isfinite(net.y)):
            raise NumericError(f"non-finite network state at t={t:g}")
        m_left, m_right = motor_outputs(net, params)

        if distances is not None:
            distances[k] = squared_distance(pose, light)
        if record:
            for name, value in (
                ("t", np.full(shape, t)),
                ("x", pose.x),
                ("y", pose.y),
                ("alpha", pose.alpha),
                ("s_left", s_left),
                ("s_right", s_right),
                ("psi_left", psi_left),
                ("psi_right", psi_right),
                ("sprime_left", sp_left),
                ("sprime_right", sp_right),
                ("m_left", m_left),
                ("m_right", m_right),
                ("net_y", net.y),
                ("net_out", neuron_outputs(net, params)),
            ):
                trace.setdefault(name, []).append(value)

        pose = step_kinematics(pose, m_left, m_right, world)
        if sinusoidal:
            phase, _, _ = step_sinusoid(phase, m_left, m_right, spec.b, spec.r_freq, dt)

    fitness = fitness_from_trajectory(distances) if distances is not None else None
    columns = {name: np.stack(values) for name, values in trace.items()} if record else None
    return Rollout(fitness=fitness, columns=columns)


def _stack_lights(lights: Sequence[LightPosition]) -> LightPosition:
    return LightPosition(
        np.array([light.x for light in lights], dtype=float),
        np.array([light.y for light in lights], dtype=float),
    )


def decode_for(genes: np.ndarray, cfg: TrialConfig) -> NetworkParams:
    """Decode a (B, L) gene array with the trial's network constants."""
    return decode_genes(
        genes,
        cfg.network.n,
        omega_max=cfg.network.omega_max,
        omega_input=cfg.network.omega_input,
    )


def run_trials(
    params: NetworkParams,
    lights: Optional[Sequence[LightPosition]],
    cfg: TrialConfig,
    record: bool = False,
) -> Rollout:
    """Evaluate a batch of networks, row b against lights[b].

    Without `lights` every row uses cfg.light. Rows that blow up are
    re-run one by one so that only they score +inf.
    """
    (batch,) = params.batch_shape
    if lights is None and cfg.light is not None:
        lights = [cfg.light] * batch
    if lights is not None and len(lights) != batch:
        raise ConfigError(f"{len(lights)} lights for a batch of {batch} networks")
    stacked = _stack_lights(lights) if lights is not None else None

    try:
        return _rollout(params, stacked, cfg, record)
    except NumericError:
        if record or batch == 1 or stacked is None:
            raise

    fitness = np.empty(batch)
    failed = []
    for b in range(batch):
        single = LightPosition(stacked.x[b : b + 1], stacked.y[b : b + 1])
        try:
            fitness[b] = _rollout(params.row(b), single, cfg, False).fitness[0]
        except NumericError:
            fitness[b] = math.inf
            failed.append(b)
    logger.warning("non-finite simulation in batch rows %s; scored +inf", failed)
    return Rollout(fitness=fitness)


def run_trial(
    genome: NetworkGenome, cfg: TrialConfig
) -> Tuple[Optional[FitnessRecord], Optional[TrialLog]]:
    """One rollout. Fitness is None when there is no light (scripted/dark)."""
    params = decode_for(genome.array[None, :], cfg)
    lights = [cfg.light] if cfg.light is not None else None
    stacked = _stack_lights(lights) if lights is not None else None
    rollout = _rollout(params, stacked, cfg, cfg.log)

    record = None
    if cfg.light is not None and rollout.fitness is not None:
        record = FitnessRecord(
            value=float(rollout.fitness[0]), light=cfg.light, genome_id=genome.id
        )
    return record, rollout.log(0) if cfg.log else None
