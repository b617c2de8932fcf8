"""
Experiment configuration files.

TOML with one flat section per module:

    [evolution]  [trial]  [world]  [network]  [interference]  [analysis]

Validation errors are reported against the line of the offending key.
"""

import math
import re
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import tomli_w
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from src.core.errors import ConfigError
from src.core.evolution import EvolutionConfig
from src.core.interference import InterferenceKind, InterferenceSpec
from src.core.trial import NetworkConfig, PerturbationSpec, TrialConfig
from src.core.world import LightPosition, RobotState, WorldConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class EvolutionSection(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    population_size: int = Field(default=50, ge=2)
    generations: int = Field(default=2000, ge=0)
    mutation_sigma: float = Field(default=0.05, gt=0)
    mutation_rate: float = Field(default=0.1, ge=0, le=1)
    lights_per_generation: int = Field(default=4, ge=1)
    light_radius: float = Field(default=3.0, gt=0)
    seed: int = Field(default=0, ge=0)
    centre_crossing: bool = True
    chunk_size: int = Field(default=10, ge=1)

    @field_validator("population_size")
    @classmethod
    def _even(cls, size: int) -> int:
        if size % 2:
            raise ValueError("population size must be even (members are paired)")
        return size


class TrialSection(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    duration: float = Field(default=10.0, gt=0)
    initial_x: float = 0.0
    initial_y: float = 0.0
    initial_alpha: float = math.pi / 2


class AnalysisConfig(BaseModel):
    """Analysis-harness defaults and the orbit heuristics."""

    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    horizon: float = Field(default=50.0, gt=0)
    window_start: float = Field(default=20.0, ge=0)
    window_end: float = Field(default=50.0, gt=0)
    forward_fraction: float = Field(default=0.95, ge=0, le=1)
    min_sign_changes: int = Field(default=4, ge=0)
    distance_ratio: float = Field(default=2.0, gt=0)
    probe_radius: float = Field(default=3.0, gt=0)
    probe_count: int = Field(default=12, ge=1)


class ExperimentConfig(BaseModel):
    """Whole-file model; echoed verbatim into population files."""

    model_config = ConfigDict(extra="forbid")

    evolution: EvolutionSection = EvolutionSection()
    trial: TrialSection = TrialSection()
    world: WorldConfig = WorldConfig()
    network: NetworkConfig = NetworkConfig()
    interference: InterferenceSpec = InterferenceSpec()
    analysis: AnalysisConfig = AnalysisConfig()

    @model_validator(mode="after")
    def _coherent(self) -> "ExperimentConfig":
        self.evolution_config()
        if self.analysis.window_end <= self.analysis.window_start:
            raise ConfigError(
                "window_end must come after window_start", key="window_end"
            )
        return self

    def trial_config(
        self,
        *,
        duration: Optional[float] = None,
        light: Optional[LightPosition] = None,
        perturbation: Optional[PerturbationSpec] = None,
        log: bool = False,
    ) -> TrialConfig:
        return TrialConfig(
            duration=self.trial.duration if duration is None else duration,
            light=light,
            initial_state=RobotState(
                self.trial.initial_x, self.trial.initial_y, self.trial.initial_alpha
            ),
            world=self.world,
            network=self.network,
            interference=self.interference,
            perturbation=perturbation or PerturbationSpec(),
            log=log,
        )

    def evolution_config(self) -> EvolutionConfig:
        section = self.evolution
        return EvolutionConfig(
            population_size=section.population_size,
            generations=section.generations,
            mutation_sigma=section.mutation_sigma,
            mutation_rate=section.mutation_rate,
            trial=self.trial_config(),
            lights_per_generation=section.lights_per_generation,
            light_radius=section.light_radius,
            seed=section.seed,
            centre_crossing=section.centre_crossing,
            chunk_size=section.chunk_size,
        )

    def with_overrides(self, section: str, **values: Any) -> "ExperimentConfig":
        """Copy with some keys of one section replaced (re-validated)."""
        data = self.model_dump(by_alias=True)
        data[section].update({k: v for k, v in values.items() if v is not None})
        return ExperimentConfig.model_validate(data)


def _template(kind: InterferenceKind, lam: float, duration: float) -> ExperimentConfig:
    return ExperimentConfig(
        trial=TrialSection(duration=duration),
        interference=InterferenceSpec(kind=kind, lam=lam),
    )


TEMPLATES: Dict[str, ExperimentConfig] = {
    "exp1": _template(InterferenceKind.NULL, 0.0, 10.0),
    "exp2": _template(InterferenceKind.SIGMOIDAL, 0.5, 10.0),
    "exp3": _template(InterferenceKind.SQUARED, 0.5, 20.0),
    "exp4": _template(InterferenceKind.SINUSOIDAL, 0.5, 20.0),
    "control": _template(InterferenceKind.NULL, 0.5, 10.0),
}


def _key_line(
    text: str, section: Optional[str], key: Optional[str], header: bool = True
) -> Optional[int]:
    """1-based line of `key` inside `[section]`, else of the section header."""
    current = None
    header_line = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        match = re.match(r"^\[([^\]]+)\]", line)
        if match:
            current = match.group(1).strip()
            if current == section:
                header_line = number
            continue
        if current == section and key and re.match(rf"^{re.escape(key)}\s*=", line):
            return number
    return header_line if header else None


def _loc_parts(loc: Tuple[Any, ...]) -> Tuple[Optional[str], Optional[str]]:
    section = str(loc[0]) if loc else None
    key = str(loc[1]) if len(loc) > 1 else None
    return section, key


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = re.search(r"line (\d+)", str(exc))
        line = int(match.group(1)) if match else None
        raise ConfigError(f"malformed TOML: {exc}", line=line, source=source) from exc

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        section, key = _loc_parts(tuple(first["loc"]))
        dotted = ".".join(str(part) for part in first["loc"])
        raise ConfigError(
            first["msg"],
            key=dotted or None,
            line=_key_line(text, section, key),
            source=source,
        ) from exc
    except ConfigError as exc:
        # cross-section checks name a bare key; anchor to its first occurrence
        if exc.line is None and exc.key:
            for section in data:
                line = _key_line(text, section, exc.key, header=False)
                if line is not None:
                    exc.line = line
                    exc.key = f"{section}.{exc.key}"
                    break
        exc.source = source
        raise


def load_config(path: Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", source=str(path)) from exc
    return parse_config(text, source=str(path))


def dump_config(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(cfg.model_dump(mode="json", by_alias=True, exclude_none=True))


def template(name: str) -> ExperimentConfig:
    try:
        return TEMPLATES[name]
    except KeyError:
        raise ConfigError(
            f"unknown template {name!r} (choose from {', '.join(TEMPLATES)})"
        ) from None
