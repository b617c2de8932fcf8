"""
Shared CLI plumbing: error mapping, selectors, output bookkeeping.
"""

from contextlib import contextmanager
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape

from src.core.config import ExperimentConfig, load_config, template
from src.core.errors import (
    AnalysisError,
    ConfigError,
    NumericError,
    StorageError,
)
from src.core.evolution import NetworkGenome, Population, select_best
from src.core.storage import RunManifest, write_manifest
from src.core.trial import PerturbationSpec, clock_light, probe_lights_clock
from src.core.world import LightPosition

console = Console()

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTH = "both"


def fail(message: str, code: int = EXIT_USAGE) -> None:
    console.print(f"[red]✗ {escape(message)}[/red]")
    raise typer.Exit(code)


@contextmanager
def command_errors() -> Iterator[None]:
    """Map library errors to exit codes (1 config/storage, 2 numeric/analysis)."""
    try:
        yield
    except (ConfigError, StorageError) as exc:
        fail(str(exc), EXIT_USAGE)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        fail(f"{where}: {first['msg']}" if where else first["msg"], EXIT_USAGE)
    except (NumericError, AnalysisError) as exc:
        fail(str(exc), EXIT_RUNTIME)


def resolve_config(
    config_path: Optional[Path], template_name: Optional[str]
) -> Tuple[ExperimentConfig, str]:
    """Config from a file or a named template, plus a label for the registry."""
    if config_path is not None and template_name is not None:
        raise ConfigError("give either a config file or --template, not both")
    if config_path is not None:
        return load_config(config_path), str(config_path)
    if template_name is not None:
        return template(template_name), f"template:{template_name}"
    raise ConfigError("a config file or --template is required")


def parse_xy(text: str) -> LightPosition:
    try:
        x, y = (float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"light coordinates must look like X,Y, got {text!r}") from None
    return LightPosition(x, y)


def select_lights(
    selectors: Sequence[str], xy: Sequence[str], cfg: ExperimentConfig
) -> List[Tuple[str, LightPosition]]:
    """Clock positions ('all' or 1..count) and explicit coordinates, labelled."""
    radius = cfg.analysis.probe_radius
    count = cfg.analysis.probe_count
    lights: List[Tuple[str, LightPosition]] = []
    for selector in selectors:
        if selector == "all":
            lights += [
                (f"light{p:02d}", light)
                for p, light in enumerate(probe_lights_clock(radius, count), start=1)
            ]
            continue
        try:
            position = int(selector)
        except ValueError:
            raise ConfigError(f"unknown light selector {selector!r}") from None
        lights.append((f"light{position:02d}", clock_light(position, radius, count)))
    for i, text in enumerate(xy, start=1):
        lights.append((f"xy{i:02d}", parse_xy(text)))
    if not lights:
        raise ConfigError("no lights selected")
    return lights


def select_member(
    pop: Population, selector: str, cfg: ExperimentConfig, workers: int = 1
) -> Tuple[NetworkGenome, Optional[float]]:
    """'best', a member id, or a 0-based index."""
    if selector == "best":
        lights = probe_lights_clock(cfg.analysis.probe_radius, cfg.analysis.probe_count)
        return select_best(
            pop, cfg.trial_config(), lights, cfg.evolution.chunk_size, workers
        )
    try:
        return pop.member(selector), None
    except KeyError:
        pass
    if selector.isdigit() and int(selector) < pop.size:
        return pop.members[int(selector)], None
    raise ConfigError(f"unknown member {selector!r}")


def perturbation(
    lesion: Optional[Side], deactivate: Optional[Side], **scripts: Any
) -> PerturbationSpec:
    def hits(side: Optional[Side], which: str) -> bool:
        return side is not None and side.value in (which, "both")

    return PerturbationSpec(
        interference_gain_left=0.0 if hits(lesion, "left") else 1.0,
        interference_gain_right=0.0 if hits(lesion, "right") else 1.0,
        sensor_enabled_left=not hits(deactivate, "left"),
        sensor_enabled_right=not hits(deactivate, "right"),
        **scripts,
    )


def finish_outputs(
    command: str,
    out: Path,
    outputs: Sequence[Path],
    started_at: datetime,
    *,
    config: Optional[ExperimentConfig] = None,
    seed: Optional[int] = None,
    arguments: Optional[Dict[str, Any]] = None,
) -> Path:
    plain = {
        key: str(value) if isinstance(value, Path) else value
        for key, value in (arguments or {}).items()
    }
    manifest = RunManifest.build(
        command,
        outputs,
        started_at=started_at,
        directory=out,
        config=config,
        seed=seed,
        arguments=plain,
    )
    path = write_manifest(out, manifest)
    console.print(f"[green]✓ Wrote {len(outputs)} file(s) to[/green] {out}")
    return path
