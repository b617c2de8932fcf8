"""
`simulate` and `probe`: replay a population member and log every tick.

simulate puts the robot in front of one or more lights, optionally with
interference lesioned or a sensor switched off. probe runs in the dark
with scripted stimuli fed to the sensors instead.
"""

from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import typer
from pydantic import ValidationError
from rich.table import Table

from src.cli.common import (
    Side,
    command_errors,
    console,
    finish_outputs,
    perturbation,
    select_lights,
    select_member,
)
from src.core.analysis import final_distances
from src.core.config import ExperimentConfig, load_config
from src.core.errors import ScriptError
from src.core.registry import RunRecorder
from src.core.settings import get_settings
from src.core.storage import load_population, utcnow, write_log
from src.core.trial import StimulusScript, decode_for, run_trial, run_trials


def _population_and_config(population: Path, config_path: Optional[Path]):
    stored = load_population(population)
    cfg: ExperimentConfig = load_config(config_path) if config_path else stored.config
    return stored.population, cfg


def simulate_command(
    population: Path = typer.Argument(..., help="Population file"),
    member: str = typer.Option("best", "--member", "-m", help="'best', member id or index"),
    lights: List[str] = typer.Option(
        ["all"], "--light", "-l", help="Clock position 1-12 or 'all' (repeatable)"
    ),
    light_xy: List[str] = typer.Option(
        [], "--light-xy", help="Explicit light position X,Y (repeatable)"
    ),
    duration: Optional[float] = typer.Option(
        None, "--duration", "-d", help="Trial duration (default: analysis.horizon)"
    ),
    lesion: Optional[Side] = typer.Option(
        None, "--lesion-interference", help="Remove motor-sensor interference"
    ),
    deactivate: Optional[Side] = typer.Option(
        None, "--deactivate-sensor", help="Zero a sensor's environmental reading"
    ),
    config_path: Optional[Path] = typer.Option(
        None, "--config", "-c", help="Run under this config instead of the stored one"
    ),
    out: Path = typer.Option(Path("out"), "--out", "-o", help="Output directory"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w"),
):
    """Replay one member against lights and write one log per light."""
    started_at = utcnow()
    with command_errors():
        pop, cfg = _population_and_config(population, config_path)
        # explicit coordinates replace the default 'all'
        clock = [] if light_xy and lights == ["all"] else lights
        selected = select_lights(clock, light_xy, cfg)
        genome, score = select_member(
            pop, member, cfg, get_settings().resolved_workers(workers)
        )
        trial = cfg.trial_config(
            duration=duration if duration is not None else cfg.analysis.horizon,
            perturbation=perturbation(lesion, deactivate),
        )

        with RunRecorder("simulate", output_dir=out, config_name=str(population)):
            genes = np.repeat(genome.array[None, :], len(selected), axis=0)
            rollout = run_trials(
                decode_for(genes, trial), [light for _, light in selected], trial, record=True
            )
            logs = [rollout.log(row) for row in range(len(selected))]
            outputs = [
                write_log(out / f"log_{name}.csv", log)
                for (name, _), log in zip(selected, logs)
            ]

        table = Table(title=f"Member {genome.id}")
        table.add_column("Light", style="cyan")
        table.add_column("Position")
        table.add_column("Cost", justify="right")
        table.add_column("Final distance", justify="right")
        distances = final_distances(logs, [light for _, light in selected])
        for row, ((name, light), distance) in enumerate(zip(selected, distances)):
            table.add_row(
                name,
                f"({light.x:.2f}, {light.y:.2f})",
                f"{rollout.fitness[row]:.4f}",
                f"{distance:.3f}",
            )
        console.print(table)
        if score is not None:
            console.print(f"[dim]best by mean probe cost: {score:.4f}[/dim]")

        finish_outputs(
            "simulate",
            out,
            outputs,
            started_at,
            config=cfg,
            arguments={
                "population": population,
                "member": genome.id,
                "duration": trial.duration,
                "lesion_interference": lesion.value if lesion else None,
                "deactivate_sensor": deactivate.value if deactivate else None,
            },
        )


def parse_script(text: str, side: str) -> StimulusScript:
    """'onset=10,peak=1,decay=0.5,plateau=0.3' -> StimulusScript."""
    fields: Dict[str, float] = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = part.partition("=")
        if not sep:
            raise ScriptError(f"expected key=value, got {part!r}", key=f"script_{side}")
        try:
            fields[key.strip()] = float(value)
        except ValueError:
            raise ScriptError(
                f"{key.strip()} must be a number, got {value!r}", key=f"script_{side}"
            ) from None
    try:
        return StimulusScript(**fields)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ScriptError(first["msg"], key=f"script_{side}.{where}") from None


def probe_command(
    population: Path = typer.Argument(..., help="Population file"),
    member: str = typer.Option("best", "--member", "-m", help="'best', member id or index"),
    left: Optional[str] = typer.Option(
        None, "--left", help="Left stimulus, e.g. 'onset=10,peak=1,decay=0.5,plateau=0.3'"
    ),
    right: Optional[str] = typer.Option(None, "--right", help="Right stimulus"),
    duration: Optional[float] = typer.Option(
        None, "--duration", "-d", help="Trial duration (default: analysis.horizon)"
    ),
    lesion: Optional[Side] = typer.Option(
        None, "--lesion-interference", help="Remove motor-sensor interference"
    ),
    deactivate: Optional[Side] = typer.Option(
        None, "--deactivate-sensor", help="Zero a sensor's reading"
    ),
    config_path: Optional[Path] = typer.Option(None, "--config", "-c"),
    out: Path = typer.Option(Path("out"), "--out", "-o", help="Output directory"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w"),
):
    """Feed scripted stimuli to a member in the dark and log its response."""
    started_at = utcnow()
    with command_errors():
        pop, cfg = _population_and_config(population, config_path)
        scripts = {
            "script_left": parse_script(left, "left") if left else None,
            "script_right": parse_script(right, "right") if right else None,
        }
        trial = cfg.trial_config(
            duration=duration if duration is not None else cfg.analysis.horizon,
            perturbation=perturbation(lesion, deactivate, **scripts),
            log=True,
        )
        genome, _ = select_member(
            pop, member, cfg, get_settings().resolved_workers(workers)
        )

        with RunRecorder("probe", output_dir=out, config_name=str(population)):
            _, log = run_trial(genome, trial)
            assert log is not None
            outputs = [write_log(out / "probe.csv", log)]

        console.print(
            f"[cyan]Probed {genome.id}[/cyan] for {trial.duration:g} time units "
            f"({len(log)} ticks)"
        )
        finish_outputs(
            "probe",
            out,
            outputs,
            started_at,
            config=cfg,
            arguments={
                "population": population,
                "member": genome.id,
                "left": left,
                "right": right,
                "duration": trial.duration,
                "lesion_interference": lesion.value if lesion else None,
                "deactivate_sensor": deactivate.value if deactivate else None,
            },
        )
