"""
`evolve`: run the microbial GA and write population, history and manifest.
"""

from pathlib import Path
from typing import Optional

import typer
from rich.markup import escape
from rich.panel import Panel
from rich.progress import BarColumn, Progress, TextColumn, TimeRemainingColumn

from src.cli.common import command_errors, console, finish_outputs, resolve_config
from src.core.evolution import GenerationSummary, evolve
from src.core.registry import RunRecorder
from src.core.settings import get_settings
from src.core.storage import load_population, save_population, utcnow, write_history

POPULATION_FILE = "population.json"
HISTORY_FILE = "history.csv"


def evolve_command(
    config_path: Optional[Path] = typer.Argument(
        None, help="Experiment config (TOML)", dir_okay=False
    ),
    template_name: Optional[str] = typer.Option(
        None, "--template", "-t", help="Use a built-in template instead of a file"
    ),
    out: Path = typer.Option(Path("out"), "--out", "-o", help="Output directory"),
    seed_population: Optional[Path] = typer.Option(
        None, "--from", help="Population file to continue from (descendant run)"
    ),
    generations: Optional[int] = typer.Option(
        None, "--generations", "-g", help="Override evolution.generations"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override evolution.seed"),
    workers: Optional[int] = typer.Option(
        None, "--workers", "-w", help="Worker processes (env: PHOTOTAXIS_WORKERS)"
    ),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="No progress bar"),
):
    """Evolve a population of phototactic controllers."""
    started_at = utcnow()
    with command_errors():
        cfg, label = resolve_config(config_path, template_name)
        cfg = cfg.with_overrides("evolution", generations=generations, seed=seed)
        evo = cfg.evolution_config()
        initial = load_population(seed_population).population if seed_population else None
        n_workers = get_settings().resolved_workers(workers)

        origin = (
            f"descendant of {seed_population}" if seed_population else "fresh population"
        )
        console.print(
            Panel(
                f"[bold]{escape(label)}[/bold]\n"
                f"interference: {cfg.interference.kind.value} "
                f"(lambda={cfg.interference.lam:g}), duration {cfg.trial.duration:g}\n"
                f"seed {evo.seed}, {n_workers} worker(s), {origin}",
                title="Evolve",
                border_style="cyan",
            )
        )

        with RunRecorder(
            "evolve", seed=evo.seed, config_name=label, output_dir=out
        ) as recorder, Progress(
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("best {task.fields[best]:.4f}"),
            TimeRemainingColumn(),
            console=console,
            disable=quiet,
        ) as progress:
            task = progress.add_task("generations", total=evo.generations, best=float("nan"))

            def on_generation(summary: GenerationSummary) -> None:
                recorder.add_generation(summary)
                progress.update(task, advance=1, best=summary.best)

            pop, history = evolve(evo, initial, n_workers, on_generation)

            outputs = [
                save_population(out / POPULATION_FILE, pop, cfg),
                write_history(out / HISTORY_FILE, history),
            ]
        finish_outputs(
            "evolve",
            out,
            outputs,
            started_at,
            config=cfg,
            seed=evo.seed,
            arguments={"config": config_path or label, "from": seed_population},
        )
        if history:
            console.print(
                f"[green]✓ Generation {pop.generation}:[/green] best {history[-1].best:.4f}, "
                f"mean {history[-1].mean:.4f}"
            )
