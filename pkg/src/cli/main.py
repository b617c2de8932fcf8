"""
phototaxis - main CLI entry point.

Evolve, replay, probe and analyse CTRNN-controlled light-seeking robots
under motor-driven sensory interference.
"""

import logging
import sys
from typing import Optional

import typer

try:  # newer typer vendors its own click; catch the exceptions it raises
    from typer._click import exceptions as click
except ImportError:  # pragma: no cover - typer using upstream click
    import click  # type: ignore[no-redef]

from src import __version__
from src.cli import analyze, evolve, runs, simulate
from src.cli.common import EXIT_USAGE, command_errors, console
from src.core.config import ExperimentConfig, dump_config, template
from src.core.log import configure_logging
from src.core.settings import get_settings

app = typer.Typer(
    name="phototaxis",
    help="Evolutionary robotics toolkit: phototaxis under motor-driven sensory interference",
    add_completion=False,
)


def _version(value: bool) -> None:
    if value:
        console.print(f"phototaxis {__version__}")
        raise typer.Exit()


@app.callback()
def callback(
    verbose: int = typer.Option(
        0, "--verbose", "-v", count=True, help="-v for INFO, -vv for DEBUG"
    ),
    version: Optional[bool] = typer.Option(
        None, "--version", callback=_version, is_eager=True, help="Show version"
    ),
):
    """Set up logging before every command."""
    level = {0: get_settings().log_level, 1: logging.INFO}.get(verbose, logging.DEBUG)
    configure_logging(level)


@app.command()
def defaults(
    template_name: Optional[str] = typer.Option(
        None, "--template", "-t", help="exp1, exp2, exp3, exp4 or control"
    ),
):
    """Print a complete config file with every default value."""
    with command_errors():
        cfg = template(template_name) if template_name else ExperimentConfig()
        typer.echo(dump_config(cfg), nl=False)


app.command("evolve")(evolve.evolve_command)
app.command("simulate")(simulate.simulate_command)
app.command("probe")(simulate.probe_command)
app.command("stats")(analyze.stats_command)
app.command("classify")(analyze.classify_command)
app.command("peaks")(analyze.peaks_command)
app.add_typer(runs.app, name="runs")


def run() -> None:
    """Console entry point: usage errors exit with 1, not click's 2."""
    try:
        code = app(standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.Abort:
        console.print("[red]Aborted[/red]")
        sys.exit(EXIT_USAGE)
    sys.exit(code if isinstance(code, int) else 0)


if __name__ == "__main__":
    run()
