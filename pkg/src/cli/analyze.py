"""
`stats`, `classify` and `peaks`: offline analysis of trial logs.
"""

from pathlib import Path
from typing import List, Optional

import typer
from rich.table import Table

from src.cli.common import command_errors, console, finish_outputs, parse_xy
from src.core.analysis import Window, classify_orbit, find_peaks, motor_stats, span
from src.core.config import AnalysisConfig, ExperimentConfig, load_config
from src.core.errors import ConfigError
from src.core.interference import InterferenceKind
from src.core.registry import RunRecorder
from src.core.storage import read_log, utcnow, write_stats, write_table
from src.core.trial import clock_light

STATS_FILE = "stats.csv"
SAMPLES_FILE = "samples.csv"


def _analysis_config(config_path: Optional[Path]) -> ExperimentConfig:
    return load_config(config_path) if config_path else ExperimentConfig()


def stats_command(
    logs: List[Path] = typer.Argument(..., help="Trial log files (pooled)"),
    start: Optional[float] = typer.Option(None, "--start", help="Window start"),
    end: Optional[float] = typer.Option(None, "--end", help="Window end (exclusive)"),
    interference: Optional[InterferenceKind] = typer.Option(
        None,
        "--interference",
        help="Summarise psi(m) under this interference instead of m",
    ),
    config_path: Optional[Path] = typer.Option(None, "--config", "-c"),
    out: Path = typer.Option(Path("out"), "--out", "-o", help="Output directory"),
):
    """Motor-activity statistics over a time window, pooled across logs."""
    started_at = utcnow()
    with command_errors():
        cfg = _analysis_config(config_path)
        window = Window(
            cfg.analysis.window_start if start is None else start,
            cfg.analysis.window_end if end is None else end,
        )
        spec = None
        if interference is not None:
            spec = cfg.interference.model_copy(update={"kind": interference})

        with RunRecorder("stats", output_dir=out):
            stats = motor_stats([read_log(path) for path in logs], window, spec)
            outputs = [
                write_stats(out / STATS_FILE, stats.to_frame()),
                write_table(out / SAMPLES_FILE, stats.samples),
            ]

        label = f"psi(m), {interference.value}" if interference else "motor output"
        table = Table(title=f"{label}: t in [{window.start:g}, {window.end:g})")
        table.add_column("Motor", style="cyan")
        for column in ("n", "min", "q1", "median", "mean", "q3", "max", "whiskers"):
            table.add_column(column, justify="right")
        for name, summary in (("left", stats.left), ("right", stats.right)):
            table.add_row(
                name,
                str(summary.count),
                f"{summary.min:.4f}",
                f"{summary.q1:.4f}",
                f"{summary.median:.4f}",
                f"{summary.mean:.4f}",
                f"{summary.q3:.4f}",
                f"{summary.max:.4f}",
                f"{summary.whisker_low:.3f}..{summary.whisker_high:.3f}",
            )
        console.print(table)
        finish_outputs(
            "stats",
            out,
            outputs,
            started_at,
            arguments={
                "logs": [str(path) for path in logs],
                "window": list(window),
                "interference": interference.value if interference else None,
            },
        )


def classify_command(
    log_path: Path = typer.Argument(..., help="Trial log file"),
    light: Optional[int] = typer.Option(None, "--light", "-l", help="Clock position 1-12"),
    light_xy: Optional[str] = typer.Option(None, "--light-xy", help="Light position X,Y"),
    start: Optional[float] = typer.Option(None, "--start"),
    end: Optional[float] = typer.Option(None, "--end"),
    config_path: Optional[Path] = typer.Option(None, "--config", "-c"),
):
    """Label the orbit around the light as Type1, Type2 or Unclassified."""
    with command_errors():
        cfg = _analysis_config(config_path)
        thresholds: AnalysisConfig = cfg.analysis
        if (light is None) == (light_xy is None):
            raise ConfigError("give exactly one of --light and --light-xy")
        position = (
            clock_light(light, thresholds.probe_radius, thresholds.probe_count)
            if light is not None
            else parse_xy(light_xy)
        )
        window = Window(
            thresholds.window_start if start is None else start,
            thresholds.window_end if end is None else end,
        )
        orbit = classify_orbit(read_log(log_path), window, position, thresholds)

        color = {"Type1": "yellow", "Type2": "green"}.get(orbit.label.value, "dim")
        console.print(f"[{color}]{orbit.label.value}[/{color}]")
        console.print(
            f"  forward fraction {orbit.forward_fraction:.3f} "
            f"(Type2 at >= {thresholds.forward_fraction:g})\n"
            f"  sign changes {orbit.sign_changes} "
            f"(Type1 at >= {thresholds.min_sign_changes})\n"
            f"  distance max {orbit.max_distance:.3f} / median {orbit.median_distance:.3f}"
        )


def peaks_command(
    log_path: Path = typer.Argument(..., help="Trial log file"),
    column: str = typer.Option("psi_left", "--column", help="Column to search"),
    start: Optional[float] = typer.Option(None, "--start"),
    end: Optional[float] = typer.Option(None, "--end"),
    prominence: Optional[float] = typer.Option(None, "--prominence"),
):
    """Peak times of one log column and their mean spacing."""
    with command_errors():
        log = read_log(log_path)
        window = None
        if start is not None or end is not None:
            first, last = span(log)
            window = Window(
                first if start is None else start,
                last if end is None else end,
            )
        report = find_peaks(log, column, window, prominence)

        console.print(f"[cyan]{len(report.times)} peak(s) in {column}[/cyan]")
        for time, value in zip(report.times, report.values):
            console.print(f"  t={time:.4f}  {value:.6f}")
        if report.period is not None:
            console.print(f"[bold]mean period:[/bold] {report.period:.4f}")
