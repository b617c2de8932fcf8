"""
Run registry browsing.
"""

from typing import Optional

import typer
from rich.panel import Panel
from rich.table import Table

from src.cli.common import console
from src.core.database import get_session_context
from src.core.registry import find_run, list_runs

app = typer.Typer(help="Browse recorded runs")


@app.command("list")
def list_command(
    limit: int = typer.Option(20, "--limit", "-n", help="How many runs to show"),
    command: Optional[str] = typer.Option(None, "--command", help="Only this command"),
):
    """List recent runs."""
    with get_session_context() as session:
        runs = list_runs(session, limit=limit, command=command)

        if not runs:
            console.print("[yellow]No runs recorded[/yellow]\n")
            return

        table = Table(title="Recent runs")
        table.add_column("ID", style="dim")
        table.add_column("Command", style="cyan")
        table.add_column("Status")
        table.add_column("Started")
        table.add_column("Seed", justify="right")
        table.add_column("Best", justify="right")
        table.add_column("Output")

        for run in runs:
            status_style = {
                "finished": "green",
                "running": "yellow",
                "failed": "red",
            }.get(run.status, "white")
            best = run.best_score
            table.add_row(
                run.id[:8],
                run.command,
                f"[{status_style}]{run.status}[/{status_style}]",
                run.started_at.strftime("%Y-%m-%d %H:%M") if run.started_at else "-",
                str(run.seed) if run.seed is not None else "-",
                f"{best:.4f}" if best is not None else "-",
                run.output_dir or "-",
            )

        console.print(table)


@app.command("show")
def show_command(run_id: str = typer.Argument(..., help="Run id (prefix is enough)")):
    """Show one run and its generation summary."""
    with get_session_context() as session:
        run = find_run(session, run_id)
        if run is None:
            console.print(f"[red]✗ No unique run matches {run_id}[/red]")
            raise typer.Exit(1)

        duration = run.duration_seconds
        lines = [
            f"[bold]Command:[/bold] {run.command}",
            f"[bold]Status:[/bold] {run.status}",
            f"[bold]Config:[/bold] {run.config_name or '-'}",
            f"[bold]Seed:[/bold] {run.seed if run.seed is not None else '-'}",
            f"[bold]Output:[/bold] {run.output_dir or '-'}",
            f"[bold]Started:[/bold] {run.started_at}",
            f"[bold]Duration:[/bold] {f'{duration:.1f}s' if duration is not None else '-'}",
        ]
        if run.message:
            lines.append(f"[red]{run.message}[/red]")
        if run.generations:
            first, last = run.generations[0], run.generations[-1]
            lines.append(
                f"[bold]Generations:[/bold] {first.generation}..{last.generation} "
                f"(best {first.best:.4f} -> {last.best:.4f})"
            )
        console.print(Panel("\n".join(lines), title=f"Run {run.id}", border_style="cyan"))
