"""
Helpers shared by the CLI commands.
"""

from pathlib import Path
from typing import Any, Dict, Optional

import typer
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from ..config import RunConfig, load_config
from ..utils.errors import TtpRagError
from ..utils.monitoring import get_stage_metrics

console = Console()

ConfigOption = typer.Option(
    None,
    "--config",
    "-c",
    help="Run configuration file (JSON or YAML)",
    exists=True,
    file_okay=True,
    dir_okay=False,
    readable=True,
)

OutOption = typer.Option(
    None,
    "--out",
    "-o",
    help="Output directory",
    file_okay=False,
    dir_okay=True,
)


def resolve_config(config_path: Optional[Path], **flags: Any) -> RunConfig:
    """File values (or defaults) with CLI flags applied on top."""
    base = load_config(config_path) if config_path else RunConfig()
    return base.with_overrides(**flags)


def fail(error: Exception, title: str = "Error") -> None:
    """Show an error panel and exit with status 1."""
    message = escape(str(error))
    if isinstance(error, TtpRagError):
        message = f"[{error.code.value}] {message}"
    console.print(
        Panel(
            f"[red]Error:[/red] {message}",
            title=f"[bold red]{title}[/bold red]",
            border_style="red",
        )
    )
    raise typer.Exit(1)


def require_file(path: Path, what: str) -> Path:
    """Usage error (exit status 2) when an input file is missing."""
    if not path.exists():
        raise typer.BadParameter(f"{what} not found: {path}")
    if not path.is_file():
        raise typer.BadParameter(f"{what} is not a file: {path}")
    return path


def stage_metrics_table(metrics: Optional[Dict[str, Any]] = None) -> Table:
    metrics = metrics if metrics is not None else get_stage_metrics()
    table = Table(title="Stage Metrics")
    table.add_column("Stage", style="cyan")
    table.add_column("Calls", style="green", justify="right")
    table.add_column("Failures", style="red", justify="right")
    table.add_column("Avg ms", justify="right")
    table.add_column("p90 ms", justify="right")
    table.add_column("Max ms", justify="right")
    table.add_column("Errors", style="red")
    for stage, stats in metrics.items():
        table.add_row(
            stage,
            str(stats["calls"]),
            str(stats["failures"]),
            str(stats.get("avg_ms", "-")),
            str(stats.get("p90_ms", "-")),
            str(stats.get("max_ms", "-")),
            ", ".join(f"{kind} x{n}" for kind, n in stats.get("errors", {}).items()) or "-",
        )
    return table
