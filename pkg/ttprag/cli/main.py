"""
ttprag CLI - retrieval-augmented mapping of attack procedures to ATT&CK tactics.
"""

import logging
import sys
from typing import Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel

from .baseline import train_baseline
from .compare import compare
from .evaluate import evaluate
from .index import index
from .ingest import ingest
from .predict import predict
from .review import review

console = Console()

app = typer.Typer(
    name="ttprag",
    help="Map attack procedure descriptions to ATT&CK tactics with retrieval-augmented LLMs",
    add_completion=False,
    no_args_is_help=True,
    rich_markup_mode="rich",
)

app.command(
    name="ingest",
    help="Parse an ATT&CK snapshot into curated corpus files",
)(ingest)

app.command(
    name="index",
    help="Embed curated procedures into a similarity index",
)(index)

app.command(
    name="predict",
    help="Predict tactics for every procedure with a chat backend",
)(predict)

app.command(
    name="evaluate",
    help="Score predictions and write reports",
)(evaluate)

app.command(
    name="train-baseline",
    help="Train the supervised baseline on labeled descriptions",
)(train_baseline)

app.command(
    name="compare",
    help="Compare several prediction runs side by side",
)(compare)

app.command(
    name="review",
    help="Sample matched and unmatched cases for manual review",
)(review)


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def version_callback(value: bool):
    """Print version and exit."""
    if value:
        from ttprag import __version__
        console.print(f"ttprag v{__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-v",
        help="Show version and exit",
        callback=version_callback,
        is_eager=True,
    ),
    verbose: bool = typer.Option(False, "--verbose", help="Debug logging on stderr"),
):
    """
    ttprag - ATT&CK tactic mapping with retrieval-augmented generation.

    Ingest a snapshot, index procedures, predict, evaluate and compare runs.
    """
    configure_logging(verbose)


def run():
    """Entry point for the CLI."""
    try:
        app()
    except Exception as e:
        console.print(
            Panel(
                f"[red]Error:[/red] {str(e)}",
                title="[bold red]ttprag Error[/bold red]",
                border_style="red",
            )
        )
        sys.exit(1)


if __name__ == "__main__":
    run()
