"""
Evaluate command: score a predictions file and write the reports.
"""

from pathlib import Path
from typing import List, Optional, Sequence

import typer
from rich.panel import Panel
from rich.table import Table

from ..corpus.artifacts import PROCEDURES_FILE, load_procedures
from ..corpus.models import ProcedureExample
from ..evaluation import EvalReport, Subgroup, build_report, render_report, score_predictions, subgroup_split
from ..extraction.models import PREDICTIONS_FILE, Prediction, load_predictions
from ..utils.io import atomic_write_bytes
from .common import ConfigOption, OutOption, console, fail, require_file, resolve_config

app = typer.Typer()


def report_stem(subgroup: Subgroup) -> str:
    return "report" if subgroup == Subgroup.ALL else f"report.{subgroup.value}"


def write_report_pair(report: EvalReport, out_dir: Path) -> List[Path]:
    stem = report_stem(report.subgroup)
    paths = [out_dir / f"{stem}.csv", out_dir / f"{stem}.md"]
    atomic_write_bytes(paths[0], render_report(report, "csv"))
    atomic_write_bytes(paths[1], render_report(report, "md"))
    return paths


def summary_table(reports: Sequence[EvalReport]) -> Table:
    table = Table(title="Samples Average")
    table.add_column("Subgroup", style="cyan")
    table.add_column("Procedures", justify="right")
    table.add_column("Precision", style="green", justify="right")
    table.add_column("Recall", style="green", justify="right")
    table.add_column("F1", style="bold green", justify="right")
    for report in reports:
        p, r, f = report.samples_average
        table.add_row(report.subgroup.value, str(report.n_samples), f"{p:.2f}", f"{r:.2f}", f"{f:.2f}")
    return table


def evaluate_subgroups(
    predictions: Sequence[Prediction],
    procedures: Sequence[ProcedureExample],
    label: str,
    split_by_url: bool,
):
    """Reports for all predictions and, optionally, each URL subgroup."""
    results, missing = score_predictions(predictions, procedures)
    reports = [build_report(results, label, Subgroup.ALL)]
    if split_by_url:
        matched, unmatched = subgroup_split(predictions)
        for subgroup, part in ((Subgroup.MATCHED_URL, matched), (Subgroup.UNMATCHED_URL, unmatched)):
            part_results, _ = score_predictions(part, procedures)
            if part_results:
                reports.append(build_report(part_results, label, subgroup))
            else:
                console.print(f"[yellow]No predictions in the {subgroup.value} subgroup[/yellow]")
    return reports, missing


@app.command()
def evaluate(
    config: Optional[Path] = ConfigOption,
    predictions: Optional[Path] = typer.Option(
        None,
        "--predictions",
        "-p",
        help="Predictions file; defaults to the run output directory's",
        file_okay=True,
        dir_okay=False,
    ),
    split_by_url: bool = typer.Option(
        False,
        "--split-by-url",
        help="Also report procedures whose own page was or was not retrieved",
    ),
    label: Optional[str] = typer.Option(None, "--label", help="Report title"),
    out: Optional[Path] = OutOption,
) -> None:
    """
    Score predictions against the gold tactics and write report.csv and
    report.md. Exits non-zero when any procedure has no prediction.
    """
    try:
        cfg = resolve_config(config, out=out)
    except (ValueError, FileNotFoundError) as e:
        fail(e, "Configuration Error")
    predictions_path = require_file(predictions or cfg.out_dir / PREDICTIONS_FILE, "Predictions file")
    procedures_path = require_file(cfg.corpus_dir / PROCEDURES_FILE, "Procedures file")

    try:
        loaded = load_predictions(predictions_path)
        procedures = load_procedures(procedures_path)
        if not label:
            modes = sorted({p.mode for p in loaded})
            variants = sorted({p.prompt_variant for p in loaded if p.prompt_variant})
            label = " / ".join(modes + variants) or "Evaluation report"
        reports, missing = evaluate_subgroups(loaded, procedures, label, split_by_url)
        written = []
        for report in reports:
            written += write_report_pair(report, cfg.out_dir)
    except (ValueError, OSError) as e:
        fail(e, "Evaluation Error")

    console.print(summary_table(reports))
    for path in written:
        console.print(f"Report written to: {path}")
    if missing:
        console.print(Panel(
            f"[red]{len(missing)} procedures have no prediction[/red]",
            title="Incomplete",
            border_style="red",
        ))
        raise typer.Exit(1)
