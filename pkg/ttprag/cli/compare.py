"""
Compare command: several runs side by side in one table.
"""

from pathlib import Path
from typing import List, Optional, Tuple

import typer

from ..corpus.artifacts import PROCEDURES_FILE, load_procedures
from ..evaluation import EvalReport, Subgroup, build_report, render_comparison, score_predictions, subgroup_split
from ..extraction.models import load_predictions
from ..utils.io import atomic_write_bytes
from .common import ConfigOption, OutOption, console, fail, require_file, resolve_config

app = typer.Typer()


def parse_run_spec(spec: str) -> Tuple[str, Path]:
    """'NAME=path/to/predictions.jsonl', or a bare path named after its directory."""
    if "=" in spec:
        name, _, path = spec.partition("=")
        return name.strip(), Path(path.strip())
    path = Path(spec)
    return path.parent.name or path.stem, path


@app.command()
def compare(
    runs: List[str] = typer.Argument(..., help="Runs as NAME=predictions.jsonl"),
    layout: str = typer.Option("f1", "--layout", help="f1: F1 per run; prf: precision/recall/F1 per run"),
    subgroup: Subgroup = typer.Option(Subgroup.ALL, "--subgroup", help="Which URL subgroup to compare"),
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
) -> None:
    """
    Render several prediction files into comparison.md and comparison.csv.
    """
    if layout not in ("f1", "prf"):
        raise typer.BadParameter(f"Unknown layout: {layout}")
    try:
        cfg = resolve_config(config, out=out)
    except (ValueError, FileNotFoundError) as e:
        fail(e, "Configuration Error")
    procedures_path = require_file(cfg.corpus_dir / PROCEDURES_FILE, "Procedures file")
    specs = [parse_run_spec(s) for s in runs]
    for _, path in specs:
        require_file(path, "Predictions file")

    try:
        procedures = load_procedures(procedures_path)
        columns: List[Tuple[str, EvalReport]] = []
        for name, path in specs:
            predictions = load_predictions(path)
            if subgroup != Subgroup.ALL:
                matched, unmatched = subgroup_split(predictions)
                predictions = matched if subgroup == Subgroup.MATCHED_URL else unmatched
            results, _ = score_predictions(predictions, procedures)
            columns.append((name, build_report(results, name, subgroup)))
        paths = [cfg.out_dir / "comparison.md", cfg.out_dir / "comparison.csv"]
        atomic_write_bytes(paths[0], render_comparison(columns, layout, "md"))
        atomic_write_bytes(paths[1], render_comparison(columns, layout, "csv"))
    except (ValueError, OSError) as e:
        fail(e, "Compare Error")

    console.print(render_comparison(columns, layout, "md").decode("utf-8"))
    for path in paths:
        console.print(f"Comparison written to: {path}")
