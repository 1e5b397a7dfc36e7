"""
Review command: draw matched-URL and unmatched-URL cases for expert reading.
"""

import random
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import typer
from pydantic import BaseModel, ConfigDict, field_serializer

from ..corpus.artifacts import PROCEDURES_FILE, load_procedures
from ..corpus.models import ProcedureExample
from ..corpus.tactics import Tactic, sort_tactics
from ..evaluation import Subgroup, subgroup_split
from ..evaluation.metrics import sample_prf
from ..extraction.models import PREDICTIONS_FILE, Prediction, load_predictions
from ..utils.io import atomic_write_text, write_jsonl
from .common import ConfigOption, OutOption, console, fail, require_file, resolve_config

app = typer.Typer()


class ReviewItem(BaseModel):
    model_config = ConfigDict(frozen=True)

    subgroup: Subgroup
    procedure_id: str
    actor_name: str
    text: str
    url: str
    gold: Tuple[Tactic, ...]
    predicted: Tuple[Tactic, ...]
    f1: float
    candidate_urls: Tuple[str, ...]
    raw_response: str

    @field_serializer("gold", "predicted")
    def _serialize_tactics(self, tactics: Tuple[Tactic, ...]) -> List[str]:
        return [t.value for t in tactics]


def draw_cases(
    predictions: Sequence[Prediction],
    procedures: Sequence[ProcedureExample],
    per_group: int,
    seed: int,
) -> List[ReviewItem]:
    """Up to `per_group` cases from each URL subgroup, drawn with random.Random(seed)."""
    by_id: Dict[str, ProcedureExample] = {p.procedure_id: p for p in procedures}
    known = sorted((p for p in predictions if p.procedure_id in by_id), key=lambda p: p.procedure_id)
    matched, unmatched = subgroup_split(known)
    rng = random.Random(seed)
    items: List[ReviewItem] = []
    for subgroup, pool in ((Subgroup.MATCHED_URL, matched), (Subgroup.UNMATCHED_URL, unmatched)):
        chosen = rng.sample(pool, min(per_group, len(pool)))
        for prediction in sorted(chosen, key=lambda p: p.procedure_id):
            procedure = by_id[prediction.procedure_id]
            items.append(ReviewItem(
                subgroup=subgroup,
                procedure_id=procedure.procedure_id,
                actor_name=procedure.actor_name,
                text=procedure.text,
                url=procedure.url,
                gold=tuple(sort_tactics(procedure.gold_tactics)),
                predicted=tuple(sort_tactics(prediction.predicted)),
                f1=sample_prf(procedure.gold_tactics, prediction.predicted)[2],
                candidate_urls=prediction.candidate_urls,
                raw_response=prediction.raw_response,
            ))
    return items


def render_review(items: Sequence[ReviewItem]) -> str:
    lines = ["# Cases for review", ""]
    for subgroup in (Subgroup.MATCHED_URL, Subgroup.UNMATCHED_URL):
        group = [i for i in items if i.subgroup == subgroup]
        lines += [f"## {subgroup.value} ({len(group)})", ""]
        for item in group:
            lines += [
                f"### {item.procedure_id} ({item.actor_name})",
                "",
                f"> {item.text}",
                "",
                f"- Technique page: {item.url}",
                f"- Gold: {', '.join(t.value for t in item.gold)}",
                f"- Predicted: {', '.join(t.value for t in item.predicted) or '(none)'}",
                f"- Sample F1: {item.f1:.2f}",
                f"- Retrieved pages: {', '.join(item.candidate_urls) or '(none)'}",
                "",
                "Response:",
                "",
                "```",
                item.raw_response,
                "```",
                "",
            ]
    return "\n".join(lines)


@app.command()
def review(
    config: Optional[Path] = ConfigOption,
    predictions: Optional[Path] = typer.Option(
        None,
        "--predictions",
        "-p",
        help="Predictions file; defaults to the run output directory's",
        file_okay=True,
        dir_okay=False,
    ),
    per_group: int = typer.Option(10, "--per-group", "-n", min=1, help="Cases per URL subgroup"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Sampling seed"),
    out: Optional[Path] = OutOption,
) -> None:
    """
    Write review.md and review.jsonl with sampled cases, their gold tactics,
    retrieved pages and raw responses. Grading is left to the reader.
    """
    try:
        cfg = resolve_config(config, out=out, seed=seed)
    except (ValueError, FileNotFoundError) as e:
        fail(e, "Configuration Error")
    predictions_path = require_file(predictions or cfg.out_dir / PREDICTIONS_FILE, "Predictions file")
    procedures_path = require_file(cfg.corpus_dir / PROCEDURES_FILE, "Procedures file")

    try:
        items = draw_cases(load_predictions(predictions_path), load_procedures(procedures_path), per_group, cfg.seed)
        write_jsonl(cfg.out_dir / "review.jsonl", items)
        atomic_write_text(cfg.out_dir / "review.md", render_review(items))
    except (ValueError, OSError) as e:
        fail(e, "Review Error")

    counts = {g: sum(1 for i in items if i.subgroup == g) for g in (Subgroup.MATCHED_URL, Subgroup.UNMATCHED_URL)}
    console.print(
        f"Sampled {counts[Subgroup.MATCHED_URL]} matched and {counts[Subgroup.UNMATCHED_URL]} unmatched cases"
    )
    console.print(f"Review written to: {cfg.out_dir / 'review.md'}")
