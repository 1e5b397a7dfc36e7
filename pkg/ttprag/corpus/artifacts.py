"""
Reading and writing the curated corpus files.
"""

import csv
import io
import json
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np

from ..utils.io import atomic_write_text, read_jsonl, write_jsonl
from .models import CorpusStats, LabeledDescription, ProcedureExample
from .tactics import TACTIC_ORDER

DESCRIPTIONS_FILE = "descriptions.jsonl"
PROCEDURES_FILE = "procedures.jsonl"
OVERLAP_FILE = "overlap.csv"
STATS_FILE = "stats.json"


def render_overlap_csv(matrix: np.ndarray) -> str:
    """14x14 integer matrix with a header row of tactic slugs."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([t.slug for t in TACTIC_ORDER])
    for row in matrix:
        writer.writerow([int(v) for v in row])
    return buf.getvalue()


def read_overlap_csv(path: Union[str, Path]) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    if header != [t.slug for t in TACTIC_ORDER]:
        raise ValueError(f"Unexpected overlap header in {path}")
    return np.array([[int(v) for v in row] for row in body], dtype=np.int64)


def write_corpus_artifacts(
    out_dir: Union[str, Path],
    descriptions: Sequence[LabeledDescription],
    procedures: Sequence[ProcedureExample],
    stats: CorpusStats,
    overlap: np.ndarray,
) -> Dict[str, Path]:
    """Write descriptions, procedures, overlap matrix and stats. Returns the paths."""
    out = Path(out_dir)
    paths = {
        "descriptions": out / DESCRIPTIONS_FILE,
        "procedures": out / PROCEDURES_FILE,
        "overlap": out / OVERLAP_FILE,
        "stats": out / STATS_FILE,
    }
    write_jsonl(paths["descriptions"], descriptions)
    write_jsonl(paths["procedures"], procedures)
    atomic_write_text(paths["overlap"], render_overlap_csv(overlap))
    atomic_write_text(
        paths["stats"],
        json.dumps(stats.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
    )
    return paths


def load_descriptions(path: Union[str, Path]) -> List[LabeledDescription]:
    return read_jsonl(path, LabeledDescription)


def load_procedures(path: Union[str, Path]) -> List[ProcedureExample]:
    return read_jsonl(path, ProcedureExample)
