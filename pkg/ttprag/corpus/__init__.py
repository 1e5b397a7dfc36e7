"""
ATT&CK corpus ingestion and curation.
"""

from .artifacts import load_descriptions, load_procedures, write_corpus_artifacts
from .bundle import load_snapshot, parse_snapshot
from .curation import (
    clean_text,
    corpus_stats,
    curate_finetune_set,
    curate_procedures,
    tactic_overlap_matrix,
)
from .models import Corpus, CorpusStats, DescriptionKind, LabeledDescription, ProcedureExample
from .tactics import TACTIC_ORDER, Tactic, contains_tactic_name, sort_tactics

__all__ = [
    "Corpus",
    "CorpusStats",
    "DescriptionKind",
    "LabeledDescription",
    "ProcedureExample",
    "TACTIC_ORDER",
    "Tactic",
    "clean_text",
    "contains_tactic_name",
    "corpus_stats",
    "curate_finetune_set",
    "curate_procedures",
    "load_descriptions",
    "load_procedures",
    "load_snapshot",
    "parse_snapshot",
    "sort_tactics",
    "tactic_overlap_matrix",
    "write_corpus_artifacts",
]
