"""
Curation of the labeled description set and the filtered procedure set.
"""

import hashlib
import logging
import re
from collections import Counter
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..utils.errors import ErrorCode, create_error
from .models import (
    Corpus,
    CorpusStats,
    DescriptionKind,
    LabeledDescription,
    ProcedureExample,
)
from .tactics import TACTIC_ORDER, contains_tactic_name

logger = logging.getLogger(__name__)

_CITATION = re.compile(r"\(\s*Citation:[^)]*\)", re.IGNORECASE)
_MARKDOWN_LINK = re.compile(r"\[([^\]]+)\]\((?:[^()]|\([^)]*\))*\)")
_TRAILING_REFS = re.compile(r"(?:\s*\[\d+(?:\s*,\s*\d+)*\])+\s*$")
_HTML_TAG = re.compile(r"</?[a-zA-Z][^>]*>")


def clean_text(raw: str) -> str:
    """
    Strip ATT&CK citation markup from a description or procedure sentence.

    Removes '(Citation: ...)' markers and trailing '[n]' reference brackets,
    replaces markdown links with their link text, drops inline HTML tags and
    collapses whitespace.
    """
    text = _CITATION.sub("", raw)
    text = _MARKDOWN_LINK.sub(r"\1", text)
    text = _HTML_TAG.sub("", text)
    text = _TRAILING_REFS.sub("", text)
    text = " ".join(text.split())
    # Removing a citation before punctuation leaves "word ." behind.
    return re.sub(r"\s+([.,;:])", r"\1", text)


def procedure_id_for(relationship_id: str) -> str:
    """Stable key derived from the source relationship id."""
    return hashlib.sha256(relationship_id.encode("utf-8")).hexdigest()[:16]


def curate_finetune_set(corpus: Corpus) -> List[LabeledDescription]:
    """
    One labeled description per tactic, technique and sub-technique.

    Raises:
        CurationError: if any technique has no tactic mapping (lists all ids).
    """
    unmapped = [t.attack_id for t in corpus.techniques if not t.tactics]
    if unmapped:
        raise create_error(ErrorCode.TECHNIQUE_WITHOUT_TACTIC, attack_ids=", ".join(sorted(unmapped)))

    entries: List[LabeledDescription] = []
    for tactic in corpus.tactics:
        text = clean_text(tactic.description)
        if not text:
            logger.warning("Tactic %s has no description; skipped", tactic.attack_id)
            continue
        entries.append(LabeledDescription(
            attack_id=tactic.attack_id,
            name=tactic.name,
            kind=DescriptionKind.TACTIC,
            description_text=text,
            tactic_labels=frozenset({tactic.tactic}),
            url=tactic.url,
        ))

    for technique in corpus.techniques:
        text = clean_text(technique.description)
        if not text:
            logger.warning("Technique %s has no description; skipped", technique.attack_id)
            continue
        entries.append(LabeledDescription(
            attack_id=technique.attack_id,
            name=technique.name,
            kind=DescriptionKind.SUBTECHNIQUE if technique.is_subtechnique else DescriptionKind.TECHNIQUE,
            description_text=text,
            tactic_labels=frozenset(technique.tactics),
            url=technique.url,
        ))

    entries.sort(key=lambda d: d.attack_id)
    return entries


def curate_procedures(corpus: Corpus, dedupe_sentences: bool = False) -> List[ProcedureExample]:
    """
    Every procedure sentence that names no tactic, labeled with its technique's tactics.

    With dedupe_sentences, identical (text, technique) pairs collapse onto the
    smallest procedure_id.
    """
    techniques = corpus.technique_by_stix_id()
    unmapped = sorted({
        techniques[p.technique_stix_id].attack_id
        for p in corpus.procedures
        if not techniques[p.technique_stix_id].tactics
    })
    if unmapped:
        raise create_error(ErrorCode.TECHNIQUE_WITHOUT_TACTIC, attack_ids=", ".join(unmapped))

    kept: List[ProcedureExample] = []
    dropped = 0
    for record in corpus.procedures:
        text = clean_text(record.description)
        if not text:
            continue
        if contains_tactic_name(text):
            dropped += 1
            continue
        technique = techniques[record.technique_stix_id]
        kept.append(ProcedureExample(
            procedure_id=procedure_id_for(record.relationship_id),
            actor_name=record.actor_name,
            text=text,
            technique_attack_id=technique.attack_id,
            gold_tactics=frozenset(technique.tactics),
            url=technique.url,
        ))

    kept.sort(key=lambda p: p.procedure_id)
    logger.info("Kept %d procedures, dropped %d naming a tactic", len(kept), dropped)

    if dedupe_sentences:
        seen = set()
        unique = []
        for proc in kept:
            key = (proc.text, proc.technique_attack_id)
            if key in seen:
                continue
            seen.add(key)
            unique.append(proc)
        logger.info("Deduplication removed %d repeated sentences", len(kept) - len(unique))
        kept = unique
    return kept


def tactic_overlap_matrix(procedures: Sequence[ProcedureExample]) -> np.ndarray:
    """
    Symmetric 14x14 co-occurrence counts of gold tactics, in report row order.

    Diagonal (i, i) counts procedures labeled with tactic i.
    """
    index = {t: i for i, t in enumerate(TACTIC_ORDER)}
    matrix = np.zeros((len(TACTIC_ORDER), len(TACTIC_ORDER)), dtype=np.int64)
    for proc in procedures:
        rows = [index[t] for t in proc.gold_tactics]
        for i in rows:
            for j in rows:
                matrix[i, j] += 1
    return matrix


def corpus_stats(
    descriptions: Sequence[LabeledDescription],
    procedures: Sequence[ProcedureExample],
    n_procedures_before_filter: Optional[int] = None,
) -> CorpusStats:
    support: Counter = Counter()
    for proc in procedures:
        support.update(proc.gold_tactics)
    per_tactic: Dict = {t: support.get(t, 0) for t in TACTIC_ORDER}
    return CorpusStats(
        n_descriptions=len(descriptions),
        n_procedures=len(procedures),
        support_total=sum(per_tactic.values()),
        per_tactic_support=per_tactic,
        n_procedures_before_filter=n_procedures_before_filter,
    )
