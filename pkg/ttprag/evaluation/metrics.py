"""
Per-sample and per-tactic precision, recall and F1 over tactic sets.

Conventions: precision is 0 when nothing is predicted, F1 is 0 when
precision + recall is 0.
"""

from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator

from ..corpus.tactics import TACTIC_ORDER, Tactic, sort_tactics
from ..utils.errors import ErrorCode, create_error

PRF = Tuple[float, float, float]


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


class SampleResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    procedure_id: str
    gold: FrozenSet[Tactic]
    predicted: FrozenSet[Tactic]
    precision: float = Field(..., ge=0.0, le=1.0)
    recall: float = Field(..., ge=0.0, le=1.0)
    f1: float = Field(..., ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _f1_is_harmonic_mean(self) -> "SampleResult":
        if abs(self.f1 - _f1(self.precision, self.recall)) > 1e-12:
            raise ValueError("f1 must be the harmonic mean of precision and recall")
        return self

    @field_serializer("gold", "predicted")
    def _serialize_sets(self, tactics: FrozenSet[Tactic]) -> List[str]:
        return [t.value for t in sort_tactics(tactics)]


class TacticScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    precision: float
    recall: float
    f1: float
    support: int = Field(..., ge=0, description="Samples whose gold set contains the tactic")


def sample_prf(gold: Iterable[Tactic], predicted: Iterable[Tactic]) -> PRF:
    """
    Raises:
        EvaluationError: gold set is empty.
    """
    gold, predicted = set(gold), set(predicted)
    if not gold:
        raise create_error(ErrorCode.EVAL_EMPTY_GOLD, procedure_id="<unknown>")
    hits = len(gold & predicted)
    precision = hits / len(predicted) if predicted else 0.0
    recall = hits / len(gold)
    return precision, recall, _f1(precision, recall)


def score_sample(procedure_id: str, gold: FrozenSet[Tactic], predicted: FrozenSet[Tactic]) -> SampleResult:
    if not gold:
        raise create_error(ErrorCode.EVAL_EMPTY_GOLD, procedure_id=procedure_id)
    precision, recall, f1 = sample_prf(gold, predicted)
    return SampleResult(
        procedure_id=procedure_id,
        gold=frozenset(gold),
        predicted=frozenset(predicted),
        precision=precision,
        recall=recall,
        f1=f1,
    )


def samples_average(results: Sequence[SampleResult]) -> PRF:
    """
    Arithmetic means of the per-sample precision, recall and F1.

    The F1 mean is not recomputed from the mean precision and recall.

    Raises:
        EvaluationError: no results.
    """
    if not results:
        raise create_error(ErrorCode.EVAL_EMPTY_RESULTS)
    table = np.array([[r.precision, r.recall, r.f1] for r in results], dtype=np.float64)
    p, r, f = table.mean(axis=0)
    return float(p), float(r), float(f)


def _membership(results: Sequence[SampleResult]) -> Tuple[np.ndarray, np.ndarray]:
    gold = np.zeros((len(results), len(TACTIC_ORDER)), dtype=bool)
    pred = np.zeros_like(gold)
    for row, result in enumerate(results):
        for tactic in result.gold:
            gold[row, tactic.position] = True
        for tactic in result.predicted:
            pred[row, tactic.position] = True
    return gold, pred


def _confusion(results: Sequence[SampleResult]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """True positives, predicted positives and support per tactic."""
    gold, pred = _membership(results)
    return (gold & pred).sum(axis=0), pred.sum(axis=0), gold.sum(axis=0)


def per_tactic_prf(results: Sequence[SampleResult]) -> Dict[Tactic, TacticScore]:
    """Binary P/R/F1 per tactic across samples, in report row order."""
    tp, predicted, support = _confusion(results)
    table: Dict[Tactic, TacticScore] = {}
    for tactic in TACTIC_ORDER:
        i = tactic.position
        precision = tp[i] / predicted[i] if predicted[i] else 0.0
        recall = tp[i] / support[i] if support[i] else 0.0
        table[tactic] = TacticScore(
            precision=float(precision),
            recall=float(recall),
            f1=_f1(float(precision), float(recall)),
            support=int(support[i]),
        )
    return table


def supplementary_averages(results: Sequence[SampleResult]) -> Dict[str, PRF]:
    """Micro, macro and support-weighted averages over the 14 tactics."""
    tp, predicted, support = _confusion(results)
    tp_all, pred_all, gold_all = int(tp.sum()), int(predicted.sum()), int(support.sum())
    micro_p = tp_all / pred_all if pred_all else 0.0
    micro_r = tp_all / gold_all if gold_all else 0.0

    scores = per_tactic_prf(results)
    columns = np.array([[s.precision, s.recall, s.f1] for s in scores.values()], dtype=np.float64)
    macro = columns.mean(axis=0)
    if gold_all:
        weighted = (columns * support[:, None]).sum(axis=0) / gold_all
    else:
        weighted = np.zeros(3)
    return {
        "micro": (float(micro_p), float(micro_r), _f1(micro_p, micro_r)),
        "macro": tuple(float(x) for x in macro),
        "weighted": tuple(float(x) for x in weighted),
    }
