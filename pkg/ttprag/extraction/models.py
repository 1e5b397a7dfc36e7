"""
Prediction records shared by the LLM and baseline paths.
"""

from pathlib import Path
from typing import FrozenSet, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator

from ..corpus.tactics import Tactic, sort_tactics
from ..retrieval.models import RetrievalMode
from ..utils.io import read_jsonl, write_jsonl

PREDICTIONS_FILE = "predictions.jsonl"
BASELINE_MODE = "baseline"
PREDICTION_MODES = tuple(m.value for m in RetrievalMode) + (BASELINE_MODE,)


class Prediction(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    procedure_id: str
    mode: str = Field(..., description="A retrieval mode, or 'baseline'")
    prompt_variant: Optional[str] = None
    predicted: FrozenSet[Tactic] = frozenset()
    raw_response: str = ""
    url_matched: bool = False
    context_unavailable: bool = False
    candidate_urls: Tuple[str, ...] = ()

    @field_validator("mode")
    @classmethod
    def _known_mode(cls, v: str) -> str:
        if v not in PREDICTION_MODES:
            raise ValueError(f"unknown mode '{v}', expected one of {', '.join(PREDICTION_MODES)}")
        return v

    @field_serializer("predicted")
    def _serialize_predicted(self, predicted: FrozenSet[Tactic]) -> List[str]:
        return [t.value for t in sort_tactics(predicted)]


def write_predictions(path: Union[str, Path], predictions: List[Prediction]) -> int:
    """Write predictions ordered by procedure_id."""
    return write_jsonl(path, sorted(predictions, key=lambda p: p.procedure_id))


def load_predictions(path: Union[str, Path]) -> List[Prediction]:
    return read_jsonl(path, Prediction)
