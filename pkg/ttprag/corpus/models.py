"""
Typed records for the ATT&CK corpus.
"""

from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from .tactics import Tactic, sort_tactics


class DescriptionKind(str, Enum):
    TACTIC = "tactic"
    TECHNIQUE = "technique"
    SUBTECHNIQUE = "subtechnique"


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class TacticRecord(_Frozen):
    """A tactic object as found in the bundle."""
    stix_id: str
    attack_id: str
    tactic: Tactic
    name: str
    description: str
    url: str


class TechniqueRecord(_Frozen):
    """A technique or sub-technique with its kill-chain tactics."""
    stix_id: str
    attack_id: str
    name: str
    description: str
    url: str
    is_subtechnique: bool
    tactics: Tuple[Tactic, ...]


class ProcedureRecord(_Frozen):
    """A raw 'uses' relationship pointing at a technique."""
    relationship_id: str
    actor_name: str
    actor_type: str
    technique_stix_id: str
    description: str


class Corpus(_Frozen):
    """Parsed enterprise snapshot. Immutable once built."""
    version_tag: str
    tactics: Tuple[TacticRecord, ...]
    techniques: Tuple[TechniqueRecord, ...]
    procedures: Tuple[ProcedureRecord, ...]

    def technique_by_stix_id(self) -> Dict[str, TechniqueRecord]:
        return {t.stix_id: t for t in self.techniques}


class LabeledDescription(_Frozen):
    attack_id: str = Field(..., description="e.g. T1574.001 or TA0004")
    name: str
    kind: DescriptionKind
    description_text: str
    tactic_labels: FrozenSet[Tactic]
    url: str

    @field_validator("description_text")
    @classmethod
    def _text_not_blank(cls, v: str) -> str:
        if not " ".join(v.split()):
            raise ValueError("description_text is empty after whitespace normalization")
        return v

    @model_validator(mode="after")
    def _labels_consistent(self) -> "LabeledDescription":
        if not self.tactic_labels:
            raise ValueError(f"{self.attack_id} has no tactic labels")
        if self.kind == DescriptionKind.TACTIC and len(self.tactic_labels) != 1:
            raise ValueError(f"tactic {self.attack_id} must be labeled with itself only")
        return self

    @field_serializer("tactic_labels")
    def _serialize_labels(self, labels: FrozenSet[Tactic]) -> List[str]:
        return [t.value for t in sort_tactics(labels)]


class ProcedureExample(_Frozen):
    procedure_id: str = Field(..., description="Stable hash of the source relationship id")
    actor_name: str
    text: str
    technique_attack_id: str
    gold_tactics: FrozenSet[Tactic]
    url: str

    @field_validator("gold_tactics")
    @classmethod
    def _gold_not_empty(cls, v: FrozenSet[Tactic]) -> FrozenSet[Tactic]:
        if not v:
            raise ValueError("gold_tactics must not be empty")
        return v

    @field_validator("url")
    @classmethod
    def _url_well_formed(cls, v: str) -> str:
        if not v.startswith(("https://", "http://")):
            raise ValueError(f"not an http(s) URL: {v}")
        return v

    @field_serializer("gold_tactics")
    def _serialize_gold(self, gold: FrozenSet[Tactic]) -> List[str]:
        return [t.value for t in sort_tactics(gold)]


class CorpusStats(_Frozen):
    n_descriptions: int
    n_procedures: int
    support_total: int
    per_tactic_support: Dict[Tactic, int]
    n_procedures_before_filter: Optional[int] = None

    @model_validator(mode="after")
    def _support_adds_up(self) -> "CorpusStats":
        if self.support_total != sum(self.per_tactic_support.values()):
            raise ValueError("support_total must equal the sum of per-tactic supports")
        if self.support_total < self.n_procedures:
            raise ValueError("support_total must be >= n_procedures")
        return self

    @field_serializer("per_tactic_support")
    def _serialize_support(self, support: Dict[Tactic, int]) -> Dict[str, int]:
        return {t.value: support.get(t, 0) for t in sort_tactics(support)}
