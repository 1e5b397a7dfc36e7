"""
Retrieval modes and the context handed to prompt rendering.
"""

from enum import Enum
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

MAX_CHUNK_CHARS = 8000
MAX_CONTEXT_CHUNKS = 3


class RetrievalMode(str, Enum):
    PROMPT_ONLY = "prompt-only"
    EXACT_URL = "exact-url"
    SIMILAR_PROCEDURES = "similar-procedures"


class ContextChunk(BaseModel):
    model_config = ConfigDict(frozen=True)

    source_url: str
    start_offset: int = Field(..., ge=0, description="Character index into the page text")
    text: str = Field(..., max_length=MAX_CHUNK_CHARS)
    rank_score: float = 0.0

    @property
    def end_offset(self) -> int:
        return self.start_offset + len(self.text)


class AssembledContext(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: RetrievalMode
    chunks: Tuple[ContextChunk, ...] = ()
    candidate_urls: Tuple[str, ...] = ()
    url_matched: bool = False
    context_unavailable: bool = False
    neighbor_ids: Tuple[str, ...] = Field((), description="Similar procedures that supplied the URLs")

    @model_validator(mode="after")
    def _mode_rules(self) -> "AssembledContext":
        if len(self.chunks) > MAX_CONTEXT_CHUNKS:
            raise ValueError(f"at most {MAX_CONTEXT_CHUNKS} chunks may be injected")
        if self.mode == RetrievalMode.PROMPT_ONLY:
            if self.chunks or self.candidate_urls or self.url_matched:
                raise ValueError("prompt-only context carries no chunks or URLs")
        if self.mode == RetrievalMode.EXACT_URL:
            if len(self.candidate_urls) != 1 or not self.url_matched:
                raise ValueError("exact-url context has exactly its own URL and is matched")
        return self

    @property
    def text(self) -> str:
        """Chunks in rank order, separated by blank lines."""
        return "\n\n".join(chunk.text for chunk in self.chunks)

    @classmethod
    def prompt_only(cls) -> "AssembledContext":
        return cls(mode=RetrievalMode.PROMPT_ONLY)
