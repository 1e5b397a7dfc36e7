"""
Request and response records exchanged with chat backends.
"""

import hashlib
import math

from pydantic import BaseModel, ConfigDict, Field, field_validator

DEFAULT_MODEL_ID = "gpt-3.5-turbo-1106"
DEFAULT_SEED = 1106
DEFAULT_MAX_RESPONSE_TOKENS = 512
DEFAULT_CONTEXT_BUDGET_TOKENS = 16_000
CHARS_PER_TOKEN = 4


def prompt_digest(prompt_text: str) -> str:
    return hashlib.sha256(prompt_text.encode("utf-8")).hexdigest()


def estimate_tokens(text: str) -> int:
    """Rough token count: one token per four characters, rounded up."""
    return math.ceil(len(text) / CHARS_PER_TOKEN)


class LlmRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    prompt_text: str
    model_id: str = DEFAULT_MODEL_ID
    temperature: float = Field(0.0, description="Fixed at 0 for experiment runs")
    seed: int = DEFAULT_SEED
    max_response_tokens: int = Field(DEFAULT_MAX_RESPONSE_TOKENS, ge=1)

    # Run coordinates, used by the journal and in error details
    procedure_id: str = ""
    mode: str = ""
    variant: str = ""

    @field_validator("temperature")
    @classmethod
    def _temperature_zero(cls, v: float) -> float:
        if v != 0.0:
            raise ValueError("temperature must be 0")
        return v

    @property
    def prompt_digest(self) -> str:
        return prompt_digest(self.prompt_text)

    @property
    def estimated_tokens(self) -> int:
        return estimate_tokens(self.prompt_text) + self.max_response_tokens


class LlmResponse(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    backend_fingerprint: str
    latency_ms: float = 0.0
    input_tokens: int = 0
    output_tokens: int = 0
    refused: bool = Field(False, description="Backend declined to answer; text may be empty")
