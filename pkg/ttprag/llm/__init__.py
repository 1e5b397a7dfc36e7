"""
Prompt rendering, chat backends, the request journal and dispatch.
"""

from .backends import ChatBackend, EchoTacticsBackend, OpenAIChatBackend, ReplayBackend, make_backend
from .journal import Journal, JournalRecord
from .models import LlmRequest, LlmResponse, estimate_tokens
from .prompts import PromptVariant, build_prompt
from .query import query

__all__ = [
    "ChatBackend",
    "EchoTacticsBackend",
    "Journal",
    "JournalRecord",
    "LlmRequest",
    "LlmResponse",
    "OpenAIChatBackend",
    "PromptVariant",
    "ReplayBackend",
    "build_prompt",
    "estimate_tokens",
    "make_backend",
    "query",
]
