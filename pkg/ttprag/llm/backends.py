"""
Chat backends: the remote OpenAI model, the echo-tactics mock and journal
replay.
"""

import logging
import os
import threading
import time
from abc import ABC, abstractmethod
from typing import Optional

from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from ..corpus.tactics import sort_tactics, tactics_named_in
from ..utils.errors import ErrorCode, create_error
from .journal import Journal
from .models import LlmRequest, LlmResponse, estimate_tokens
from .prompts import relevant_context_of

logger = logging.getLogger(__name__)

ECHO_PREFIX = "The adversary achieves: "
ECHO_NONE = "Unknown."
DEFAULT_BUDGET = 4


class ChatBackend(ABC):
    """A chat-completion endpoint. Implementations must be shareable across threads."""

    name: str = "abstract"
    touches_network: bool = False

    @property
    def fingerprint(self) -> str:
        return self.name

    @abstractmethod
    def complete(self, request: LlmRequest) -> LlmResponse:
        ...


class EchoTacticsBackend(ChatBackend):
    """
    Deterministic mock.

    Answers with the canonical names of every tactic named (whole phrase,
    case-insensitive) in the prompt's Relevant Context block, in report row
    order, or "Unknown." when there are none. The rest of the prompt is
    ignored.
    """

    name = "echo-tactics"

    def complete(self, request: LlmRequest) -> LlmResponse:
        context = relevant_context_of(request.prompt_text)
        found = sort_tactics(tactics_named_in(context))
        if found:
            text = ECHO_PREFIX + ", ".join(t.value for t in found)
        else:
            text = ECHO_NONE
        return LlmResponse(
            text=text,
            backend_fingerprint=self.fingerprint,
            input_tokens=estimate_tokens(request.prompt_text),
            output_tokens=estimate_tokens(text),
        )


class ReplayBackend(ChatBackend):
    """Serves responses from a recorded journal. Never touches the network."""

    name = "replay"

    def __init__(self, journal: Journal):
        self.journal = journal

    def complete(self, request: LlmRequest) -> LlmResponse:
        record = self.journal.lookup(
            request.procedure_id, request.mode, request.variant, request.prompt_digest
        )
        if record is None:
            raise create_error(
                ErrorCode.REPLAY_MISS,
                procedure_id=request.procedure_id,
                mode=request.mode,
                variant=request.variant,
            )
        return LlmResponse(
            text=record.response_text,
            backend_fingerprint=record.backend_fingerprint,
            latency_ms=record.latency_ms,
            input_tokens=record.input_tokens,
            output_tokens=record.output_tokens,
            refused=record.refused,
        )


class OpenAIChatBackend(ChatBackend):
    """
    Remote chat completions through the OpenAI API.

    At most `budget` requests are in flight across all threads sharing the
    backend. Rate limits, timeouts, connection errors and 5xx responses are
    retried with exponential backoff.
    """

    name = "openai"
    touches_network = True

    def __init__(
        self,
        model_id: str = "gpt-3.5-turbo-1106",
        api_key_env: str = "OPENAI_API_KEY",
        budget: int = DEFAULT_BUDGET,
        max_retries: int = 5,
        client=None,
    ):
        if budget < 1:
            raise ValueError("budget must be >= 1")
        self.model_id = model_id
        self.max_retries = max_retries
        self._slots = threading.BoundedSemaphore(budget)
        if client is None:
            import openai

            api_key = os.getenv(api_key_env)
            if not api_key:
                raise create_error(
                    ErrorCode.CONFIG_INVALID,
                    reason=f"environment variable {api_key_env} is not set",
                )
            client = openai.OpenAI(api_key=api_key)
        self._client = client
        self._system_fingerprint: Optional[str] = None

    @property
    def fingerprint(self) -> str:
        if self._system_fingerprint:
            return f"{self.name}/{self.model_id}/{self._system_fingerprint}"
        return f"{self.name}/{self.model_id}"

    def _create(self, request: LlmRequest):
        return self._client.chat.completions.create(
            model=request.model_id or self.model_id,
            messages=[{"role": "user", "content": request.prompt_text}],
            temperature=request.temperature,
            seed=request.seed,
            max_tokens=request.max_response_tokens,
        )

    def complete(self, request: LlmRequest) -> LlmResponse:
        import openai

        retrying = Retrying(
            stop=stop_after_attempt(self.max_retries),
            wait=wait_exponential(multiplier=1, min=1, max=60),
            retry=retry_if_exception_type((
                openai.RateLimitError,
                openai.APIConnectionError,
                openai.APITimeoutError,
                openai.InternalServerError,
            )),
        )
        start = time.perf_counter()
        try:
            with self._slots:
                for attempt in retrying:
                    with attempt:
                        response = self._create(request)
        except RetryError as e:
            last = e.last_attempt
            raise create_error(
                ErrorCode.BACKEND_TRANSPORT,
                procedure_id=request.procedure_id,
                attempts=last.attempt_number,
                reason=repr(last.exception()),
            ) from e
        except openai.OpenAIError as e:
            raise create_error(
                ErrorCode.BACKEND_TRANSPORT,
                procedure_id=request.procedure_id,
                attempts=1,
                reason=repr(e),
            ) from e
        latency_ms = (time.perf_counter() - start) * 1000

        if getattr(response, "system_fingerprint", None):
            self._system_fingerprint = response.system_fingerprint
        choice = response.choices[0]
        text = choice.message.content or ""
        refused = not text or bool(getattr(choice.message, "refusal", None))
        if refused:
            logger.warning("Backend refused procedure %s", request.procedure_id)
        usage = getattr(response, "usage", None)
        return LlmResponse(
            text=text,
            backend_fingerprint=self.fingerprint,
            latency_ms=latency_ms,
            input_tokens=getattr(usage, "prompt_tokens", 0) or 0,
            output_tokens=getattr(usage, "completion_tokens", 0) or 0,
            refused=refused,
        )


def make_backend(
    name: str,
    model_id: str = "gpt-3.5-turbo-1106",
    budget: int = DEFAULT_BUDGET,
    max_retries: int = 5,
    api_key_env: str = "OPENAI_API_KEY",
    replay_journal: Optional[Journal] = None,
) -> ChatBackend:
    """Build a backend from configuration values."""
    if name == "mock":
        return EchoTacticsBackend()
    if name == "replay":
        if replay_journal is None:
            raise create_error(ErrorCode.CONFIG_INVALID, reason="replay backend needs a journal")
        return ReplayBackend(replay_journal)
    if name == "openai":
        return OpenAIChatBackend(model_id=model_id, api_key_env=api_key_env,
                                 budget=budget, max_retries=max_retries)
    raise create_error(ErrorCode.CONFIG_INVALID, reason=f"unknown backend '{name}'")
