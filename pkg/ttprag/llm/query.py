"""
Dispatch of a single request with the pre-dispatch size check and journaling.
"""

import logging
from datetime import datetime, timezone
from typing import Optional

from ..retrieval.models import AssembledContext
from ..utils.errors import ErrorCode, create_error
from ..utils.monitoring import monitor_stage
from .backends import ChatBackend, ReplayBackend
from .journal import Journal, JournalRecord
from .models import DEFAULT_CONTEXT_BUDGET_TOKENS, LlmRequest, LlmResponse

logger = logging.getLogger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@monitor_stage("llm")
def query(
    request: LlmRequest,
    backend: ChatBackend,
    journal: Optional[Journal] = None,
    context_budget_tokens: int = DEFAULT_CONTEXT_BUDGET_TOKENS,
    context: Optional[AssembledContext] = None,
) -> LlmResponse:
    """
    Send one request and journal the exchange.

    Replayed responses are not journaled again. The retrieval outcome in
    `context`, when given, is journaled with the exchange so a resumed run
    can rebuild its predictions.

    Raises:
        PromptError: the prompt plus response allowance exceeds the context
            budget; nothing is sent.
        BackendError: transport failure after retries.
        ReplayMissError: replay journal has no matching record.
    """
    if request.estimated_tokens > context_budget_tokens:
        raise create_error(
            ErrorCode.PROMPT_TOO_LARGE,
            tokens=request.estimated_tokens,
            budget=context_budget_tokens,
            procedure_id=request.procedure_id,
        )

    started_at = _now()
    response = backend.complete(request)
    finished_at = _now()

    if journal is not None and not isinstance(backend, ReplayBackend):
        journal.append(JournalRecord(
            procedure_id=request.procedure_id,
            mode=request.mode,
            variant=request.variant,
            model_id=request.model_id,
            prompt_digest=request.prompt_digest,
            response_text=response.text,
            backend_fingerprint=response.backend_fingerprint,
            refused=response.refused,
            input_tokens=response.input_tokens,
            output_tokens=response.output_tokens,
            latency_ms=response.latency_ms,
            url_matched=bool(context and context.url_matched),
            context_unavailable=bool(context and context.context_unavailable),
            candidate_urls=context.candidate_urls if context else (),
            started_at=started_at,
            finished_at=finished_at,
        ))
    logger.debug("Procedure %s answered by %s", request.procedure_id, response.backend_fingerprint)
    return response
