"""
Prediction runs: per-procedure retrieval, prompting, querying and keyword
extraction, with resume from the run journal.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from .baseline.model import MultiLabelModel, predict_many
from .config import RunConfig
from .corpus.models import ProcedureExample
from .embedding.index import load_index
from .embedding.providers import make_provider
from .extraction.extract import extract_tactics, render_tactic_list
from .extraction.models import BASELINE_MODE, Prediction
from .llm.backends import ChatBackend
from .llm.journal import Journal, JournalRecord
from .llm.models import LlmRequest
from .llm.prompts import build_prompt
from .llm.query import query
from .retrieval.context import RetrievalDeps, assemble_context
from .retrieval.models import RetrievalMode
from .retrieval.pages import PageCache
from .utils.errors import TtpRagError

logger = logging.getLogger(__name__)


@dataclass
class PredictionRun:
    predictions: List[Prediction] = field(default_factory=list)
    failures: Dict[str, str] = field(default_factory=dict)
    resumed: int = 0

    @property
    def matched(self) -> int:
        return sum(1 for p in self.predictions if p.url_matched)

    @property
    def context_unavailable(self) -> int:
        return sum(1 for p in self.predictions if p.context_unavailable)


def build_retrieval_deps(config: RunConfig, procedures: Sequence[ProcedureExample]) -> RetrievalDeps:
    """Provider, page cache and (for similar-procedures) the loaded index."""
    if config.mode == RetrievalMode.PROMPT_ONLY:
        return RetrievalDeps()
    provider = make_provider(
        config.embedding.provider,
        dimension=config.embedding.dimension,
        model=config.embedding.model,
        api_key_env=config.llm.api_key_env,
    )
    index = None
    if config.mode == RetrievalMode.SIMILAR_PROCEDURES:
        index = load_index(config.index_path).with_payloads({p.procedure_id: p for p in procedures})
    return RetrievalDeps(
        provider=provider,
        index=index,
        cache=PageCache(config.cache_dir),
        allow_network=config.retrieval.live_fetch,
        chunk_size=config.retrieval.chunk_size,
        chunk_overlap=config.retrieval.chunk_overlap,
        top_chunks=config.retrieval.top_chunks,
        top_procedures=config.retrieval.top_procedures,
        timeout=config.retrieval.fetch_timeout,
    )


def prediction_from_record(record: JournalRecord) -> Prediction:
    return Prediction(
        procedure_id=record.procedure_id,
        mode=record.mode,
        prompt_variant=record.variant,
        predicted=extract_tactics(record.response_text),
        raw_response=record.response_text,
        url_matched=record.url_matched,
        context_unavailable=record.context_unavailable,
        candidate_urls=record.candidate_urls,
    )


def predict_one(
    procedure: ProcedureExample,
    config: RunConfig,
    deps: RetrievalDeps,
    backend: ChatBackend,
    journal: Optional[Journal] = None,
) -> Prediction:
    """Retrieve, prompt, query and extract for one procedure."""
    context = assemble_context(procedure, config.mode, deps)
    with_context = config.mode != RetrievalMode.PROMPT_ONLY
    prompt = build_prompt(config.variant, procedure, context if with_context else None)
    request = LlmRequest(
        prompt_text=prompt,
        model_id=config.llm.model_id,
        temperature=config.llm.temperature,
        seed=config.llm.seed,
        max_response_tokens=config.llm.max_response_tokens,
        procedure_id=procedure.procedure_id,
        mode=config.mode.value,
        variant=config.variant.value,
    )
    response = query(request, backend, journal, config.llm.context_budget_tokens, context)
    return Prediction(
        procedure_id=procedure.procedure_id,
        mode=config.mode.value,
        prompt_variant=config.variant.value,
        predicted=extract_tactics(response.text),
        raw_response=response.text,
        url_matched=context.url_matched,
        context_unavailable=context.context_unavailable,
        candidate_urls=context.candidate_urls,
    )


def run_predictions(
    procedures: Sequence[ProcedureExample],
    config: RunConfig,
    deps: RetrievalDeps,
    backend: ChatBackend,
    journal: Optional[Journal] = None,
    on_done: Optional[Callable[[str], None]] = None,
) -> PredictionRun:
    """
    Predict every procedure, at most `config.llm.budget` at a time.

    Procedures already in the journal for this mode and variant are rebuilt
    from their records instead of being queried again. A failing procedure
    is recorded in `failures` and the run continues.
    """
    run = PredictionRun()
    pending: List[ProcedureExample] = []
    for procedure in sorted(procedures, key=lambda p: p.procedure_id):
        record = journal.lookup(procedure.procedure_id, config.mode.value, config.variant.value) if journal else None
        if record is not None:
            run.predictions.append(prediction_from_record(record))
            run.resumed += 1
            if on_done:
                on_done(procedure.procedure_id)
        else:
            pending.append(procedure)
    if run.resumed:
        logger.info("Resuming: %d procedures already journaled", run.resumed)

    with ThreadPoolExecutor(max_workers=config.llm.budget) as pool:
        futures = {
            pool.submit(predict_one, procedure, config, deps, backend, journal): procedure.procedure_id
            for procedure in pending
        }
        for future in as_completed(futures):
            procedure_id = futures[future]
            try:
                run.predictions.append(future.result())
            except TtpRagError as e:
                logger.error("Procedure %s failed: %s", procedure_id, e)
                run.failures[procedure_id] = str(e)
            if on_done:
                on_done(procedure_id)

    run.predictions.sort(key=lambda p: p.procedure_id)
    return run


def predict_with_baseline(model: MultiLabelModel, procedures: Sequence[ProcedureExample]) -> List[Prediction]:
    """Baseline predictions in the same record shape as the LLM path."""
    procedures = sorted(procedures, key=lambda p: p.procedure_id)
    predicted = predict_many(model, [p.text for p in procedures])
    return [
        Prediction(
            procedure_id=p.procedure_id,
            mode=BASELINE_MODE,
            predicted=tactics,
            raw_response=render_tactic_list(tactics),
        )
        for p, tactics in zip(procedures, predicted)
    ]
