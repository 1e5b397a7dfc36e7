"""
Context assembly for the three retrieval modes.

The procedure index is keyed by procedure_id and carries the
ProcedureExample of each entry as its payload.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import requests

from ..corpus.models import ProcedureExample
from ..embedding.index import FlatIndex, top_k
from ..embedding.providers import EmbeddingProvider, embed
from ..utils.errors import ErrorCode, FetchError, create_error
from ..utils.monitoring import monitor_stage
from .chunking import chunk_text
from .models import MAX_CONTEXT_CHUNKS, AssembledContext, ContextChunk, RetrievalMode
from .pages import PageCache, fetch_page_text

logger = logging.getLogger(__name__)


@dataclass
class RetrievalDeps:
    """Everything the RAG modes need. Prompt-only needs none of it."""
    provider: Optional[EmbeddingProvider] = None
    index: Optional[FlatIndex] = None
    cache: Optional[PageCache] = None
    chunk_provider: Optional[EmbeddingProvider] = None
    allow_network: bool = False
    chunk_size: int = 8000
    chunk_overlap: int = 500
    top_chunks: int = MAX_CONTEXT_CHUNKS
    top_procedures: int = 3
    session: Optional[requests.Session] = None
    timeout: float = 30.0

    @property
    def ranking_provider(self) -> Optional[EmbeddingProvider]:
        return self.chunk_provider or self.provider


def similar_procedures(
    query: ProcedureExample,
    index: FlatIndex,
    provider: EmbeddingProvider,
    k: int = 3,
) -> List[ProcedureExample]:
    """
    Top-k procedures by cosine to the query text, the query itself excluded.

    Neighbors on the query's own technique page are allowed.

    Raises:
        RetrievalError: a hit has no ProcedureExample payload.
    """
    hits = top_k(index, embed(query.text, provider), k, exclude={query.procedure_id})
    neighbors = []
    for key, _score in hits:
        payload = index.payload(key)
        if not isinstance(payload, ProcedureExample):
            raise create_error(ErrorCode.PAYLOAD_MISSING, key=key, procedure_id=query.procedure_id)
        neighbors.append(payload)
    return neighbors


def collect_urls(neighbors: Sequence[ProcedureExample], max_urls: int = 3) -> List[str]:
    """Neighbor URLs in rank order, first occurrence wins."""
    urls: List[str] = []
    for neighbor in neighbors:
        if neighbor.url not in urls:
            urls.append(neighbor.url)
        if len(urls) == max_urls:
            break
    return urls


def select_top_chunks(
    question: str,
    chunks: Sequence[ContextChunk],
    provider: EmbeddingProvider,
    k: int = MAX_CONTEXT_CHUNKS,
) -> List[ContextChunk]:
    """
    Rank chunks by cosine to the question and keep the best k.

    Ties are broken by (source_url, start_offset). A chunk or question with
    no tokens scores 0.
    """
    if not chunks or k < 1:
        return []
    q = embed(question, provider).values
    matrix = provider.embed_texts([c.text for c in chunks])
    scores = matrix @ q
    order = sorted(
        range(len(chunks)),
        key=lambda i: (-float(scores[i]), chunks[i].source_url, chunks[i].start_offset),
    )
    return [chunks[i].model_copy(update={"rank_score": float(scores[i])}) for i in order[:k]]


def _require(deps: RetrievalDeps, mode: RetrievalMode) -> None:
    missing = []
    if deps.cache is None:
        missing.append("page cache")
    if deps.ranking_provider is None:
        missing.append("embedding provider")
    if mode == RetrievalMode.SIMILAR_PROCEDURES and deps.index is None:
        missing.append("procedure index")
    if missing:
        raise create_error(
            ErrorCode.CONFIG_INVALID,
            reason=f"{mode.value} retrieval needs: {', '.join(missing)}",
        )


def _pooled_chunks(urls: Sequence[str], deps: RetrievalDeps) -> List[ContextChunk]:
    pool: List[ContextChunk] = []
    for url in urls:
        try:
            page = fetch_page_text(
                url,
                deps.cache,
                allow_network=deps.allow_network,
                session=deps.session,
                timeout=deps.timeout,
            )
        except FetchError as e:
            logger.warning("Skipping page: %s", e)
            continue
        pool.extend(chunk_text(page, deps.chunk_size, deps.chunk_overlap, source_url=url))
    return pool


@monitor_stage("retrieval")
def assemble_context(
    procedure: ProcedureExample,
    mode: RetrievalMode,
    deps: Optional[RetrievalDeps] = None,
) -> AssembledContext:
    """
    Build the Relevant Context for one procedure.

    Exact-url reads only the procedure's own page. Similar-procedures pools
    the chunks of up to three neighbor pages and ranks them together. When
    no candidate page yields any text the result is flagged
    `context_unavailable` with no chunks.
    """
    mode = RetrievalMode(mode)
    if mode == RetrievalMode.PROMPT_ONLY:
        return AssembledContext.prompt_only()

    deps = deps or RetrievalDeps()
    _require(deps, mode)

    neighbor_ids: List[str] = []
    if mode == RetrievalMode.EXACT_URL:
        urls = [procedure.url]
    else:
        neighbors = similar_procedures(procedure, deps.index, deps.provider or deps.ranking_provider,
                                       deps.top_procedures)
        neighbor_ids = [n.procedure_id for n in neighbors]
        urls = collect_urls(neighbors)

    pool = _pooled_chunks(urls, deps)
    chunks = select_top_chunks(procedure.text, pool, deps.ranking_provider, min(deps.top_chunks, MAX_CONTEXT_CHUNKS))
    if not chunks:
        logger.info("No context for procedure %s (%d candidate URLs)", procedure.procedure_id, len(urls))

    return AssembledContext(
        mode=mode,
        chunks=tuple(chunks),
        candidate_urls=tuple(urls),
        url_matched=procedure.url in urls,
        context_unavailable=not chunks,
        neighbor_ids=tuple(neighbor_ids),
    )
