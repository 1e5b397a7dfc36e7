"""
Context retrieval: page fetch and cache, chunking, and assembly per mode.
"""

from .chunking import chunk_text
from .context import RetrievalDeps, assemble_context, collect_urls, select_top_chunks, similar_procedures
from .models import AssembledContext, ContextChunk, RetrievalMode
from .pages import PageCache, fetch_page_text, html_to_text, prefetch_pages

__all__ = [
    "AssembledContext",
    "ContextChunk",
    "PageCache",
    "RetrievalDeps",
    "RetrievalMode",
    "assemble_context",
    "chunk_text",
    "collect_urls",
    "fetch_page_text",
    "html_to_text",
    "prefetch_pages",
    "select_top_chunks",
    "similar_procedures",
]
