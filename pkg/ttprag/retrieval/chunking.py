"""
Fixed-size character chunking with overlap.
"""

from typing import List

from ..utils.errors import ErrorCode, create_error
from .models import MAX_CHUNK_CHARS, ContextChunk


def chunk_text(page: str, size: int = 8000, overlap: int = 500, source_url: str = "") -> List[ContextChunk]:
    """
    Split page text into chunks starting at 0, size-overlap, 2(size-overlap), ...

    Each chunk holds min(size, remaining) characters. A chunk is emitted only
    while the previous one stopped short of the end of the page, so there is
    never a trailing chunk made entirely of overlap. Empty pages yield no chunks.

    Raises:
        RetrievalError: unless 0 <= overlap < size <= 8000.
    """
    if not (0 <= overlap < size <= MAX_CHUNK_CHARS):
        raise create_error(ErrorCode.CHUNK_PARAMETERS, size=size, overlap=overlap)

    chunks: List[ContextChunk] = []
    step = size - overlap
    start = 0
    length = len(page)
    while start < length:
        end = min(start + size, length)
        chunks.append(ContextChunk(source_url=source_url, start_offset=start, text=page[start:end]))
        if end >= length:
            break
        start += step
    return chunks
