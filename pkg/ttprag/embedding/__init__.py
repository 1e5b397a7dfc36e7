"""
Embedding providers and the flat cosine index.
"""

from .index import FlatIndex, IndexEntry, build_index, load_index, save_index, top_k
from .providers import (
    EmbeddingProvider,
    EmbeddingVector,
    HashingEmbeddingProvider,
    OpenAIEmbeddingProvider,
    cosine,
    embed,
    embed_many,
    make_provider,
    tokenize,
)

__all__ = [
    "EmbeddingProvider",
    "EmbeddingVector",
    "FlatIndex",
    "HashingEmbeddingProvider",
    "IndexEntry",
    "OpenAIEmbeddingProvider",
    "build_index",
    "cosine",
    "embed",
    "embed_many",
    "load_index",
    "make_provider",
    "save_index",
    "tokenize",
    "top_k",
]
