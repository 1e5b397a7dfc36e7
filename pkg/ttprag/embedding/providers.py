"""
Embedding providers.

A provider turns texts into L2-normalized vectors of a fixed dimension.
`HashingEmbeddingProvider` is the deterministic offline provider used by
tests and fixture runs; `OpenAIEmbeddingProvider` calls the remote API.
"""

import logging
import os
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from ..utils.errors import ErrorCode, create_error
from ..utils.monitoring import monitor_stage

logger = logging.getLogger(__name__)

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF
_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class EmbeddingVector:
    """Normalized embedding. `is_zero` flags the vector of an empty text."""
    values: np.ndarray
    is_zero: bool = False

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def tokenize(text: str) -> List[str]:
    """Lowercase, then maximal runs of ASCII alphanumerics."""
    return _TOKEN.findall(text.lower())


def fnv1a_64(data: bytes) -> int:
    h = FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


def l2_normalize(matrix: np.ndarray) -> np.ndarray:
    """Row-normalize; all-zero rows stay zero."""
    norms = np.linalg.norm(matrix, axis=-1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return matrix / safe


class EmbeddingProvider(ABC):
    """Contract for anything that embeds text."""

    name: str = "abstract"

    @property
    @abstractmethod
    def dimension(self) -> int:
        ...

    @abstractmethod
    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        """Return an (n, dimension) float64 matrix of L2-normalized rows."""

    def describe(self) -> str:
        return f"{self.name}/{self.dimension}"


class HashingEmbeddingProvider(EmbeddingProvider):
    """
    Bag-of-words counts hashed into D buckets with 64-bit FNV-1a.

    Bit-reproducible across runs and platforms.
    """

    name = "hashing"

    def __init__(self, dimension: int = 1024):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self._dimension = dimension

    @property
    def dimension(self) -> int:
        return self._dimension

    def bucket(self, token: str) -> int:
        return fnv1a_64(token.encode("ascii")) % self._dimension

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self._dimension), dtype=np.float64)
        for row, text in enumerate(texts):
            for token in tokenize(text):
                out[row, self.bucket(token)] += 1.0
        return l2_normalize(out)


class OpenAIEmbeddingProvider(EmbeddingProvider):
    """Remote embeddings through the OpenAI API, batched, with backoff."""

    name = "openai"

    def __init__(
        self,
        model: str = "text-embedding-ada-002",
        dimension: int = 1536,
        api_key_env: str = "OPENAI_API_KEY",
        batch_size: int = 256,
        max_retries: int = 5,
        client=None,
    ):
        self.model = model
        self._dimension = dimension
        self.batch_size = batch_size
        self.max_retries = max_retries
        if client is None:
            import openai
            client = openai.OpenAI(api_key=os.getenv(api_key_env))
        self._client = client

    @property
    def dimension(self) -> int:
        return self._dimension

    def describe(self) -> str:
        return f"{self.name}/{self.model}/{self.dimension}"

    @monitor_stage("embedding")
    def _embed_batch(self, batch: List[str]) -> List[List[float]]:
        import openai

        retrying = Retrying(
            stop=stop_after_attempt(self.max_retries),
            wait=wait_exponential(multiplier=1, min=1, max=30),
            retry=retry_if_exception_type((
                openai.RateLimitError,
                openai.APIConnectionError,
                openai.APITimeoutError,
                openai.InternalServerError,
            )),
        )
        try:
            for attempt in retrying:
                with attempt:
                    response = self._client.embeddings.create(model=self.model, input=batch)
        except RetryError as e:
            last = e.last_attempt
            raise create_error(
                ErrorCode.EMBEDDING_TRANSPORT,
                attempts=last.attempt_number,
                reason=repr(last.exception()),
            ) from e
        except openai.OpenAIError as e:
            raise create_error(ErrorCode.EMBEDDING_TRANSPORT, attempts=1, reason=repr(e)) from e
        return [item.embedding for item in response.data]

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self._dimension), dtype=np.float64)
        # The API rejects empty inputs; those rows stay zero.
        pending = [(i, t) for i, t in enumerate(texts) if t.strip()]
        for start in range(0, len(pending), self.batch_size):
            chunk = pending[start:start + self.batch_size]
            vectors = self._embed_batch([t for _, t in chunk])
            for (row, _), vector in zip(chunk, vectors):
                if len(vector) != self._dimension:
                    raise create_error(
                        ErrorCode.EMBEDDING_DIMENSION,
                        expected=self._dimension,
                        actual=len(vector),
                    )
                out[row] = vector
        return l2_normalize(out)


def embed(text: str, provider: EmbeddingProvider) -> EmbeddingVector:
    """Embed one text. Empty text yields a flagged zero vector."""
    return embed_many([text], provider)[0]


def embed_many(texts: Sequence[str], provider: EmbeddingProvider) -> List[EmbeddingVector]:
    matrix = provider.embed_texts(list(texts))
    vectors = []
    for row in matrix:
        is_zero = not np.any(row)
        vectors.append(EmbeddingVector(values=row, is_zero=is_zero))
    return vectors


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """
    Cosine similarity of two vectors.

    Elementwise products summed left to right so that cosine(a, b) and
    cosine(b, a) evaluate identically.
    """
    na = float(np.sqrt(np.sum(a * a)))
    nb = float(np.sqrt(np.sum(b * b)))
    if na == 0.0 or nb == 0.0:
        raise create_error(ErrorCode.INDEX_ZERO_QUERY)
    return float(np.sum(a * b)) / (na * nb)


def make_provider(name: str, dimension: Optional[int] = None, model: Optional[str] = None,
                  api_key_env: str = "OPENAI_API_KEY") -> EmbeddingProvider:
    """Build a provider from configuration values."""
    if name == "hashing":
        return HashingEmbeddingProvider(dimension or 1024)
    if name == "openai":
        kwargs = {"api_key_env": api_key_env}
        if model:
            kwargs["model"] = model
        if dimension:
            kwargs["dimension"] = dimension
        return OpenAIEmbeddingProvider(**kwargs)
    raise ValueError(f"Unknown embedding provider: {name}")
