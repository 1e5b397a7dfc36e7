"""
Flat, exact cosine-similarity index with a checksummed binary file format.

File layout (all integers little-endian):
    magic b"TTPRAGIX" | version u16 | dimension u32 | entry count u32
    per entry: key length u32 | key bytes (UTF-8) | dimension x float64
    SHA-256 of everything above (32 bytes)
"""

import hashlib
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from ..utils.errors import ErrorCode, create_error
from ..utils.io import atomic_write_bytes
from .providers import EmbeddingProvider, EmbeddingVector

logger = logging.getLogger(__name__)

MAGIC = b"TTPRAGIX"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sHII")
_KEY_LEN = struct.Struct("<I")
_DIGEST_LEN = 32
_VECTOR = np.dtype("<f8")


@dataclass(frozen=True)
class IndexEntry:
    key: str
    vector: EmbeddingVector
    payload_ref: Any = None


class FlatIndex:
    """Immutable exact-search index. Safe to query from many threads."""

    def __init__(self, keys: Sequence[str], matrix: np.ndarray, payloads: Optional[Dict[str, Any]] = None):
        if matrix.ndim != 2 or matrix.shape[0] != len(keys):
            raise ValueError("matrix must have one row per key")
        seen: Set[str] = set()
        for key in keys:
            if key in seen:
                raise create_error(ErrorCode.INDEX_DUPLICATE_KEY, key=key)
            seen.add(key)
        self._keys: Tuple[str, ...] = tuple(keys)
        self._matrix = np.array(matrix, dtype=np.float64)
        self._matrix.setflags(write=False)
        self._positions = {k: i for i, k in enumerate(self._keys)}
        self._payloads = dict(payloads or {})

    @property
    def keys(self) -> Tuple[str, ...]:
        return self._keys

    @property
    def dimension(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key: str) -> bool:
        return key in self._positions

    def position(self, key: str) -> Optional[int]:
        return self._positions.get(key)

    def entry(self, key: str) -> IndexEntry:
        row = self._matrix[self._positions[key]]
        return IndexEntry(key=key, vector=EmbeddingVector(row, not np.any(row)), payload_ref=self._payloads.get(key))

    def payload(self, key: str) -> Any:
        return self._payloads.get(key)

    def with_payloads(self, payloads: Dict[str, Any]) -> "FlatIndex":
        """Same vectors, new payload handles (e.g. after loading from disk)."""
        return FlatIndex(self._keys, self._matrix, payloads)


def build_index(
    entries: Iterable[Tuple[str, str]],
    provider: EmbeddingProvider,
    payloads: Optional[Dict[str, Any]] = None,
) -> FlatIndex:
    """
    Embed (key, text) pairs and build an exact index.

    Raises:
        VectorIndexError: on a duplicate key.
    """
    entries = list(entries)
    keys = [k for k, _ in entries]
    seen: Set[str] = set()
    for key in keys:
        if key in seen:
            raise create_error(ErrorCode.INDEX_DUPLICATE_KEY, key=key)
        seen.add(key)
    if not entries:
        return FlatIndex([], np.zeros((0, provider.dimension)), payloads)
    matrix = provider.embed_texts([t for _, t in entries])
    logger.info("Built index with %d entries (%s)", len(keys), provider.describe())
    return FlatIndex(keys, matrix, payloads)


def top_k(
    index: FlatIndex,
    query: EmbeddingVector,
    k: int,
    exclude: Optional[Set[str]] = None,
) -> List[Tuple[str, float]]:
    """
    Exact top-k by cosine, descending; ties broken by ascending key.

    Raises:
        VectorIndexError: k < 1 or zero-vector query.
    """
    if k < 1:
        raise create_error(ErrorCode.INDEX_BAD_K, k=k)
    if query.is_zero or not np.any(query.values):
        raise create_error(ErrorCode.INDEX_ZERO_QUERY)
    if len(index) == 0:
        return []

    q = query.values / np.linalg.norm(query.values)
    scores = index.matrix @ q
    for key in exclude or ():
        pos = index.position(key)
        if pos is not None:
            scores[pos] = -np.inf

    available = int(np.sum(np.isfinite(scores)))
    k = min(k, available)
    if k == 0:
        return []

    # Everything tied with the k-th best score is a candidate for the tie-break.
    kth = np.partition(scores, len(scores) - k)[len(scores) - k]
    candidates = np.nonzero(scores >= kth)[0]
    ranked = sorted(
        ((index.keys[i], float(scores[i])) for i in candidates),
        key=lambda item: (-item[1], item[0]),
    )
    return ranked[:k]


def serialize_index(index: FlatIndex) -> bytes:
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, index.dimension, len(index))]
    for key, row in zip(index.keys, index.matrix):
        key_bytes = key.encode("utf-8")
        parts.append(_KEY_LEN.pack(len(key_bytes)))
        parts.append(key_bytes)
        parts.append(np.asarray(row, dtype=_VECTOR).tobytes())
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


def deserialize_index(data: bytes, path: str = "<bytes>") -> FlatIndex:
    if len(data) < _HEADER.size + _DIGEST_LEN:
        raise create_error(ErrorCode.INDEX_FORMAT, path=path, reason="file too short")
    body, digest = data[:-_DIGEST_LEN], data[-_DIGEST_LEN:]
    if hashlib.sha256(body).digest() != digest:
        raise create_error(ErrorCode.INDEX_CHECKSUM, path=path)

    magic, version, dimension, count = _HEADER.unpack_from(body, 0)
    if magic != MAGIC:
        raise create_error(ErrorCode.INDEX_FORMAT, path=path, reason="bad magic")
    if version != FORMAT_VERSION:
        raise create_error(ErrorCode.INDEX_FORMAT, path=path, reason=f"unsupported version {version}")

    offset = _HEADER.size
    row_bytes = _VECTOR.itemsize * dimension
    keys: List[str] = []
    matrix = np.zeros((count, dimension), dtype=np.float64)
    try:
        for i in range(count):
            (key_len,) = _KEY_LEN.unpack_from(body, offset)
            offset += _KEY_LEN.size
            keys.append(body[offset:offset + key_len].decode("utf-8"))
            offset += key_len
            if offset + row_bytes > len(body):
                raise ValueError("truncated vector")
            matrix[i] = np.frombuffer(body, dtype=_VECTOR, count=dimension, offset=offset)
            offset += row_bytes
    except (struct.error, UnicodeDecodeError, ValueError) as e:
        raise create_error(ErrorCode.INDEX_FORMAT, path=path, reason=str(e)) from e
    if offset != len(body):
        raise create_error(ErrorCode.INDEX_FORMAT, path=path, reason="trailing bytes")
    return FlatIndex(keys, matrix)


def save_index(index: FlatIndex, path: Union[str, Path]) -> None:
    atomic_write_bytes(path, serialize_index(index))


def load_index(path: Union[str, Path]) -> FlatIndex:
    """
    Raises:
        VectorIndexError: checksum mismatch or malformed file.
    """
    path = Path(path)
    return deserialize_index(path.read_bytes(), str(path))
