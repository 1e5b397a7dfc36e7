"""
TF-IDF featurization over a vocabulary fitted on training texts.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..embedding.providers import tokenize
from ..utils.errors import ErrorCode, create_error

# Sparse term-weight map: vocabulary position -> weight
FeatureVector = Dict[int, float]


@dataclass(frozen=True, eq=False)
class Vocabulary:
    """Lexicographically ordered terms with smoothed inverse document frequencies."""
    terms: Tuple[str, ...]
    idf: np.ndarray
    n_documents: int
    _positions: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.terms) != len(self.idf):
            raise ValueError("one idf weight per term is required")
        object.__setattr__(self, "_positions", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._positions

    def position(self, term: str) -> int:
        return self._positions[term]

    def featurize(self, text: str) -> FeatureVector:
        """
        Term frequency times idf, L2-normalized. Terms outside the vocabulary
        are ignored; a text with none yields an empty vector.
        """
        counts = Counter(t for t in tokenize(text) if t in self._positions)
        weights = {self._positions[t]: c * float(self.idf[self._positions[t]]) for t, c in counts.items()}
        norm = math.sqrt(sum(w * w for w in weights.values()))
        if norm == 0.0:
            return {}
        return {i: w / norm for i, w in sorted(weights.items())}

    def transform(self, texts: Sequence[str]) -> np.ndarray:
        """Dense (n, |V|) feature matrix."""
        return to_matrix([self.featurize(t) for t in texts], len(self))


def to_matrix(vectors: Sequence[FeatureVector], width: int) -> np.ndarray:
    out = np.zeros((len(vectors), width), dtype=np.float64)
    for row, vector in enumerate(vectors):
        for col, weight in vector.items():
            out[row, col] = weight
    return out


def fit_vocabulary(texts: Sequence[str]) -> Vocabulary:
    """
    Every lowercased alphanumeric token of the training texts, sorted.

    idf = ln((1 + n) / (1 + df)) + 1.

    Raises:
        TrainingError: no texts, or no tokens in any text.
    """
    if not texts:
        raise create_error(ErrorCode.TRAIN_EMPTY_CORPUS)
    df: Counter = Counter()
    for text in texts:
        df.update(set(tokenize(text)))
    if not df:
        raise create_error(ErrorCode.TRAIN_EMPTY_CORPUS)

    terms: List[str] = sorted(df)
    n = len(texts)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in terms], dtype=np.float64)
    return Vocabulary(terms=tuple(terms), idf=idf, n_documents=n)
