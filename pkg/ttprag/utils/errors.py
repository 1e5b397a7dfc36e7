"""
Error taxonomy for the ttprag pipeline.

Every failure the pipeline surfaces carries a stable error code and a
category so tests and the CLI can branch on the kind of failure instead of
on message text.
"""

from enum import Enum
from typing import Any, Dict, Optional


class ErrorCategory(Enum):
    """High-level error categories, one per pipeline stage."""
    CORPUS = "CORPUS"
    EMBEDDING = "EMBEDDING"
    INDEX = "INDEX"
    RETRIEVAL = "RETRIEVAL"
    LLM = "LLM"
    TRAINING = "TRAINING"
    EVALUATION = "EVALUATION"
    CONFIG = "CONFIG"


class ErrorCode(Enum):
    """Specific error codes. The hundreds digit selects the category."""
    # Corpus ingestion and curation
    BUNDLE_EMPTY = "E100"
    BUNDLE_MALFORMED = "E101"
    BUNDLE_OBJECT_INVALID = "E102"
    UNKNOWN_KILL_CHAIN_PHASE = "E103"
    TECHNIQUE_WITHOUT_TACTIC = "E104"
    ARTIFACT_MALFORMED = "E105"

    # Embedding
    EMBEDDING_TRANSPORT = "E200"
    EMBEDDING_DIMENSION = "E201"

    # Index
    INDEX_DUPLICATE_KEY = "E300"
    INDEX_ZERO_QUERY = "E301"
    INDEX_BAD_K = "E302"
    INDEX_CHECKSUM = "E303"
    INDEX_FORMAT = "E304"

    # Retrieval
    FETCH_FAILED = "E400"
    FETCH_OFFLINE = "E401"
    CHUNK_PARAMETERS = "E402"
    CONTEXT_UNAVAILABLE = "E403"
    PAYLOAD_MISSING = "E404"

    # LLM
    PROMPT_CONTEXT_MISSING = "E500"
    PROMPT_TOO_LARGE = "E501"
    BACKEND_TRANSPORT = "E502"
    REPLAY_MISS = "E503"
    JOURNAL_MALFORMED = "E504"
    PROMPT_CONTEXT_UNEXPECTED = "E505"

    # Baseline training
    TRAIN_EMPTY_CORPUS = "E600"
    TRAIN_UNLABELED = "E601"
    TRAIN_DIVERGED = "E602"
    MODEL_FORMAT = "E603"

    # Evaluation
    EVAL_EMPTY_GOLD = "E700"
    EVAL_EMPTY_RESULTS = "E701"
    EVAL_REPORT_FORMAT = "E702"

    # Configuration
    CONFIG_INVALID = "E800"
    CONFIG_REPLAY_NETWORK = "E801"


_CATEGORY_BY_PREFIX = {
    "E1": ErrorCategory.CORPUS,
    "E2": ErrorCategory.EMBEDDING,
    "E3": ErrorCategory.INDEX,
    "E4": ErrorCategory.RETRIEVAL,
    "E5": ErrorCategory.LLM,
    "E6": ErrorCategory.TRAINING,
    "E7": ErrorCategory.EVALUATION,
    "E8": ErrorCategory.CONFIG,
}

# Error message templates for consistency
ERROR_MESSAGES = {
    ErrorCode.BUNDLE_EMPTY: "Bundle contains no ATT&CK objects",
    ErrorCode.BUNDLE_MALFORMED: "Bundle is not a valid STIX bundle: {reason}",
    ErrorCode.BUNDLE_OBJECT_INVALID: "Malformed bundle object {object_id}: {reason}",
    ErrorCode.UNKNOWN_KILL_CHAIN_PHASE: "Object {object_id} references unknown kill-chain phase '{phase}'",
    ErrorCode.TECHNIQUE_WITHOUT_TACTIC: "Techniques without tactic mappings: {attack_ids}",
    ErrorCode.ARTIFACT_MALFORMED: "Malformed record in {path} line {line}: {reason}",

    ErrorCode.EMBEDDING_TRANSPORT: "Embedding request failed after {attempts} attempt(s): {reason}",
    ErrorCode.EMBEDDING_DIMENSION: "Embedding dimension mismatch: expected {expected}, got {actual}",

    ErrorCode.INDEX_DUPLICATE_KEY: "Duplicate index key '{key}'",
    ErrorCode.INDEX_ZERO_QUERY: "Query vector is zero; cosine similarity is undefined",
    ErrorCode.INDEX_BAD_K: "k must be >= 1, got {k}",
    ErrorCode.INDEX_CHECKSUM: "Index file {path} failed checksum verification",
    ErrorCode.INDEX_FORMAT: "Index file {path} is not a valid index: {reason}",

    ErrorCode.FETCH_FAILED: "Failed to fetch {url}: {reason}",
    ErrorCode.FETCH_OFFLINE: "{url} is not cached and live fetch is disabled",
    ErrorCode.CHUNK_PARAMETERS: "Chunk parameters must satisfy 0 <= overlap < size <= 8000 (size={size}, overlap={overlap})",
    ErrorCode.CONTEXT_UNAVAILABLE: "No candidate page could be fetched for procedure {procedure_id}",
    ErrorCode.PAYLOAD_MISSING: "Index entry {key} has no procedure attached",

    ErrorCode.PROMPT_CONTEXT_MISSING: "Prompt variant {variant} requires retrieved context",
    ErrorCode.PROMPT_TOO_LARGE: "Prompt needs ~{tokens} tokens, budget is {budget}",
    ErrorCode.BACKEND_TRANSPORT: "Backend request for {procedure_id} failed after {attempts} attempt(s): {reason}",
    ErrorCode.REPLAY_MISS: "Replay journal has no record for {procedure_id} ({mode}, {variant})",
    ErrorCode.JOURNAL_MALFORMED: "Malformed journal record at line {line}: {reason}",
    ErrorCode.PROMPT_CONTEXT_UNEXPECTED: "Prompt variant {variant} takes no retrieved context",

    ErrorCode.TRAIN_EMPTY_CORPUS: "Cannot fit a vocabulary on an empty corpus",
    ErrorCode.TRAIN_UNLABELED: "Training description {attack_id} has no tactic labels",
    ErrorCode.TRAIN_DIVERGED: "Loss became non-finite at epoch {epoch}, batch {batch}",
    ErrorCode.MODEL_FORMAT: "Model file {path} is not valid: {reason}",

    ErrorCode.EVAL_EMPTY_GOLD: "Gold tactic set is empty for {procedure_id}",
    ErrorCode.EVAL_EMPTY_RESULTS: "Cannot average an empty list of sample results",
    ErrorCode.EVAL_REPORT_FORMAT: "Report CSV is malformed: {reason}",

    ErrorCode.CONFIG_INVALID: "Invalid configuration: {reason}",
    ErrorCode.CONFIG_REPLAY_NETWORK: "Replay mode forbids network access ({reason})",
}


class TtpRagError(ValueError):
    """Base pipeline error with structured information."""

    def __init__(
        self,
        code: ErrorCode,
        category: ErrorCategory,
        message: str,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.code = code
        self.category = category
        self.details = details or {}
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to structured dictionary."""
        result = {
            "code": self.code.value,
            "category": self.category.value,
            "message": str(self),
        }
        if self.details:
            result["details"] = self.details
        return result

    @property
    def retryable(self) -> bool:
        """Transport failures may succeed on a later run."""
        return self.code in {
            ErrorCode.EMBEDDING_TRANSPORT,
            ErrorCode.FETCH_FAILED,
            ErrorCode.BACKEND_TRANSPORT,
        }


class BundleParseError(TtpRagError):
    pass


class CurationError(TtpRagError):
    pass


class EmbeddingError(TtpRagError):
    @property
    def attempts(self) -> int:
        return int(self.details.get("attempts", 0))


class VectorIndexError(TtpRagError):
    """Index build, query or persistence failure."""


class FetchError(TtpRagError):
    @property
    def url(self) -> Optional[str]:
        return self.details.get("url")


class RetrievalError(TtpRagError):
    pass


class PromptError(TtpRagError):
    pass


class BackendError(TtpRagError):
    @property
    def procedure_id(self) -> Optional[str]:
        return self.details.get("procedure_id")

    @property
    def attempts(self) -> int:
        return int(self.details.get("attempts", 0))


class ReplayMissError(TtpRagError):
    pass


class TrainingError(TtpRagError):
    pass


class EvaluationError(TtpRagError):
    pass


class ConfigError(TtpRagError):
    pass


_CLASS_BY_CATEGORY = {
    ErrorCategory.EMBEDDING: EmbeddingError,
    ErrorCategory.INDEX: VectorIndexError,
    ErrorCategory.TRAINING: TrainingError,
    ErrorCategory.EVALUATION: EvaluationError,
    ErrorCategory.CONFIG: ConfigError,
}

_CLASS_BY_CODE = {
    ErrorCode.BUNDLE_EMPTY: BundleParseError,
    ErrorCode.BUNDLE_MALFORMED: BundleParseError,
    ErrorCode.BUNDLE_OBJECT_INVALID: BundleParseError,
    ErrorCode.UNKNOWN_KILL_CHAIN_PHASE: BundleParseError,
    ErrorCode.TECHNIQUE_WITHOUT_TACTIC: CurationError,
    ErrorCode.ARTIFACT_MALFORMED: CurationError,
    ErrorCode.FETCH_FAILED: FetchError,
    ErrorCode.FETCH_OFFLINE: FetchError,
    ErrorCode.CHUNK_PARAMETERS: RetrievalError,
    ErrorCode.CONTEXT_UNAVAILABLE: RetrievalError,
    ErrorCode.PAYLOAD_MISSING: RetrievalError,
    ErrorCode.PROMPT_CONTEXT_MISSING: PromptError,
    ErrorCode.PROMPT_TOO_LARGE: PromptError,
    ErrorCode.PROMPT_CONTEXT_UNEXPECTED: PromptError,
    ErrorCode.BACKEND_TRANSPORT: BackendError,
    ErrorCode.REPLAY_MISS: ReplayMissError,
    ErrorCode.JOURNAL_MALFORMED: BackendError,
}


def category_for(code: ErrorCode) -> ErrorCategory:
    """Determine the category from the code's hundreds digit."""
    return _CATEGORY_BY_PREFIX.get(code.value[:2], ErrorCategory.CONFIG)


def create_error(
    code: ErrorCode,
    custom_message: Optional[str] = None,
    **details: Any,
) -> TtpRagError:
    """Create a structured pipeline error of the right subclass."""
    category = category_for(code)
    if custom_message:
        message = custom_message
    else:
        template = ERROR_MESSAGES.get(code, "Pipeline error")
        try:
            message = template.format(**details)
        except KeyError:
            message = template
    cls = _CLASS_BY_CODE.get(code) or _CLASS_BY_CATEGORY.get(category, TtpRagError)
    return cls(code=code, category=category, message=message, details=details)
