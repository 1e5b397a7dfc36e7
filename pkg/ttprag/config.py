"""
Run configuration: loading from JSON or YAML, CLI overrides and the
config echo written next to every run's outputs.
"""

import json
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, Field, ValidationError

from .baseline.model import TrainConfig
from .llm.models import DEFAULT_CONTEXT_BUDGET_TOKENS, DEFAULT_MAX_RESPONSE_TOKENS, DEFAULT_MODEL_ID, DEFAULT_SEED
from .llm.prompts import PromptVariant
from .retrieval.models import MAX_CHUNK_CHARS, RetrievalMode
from .utils.errors import ErrorCode, create_error
from .utils.io import atomic_write_text

CONFIG_ECHO_FILE = "run_config.yaml"


class EmbeddingConfig(BaseModel):
    provider: Literal["hashing", "openai"] = Field("hashing", description="Embedding provider")
    model: Optional[str] = Field(None, description="Remote embedding model id")
    dimension: int = Field(1024, ge=1, description="Vector dimension")


class RetrievalConfig(BaseModel):
    chunk_size: int = Field(MAX_CHUNK_CHARS, ge=1, le=MAX_CHUNK_CHARS, description="Characters per chunk")
    chunk_overlap: int = Field(500, ge=0, description="Characters shared by consecutive chunks")
    top_chunks: int = Field(3, ge=1, le=3, description="Chunks injected into the prompt")
    top_procedures: int = Field(3, ge=1, description="Similar procedures whose pages are read")
    live_fetch: bool = Field(False, description="Fetch pages missing from the cache over HTTP")
    fetch_timeout: float = Field(30.0, gt=0, description="Seconds per page request")
    fetch_workers: int = Field(4, ge=1, description="Parallel page fetches")


class LlmConfig(BaseModel):
    backend: Literal["openai", "mock", "replay"] = Field("mock", description="Chat backend")
    model_id: str = Field(DEFAULT_MODEL_ID, description="Remote chat model id")
    temperature: float = Field(0.0, description="Fixed at 0")
    seed: int = Field(DEFAULT_SEED, description="Sampling seed sent with every request")
    max_response_tokens: int = Field(DEFAULT_MAX_RESPONSE_TOKENS, ge=1)
    context_budget_tokens: int = Field(DEFAULT_CONTEXT_BUDGET_TOKENS, ge=1)
    budget: int = Field(4, ge=1, description="Concurrent in-flight requests")
    max_retries: int = Field(5, ge=1)
    replay_journal: Optional[Path] = Field(None, description="Journal to replay responses from")
    api_key_env: str = Field("OPENAI_API_KEY", description="Environment variable holding the API key")


class RunConfig(BaseModel):
    """One file per run; every field has a working default for fixture runs."""
    snapshot: Optional[Path] = Field(None, description="STIX enterprise bundle")
    version_tag: Optional[str] = Field(None, description="Snapshot version, e.g. v14.1")
    corpus_dir: Path = Field(Path("artifacts/corpus"), description="Curated JSONL artifacts")
    index_path: Path = Field(Path("artifacts/procedures.idx"), description="Procedure index file")
    cache_dir: Path = Field(Path("artifacts/pages"), description="Page cache directory")
    out_dir: Path = Field(Path("runs/latest"), description="Run output directory")
    mode: RetrievalMode = Field(RetrievalMode.PROMPT_ONLY, description="Retrieval mode")
    variant: PromptVariant = Field(PromptVariant.SPECIFIC_NO_CONTEXT, description="Prompt variant")
    dedupe_sentences: bool = Field(False, description="Collapse identical procedure sentences per technique")
    seed: int = Field(1106, description="Seed for sampling in review and baseline shuffling")
    embedding: EmbeddingConfig = Field(default_factory=EmbeddingConfig)
    retrieval: RetrievalConfig = Field(default_factory=RetrievalConfig)
    llm: LlmConfig = Field(default_factory=LlmConfig)
    baseline: TrainConfig = Field(default_factory=TrainConfig)

    def with_overrides(self, **flags: Any) -> "RunConfig":
        """
        Apply CLI flags over the file values. `None` flags are ignored.

        Flag names map onto nested fields: backend, budget and replay go to
        `llm`; out goes to `out_dir`; any other name must be a top-level field.
        """
        data = self.model_dump()
        for name, value in flags.items():
            if value is None:
                continue
            path = _FLAG_PATHS.get(name, (name,))
            target = data
            for key in path[:-1]:
                target = target[key]
            if path[-1] not in target:
                raise create_error(ErrorCode.CONFIG_INVALID, reason=f"unknown setting '{name}'")
            target[path[-1]] = value
        if flags.get("replay") is not None:
            data["llm"]["backend"] = "replay"
        try:
            return RunConfig.model_validate(data)
        except ValidationError as e:
            raise create_error(ErrorCode.CONFIG_INVALID, reason=str(e)) from e


_FLAG_PATHS: Dict[str, Tuple[str, ...]] = {
    "out": ("out_dir",),
    "backend": ("llm", "backend"),
    "budget": ("llm", "budget"),
    "replay": ("llm", "replay_journal"),
    "model_id": ("llm", "model_id"),
    "live_fetch": ("retrieval", "live_fetch"),
}


def load_config(file_path: Union[str, Path]) -> RunConfig:
    """
    Load and validate a run configuration file.

    Args:
        file_path: Path to a .json, .yaml or .yml file

    Raises:
        FileNotFoundError: If the file doesn't exist
        ValueError: If the file format is invalid or validation fails
    """
    path = Path(file_path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {file_path}")

    content = path.read_text(encoding="utf-8")
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            data = json.loads(content)
        elif suffix in (".yaml", ".yml"):
            data = yaml.safe_load(content)
        else:
            raise ValueError(f"Unsupported file format: {path.suffix}")
    except json.JSONDecodeError as e:
        raise ValueError(f"Invalid JSON: {str(e)}")
    except yaml.YAMLError as e:
        raise ValueError(f"Invalid YAML: {str(e)}")

    try:
        return RunConfig.model_validate(data or {})
    except ValidationError as e:
        raise create_error(ErrorCode.CONFIG_INVALID, reason=str(e)) from e


def validate_run_config(config: RunConfig) -> RunConfig:
    """
    Cross-field checks for a prediction run.

    Raises:
        ConfigError: variant and mode disagree on context, overlap not below
            chunk size, or replay combined with anything that needs the network.
    """
    if config.mode == RetrievalMode.PROMPT_ONLY and config.variant.needs_context:
        raise create_error(ErrorCode.CONFIG_INVALID,
                           reason=f"variant {config.variant.value} needs a retrieval mode")
    if config.mode != RetrievalMode.PROMPT_ONLY and not config.variant.needs_context:
        raise create_error(ErrorCode.CONFIG_INVALID,
                           reason=f"mode {config.mode.value} needs a with-context variant")
    if config.retrieval.chunk_overlap >= config.retrieval.chunk_size:
        raise create_error(ErrorCode.CONFIG_INVALID, reason="chunk_overlap must be below chunk_size")

    if config.llm.backend == "replay":
        if config.llm.replay_journal is None:
            raise create_error(ErrorCode.CONFIG_INVALID, reason="replay backend needs --replay <journal>")
        if config.retrieval.live_fetch:
            raise create_error(ErrorCode.CONFIG_REPLAY_NETWORK, reason="live page fetch is enabled")
        if config.embedding.provider == "openai" and config.mode != RetrievalMode.PROMPT_ONLY:
            raise create_error(ErrorCode.CONFIG_REPLAY_NETWORK, reason="remote embeddings are enabled")
    return config


def write_config_echo(config: RunConfig, out_dir: Union[str, Path]) -> Path:
    """Write the effective configuration as YAML next to the run outputs."""
    path = Path(out_dir) / CONFIG_ECHO_FILE
    text = yaml.safe_dump(config.model_dump(mode="json"), sort_keys=True, allow_unicode=True)
    atomic_write_text(path, text)
    return path
