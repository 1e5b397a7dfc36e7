"""
Artifact I/O helpers: atomic writes and JSONL over pydantic models.
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Iterator, List, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from .errors import ErrorCode, create_error

M = TypeVar("M", bound=BaseModel)


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> None:
    """Write bytes to a temp file next to `path`, then rename over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def dump_record(record: BaseModel) -> str:
    """Serialize one model as a canonical JSON line (no trailing newline)."""
    return json.dumps(
        record.model_dump(mode="json"),
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )


def write_jsonl(path: Union[str, Path], records: Iterable[BaseModel]) -> int:
    """Atomically write records as JSONL. Returns the number of lines."""
    lines = [dump_record(r) for r in records]
    body = "".join(line + "\n" for line in lines)
    atomic_write_text(path, body)
    return len(lines)


def iter_jsonl(path: Union[str, Path], model: Type[M]) -> Iterator[M]:
    """
    Yield validated records from a JSONL file.

    Raises:
        CurationError (ARTIFACT_MALFORMED) naming the 1-based line of the first
        malformed record.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        for line_num, line in enumerate(f, 1):
            line = line.strip()
            if not line:  # Skip empty lines
                continue
            try:
                yield model.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as e:
                raise create_error(
                    ErrorCode.ARTIFACT_MALFORMED,
                    path=str(path),
                    line=line_num,
                    reason=str(e).splitlines()[0],
                ) from e


def read_jsonl(path: Union[str, Path], model: Type[M]) -> List[M]:
    return list(iter_jsonl(path, model))
