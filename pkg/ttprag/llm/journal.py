"""
Append-only request journal.

One JSON record per dispatched request. The journal is the audit trail of a
run, the resume point after an interruption and the source for replay.
"""

import json
import logging
import os
import threading
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple, Union

from pydantic import BaseModel, ConfigDict, ValidationError

from ..utils.errors import ErrorCode, create_error
from ..utils.io import dump_record

logger = logging.getLogger(__name__)

RunKey = Tuple[str, str, str]


class JournalRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    procedure_id: str
    mode: str
    variant: str
    model_id: str
    prompt_digest: str
    response_text: str
    backend_fingerprint: str
    refused: bool = False
    input_tokens: int = 0
    output_tokens: int = 0
    latency_ms: float = 0.0
    url_matched: bool = False
    context_unavailable: bool = False
    candidate_urls: Tuple[str, ...] = ()
    started_at: str
    finished_at: str

    @property
    def run_key(self) -> RunKey:
        return (self.procedure_id, self.mode, self.variant)


class Journal:
    """Thread-safe JSONL journal bound to one file."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._by_key: Optional[Dict[RunKey, JournalRecord]] = None

    def append(self, record: JournalRecord) -> None:
        line = dump_record(record) + "\n"
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._drop_torn_tail()
            with self.path.open("a", encoding="utf-8") as f:
                f.write(line)
                f.flush()
                os.fsync(f.fileno())
            if self._by_key is not None:
                self._by_key[record.run_key] = record

    def _drop_torn_tail(self) -> None:
        """Cut an unterminated final line back to the last newline. Caller holds the lock."""
        if not self.path.exists():
            return
        with self.path.open("r+b") as f:
            size = f.seek(0, os.SEEK_END)
            if size == 0:
                return
            f.seek(size - 1)
            if f.read(1) == b"\n":
                return
            f.seek(0)
            data = f.read()
            keep = data.rfind(b"\n") + 1
            logger.warning("Truncating torn journal tail of %s (%d bytes)", self.path, size - keep)
            f.truncate(keep)
            f.flush()
            os.fsync(f.fileno())

    def load(self) -> List[JournalRecord]:
        """
        All records in file order.

        A torn final line (no trailing newline, left by an interrupted write)
        is dropped with a warning; any other malformed line is an error.
        """
        if not self.path.exists():
            return []
        with self._lock:
            raw = self.path.read_text(encoding="utf-8")
        lines = raw.split("\n")
        records: List[JournalRecord] = []
        for line_num, line in enumerate(lines, 1):
            if not line.strip():
                continue
            is_tail = line_num == len(lines) and not raw.endswith("\n")
            try:
                records.append(JournalRecord.model_validate(json.loads(line)))
            except (json.JSONDecodeError, ValidationError) as e:
                if is_tail:
                    logger.warning("Ignoring torn journal tail at line %d of %s", line_num, self.path)
                    continue
                raise create_error(
                    ErrorCode.JOURNAL_MALFORMED,
                    line=line_num,
                    reason=str(e).splitlines()[0],
                    path=str(self.path),
                ) from e
        return records

    def _index(self) -> Dict[RunKey, JournalRecord]:
        if self._by_key is None:
            by_key: Dict[RunKey, JournalRecord] = {}
            for record in self.load():
                by_key[record.run_key] = record
            self._by_key = by_key
        return self._by_key

    def completed_keys(self) -> Set[RunKey]:
        """(procedure_id, mode, variant) of every journaled request."""
        return set(self._index())

    def lookup(self, procedure_id: str, mode: str, variant: str,
               digest: Optional[str] = None) -> Optional[JournalRecord]:
        """Latest record for the run key; with a digest, only if the prompt matches."""
        record = self._index().get((procedure_id, mode, variant))
        if record is None:
            return None
        if digest is not None and record.prompt_digest != digest:
            return None
        return record

    def __len__(self) -> int:
        return len(self._index())
