"""
Stage telemetry for the pipeline.

Tracks call durations and failures for the slow, external stages (backend
queries, page fetches, embedding requests) and provides a summary for the
CLI to print after a run.
"""

import functools
import logging
import threading
import time
from collections import defaultdict, deque
from typing import Any, Callable, Dict, Optional

from .errors import TtpRagError

logger = logging.getLogger(__name__)


class StageMetrics:
    """Thread-safe metrics collection for pipeline stages."""

    def __init__(self, max_history: int = 10000):
        """
        Initialize metrics collector.

        Args:
            max_history: Maximum number of call records to keep per stage
        """
        self.max_history = max_history
        self._lock = threading.Lock()

        self.durations: Dict[str, deque] = defaultdict(lambda: deque(maxlen=self.max_history))
        self.call_counts: Dict[str, int] = defaultdict(int)
        self.failure_counts: Dict[str, int] = defaultdict(int)
        self.error_types: Dict[str, Dict[str, int]] = defaultdict(lambda: defaultdict(int))

        # Performance thresholds
        self.slow_threshold_ms = 10_000
        self.very_slow_threshold_ms = 60_000

    def record(self, stage: str, duration_ms: float, success: bool,
               error_type: Optional[str] = None) -> None:
        """Record one call of a stage."""
        with self._lock:
            self.durations[stage].append(duration_ms)
            self.call_counts[stage] += 1
            if not success:
                self.failure_counts[stage] += 1
                if error_type:
                    self.error_types[stage][error_type] += 1

        if duration_ms > self.very_slow_threshold_ms:
            logger.error("Very slow %s call: %.0fms", stage, duration_ms)
        elif duration_ms > self.slow_threshold_ms:
            logger.warning("Slow %s call: %.0fms", stage, duration_ms)

    def get_summary(self) -> Dict[str, Any]:
        """Per-stage count, failures by error type and latency percentiles."""
        with self._lock:
            summary: Dict[str, Any] = {}
            for stage, count in sorted(self.call_counts.items()):
                times = sorted(self.durations[stage])
                stats: Dict[str, Any] = {
                    "calls": count,
                    "failures": self.failure_counts.get(stage, 0),
                }
                errors = self.error_types.get(stage)
                if errors:
                    stats["errors"] = dict(sorted(errors.items()))
                if times:
                    stats.update({
                        "avg_ms": round(sum(times) / len(times), 2),
                        "p50_ms": round(times[len(times) // 2], 2),
                        "p90_ms": round(times[min(int(len(times) * 0.9), len(times) - 1)], 2),
                        "max_ms": round(times[-1], 2),
                    })
                summary[stage] = stats
            return summary

    def reset(self) -> None:
        with self._lock:
            self.durations.clear()
            self.call_counts.clear()
            self.failure_counts.clear()
            self.error_types.clear()


# Global metrics instance
_metrics = StageMetrics()


def monitor_stage(stage: str):
    """
    Decorator recording duration and outcome of each call.

    Usage:
        @monitor_stage("fetch")
        def fetch_page_text(url, cache):
            ...
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            success = True
            error_type = None
            try:
                return func(*args, **kwargs)
            except Exception as e:
                success = False
                error_type = e.code.value if isinstance(e, TtpRagError) else type(e).__name__
                raise
            finally:
                duration_ms = (time.perf_counter() - start) * 1000
                _metrics.record(stage, duration_ms, success, error_type)
        return wrapper
    return decorator


def get_stage_metrics() -> Dict[str, Any]:
    """Get current per-stage metrics summary."""
    return _metrics.get_summary()


def reset_stage_metrics() -> None:
    _metrics.reset()
