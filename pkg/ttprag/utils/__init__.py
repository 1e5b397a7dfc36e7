# Utils module for ttprag

from .errors import (
    ErrorCategory,
    ErrorCode,
    TtpRagError,
    create_error,
)
from .monitoring import get_stage_metrics, monitor_stage, reset_stage_metrics

__all__ = [
    "ErrorCategory",
    "ErrorCode",
    "TtpRagError",
    "create_error",
    "get_stage_metrics",
    "monitor_stage",
    "reset_stage_metrics",
]
