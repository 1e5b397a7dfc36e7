"""
Scoring of predicted tactic sets and report rendering.
"""

from .metrics import (
    SampleResult,
    TacticScore,
    per_tactic_prf,
    sample_prf,
    samples_average,
    score_sample,
    supplementary_averages,
)
from .report import (
    EvalReport,
    Subgroup,
    build_report,
    parse_report_csv,
    render_comparison,
    render_report,
    score_predictions,
    subgroup_split,
)

__all__ = [
    "EvalReport",
    "SampleResult",
    "Subgroup",
    "TacticScore",
    "build_report",
    "parse_report_csv",
    "per_tactic_prf",
    "render_comparison",
    "render_report",
    "sample_prf",
    "samples_average",
    "score_predictions",
    "score_sample",
    "subgroup_split",
    "supplementary_averages",
]
