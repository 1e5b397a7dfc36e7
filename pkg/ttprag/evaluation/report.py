"""
Evaluation reports: scoring a predictions file against the gold procedures,
subgroup splits, and the CSV / markdown renderings.

CSV layout (full precision, one row per line):
    row,precision,recall,f1,support
    <14 tactic rows in report order>
    samples avg,...,<number of samples>
    micro avg,...,<total support>
    macro avg,...,<total support>
    weighted avg,...,<total support>
"""

import csv
import io
import logging
from enum import Enum
from typing import Dict, List, Literal, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator

from ..corpus.models import ProcedureExample
from ..corpus.tactics import TACTIC_ORDER, Tactic
from ..extraction.models import Prediction
from ..utils.errors import ErrorCode, create_error
from .metrics import (
    PRF,
    SampleResult,
    TacticScore,
    per_tactic_prf,
    samples_average,
    score_sample,
    supplementary_averages,
)

logger = logging.getLogger(__name__)

CSV_HEADER = ["row", "precision", "recall", "f1", "support"]
SAMPLES_ROW = "samples avg"
COUNT_ROW = "procedures"
AVERAGE_ROWS = ("micro avg", "macro avg", "weighted avg")
EMPTY_PREDICTION_NOTE = "An empty prediction scores precision = recall = F1 = 0."


class Subgroup(str, Enum):
    ALL = "all"
    MATCHED_URL = "matched-url"
    UNMATCHED_URL = "unmatched-url"


class EvalReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str = ""
    subgroup: Subgroup = Subgroup.ALL
    n_samples: int = Field(..., ge=1)
    samples_avg_precision: float
    samples_avg_recall: float
    samples_avg_f1: float
    per_tactic: Dict[Tactic, TacticScore]
    total_support: int
    micro: Tuple[float, float, float]
    macro: Tuple[float, float, float]
    weighted: Tuple[float, float, float]

    @model_validator(mode="after")
    def _support_adds_up(self) -> "EvalReport":
        if set(self.per_tactic) != set(TACTIC_ORDER):
            raise ValueError("per_tactic must cover all 14 tactics")
        if self.total_support != sum(s.support for s in self.per_tactic.values()):
            raise ValueError("total_support must equal the sum of per-tactic supports")
        return self

    @field_serializer("per_tactic")
    def _serialize_per_tactic(self, table: Dict[Tactic, TacticScore]) -> Dict[str, dict]:
        return {t.value: table[t].model_dump() for t in TACTIC_ORDER}

    @property
    def samples_average(self) -> PRF:
        return self.samples_avg_precision, self.samples_avg_recall, self.samples_avg_f1


def build_report(results: Sequence[SampleResult], label: str = "",
                 subgroup: Subgroup = Subgroup.ALL) -> EvalReport:
    """Aggregate per-sample results. Results are ordered by procedure_id first."""
    results = sorted(results, key=lambda r: r.procedure_id)
    precision, recall, f1 = samples_average(results)
    per_tactic = per_tactic_prf(results)
    extra = supplementary_averages(results)
    return EvalReport(
        label=label,
        subgroup=subgroup,
        n_samples=len(results),
        samples_avg_precision=precision,
        samples_avg_recall=recall,
        samples_avg_f1=f1,
        per_tactic=per_tactic,
        total_support=sum(s.support for s in per_tactic.values()),
        micro=extra["micro"],
        macro=extra["macro"],
        weighted=extra["weighted"],
    )


def score_predictions(
    predictions: Sequence[Prediction],
    procedures: Sequence[ProcedureExample],
) -> Tuple[List[SampleResult], List[str]]:
    """
    Score each prediction against its procedure's gold set.

    Returns:
        (results ordered by procedure_id, ids of procedures with no prediction)
    """
    gold = {p.procedure_id: p for p in procedures}
    seen = set()
    results: List[SampleResult] = []
    for prediction in sorted(predictions, key=lambda p: p.procedure_id):
        procedure = gold.get(prediction.procedure_id)
        if procedure is None:
            logger.warning("Prediction for unknown procedure %s ignored", prediction.procedure_id)
            continue
        if prediction.procedure_id in seen:
            logger.warning("Duplicate prediction for %s ignored", prediction.procedure_id)
            continue
        seen.add(prediction.procedure_id)
        results.append(score_sample(prediction.procedure_id, procedure.gold_tactics, prediction.predicted))
    missing = sorted(set(gold) - seen)
    return results, missing


def subgroup_split(predictions: Sequence[Prediction]) -> Tuple[List[Prediction], List[Prediction]]:
    """Partition by url_matched into (matched, unmatched), order preserved."""
    matched = [p for p in predictions if p.url_matched]
    unmatched = [p for p in predictions if not p.url_matched]
    return matched, unmatched


def _csv_rows(report: EvalReport) -> List[list]:
    rows: List[list] = [CSV_HEADER]
    for tactic in TACTIC_ORDER:
        s = report.per_tactic[tactic]
        rows.append([tactic.value, s.precision, s.recall, s.f1, s.support])
    rows.append([SAMPLES_ROW, *report.samples_average, report.total_support])
    for name, prf in zip(AVERAGE_ROWS, (report.micro, report.macro, report.weighted)):
        rows.append([name, *prf, report.total_support])
    rows.append([COUNT_ROW, "", "", "", report.n_samples])
    return rows


def _render_csv(rows: List[list]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buffer.getvalue().encode("utf-8")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _title(report: EvalReport) -> str:
    title = report.label or "Evaluation report"
    if report.subgroup != Subgroup.ALL:
        title += f" ({report.subgroup.value})"
    return title


def _render_markdown(report: EvalReport) -> bytes:
    lines = [
        f"# {_title(report)}",
        "",
        f"Samples average over {report.n_samples} procedures. {EMPTY_PREDICTION_NOTE}",
        "",
        "| Tactic | Precision | Recall | F1 | Support |",
        "|---|---:|---:|---:|---:|",
    ]
    for tactic in TACTIC_ORDER:
        s = report.per_tactic[tactic]
        lines.append(f"| {tactic.value} | {_fmt(s.precision)} | {_fmt(s.recall)} | {_fmt(s.f1)} | {s.support} |")
    p, r, f = report.samples_average
    lines.append(f"| **Samples Avg.** | {_fmt(p)} | {_fmt(r)} | {_fmt(f)} | {report.total_support} |")
    lines += ["", "| Supplementary | Precision | Recall | F1 | Support |", "|---|---:|---:|---:|---:|"]
    for name, (p, r, f) in zip(AVERAGE_ROWS, (report.micro, report.macro, report.weighted)):
        lines.append(f"| {name} | {_fmt(p)} | {_fmt(r)} | {_fmt(f)} | {report.total_support} |")
    return ("\n".join(lines) + "\n").encode("utf-8")


def render_report(report: EvalReport, fmt: Literal["csv", "md"] = "csv") -> bytes:
    """Deterministic rendering: CSV at full precision, markdown at two decimals."""
    if fmt == "csv":
        return _render_csv(_csv_rows(report))
    if fmt == "md":
        return _render_markdown(report)
    raise ValueError(f"Unsupported report format: {fmt}")


def parse_report_csv(data: Union[bytes, str], label: str = "",
                     subgroup: Subgroup = Subgroup.ALL) -> EvalReport:
    """
    Rebuild a report from its CSV rendering.

    Raises:
        EvaluationError: rows missing, out of order or not numeric.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    expected_names = [t.value for t in TACTIC_ORDER] + [SAMPLES_ROW, *AVERAGE_ROWS, COUNT_ROW]
    if not rows or rows[0] != CSV_HEADER:
        raise create_error(ErrorCode.EVAL_REPORT_FORMAT, reason="missing or wrong header")
    body = rows[1:]
    if [r[0] for r in body] != expected_names:
        raise create_error(ErrorCode.EVAL_REPORT_FORMAT, reason="unexpected row labels or order")

    try:
        values = [(float(r[1]), float(r[2]), float(r[3]), int(r[4])) for r in body[:-1]]
        n_samples = int(body[-1][4])
    except (IndexError, ValueError) as e:
        raise create_error(ErrorCode.EVAL_REPORT_FORMAT, reason=str(e)) from e

    per_tactic = {
        tactic: TacticScore(precision=p, recall=r, f1=f, support=n)
        for tactic, (p, r, f, n) in zip(TACTIC_ORDER, values)
    }
    samples = values[len(TACTIC_ORDER)]
    micro, macro, weighted = values[len(TACTIC_ORDER) + 1:]
    try:
        return EvalReport(
            label=label,
            subgroup=subgroup,
            n_samples=n_samples,
            samples_avg_precision=samples[0],
            samples_avg_recall=samples[1],
            samples_avg_f1=samples[2],
            per_tactic=per_tactic,
            total_support=micro[3],
            micro=micro[:3],
            macro=macro[:3],
            weighted=weighted[:3],
        )
    except ValueError as e:
        raise create_error(ErrorCode.EVAL_REPORT_FORMAT, reason=str(e).splitlines()[0]) from e


def render_comparison(
    columns: Sequence[Tuple[str, EvalReport]],
    layout: Literal["f1", "prf"] = "f1",
    fmt: Literal["csv", "md"] = "md",
) -> bytes:
    """
    Several reports side by side, tactic rows in report order.

    "f1" layout: one F1 column per report and a single Support column taken
    from the first report. "prf" layout: precision, recall, F1 and support
    for every report.
    """
    if not columns:
        raise create_error(ErrorCode.EVAL_EMPTY_RESULTS)
    names = [name for name, _ in columns]
    reports = [report for _, report in columns]

    if layout == "f1":
        header = ["Tactic", *names, "Support"]
        rows: List[list] = []
        for tactic in TACTIC_ORDER:
            rows.append([tactic.value, *(r.per_tactic[tactic].f1 for r in reports),
                         reports[0].per_tactic[tactic].support])
        rows.append(["Samples Avg.", *(r.samples_avg_f1 for r in reports), reports[0].total_support])
    elif layout == "prf":
        header = ["Tactic"]
        for name in names:
            header += [f"{name} Precision", f"{name} Recall", f"{name} F1", f"{name} Support"]
        rows = []
        for tactic in TACTIC_ORDER:
            row: list = [tactic.value]
            for r in reports:
                s = r.per_tactic[tactic]
                row += [s.precision, s.recall, s.f1, s.support]
            rows.append(row)
        footer: list = ["Samples Avg."]
        for r in reports:
            footer += [*r.samples_average, r.total_support]
        rows.append(footer)
    else:
        raise ValueError(f"Unsupported layout: {layout}")

    if fmt == "csv":
        return _render_csv([header, *rows])
    if fmt != "md":
        raise ValueError(f"Unsupported report format: {fmt}")
    lines = [
        "| " + " | ".join(header) + " |",
        "|---|" + "---:|" * (len(header) - 1),
    ]
    for row in rows:
        cells = [_fmt(v) if isinstance(v, float) else str(v) for v in row]
        lines.append("| " + " | ".join(cells) + " |")
    lines += ["", EMPTY_PREDICTION_NOTE]
    return ("\n".join(lines) + "\n").encode("utf-8")
