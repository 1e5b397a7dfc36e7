"""Tests for stage telemetry and its CLI table."""
import pytest
import requests
from rich.console import Console

from ttprag.cli.common import stage_metrics_table
from ttprag.retrieval import PageCache, fetch_page_text
from ttprag.utils.errors import TtpRagError
from ttprag.utils.monitoring import StageMetrics, get_stage_metrics, monitor_stage


class TestStageMetrics:
    def test_errors_counted_per_stage(self):
        metrics = StageMetrics()
        metrics.record("fetch", 12.0, False, "E401")
        metrics.record("fetch", 8.0, False, "E401")
        metrics.record("fetch", 5.0, True)
        metrics.record("llm", 30.0, False, "E502")

        summary = metrics.get_summary()
        assert summary["fetch"]["calls"] == 3
        assert summary["fetch"]["failures"] == 2
        assert summary["fetch"]["errors"] == {"E401": 2}
        assert summary["llm"]["errors"] == {"E502": 1}

    def test_clean_stage_has_no_errors_entry(self):
        metrics = StageMetrics()
        metrics.record("embedding", 3.0, True)
        assert "errors" not in metrics.get_summary()["embedding"]

    def test_reset(self):
        metrics = StageMetrics()
        metrics.record("fetch", 1.0, False, "E400")
        metrics.reset()
        assert metrics.get_summary() == {}


class NotFoundSession:
    def get(self, url, timeout=None, headers=None):
        response = requests.Response()
        response.status_code = 404
        response.url = url
        return response


def test_decorator_records_error_codes(tmp_path):
    url = "https://attack.mitre.org/techniques/T0404/"
    with pytest.raises(TtpRagError):
        fetch_page_text(url, PageCache(tmp_path), session=NotFoundSession())
    assert get_stage_metrics()["fetch"]["errors"] == {"E400": 1}


def test_decorator_falls_back_to_exception_name():
    @monitor_stage("parse")
    def broken():
        raise KeyError("x")

    with pytest.raises(KeyError):
        broken()
    assert get_stage_metrics()["parse"]["errors"] == {"KeyError": 1}


def test_table_shows_errors():
    console = Console(width=200, record=True)
    console.print(stage_metrics_table({"fetch": {"calls": 2, "failures": 1, "errors": {"E401": 1}}}))
    assert "E401 x1" in console.export_text()
