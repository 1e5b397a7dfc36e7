"""
Pytest configuration: test isolation and the shared ATT&CK fixtures.
"""
import os
import sys
import tempfile
from pathlib import Path

import pytest

# Store original working directory
_original_cwd = os.getcwd()
if _original_cwd not in sys.path:
    sys.path.insert(0, _original_cwd)

from ttprag.corpus import curate_finetune_set, curate_procedures, parse_snapshot  # noqa: E402
from ttprag.embedding import HashingEmbeddingProvider  # noqa: E402
from ttprag.retrieval import PageCache  # noqa: E402
from ttprag.utils.monitoring import reset_stage_metrics  # noqa: E402

from tests.fixtures.attack_data import TECHNIQUES, snapshot_bytes, technique_page  # noqa: E402
from ttprag.corpus.bundle import technique_url  # noqa: E402


@pytest.fixture(autouse=True)
def isolated_test_environment(tmp_path, monkeypatch):
    """
    Run each test in its own temporary directory.

    Relative artifact paths from the default run configuration land here.
    """
    test_dir = tmp_path / "test_workspace"
    test_dir.mkdir()
    monkeypatch.chdir(test_dir)
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    reset_stage_metrics()
    yield test_dir


@pytest.fixture(autouse=True)
def verify_no_root_pollution():
    """
    Verify tests don't create files in the project root.
    """
    root_files_before = set(os.listdir(_original_cwd))

    yield

    root_files_after = set(os.listdir(_original_cwd))
    new_files = {f for f in root_files_after - root_files_before if not any([
        f.startswith('.'),
        f == '__pycache__',
        f.endswith('.pyc'),
    ])}
    assert len(new_files) == 0, (
        f"Test created files in project root: {new_files}. "
        f"Tests should write below tmp_path."
    )


@pytest.fixture
def snapshot_data():
    """Raw bytes of the synthetic enterprise snapshot."""
    return snapshot_bytes()


@pytest.fixture
def snapshot_file(tmp_path, snapshot_data):
    path = tmp_path / "enterprise-attack-test.json"
    path.write_bytes(snapshot_data)
    return path


@pytest.fixture
def corpus(snapshot_data):
    return parse_snapshot(snapshot_data, "test")


@pytest.fixture
def descriptions(corpus):
    return curate_finetune_set(corpus)


@pytest.fixture
def procedures(corpus):
    """The 50 curated fixture procedures, ordered by procedure_id."""
    return curate_procedures(corpus)


@pytest.fixture
def hashing_provider():
    return HashingEmbeddingProvider(1024)


@pytest.fixture
def page_cache(isolated_test_environment):
    """
    Page cache at the default location, holding every fixture technique page.
    """
    cache = PageCache(isolated_test_environment / "artifacts" / "pages")
    for attack_id in TECHNIQUES:
        cache.put(technique_url(attack_id), technique_page(attack_id), fetched_at="2024-01-01T00:00:00+00:00")
    return cache


@pytest.fixture
def by_technique(procedures):
    """Curated procedures grouped by technique id."""
    grouped = {}
    for p in procedures:
        grouped.setdefault(p.technique_attack_id, []).append(p)
    return grouped


def pytest_configure(config):
    """Keep the pytest cache out of the project tree."""
    if not config.option.cacheclear and not config.option.cacheshow:
        config.option.cachedir = tempfile.mkdtemp(prefix="pytest_cache_")
