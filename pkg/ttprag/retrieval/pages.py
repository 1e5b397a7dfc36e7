"""
Technique page fetching, HTML-to-text normalization and the on-disk page cache.

Cache layout: one `<sha256(url)>.txt` file per URL holding the normalized
text, plus `manifest.json` mapping each digest to its URL and fetch time.
"""

import hashlib
import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import requests
from bs4 import BeautifulSoup
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from ..utils.errors import ErrorCode, FetchError, create_error
from ..utils.io import atomic_write_text
from ..utils.monitoring import monitor_stage

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
USER_AGENT = "ttprag/0.1 (+https://attack.mitre.org research harness)"

_DROP_TAGS = ["script", "style", "noscript", "nav", "header", "footer", "svg", "template", "iframe"]
_BLOCK_TAGS = [
    "address", "article", "aside", "blockquote", "br", "dd", "div", "dl", "dt",
    "figcaption", "figure", "h1", "h2", "h3", "h4", "h5", "h6", "hr", "li",
    "main", "ol", "p", "pre", "section", "table", "tbody", "td", "th", "thead",
    "tr", "ul",
]


def html_to_text(html: str) -> str:
    """
    Visible text of an HTML page.

    Scripts, styles and navigation chrome are removed; block elements are
    separated by newlines; whitespace inside a line is collapsed and blank
    lines dropped.
    """
    if not html:
        return ""
    soup = BeautifulSoup(html, "html.parser")
    for tag in soup(_DROP_TAGS):
        tag.decompose()
    for tag in soup.find_all(_BLOCK_TAGS):
        tag.insert_before("\n")
        tag.insert_after("\n")
    text = soup.get_text()
    lines = (re.sub(r"\s+", " ", line).strip() for line in text.splitlines())
    return "\n".join(line for line in lines if line)


def url_digest(url: str) -> str:
    return hashlib.sha256(url.encode("utf-8")).hexdigest()


class PageCache:
    """Content cache keyed by URL. Writes are serialized per URL."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: Dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._manifest_lock = threading.Lock()

    def path_for(self, url: str) -> Path:
        return self.root / f"{url_digest(url)}.txt"

    def lock_for(self, url: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(url, threading.Lock())

    def get(self, url: str) -> Optional[str]:
        path = self.path_for(url)
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    def __contains__(self, url: str) -> bool:
        return self.path_for(url).exists()

    def manifest(self) -> Dict[str, Dict[str, str]]:
        path = self.root / MANIFEST_FILE
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, url: str, text: str, fetched_at: Optional[str] = None) -> None:
        fetched_at = fetched_at or datetime.now(timezone.utc).isoformat()
        atomic_write_text(self.path_for(url), text)
        with self._manifest_lock:
            manifest = self.manifest()
            manifest[url_digest(url)] = {"url": url, "fetched_at": fetched_at}
            atomic_write_text(
                self.root / MANIFEST_FILE,
                json.dumps(manifest, indent=2, sort_keys=True) + "\n",
            )


class _ServerError(requests.RequestException):
    pass


@monitor_stage("fetch")
def _download(url: str, session: requests.Session, timeout: float, max_retries: int) -> str:
    retrying = Retrying(
        stop=stop_after_attempt(max_retries),
        wait=wait_exponential(multiplier=1, min=1, max=20),
        retry=retry_if_exception_type((requests.ConnectionError, requests.Timeout, _ServerError)),
    )
    try:
        for attempt in retrying:
            with attempt:
                response = session.get(url, timeout=timeout, headers={"User-Agent": USER_AGENT})
                if response.status_code >= 500:
                    raise _ServerError(f"HTTP {response.status_code}")
                response.raise_for_status()
                return response.text
    except RetryError as e:
        raise create_error(ErrorCode.FETCH_FAILED, url=url, reason=repr(e.last_attempt.exception())) from e
    except requests.RequestException as e:
        raise create_error(ErrorCode.FETCH_FAILED, url=url, reason=str(e)) from e
    raise create_error(ErrorCode.FETCH_FAILED, url=url, reason="no response")


def fetch_page_text(
    url: str,
    cache: PageCache,
    allow_network: bool = True,
    session: Optional[requests.Session] = None,
    timeout: float = 30.0,
    max_retries: int = 3,
) -> str:
    """
    Normalized page text, from the cache when present.

    Raises:
        FetchError: page not cached and live fetch disabled, or the download
            failed; the error carries the URL.
    """
    cached = cache.get(url)
    if cached is not None:
        return cached
    if not allow_network:
        raise create_error(ErrorCode.FETCH_OFFLINE, url=url)

    with cache.lock_for(url):
        cached = cache.get(url)
        if cached is not None:
            return cached
        own_session = session is None
        session = session or requests.Session()
        try:
            html = _download(url, session, timeout, max_retries)
        finally:
            if own_session:
                session.close()
        text = html_to_text(html)
        cache.put(url, text)
        logger.debug("Fetched %s (%d chars)", url, len(text))
        return text


def prefetch_pages(
    urls: Iterable[str],
    cache: PageCache,
    allow_network: bool = True,
    workers: int = 4,
    session: Optional[requests.Session] = None,
    timeout: float = 30.0,
) -> Dict[str, FetchError]:
    """Fetch distinct URLs in parallel. Returns the failures by URL."""
    pending = sorted({u for u in urls if u not in cache})
    failures: Dict[str, FetchError] = {}
    if not pending:
        return failures

    def _one(url: str) -> None:
        try:
            fetch_page_text(url, cache, allow_network=allow_network, session=session, timeout=timeout)
        except FetchError as e:
            failures[url] = e

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        list(pool.map(_one, pending))
    if failures:
        logger.warning("%d of %d pages could not be fetched", len(failures), len(pending))
    return failures
