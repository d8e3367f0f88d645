"""Subtitle candidate providers and the search for a synchronized pair."""

from __future__ import annotations

import logging
import os
import re
import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol
from urllib.parse import urlsplit

import httpx

from .catalog import MovieRecord
from .srt import SubtitleDocument, SubtitleEncodingError, parse_srt, shift_document
from .sync import SyncPolicy, SyncVerdict, check_sync, recover_shift

log = logging.getLogger(__name__)

CREDENTIALS_ENV = "SUBCORPUS_API_KEY"


class ProviderError(RuntimeError):
    """A candidate could not be listed or fetched."""


@dataclass(frozen=True)
class SubtitleCandidate:
    provider_id: str
    video_id: str
    language: str
    release_label: str = ""
    byte_size: int = 0


class SubtitleProvider(Protocol):
    def list_candidates(self, video: MovieRecord, language: str) -> list[SubtitleCandidate]: ...

    def fetch(self, candidate: SubtitleCandidate) -> bytes: ...


class LocalProvider:
    """Reads candidates from ``<root>/<video_id>/<language>/*.srt``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def list_candidates(self, video, language):
        folder = self.root / video.id / language
        if not folder.is_dir():
            return []
        return [
            SubtitleCandidate(
                provider_id=f"{video.id}/{language}/{p.name}",
                video_id=video.id,
                language=language,
                release_label=p.stem,
                byte_size=p.stat().st_size,
            )
            for p in sorted(folder.glob("*.srt"), key=lambda p: p.name)
        ]

    def fetch(self, candidate):
        return (self.root / candidate.provider_id).read_bytes()


def local_provider(root: str | Path) -> LocalProvider:
    return LocalProvider(root)


class TokenBucket:
    """Allows ``rate`` acquisitions per ``per`` seconds with bursts up to ``capacity``."""

    def __init__(self, rate: float, per: float = 60.0, capacity: float | None = None,
                 clock: Callable[[], float] = time.monotonic, sleep: Callable[[float], None] = time.sleep):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.fill_rate = rate / per
        self.capacity = capacity if capacity is not None else max(1.0, rate / per)
        self.tokens = self.capacity
        self.clock = clock
        self.sleep = sleep
        self.updated = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            while True:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.fill_rate)
                self.updated = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                self.sleep((1 - self.tokens) / self.fill_rate)


def _safe_name(value: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", value)


class RemoteProvider:
    """Generic REST subtitle source.

    ``GET <base>/search?title=&year=&lang=`` returns a JSON list of
    ``{id, release, size}``; ``GET <base>/download/<id>`` returns the bytes.
    Downloads are cached under ``<cache_root>/<name>/<id>.srt``.
    """

    retry_statuses = frozenset({500, 502, 503, 504})

    def __init__(
        self,
        base_url: str,
        credentials: str | None = None,
        rate: float = 40,
        cache_root: str | Path | None = None,
        name: str | None = None,
        attempts: int = 3,
        backoff: float = 1.0,
        max_rate_limit_waits: int = 5,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ):
        parts = urlsplit(base_url)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise ValueError(f"malformed base_url {base_url!r}")
        self.base_url = base_url.rstrip("/")
        self.name = name or _safe_name(parts.netloc)
        if credentials is None:
            credentials = os.environ.get(CREDENTIALS_ENV)
        headers = {"Authorization": f"Bearer {credentials}"} if credentials else {}
        self.client = client or httpx.Client(timeout=30.0)
        self.client.headers.update(headers)
        self.cache_dir = Path(cache_root) / self.name if cache_root is not None else None
        self.attempts = attempts
        self.backoff = backoff
        self.max_rate_limit_waits = max_rate_limit_waits
        self.sleep = sleep
        self.bucket = TokenBucket(rate, clock=clock, sleep=sleep)
        self.network_calls = 0

    def _get(self, url: str, params: dict | None = None) -> httpx.Response:
        failures = 0
        waits = 0
        while True:
            self.bucket.acquire()
            self.network_calls += 1
            try:
                response = self.client.get(url, params=params)
            except httpx.TransportError as exc:
                failures += 1
                if failures >= self.attempts:
                    raise ProviderError(f"GET {url} failed: {exc}") from exc
                self.sleep(self.backoff * 2 ** (failures - 1))
                continue
            if response.status_code == 429:
                waits += 1
                if waits > self.max_rate_limit_waits:
                    raise ProviderError(f"GET {url} still rate limited after {waits - 1} waits")
                self.sleep(self._retry_after(response, waits))
                continue
            if response.status_code in self.retry_statuses:
                failures += 1
                if failures >= self.attempts:
                    raise ProviderError(f"GET {url} failed with HTTP {response.status_code}")
                self.sleep(self.backoff * 2 ** (failures - 1))
                continue
            if response.status_code >= 400:
                raise ProviderError(f"GET {url} failed with HTTP {response.status_code}")
            return response

    def _retry_after(self, response: httpx.Response, waits: int) -> float:
        value = response.headers.get("Retry-After")
        if value is not None:
            try:
                return max(0.0, float(value))
            except ValueError:
                pass
        return self.backoff * 2 ** (waits - 1)

    def list_candidates(self, video, language):
        params = {"title": video.title, "lang": language}
        if video.year is not None:
            params["year"] = video.year
        try:
            body = self._get(f"{self.base_url}/search", params).json()
        except ValueError as exc:
            raise ProviderError(f"search response is not JSON: {exc}") from exc
        return [
            SubtitleCandidate(
                provider_id=str(item["id"]),
                video_id=video.id,
                language=language,
                release_label=str(item.get("release", "")),
                byte_size=int(item.get("size", 0)),
            )
            for item in body
        ]

    def _cache_path(self, candidate):
        if self.cache_dir is None:
            return None
        return self.cache_dir / f"{_safe_name(candidate.provider_id)}.srt"

    def fetch(self, candidate):
        path = self._cache_path(candidate)
        if path is not None and path.exists():
            return path.read_bytes()
        data = self._get(f"{self.base_url}/download/{candidate.provider_id}").content
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".dl-")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                os.replace(tmp, path)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
        return data


def remote_provider(base_url: str, credentials: str | None = None, rate: float = 40, **kwargs) -> RemoteProvider:
    return RemoteProvider(base_url, credentials, rate, **kwargs)


@dataclass(frozen=True)
class SyncedPair:
    source: SubtitleDocument
    target: SubtitleDocument
    verdict: SyncVerdict
    source_candidate: SubtitleCandidate
    target_candidate: SubtitleCandidate


def find_synchronized_pair(
    video: MovieRecord,
    src_lang: str,
    dst_lang: str,
    provider: SubtitleProvider,
    policy: SyncPolicy = SyncPolicy(),
    budget: int = 16,
    shifting: bool = True,
    fallback_encodings: tuple[str, ...] = (),
) -> SyncedPair | None:
    """Try candidate pairs in (source rank, target rank) order until one synchronizes.

    The target side is shifted onto the source timeline when ``shifting`` is on
    and the exact check fails. At most ``budget`` combinations are visited.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    sources = provider.list_candidates(video, src_lang)
    targets = provider.list_candidates(video, dst_lang)
    parsed: dict[tuple[str, str], SubtitleDocument | None] = {}

    def load(candidate):
        key = (candidate.language, candidate.provider_id)
        if key not in parsed:
            doc = None
            try:
                data = provider.fetch(candidate)
                doc, diagnostics = parse_srt(data, candidate.language, video.id,
                                             fallback_encodings=fallback_encodings)
                if diagnostics:
                    log.debug("%s: %d parse diagnostics", candidate.provider_id, len(diagnostics))
                if not doc.cues:
                    log.warning("%s: no cues parsed, skipping", candidate.provider_id)
                    doc = None
            except (ProviderError, SubtitleEncodingError, OSError) as exc:
                log.warning("%s: skipped (%s)", candidate.provider_id, exc)
            parsed[key] = doc
        return parsed[key]

    visited = 0
    for source_candidate in sources:
        for target_candidate in targets:
            if visited >= budget:
                return None
            visited += 1
            a = load(source_candidate)
            if a is None:
                break
            b = load(target_candidate)
            if b is None:
                continue
            verdict = check_sync(a, b, policy)
            if not verdict.synchronized and shifting and policy.max_shift_ms > 0:
                delta, verdict = recover_shift(a, b, policy)
                if verdict.synchronized:
                    b, _ = shift_document(b, delta)
            if verdict.synchronized:
                return SyncedPair(a, b, verdict, source_candidate, target_candidate)
    return None
