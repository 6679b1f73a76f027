"""Chat-completion client with a content-addressed response cache.

The wire shape is the common one: POST ``{"model", "messages", "temperature",
"max_tokens"}`` and read ``choices[0].message.content``. Every completion is
stored under a :class:`CacheKey`; with ``offline=True`` a cache miss is an
error instead of a request, which makes recorded runs replayable.
"""
from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import tarfile
import tempfile
import threading
import time
import unicodedata
from collections import deque
from concurrent.futures import Future
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import httpx

log = logging.getLogger(__name__)


class LLMError(RuntimeError):
    """Base class for LLM client failures."""


class LLMConfigError(LLMError):
    """Bad configuration or a non-retryable 4xx answer."""


class LLMTransportError(LLMError):
    """Retries exhausted, or the endpoint returned something unreadable."""


class OfflineCacheMiss(LLMError):
    def __init__(self, key: "CacheKey"):
        super().__init__(f"offline cache miss: {key.digest()}")
        self.key = key


@dataclass(frozen=True)
class LLMConfig:
    endpoint_url: str | None = None
    model_name: str = "gpt-4o-mini"
    temperature: float = 0.1
    max_tokens: int = 512
    api_key_env_var: str = "OPENAI_API_KEY"
    cache_dir: str | None = None
    max_retries: int = 3
    requests_per_minute: int | None = None
    timeout: float = 60.0
    backoff_base: float = 1.0
    offline: bool = False

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.requests_per_minute is not None and self.requests_per_minute < 1:
            raise ValueError("requests_per_minute must be >= 1")

    def to_json(self) -> dict:
        return asdict(self)


def canonical_prompt(prompt: str) -> str:
    return unicodedata.normalize("NFC", prompt.replace("\r\n", "\n"))


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(canonical_prompt(prompt).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CacheKey:
    model_name: str
    prompt_hash: str
    temperature: float
    iteration_index: int

    @classmethod
    def for_prompt(cls, config: LLMConfig, prompt: str, iteration: int) -> "CacheKey":
        return cls(config.model_name, prompt_hash(prompt), float(config.temperature), int(iteration))

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ResponseCache:
    """One JSON record per key; in memory only when ``directory`` is None."""

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory is not None else None
        self._memory: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, digest: str) -> Path:
        assert self.directory is not None
        return self.directory / f"{digest}.json"

    def get(self, key: CacheKey) -> str | None:
        digest = key.digest()
        if self.directory is None:
            rec = self._memory.get(digest)
            return None if rec is None else rec["response"]
        path = self._path(digest)
        try:
            rec = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except (json.JSONDecodeError, UnicodeDecodeError):
            log.warning("ignoring corrupt cache record %s", path)
            return None
        return rec.get("response")

    def put(self, key: CacheKey, prompt: str, response: str) -> None:
        record = {
            "key": asdict(key),
            "prompt": prompt,
            "response": response,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "model": key.model_name,
        }
        digest = key.digest()
        if self.directory is None:
            with self._lock:
                self._memory[digest] = record
            return
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(record, fh, ensure_ascii=False, indent=1)
            os.replace(tmp, self._path(digest))
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise

    def records(self) -> list[dict]:
        if self.directory is None:
            return [self._memory[k] for k in sorted(self._memory)]
        out = []
        for path in sorted(self.directory.glob("*.json")):
            if path.name.startswith(".tmp-"):
                continue
            try:
                out.append(json.loads(path.read_text(encoding="utf-8")))
            except (json.JSONDecodeError, UnicodeDecodeError):
                log.warning("ignoring corrupt cache record %s", path)
        return out

    def purge(self) -> int:
        if self.directory is None:
            n = len(self._memory)
            self._memory.clear()
            return n
        paths = list(self.directory.glob("*.json"))
        for path in paths:
            path.unlink(missing_ok=True)
        return len(paths)

    def export(self, archive: str | Path) -> int:
        """Write every record into a ``.tar.gz`` archive."""
        records = self.records()
        with tarfile.open(archive, "w:gz") as tar:
            for rec in records:
                data = json.dumps(rec, ensure_ascii=False, indent=1).encode("utf-8")
                info = tarfile.TarInfo(f"{CacheKey(**rec['key']).digest()}.json")
                info.size = len(data)
                info.mtime = 0
                tar.addfile(info, io.BytesIO(data))
        return len(records)

    def import_archive(self, archive: str | Path) -> int:
        n = 0
        with tarfile.open(archive, "r:gz") as tar:
            for member in tar.getmembers():
                name = Path(member.name).name
                if not member.isfile() or not name.endswith(".json") or name != member.name:
                    continue
                fh = tar.extractfile(member)
                if fh is None:
                    continue
                rec = json.loads(fh.read().decode("utf-8"))
                key = CacheKey(**rec["key"])
                self.put(key, rec["prompt"], rec["response"])
                n += 1
        return n


class SlidingWindowRateLimiter:
    """At most ``limit`` acquisitions in any ``window``-second interval."""

    def __init__(
        self, limit: int | None, window: float = 60.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.limit = limit
        self.window = window
        self.clock = clock
        self.sleep = sleep
        self._stamps: deque = deque()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        """Block until a slot is free; returns the grant time."""
        if self.limit is None:
            return self.clock()
        while True:
            with self._lock:
                now = self.clock()
                while self._stamps and self._stamps[0] <= now - self.window:
                    self._stamps.popleft()
                if len(self._stamps) < self.limit:
                    self._stamps.append(now)
                    return now
                wait = self._stamps[0] + self.window - now
            self.sleep(max(wait, 1e-6))


_TRANSIENT = {408, 409, 425, 429}


class LLMClient:
    def __init__(
        self, config: LLMConfig, *, transport: httpx.BaseTransport | None = None,
        cache: ResponseCache | None = None,
        rate_limiter: SlidingWindowRateLimiter | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.cache = cache if cache is not None else ResponseCache(config.cache_dir)
        self.rate_limiter = rate_limiter or SlidingWindowRateLimiter(config.requests_per_minute)
        self._sleep = sleep
        self._transport = transport
        self._http: httpx.Client | None = None
        self._inflight: dict[str, Future] = {}
        self._lock = threading.Lock()
        self.network_calls = 0
        self.missing_keys: list[CacheKey] = []

    def _client(self) -> httpx.Client:
        with self._lock:
            if self._http is None:
                self._http = httpx.Client(transport=self._transport, timeout=self.config.timeout)
            return self._http

    def close(self) -> None:
        if self._http is not None:
            self._http.close()
            self._http = None

    def __enter__(self) -> "LLMClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def chat(self, prompt: str, iteration: int = 0) -> str:
        key = CacheKey.for_prompt(self.config, prompt, iteration)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        if self.config.offline:
            with self._lock:
                if key not in self.missing_keys:
                    self.missing_keys.append(key)
            raise OfflineCacheMiss(key)
        digest = key.digest()
        with self._lock:
            fut = self._inflight.get(digest)
            owner = fut is None
            if owner:
                fut = Future()
                self._inflight[digest] = fut
        if not owner:
            return fut.result()
        try:
            text = self._request(prompt)
            self.cache.put(key, prompt, text)
            fut.set_result(text)
            return text
        except BaseException as exc:
            fut.set_exception(exc)
            raise
        finally:
            with self._lock:
                self._inflight.pop(digest, None)

    def _request(self, prompt: str) -> str:
        cfg = self.config
        if not cfg.endpoint_url:
            raise LLMConfigError("no LLM endpoint configured")
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(cfg.api_key_env_var) if cfg.api_key_env_var else None
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_tokens,
        }
        last: str = ""
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                self._sleep(cfg.backoff_base * 2 ** (attempt - 1))
            self.rate_limiter.acquire()
            with self._lock:
                self.network_calls += 1
            try:
                resp = self._client().post(cfg.endpoint_url, json=body, headers=headers)
            except httpx.TransportError as exc:
                last = f"{type(exc).__name__}: {exc}"
                log.info("transport error (attempt %d): %s", attempt + 1, last)
                continue
            if resp.status_code >= 500 or resp.status_code in _TRANSIENT:
                last = f"HTTP {resp.status_code}"
                log.info("transient %s (attempt %d)", last, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise LLMConfigError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise LLMTransportError(f"malformed completion body: {exc!r}") from exc
            if not isinstance(content, str):
                raise LLMTransportError("completion content is not text")
            return content
        raise LLMTransportError(f"retries exhausted after {cfg.max_retries + 1} attempts ({last})")
