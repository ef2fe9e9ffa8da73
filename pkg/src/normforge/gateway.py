"""Single boundary to chat-completion providers.

Responsibilities:
- render prompt templates and enforce the temperature policy
  (generation 0.7, evaluation 0) before any dispatch;
- compute a stable request digest over (template_id, canonicalized bindings,
  temperature, model_tag, seed_tag);
- record/replay: an append-only JSONL cache keyed by digest makes the whole
  pipeline a pure function of (inputs, cache) in replay mode;
- transport retries with exponential backoff live here, not in callers.

Parse-level retries also live here (complete_parsed): attempt k > 1 re-issues
the request with seed_tag suffixed "~retry{k}" so fixtures can script a
malformed first completion followed by a good one.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Protocol, TypeVar

from . import templates
from .errors import (
    CacheMissError,
    ForgeError,
    GatewayError,
    ParseError,
    TemperaturePolicyError,
    TransportError,
)

MODES = ("live", "record", "replay")

GENERATION_TEMPERATURE = 0.7
EVALUATION_TEMPERATURE = 0.0


class TemperatureAdvisory(UserWarning):
    """Generation request dispatched off the 0.7 default (operator override)."""


def canonical_bindings(bindings: dict[str, str]) -> dict[str, str]:
    return {key: str(bindings[key]) for key in sorted(bindings)}


def compute_digest(
    template_id: str,
    bindings: dict[str, str],
    temperature: float,
    model_tag: str,
    seed_tag: str,
) -> str:
    payload = {
        "bindings": canonical_bindings(bindings),
        "model_tag": model_tag,
        "seed_tag": seed_tag,
        "temperature": temperature,
        "template_id": template_id,
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionRequest:
    template_id: str
    bindings: dict[str, str]
    temperature: float
    model_tag: str
    seed_tag: str = ""

    @property
    def digest(self) -> str:
        return compute_digest(
            self.template_id, self.bindings, self.temperature, self.model_tag, self.seed_tag
        )

    def snapshot(self) -> dict:
        return {
            "template_id": self.template_id,
            "bindings": canonical_bindings(self.bindings),
            "temperature": self.temperature,
            "model_tag": self.model_tag,
            "seed_tag": self.seed_tag,
        }


def generation_request(
    template_id: str,
    bindings: dict[str, str],
    model_tag: str,
    seed_tag: str = "",
    temperature: float = GENERATION_TEMPERATURE,
) -> CompletionRequest:
    return CompletionRequest(template_id, dict(bindings), temperature, model_tag, seed_tag)


def evaluation_request(
    template_id: str,
    bindings: dict[str, str],
    model_tag: str,
    seed_tag: str = "",
    temperature: float = EVALUATION_TEMPERATURE,
) -> CompletionRequest:
    return CompletionRequest(template_id, dict(bindings), temperature, model_tag, seed_tag)


@dataclass
class CompletionRecord:
    digest: str
    request: dict
    text: str
    latency_ms: float = 0.0
    provider: dict = field(default_factory=dict)

    def to_line(self) -> str:
        return json.dumps(
            {
                "digest": self.digest,
                "request": self.request,
                "response": self.text,
                "latency_ms": self.latency_ms,
                "provider": self.provider,
            },
            sort_keys=True,
            ensure_ascii=False,
        )

    @classmethod
    def from_line(cls, line: str) -> "CompletionRecord":
        rec = json.loads(line)
        return cls(
            digest=rec["digest"],
            request=rec["request"],
            text=rec["response"],
            latency_ms=rec.get("latency_ms", 0.0),
            provider=rec.get("provider", {}),
        )


class CompletionCache:
    """Append-only digest-keyed JSONL cache, one record per line.

    Concurrent reads are lock-free once loaded; appends are serialized
    (single-writer discipline). Appending an already-present digest is a
    no-op, which makes record mode resumable.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, CompletionRecord] = {}
        self._order: list[str] = []
        self.load_issues: list[str] = []
        if self.path.exists():
            with self.path.open(encoding="utf-8") as handle:
                for line_no, line in enumerate(handle, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        record = CompletionRecord.from_line(line)
                    except (json.JSONDecodeError, KeyError) as exc:
                        self.load_issues.append(f"line {line_no}: {exc}")
                        continue
                    if record.digest not in self._records:
                        self._records[record.digest] = record
                        self._order.append(record.digest)

    def __contains__(self, digest: str) -> bool:
        return digest in self._records

    def __len__(self) -> int:
        return len(self._records)

    def get(self, digest: str) -> CompletionRecord | None:
        return self._records.get(digest)

    def append(self, record: CompletionRecord) -> None:
        with self._lock:
            if record.digest in self._records:
                return
            self._records[record.digest] = record
            self._order.append(record.digest)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(record.to_line() + "\n")

    def records(self) -> list[CompletionRecord]:
        return [self._records[digest] for digest in self._order]

    def verify(self) -> list[str]:
        """Recompute digests from stored request snapshots; report mismatches."""
        issues = list(self.load_issues)
        for record in self.records():
            req = record.request
            try:
                expected = compute_digest(
                    req["template_id"],
                    req["bindings"],
                    req["temperature"],
                    req["model_tag"],
                    req.get("seed_tag", ""),
                )
            except (KeyError, TypeError) as exc:
                issues.append(f"{record.digest}: unreadable request snapshot ({exc})")
                continue
            if expected != record.digest:
                issues.append(f"{record.digest}: digest mismatch (recomputed {expected})")
        return issues


class Provider(Protocol):
    def complete_text(self, prompt: str, request: CompletionRequest) -> tuple[str, dict]:
        """Return (completion text, provider metadata)."""


class HttpProvider:
    """OpenAI-compatible chat-completion endpoint over HTTPS.

    Configuration via env: FORGE_PROVIDER_BASE_URL, FORGE_PROVIDER_API_KEY.
    Transient transport failures are retried 3 times with exponential backoff.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
        attempts: int = 3,
        backoff_s: float = 0.5,
        min_interval_s: float = 0.0,
    ):
        self.base_url = (base_url or os.environ.get("FORGE_PROVIDER_BASE_URL", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("FORGE_PROVIDER_API_KEY", "")
        self.timeout = timeout
        self.attempts = attempts
        self.backoff_s = backoff_s
        self.min_interval_s = min_interval_s
        self._last_dispatch = 0.0
        self._throttle = threading.Lock()
        if not self.base_url:
            raise GatewayError("provider base URL not configured (FORGE_PROVIDER_BASE_URL)")

    def _respect_rate_limit(self) -> None:
        if self.min_interval_s <= 0:
            return
        with self._throttle:
            wait = self._last_dispatch + self.min_interval_s - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_dispatch = time.monotonic()

    def complete_text(self, prompt: str, request: CompletionRequest) -> tuple[str, dict]:
        import httpx

        body = {
            "model": request.model_tag,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": request.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.attempts):
            self._respect_rate_limit()
            try:
                response = httpx.post(
                    f"{self.base_url}/chat/completions",
                    json=body,
                    headers=headers,
                    timeout=self.timeout,
                )
                if response.status_code >= 500:
                    raise TransportError(f"provider returned {response.status_code}")
                response.raise_for_status()
                data = response.json()
                text = data["choices"][0]["message"]["content"]
                meta = {"model": data.get("model", request.model_tag), "usage": data.get("usage", {})}
                return text, meta
            except (httpx.HTTPError, TransportError, KeyError) as exc:
                last_error = exc
                if attempt + 1 < self.attempts:
                    time.sleep(self.backoff_s * (2**attempt))
        raise TransportError(f"provider unreachable after {self.attempts} attempts: {last_error}")


class Gateway:
    """Mode-switched completion dispatcher with policy enforcement."""

    def __init__(
        self,
        mode: str = "replay",
        cache: CompletionCache | None = None,
        provider: Provider | None = None,
    ):
        if mode not in MODES:
            raise GatewayError(f"unknown gateway mode: {mode!r}")
        if mode in ("record", "replay") and cache is None:
            raise GatewayError(f"{mode} mode requires a cache")
        if mode in ("live", "record") and provider is None:
            raise GatewayError(f"{mode} mode requires a provider")
        self.mode = mode
        self.cache = cache
        self.provider = provider
        self.network_calls = 0

    def render_prompt(self, template_id: str, bindings: dict[str, str]) -> str:
        return templates.render(template_id, bindings)

    def _check_policy(self, request: CompletionRequest) -> None:
        template = templates.get_template(request.template_id)
        if template.kind == templates.EVALUATION:
            if request.temperature != EVALUATION_TEMPERATURE:
                raise TemperaturePolicyError(
                    f"evaluation template {request.template_id!r} requires temperature 0, "
                    f"got {request.temperature}"
                )
        elif request.temperature != GENERATION_TEMPERATURE:
            warnings.warn(
                f"generation template {request.template_id!r} dispatched at "
                f"temperature {request.temperature} (policy default is "
                f"{GENERATION_TEMPERATURE})",
                TemperatureAdvisory,
                stacklevel=3,
            )

    def complete(self, request: CompletionRequest) -> CompletionRecord:
        self._check_policy(request)
        digest = request.digest
        if self.mode in ("record", "replay") and self.cache is not None:
            cached = self.cache.get(digest)
            if cached is not None:
                return cached
        if self.mode == "replay":
            raise CacheMissError(digest)

        prompt = self.render_prompt(request.template_id, request.bindings)
        started = time.perf_counter()
        text, meta = self.provider.complete_text(prompt, request)  # type: ignore[union-attr]
        self.network_calls += 1
        record = CompletionRecord(
            digest=digest,
            request=request.snapshot(),
            text=text,
            latency_ms=(time.perf_counter() - started) * 1000.0,
            provider=meta,
        )
        if self.mode == "record" and self.cache is not None:
            self.cache.append(record)
        return record


T = TypeVar("T")


def complete_parsed(
    gateway: Gateway,
    request: CompletionRequest,
    parse: Callable[[str], T],
    attempts: int = 3,
) -> T:
    """Run a request and parse it, re-prompting on malformed completions.

    Retries use distinct seed_tags ("~retry2", "~retry3") so record/replay
    fixtures can hold per-attempt completions. In replay mode a missing retry
    entry surfaces the previous parse error rather than a cache miss.
    """
    last_error: ForgeError | None = None
    for attempt in range(1, attempts + 1):
        if attempt == 1:
            attempt_request = request
        else:
            attempt_request = replace(request, seed_tag=f"{request.seed_tag}~retry{attempt}")
        try:
            record = gateway.complete(attempt_request)
        except CacheMissError:
            if last_error is not None:
                raise last_error
            raise
        try:
            return parse(record.text)
        except ForgeError as exc:
            last_error = exc
    assert last_error is not None
    raise last_error


def parse_first_score(text: str, low: int = 1, high: int = 5) -> int:
    """Parse a single integer rubric score ("Score: 4" or a bare integer)."""
    import re

    match = re.search(r"(?:^|\b)Score:\s*([0-9]+)", text, flags=re.MULTILINE)
    if match is None:
        match = re.search(r"^\s*([0-9]+)\s*$", text, flags=re.MULTILINE)
    if match is None:
        raise ParseError(f"no integer score found in completion: {text[:80]!r}")
    value = int(match.group(1))
    if not low <= value <= high:
        raise ParseError(f"score {value} outside [{low},{high}]")
    return value
