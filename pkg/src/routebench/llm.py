"""Chat-completion access with token accounting, pricing, and record/replay.

Every pipeline test runs against :class:`ReplayClient`, which serves recorded
responses keyed by a request digest and never touches the network.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Protocol, Sequence

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.2
DEFAULT_MAX_TOKENS = 4096
DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_API_KEY_ENV = "OPENAI_API_KEY"


class Role(str, enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class Provider(str, enum.Enum):
    REMOTE = "remote-api"
    REPLAY = "replay"


class LLMError(RuntimeError):
    pass


class TransportError(LLMError):
    """The provider could not be reached or returned an error."""


class AuthError(TransportError):
    """No usable credential; never retried."""


class FixtureError(LLMError):
    """A replay transcript does not match the live request."""


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "role", Role(self.role))
        if not self.content:
            raise ValueError("chat message content must be nonempty")

    def to_dict(self) -> dict:
        return {"role": self.role.value, "content": self.content}

    @classmethod
    def from_dict(cls, data: Mapping[str, str]) -> "ChatMessage":
        return cls(Role(data["role"]), data["content"])


@dataclass(frozen=True)
class ModelConfig:
    model_name: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    provider: Provider = Provider.REMOTE
    transcript: str | None = None
    base_url: str = DEFAULT_BASE_URL
    api_key_env: str = DEFAULT_API_KEY_ENV
    max_retries: int = 4
    backoff_base: float = 1.0
    backoff_cap: float = 30.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "provider", Provider(self.provider))
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.provider is Provider.REPLAY and not self.transcript:
            raise ValueError("the replay provider needs a transcript path")

    def describe(self) -> dict:
        """Run metadata: the fields that change what the model is asked."""
        return {
            "model_name": self.model_name,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "provider": self.provider.value,
        }


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be nonnegative")

    def __add__(self, other: "Usage") -> "Usage":
        return Usage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
        )

    def to_dict(self) -> dict:
        return {"prompt_tokens": self.prompt_tokens, "completion_tokens": self.completion_tokens}

    @classmethod
    def from_dict(cls, data: Mapping[str, int]) -> "Usage":
        return cls(int(data.get("prompt_tokens", 0)), int(data.get("completion_tokens", 0)))


@dataclass(frozen=True)
class PricingTable:
    """Dollars per million prompt and completion tokens, per model."""

    prices: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for model, (p_in, p_out) in self.prices.items():
            if p_in < 0 or p_out < 0:
                raise ValueError(f"negative price for {model}")

    @classmethod
    def load(cls, path: str | Path) -> "PricingTable":
        raw = json.loads(Path(path).read_text())
        return cls({m: (float(v["prompt"]), float(v["completion"])) for m, v in raw.items()})


def cost(usage: Usage, model: str, pricing: PricingTable) -> float | None:
    """Dollar cost of ``usage``; None when the model has no price (unknown, not free)."""
    if model not in pricing.prices:
        return None
    p_in, p_out = pricing.prices[model]
    return usage.prompt_tokens * p_in / 1e6 + usage.completion_tokens * p_out / 1e6


def request_digest(model: str, temperature: float, messages: Sequence[ChatMessage]) -> str:
    payload = json.dumps(
        {
            "model": model,
            "temperature": temperature,
            "messages": [m.to_dict() for m in messages],
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True)
class Completion:
    text: str
    usage: Usage


class ChatClient(Protocol):
    def complete(self, messages: Sequence[ChatMessage], config: ModelConfig) -> Completion: ...


class TokenBucket:
    """Blocks callers so that at most ``rate`` requests start per second on average."""

    def __init__(self, rate: float, burst: int = 1, clock=time.monotonic, sleep=time.sleep):
        self.rate = rate
        self.burst = burst
        self._tokens = float(burst)
        self._last = clock()
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.burst, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate
            self._sleep(wait)


Transport = Callable[[str, Mapping[str, str], Mapping[str, Any], float], Mapping[str, Any]]


def httpx_transport(url: str, headers: Mapping[str, str], payload: Mapping[str, Any], timeout: float):
    import httpx

    try:
        resp = httpx.post(url, headers=dict(headers), json=dict(payload), timeout=timeout)
    except httpx.HTTPError as exc:
        raise TransportError(f"request to {url} failed: {exc}") from exc
    if resp.status_code in (401, 403):
        raise AuthError(f"provider rejected the credential ({resp.status_code})")
    if resp.status_code >= 400:
        raise TransportError(f"provider returned HTTP {resp.status_code}: {resp.text[:500]}")
    return resp.json()


class RemoteClient:
    """OpenAI-compatible chat-completions endpoint with retries and rate limiting."""

    def __init__(
        self,
        transport: Transport | None = None,
        rate_limiter: TokenBucket | None = None,
        env: Mapping[str, str] | None = None,
        sleep: Callable[[float], None] = time.sleep,
        timeout: float = 300.0,
    ):
        self.transport = transport or httpx_transport
        self.rate_limiter = rate_limiter
        self.env = os.environ if env is None else env
        self.sleep = sleep
        self.timeout = timeout

    def check_credential(self, config: ModelConfig) -> str:
        key = self.env.get(config.api_key_env)
        if not key:
            raise AuthError(f"set {config.api_key_env} to call {config.model_name}")
        return key

    def complete(self, messages: Sequence[ChatMessage], config: ModelConfig) -> Completion:
        key = self.check_credential(config)
        payload = {
            "model": config.model_name,
            "temperature": config.temperature,
            "max_tokens": config.max_tokens,
            "messages": [m.to_dict() for m in messages],
        }
        headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        url = config.base_url.rstrip("/") + "/chat/completions"
        attempt = 0
        while True:
            if self.rate_limiter is not None:
                self.rate_limiter.acquire()
            try:
                body = self.transport(url, headers, payload, self.timeout)
                text = body["choices"][0]["message"]["content"] or ""
                usage = Usage.from_dict(body.get("usage") or {})
                return Completion(text, usage)
            except AuthError:
                raise
            except (TransportError, KeyError, IndexError, TypeError) as exc:
                if attempt >= config.max_retries:
                    raise TransportError(f"giving up after {attempt + 1} attempts: {exc}") from exc
                delay = min(config.backoff_cap, config.backoff_base * 2**attempt)
                log.warning("chat request failed (%s); retrying in %.1fs", exc, delay)
                self.sleep(delay)
                attempt += 1


@dataclass(frozen=True)
class TranscriptEntry:
    digest: str
    model: str
    temperature: float
    messages: tuple[ChatMessage, ...]
    response: str
    usage: Usage

    def to_dict(self) -> dict:
        return {
            "digest": self.digest,
            "model": self.model,
            "temperature": self.temperature,
            "messages": [m.to_dict() for m in self.messages],
            "response": self.response,
            "usage": self.usage.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TranscriptEntry":
        return cls(
            digest=data["digest"],
            model=data["model"],
            temperature=float(data["temperature"]),
            messages=tuple(ChatMessage.from_dict(m) for m in data.get("messages", [])),
            response=data["response"],
            usage=Usage.from_dict(data.get("usage", {})),
        )


def read_transcript(path: str | Path) -> list[TranscriptEntry]:
    lines = Path(path).read_text().splitlines()
    return [TranscriptEntry.from_dict(json.loads(line)) for line in lines if line.strip()]


def write_transcript(entries: Iterable[TranscriptEntry], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for e in entries:
            fh.write(json.dumps(e.to_dict(), sort_keys=True) + "\n")
    return path


class ReplayClient:
    """Serves a transcript's responses in order; any digest drift is an error."""

    def __init__(self, entries: Sequence[TranscriptEntry] | str | Path):
        if isinstance(entries, (str, Path)):
            entries = read_transcript(entries)
        self.entries = list(entries)
        self.position = 0
        self._lock = threading.Lock()

    @classmethod
    def for_config(cls, config: ModelConfig) -> "ReplayClient":
        return cls(config.transcript)

    @property
    def remaining(self) -> int:
        return len(self.entries) - self.position

    def complete(self, messages: Sequence[ChatMessage], config: ModelConfig) -> Completion:
        live = request_digest(config.model_name, config.temperature, messages)
        with self._lock:
            if self.position >= len(self.entries):
                raise FixtureError(f"transcript exhausted after {len(self.entries)} call(s); request {live}")
            entry = self.entries[self.position]
            if entry.messages:
                stored = request_digest(entry.model, entry.temperature, entry.messages)
                if stored != entry.digest:
                    raise FixtureError(
                        f"transcript entry {self.position} was altered: "
                        f"recorded digest {entry.digest}, content digest {stored}"
                    )
            if entry.digest != live:
                raise FixtureError(
                    f"replay mismatch at entry {self.position}: recorded {entry.digest}, live {live}"
                )
            self.position += 1
        return Completion(entry.response, entry.usage)


class RecordingClient:
    """Wraps a live client and keeps every exchange for :func:`record_transcript`."""

    def __init__(self, inner: ChatClient):
        self.inner = inner
        self.entries: list[TranscriptEntry] = []
        self._lock = threading.Lock()

    def complete(self, messages: Sequence[ChatMessage], config: ModelConfig) -> Completion:
        result = self.inner.complete(messages, config)
        entry = TranscriptEntry(
            digest=request_digest(config.model_name, config.temperature, messages),
            model=config.model_name,
            temperature=config.temperature,
            messages=tuple(messages),
            response=result.text,
            usage=result.usage,
        )
        with self._lock:
            self.entries.append(entry)
        return result


def record_transcript(session: RecordingClient, path: str | Path) -> Path:
    return write_transcript(session.entries, path)


class ScriptedClient:
    """Returns canned responses in order; used to author replay fixtures offline."""

    def __init__(self, responses: Iterable[str | tuple[str, Usage]]):
        self.responses = list(responses)
        self.calls = 0

    def complete(self, messages: Sequence[ChatMessage], config: ModelConfig) -> Completion:
        if self.calls >= len(self.responses):
            raise FixtureError("scripted client ran out of responses")
        item = self.responses[self.calls]
        self.calls += 1
        if isinstance(item, tuple):
            return Completion(*item)
        words = sum(len(m.content.split()) for m in messages)
        return Completion(item, Usage(words, len(item.split())))


def make_client(config: ModelConfig, transport: Transport | None = None) -> ChatClient:
    if config.provider is Provider.REPLAY:
        return ReplayClient.for_config(config)
    return RemoteClient(transport=transport)
