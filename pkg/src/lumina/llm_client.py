"""Minimal chat-completion client: one wire shape, retries, cassettes.

Targets any endpoint speaking the common messages-array protocol
(POST /chat/completions with model/messages/temperature/max_tokens).
Cassettes store request-fingerprint -> response pairs as plain JSON lines,
so replay mode runs the whole harness with networking disabled.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

from .core import LuminaError

VALID_ROLES = ("system", "user", "assistant")
RETRYABLE_STATUS = (429, 500, 502, 503, 504)


class ClientError(LuminaError):
    """Base class for transport and cassette errors."""


class TransportTimeout(ClientError):
    pass


class HTTPStatusError(ClientError):
    def __init__(self, code: int, detail: str = ""):
        self.code = code
        super().__init__(f"HTTP {code}{': ' + detail if detail else ''}")


class MalformedResponse(ClientError):
    pass


class CassetteMiss(ClientError):
    def __init__(self, fp: str):
        self.fingerprint = fp
        super().__init__(f"no cassette entry for request {fp}")


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.7
    max_tokens: int = 512

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        for role, _ in self.messages:
            if role not in VALID_ROLES:
                raise ValueError(f"invalid role {role!r}")

    @classmethod
    def from_message_dicts(
        cls,
        model: str,
        messages: Sequence[Mapping[str, str]],
        temperature: float = 0.7,
        max_tokens: int = 512,
    ) -> "ChatRequest":
        return cls(
            model=model,
            messages=tuple((m["role"], m["content"]) for m in messages),
            temperature=temperature,
            max_tokens=max_tokens,
        )

    def message_dicts(self) -> list[dict[str, str]]:
        return [{"role": role, "content": content} for role, content in self.messages]

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "messages": self.message_dicts(),
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ChatRequest":
        return cls.from_message_dicts(
            model=data["model"],
            messages=data["messages"],
            temperature=data["temperature"],
            max_tokens=data["max_tokens"],
        )


def fingerprint(req: ChatRequest) -> str:
    """Stable across runs and platforms; sensitive to every field."""
    canonical = json.dumps(req.to_dict(), separators=(",", ":"), ensure_ascii=False, sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


class CassetteMode(str, enum.Enum):
    RECORD = "record"
    REPLAY = "replay"
    PASSTHROUGH = "passthrough"


class Cassette:
    """Request/response store as diff-friendly JSON lines."""

    def __init__(self, path: str, mode: CassetteMode = CassetteMode.REPLAY):
        self.path = path
        self.mode = CassetteMode(mode)
        self._entries: dict[str, str] = {}
        self._lock = threading.Lock()
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    self._entries[record["fingerprint"]] = record["response"]

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, fp: str) -> str | None:
        return self._entries.get(fp)

    def store(self, fp: str, req: ChatRequest, response: str) -> None:
        with self._lock:
            self._entries[fp] = response
            record = {"fingerprint": fp, "request": req.to_dict(), "response": response}
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, separators=(",", ":"), ensure_ascii=False) + "\n")


Transport = Callable[[ChatRequest], str]


class HttpTransport:
    """POSTs the request to ``<endpoint>/chat/completions``."""

    def __init__(self, endpoint: str, api_key: str | None = None, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout

    def __call__(self, req: ChatRequest) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = requests.post(
                f"{self.endpoint}/chat/completions",
                json=req.to_dict(),
                headers=headers,
                timeout=self.timeout,
            )
        except requests.Timeout as exc:
            raise TransportTimeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise ClientError(str(exc)) from exc
        if response.status_code != 200:
            raise HTTPStatusError(response.status_code, response.text[:200])
        try:
            data = response.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"unexpected response shape: {exc}") from exc
        if not isinstance(content, str):
            raise MalformedResponse("message content is not a string")
        return content


def chat_complete(
    req: ChatRequest,
    transport: Transport | None,
    cassette: Cassette | None = None,
    max_attempts: int = 3,
    backoff_base: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Resolve a request through the cassette and/or transport with retries.

    Replay mode never touches the network; record mode performs the call
    and stores the response.
    """
    fp = fingerprint(req)
    if cassette is not None and cassette.mode is CassetteMode.REPLAY:
        hit = cassette.lookup(fp)
        if hit is None:
            raise CassetteMiss(fp)
        return hit

    if transport is None:
        raise ClientError("no transport configured and cassette is not in replay mode")

    last_error: ClientError | None = None
    response: str | None = None
    for attempt in range(max_attempts):
        try:
            response = transport(req)
            break
        except TransportTimeout as err:
            last_error = err
        except HTTPStatusError as err:
            if err.code not in RETRYABLE_STATUS:
                raise
            last_error = err
        if attempt < max_attempts - 1:
            sleep(backoff_base * (2**attempt))
    if response is None:
        assert last_error is not None
        raise last_error

    if cassette is not None and cassette.mode is CassetteMode.RECORD:
        cassette.store(fp, req, response)
    return response


class ChatClient:
    """Shareable across concurrent episodes; a semaphore bounds in-flight
    requests. Requests are idempotent reads, so retries are safe."""

    def __init__(
        self,
        transport: Transport | None = None,
        cassette: Cassette | None = None,
        max_concurrency: int = 8,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.transport = transport
        self.cassette = cassette
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.sleep = sleep
        self._semaphore = threading.Semaphore(max_concurrency)

    def complete(self, req: ChatRequest) -> str:
        with self._semaphore:
            return chat_complete(
                req,
                self.transport,
                self.cassette,
                max_attempts=self.max_attempts,
                backoff_base=self.backoff_base,
                sleep=self.sleep,
            )
