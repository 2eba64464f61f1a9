"""External language-model client seam: one protocol, an HTTP binding, a mock.

The planner only ever sees ``complete(system, user, max_tokens) -> str``.
Endpoint and key come from configuration or the CLUTTERNAV_LLM_* environment
variables, never from code. Tests script the mock; no network is required
anywhere in the test suite.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Protocol, Sequence

DEFAULT_MAX_TOKENS = 64
DEFAULT_TIMEOUT_S = 30.0


class TransportError(RuntimeError):
    """The request never produced a usable response (network, HTTP, schema)."""


class LLMClient(Protocol):
    def complete(self, system: str, user: str, max_tokens: int = DEFAULT_MAX_TOKENS) -> str:
        ...


@dataclass
class MockLLMClient:
    """Scripted client for tests: replays canned replies in order.

    ``fail_first`` makes the first N calls raise TransportError so retry and
    fallback paths can be exercised. The last reply repeats once the script
    is exhausted.
    """

    replies: Sequence[str] = ("GIVEUP",)
    fail_first: int = 0
    calls: list[tuple[str, str]] = field(default_factory=list)
    _served: int = 0

    def complete(self, system: str, user: str, max_tokens: int = DEFAULT_MAX_TOKENS) -> str:
        self.calls.append((system, user))
        if len(self.calls) <= self.fail_first:
            raise TransportError("scripted transport failure")
        if not self.replies:
            raise TransportError("mock has no replies")
        reply = self.replies[min(self._served, len(self.replies) - 1)]
        self._served += 1
        return reply


class HTTPLLMClient:
    """Minimal chat-completions binding for OpenAI-compatible endpoints."""

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
    ):
        self.endpoint = endpoint or os.environ.get("CLUTTERNAV_LLM_ENDPOINT", "")
        self.api_key = api_key or os.environ.get("CLUTTERNAV_LLM_API_KEY", "")
        self.model = model or os.environ.get("CLUTTERNAV_LLM_MODEL", "")
        self.timeout_s = timeout_s
        if not self.endpoint:
            raise ValueError("no LLM endpoint configured (CLUTTERNAV_LLM_ENDPOINT)")

    def complete(self, system: str, user: str, max_tokens: int = DEFAULT_MAX_TOKENS) -> str:
        import requests

        payload = {
            "model": self.model,
            "max_tokens": max_tokens,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            resp = requests.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout_s
            )
            resp.raise_for_status()
            body = resp.json()
            return body["choices"][0]["message"]["content"]
        except Exception as exc:  # noqa: BLE001 - any failure is a transport failure here
            raise TransportError(str(exc)) from exc
