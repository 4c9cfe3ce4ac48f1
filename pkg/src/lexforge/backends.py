"""Generation backends: the pluggable answer source behind QA generation.

The pipeline depends only on the `GenerationBackend` protocol. `MockBackend`
is the deterministic offline default used by tests and CI; `HttpBackend`
talks to a real generative endpoint over HTTPS.
"""

from __future__ import annotations

import hashlib
import os
import random
from typing import Protocol

import requests

from lexforge.ratelimit import Clock

API_KEY_ENV = "LEXFORGE_API_KEY"

# HTTP statuses worth retrying; everything else non-2xx is permanent.
_TRANSIENT_STATUSES = {408, 429, 500, 502, 503, 504}


class BackendError(RuntimeError):
    """Base class for backend failures."""


class TransientBackendError(BackendError):
    """Retryable failure (rate limiting, timeouts, server hiccups)."""


class PermanentBackendError(BackendError):
    """Non-retryable failure; the draft is skipped and reported."""


class GenerationBackend(Protocol):
    def complete(self, prompt: str) -> str: ...


class MockBackend:
    """Deterministic offline backend.

    Answers are a pure function of the prompt. Failures are injected from a
    seeded stream, so a run with a fixed seed always fails (and recovers) at
    the same points. An optional clock plus latency range simulates response
    times without real waiting.
    """

    def __init__(
        self,
        seed: int = 0,
        transient_failure_rate: float = 0.0,
        permanent_failure_rate: float = 0.0,
        clock: Clock | None = None,
        latency_range: tuple[float, float] | None = None,
    ):
        if not 0.0 <= transient_failure_rate <= 1.0:
            raise ValueError("transient_failure_rate must lie in [0, 1]")
        if not 0.0 <= permanent_failure_rate <= 1.0:
            raise ValueError("permanent_failure_rate must lie in [0, 1]")
        self._rng = random.Random(seed)
        self._transient_rate = transient_failure_rate
        self._permanent_rate = permanent_failure_rate
        self._clock = clock
        self._latency_range = latency_range
        self.calls = 0

    def complete(self, prompt: str) -> str:
        self.calls += 1
        if self._clock is not None and self._latency_range is not None:
            low, high = self._latency_range
            self._clock.sleep(self._rng.uniform(low, high))
        roll = self._rng.random()
        if roll < self._permanent_rate:
            raise PermanentBackendError("mock backend: injected permanent failure")
        if roll < self._permanent_rate + self._transient_rate:
            raise TransientBackendError("mock backend: injected transient failure")
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:10]
        return (
            "Based on the provided context, the document addresses this question "
            f"directly; see the cited passage for the governing provision. [mock:{digest}]"
        )


class HttpBackend:
    """HTTPS backend: POST {"model", "prompt"} and read {"answer"} back.

    The endpoint URL and model name are opaque configuration strings; the API
    key is taken from the LEXFORGE_API_KEY environment variable unless passed
    explicitly. Connection problems, timeouts, and retryable statuses raise
    TransientBackendError; other failures are permanent.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        if not endpoint:
            raise PermanentBackendError("no backend endpoint configured")
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        if not key:
            raise PermanentBackendError(
                f"no API key: set the {API_KEY_ENV} environment variable "
                "or use --backend mock"
            )
        self._endpoint = endpoint
        self._model = model
        self._key = key
        self._timeout = timeout
        self._session = session if session is not None else requests.Session()

    def complete(self, prompt: str) -> str:
        try:
            response = self._session.post(
                self._endpoint,
                json={"model": self._model, "prompt": prompt},
                headers={"Authorization": f"Bearer {self._key}"},
                timeout=self._timeout,
            )
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise TransientBackendError(f"request failed: {exc}") from exc
        if response.status_code in _TRANSIENT_STATUSES:
            raise TransientBackendError(f"backend returned HTTP {response.status_code}")
        if response.status_code != 200:
            raise PermanentBackendError(f"backend returned HTTP {response.status_code}")
        try:
            answer = response.json().get("answer")
        except ValueError as exc:
            raise PermanentBackendError("backend response is not valid JSON") from exc
        if not isinstance(answer, str) or not answer.strip():
            raise PermanentBackendError("backend response has no 'answer' field")
        return answer
