"""Text-composition backends.

Two implementations sit behind one small contract:

* :class:`DeterministicBackend` — a marker; callers compose text themselves
  from templates and lexicons.  Always available, fully reproducible.
* :class:`ExternalBackend` — speaks HTTP+JSON to a chat-completions-style
  endpoint (request ``{model, messages, temperature: 0}``, response
  ``{text}``).  Every numeric value the model sees arrives in the payload;
  the model is never asked to recall or compute numbers.  Failures surface
  as typed errors — falling back to deterministic composition is always the
  caller's decision, never silent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import httpx

from .config import BackendConfig, ExternalBackendConfig

logger = logging.getLogger(__name__)


class BackendError(Exception):
    """Base class for composition-backend failures."""


class EndpointUnavailableError(BackendError):
    """The external endpoint cannot be reached or refused the request."""


class BackendTimeoutError(BackendError):
    """The external endpoint did not answer within the configured timeout."""


class MalformedResponseError(BackendError):
    """The external endpoint answered with an unusable body."""


@dataclass(frozen=True)
class DeterministicBackend:
    """Marker for template/lexicon composition; holds no state."""

    kind: str = "deterministic"


@dataclass
class ExternalBackend:
    """HTTP adapter for an external text-generation endpoint."""

    config: ExternalBackendConfig
    client: httpx.Client = field(repr=False, default=None)  # type: ignore[assignment]
    kind: str = "external"

    def health_check(self) -> None:
        """Confirm the endpoint is reachable; any HTTP answer counts."""
        try:
            self.client.get(self.config.endpoint)
        except httpx.TimeoutException as exc:
            raise BackendTimeoutError(
                f"health check timed out after {self.config.timeout_s}s: "
                f"{self.config.endpoint}"
            ) from exc
        except httpx.TransportError as exc:
            raise EndpointUnavailableError(
                f"endpoint unreachable: {self.config.endpoint} ({exc})"
            ) from exc

    def complete(self, messages: list[dict], *, purpose: str) -> str:
        """One completion round-trip; returns the response text verbatim."""
        payload = {
            "model": self.config.model,
            "messages": messages,
            "temperature": 0,
        }
        headers = {}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        try:
            response = self.client.post(
                self.config.endpoint, json=payload, headers=headers
            )
        except httpx.TimeoutException as exc:
            raise BackendTimeoutError(f"{purpose}: request timed out") from exc
        except httpx.TransportError as exc:
            raise EndpointUnavailableError(f"{purpose}: {exc}") from exc
        if response.status_code != 200:
            raise EndpointUnavailableError(
                f"{purpose}: endpoint returned HTTP {response.status_code}"
            )
        try:
            body = response.json()
        except ValueError as exc:
            raise MalformedResponseError(f"{purpose}: response is not JSON") from exc
        text = body.get("text") if isinstance(body, dict) else None
        if not isinstance(text, str) or not text.strip():
            raise MalformedResponseError(
                f"{purpose}: response lacks a non-empty 'text' field"
            )
        return text.strip()


Backend = Union[DeterministicBackend, ExternalBackend]


def make_backend(
    config: BackendConfig, *, transport: Optional[httpx.BaseTransport] = None
) -> Backend:
    """Construct the configured backend; external backends are health-checked.

    ``transport`` lets tests inject an in-process mock endpoint.
    """
    if config.kind == "deterministic":
        return DeterministicBackend()
    client = httpx.Client(timeout=config.external.timeout_s, transport=transport)
    backend = ExternalBackend(config=config.external, client=client)
    backend.health_check()
    logger.info("external backend healthy: %s", config.external.endpoint)
    return backend


def compose_external(
    backend: ExternalBackend, system: str, user: str, *, purpose: str
) -> str:
    """Single validated call to the external endpoint.

    Raises :class:`BackendTimeoutError`, :class:`EndpointUnavailableError`,
    or :class:`MalformedResponseError`; never falls back silently.
    """
    messages = [
        {"role": "system", "content": system},
        {"role": "user", "content": user},
    ]
    return backend.complete(messages, purpose=purpose)


__all__ = [
    "Backend",
    "BackendError",
    "BackendTimeoutError",
    "DeterministicBackend",
    "EndpointUnavailableError",
    "ExternalBackend",
    "MalformedResponseError",
    "compose_external",
    "make_backend",
]
