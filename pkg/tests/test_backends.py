"""Backend construction and the external HTTP adapter's failure modes."""

from __future__ import annotations

import json

import httpx
import pytest

from patient_insights.backends import (
    BackendTimeoutError,
    DeterministicBackend,
    EndpointUnavailableError,
    ExternalBackend,
    MalformedResponseError,
    compose_external,
    make_backend,
)
from patient_insights.config import BackendConfig, ExternalBackendConfig


def external_config(**overrides) -> BackendConfig:
    ext = ExternalBackendConfig(
        endpoint="http://test.invalid/v1/complete",
        model="test-model",
        timeout_s=2.0,
        max_retries=1,
        api_key=overrides.pop("api_key", ""),
    )
    return BackendConfig(kind="external", external=ext)


def transport_returning(handler) -> httpx.MockTransport:
    return httpx.MockTransport(handler)


class TestMakeBackend:
    def test_deterministic_default(self):
        backend = make_backend(BackendConfig(kind="deterministic",
                                             external=ExternalBackendConfig()))
        assert isinstance(backend, DeterministicBackend)

    def test_external_health_checked_on_construction(self):
        seen = []

        def handler(request):
            seen.append((request.method, str(request.url)))
            return httpx.Response(200, json={"text": "ok"})

        backend = make_backend(external_config(),
                               transport=transport_returning(handler))
        assert isinstance(backend, ExternalBackend)
        assert seen[0][0] == "GET"

    def test_unreachable_endpoint_fails_fast(self):
        def handler(request):
            raise httpx.ConnectError("refused", request=request)

        with pytest.raises(EndpointUnavailableError, match="unreachable"):
            make_backend(external_config(), transport=transport_returning(handler))


class TestExternalCompletion:
    def make(self, handler) -> ExternalBackend:
        return make_backend(
            external_config(), transport=transport_returning(handler)
        )

    def test_payload_shape_and_success(self):
        captured = {}

        def handler(request):
            if request.method == "GET":
                return httpx.Response(200)
            captured.update(json.loads(request.content))
            return httpx.Response(200, json={"text": "  a reply  "})

        backend = self.make(handler)
        text = compose_external(backend, "system prompt", "user prompt",
                                purpose="test")
        assert text == "a reply"
        assert captured["model"] == "test-model"
        assert captured["temperature"] == 0
        assert [m["role"] for m in captured["messages"]] == ["system", "user"]
        assert captured["messages"][1]["content"] == "user prompt"

    def test_api_key_sent_as_bearer(self):
        seen = {}

        def handler(request):
            if request.method == "POST":
                seen["auth"] = request.headers.get("authorization")
                return httpx.Response(200, json={"text": "x"})
            return httpx.Response(200)

        backend = make_backend(
            external_config(api_key="sk-123"),
            transport=transport_returning(handler),
        )
        compose_external(backend, "s", "u", purpose="test")
        assert seen["auth"] == "Bearer sk-123"

    def test_non_200_raises(self):
        def handler(request):
            if request.method == "GET":
                return httpx.Response(200)
            return httpx.Response(503)

        backend = self.make(handler)
        with pytest.raises(EndpointUnavailableError, match="503"):
            compose_external(backend, "s", "u", purpose="test")

    def test_timeout_raises_typed_error(self):
        def handler(request):
            if request.method == "GET":
                return httpx.Response(200)
            raise httpx.ReadTimeout("slow", request=request)

        backend = self.make(handler)
        with pytest.raises(BackendTimeoutError):
            compose_external(backend, "s", "u", purpose="test")

    def test_non_json_body_raises(self):
        def handler(request):
            if request.method == "GET":
                return httpx.Response(200)
            return httpx.Response(200, content=b"<html>not json</html>")

        backend = self.make(handler)
        with pytest.raises(MalformedResponseError, match="not JSON"):
            compose_external(backend, "s", "u", purpose="test")

    def test_missing_text_field_raises(self):
        def handler(request):
            if request.method == "GET":
                return httpx.Response(200)
            return httpx.Response(200, json={"message": "wrong key"})

        backend = self.make(handler)
        with pytest.raises(MalformedResponseError, match="text"):
            compose_external(backend, "s", "u", purpose="test")

    def test_blank_text_raises(self):
        def handler(request):
            if request.method == "GET":
                return httpx.Response(200)
            return httpx.Response(200, json={"text": "   "})

        backend = self.make(handler)
        with pytest.raises(MalformedResponseError):
            compose_external(backend, "s", "u", purpose="test")
