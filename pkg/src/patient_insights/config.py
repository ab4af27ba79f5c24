"""Configuration loading.

Precedence, lowest to highest:

1. packaged defaults (``data/default_config.yaml``);
2. an optional user YAML file, deep-merged section by section;
3. ``PI_*`` environment variables for deployment-specific knobs
   (backend endpoint/model/API key, service host/port/data root).

The merged mapping is materialized into typed config objects once, at load
time, so the rest of the pipeline never touches raw dicts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .core import CoreValidationError
from .registry import Registry, RegistryError

ENV_PREFIX = "PI_"


class ConfigError(CoreValidationError):
    """Raised when configuration is unreadable or structurally invalid."""


@dataclass(frozen=True)
class StatConfig:
    """Thresholds for the statistical tests and attribute classification."""

    alpha: float = 0.05
    stl_period: int = 7
    mad_threshold: float = 3.5
    acf_lag: int = 7
    acf_cyclic_threshold: float = 0.5
    cv_stable_max: float = 0.10
    cv_variable_min: float = 0.30
    min_points_per_interval: int = 5

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.stl_period < 2:
            raise ConfigError(f"stl_period must be >= 2, got {self.stl_period}")
        if self.mad_threshold <= 0:
            raise ConfigError("mad_threshold must be positive")
        if self.acf_lag < 1:
            raise ConfigError("acf_lag must be >= 1")
        if self.cv_stable_max >= self.cv_variable_min:
            raise ConfigError(
                "cv_stable_max must be below cv_variable_min "
                f"({self.cv_stable_max} >= {self.cv_variable_min})"
            )
        if self.min_points_per_interval < 2:
            raise ConfigError("min_points_per_interval must be >= 2")


@dataclass(frozen=True)
class ExternalBackendConfig:
    endpoint: str = ""
    model: str = ""
    api_key: str = ""
    timeout_s: float = 30.0
    max_retries: int = 2


@dataclass(frozen=True)
class BackendConfig:
    """Which question/phrase backend to use."""

    kind: str = "deterministic"
    external: ExternalBackendConfig = field(default_factory=ExternalBackendConfig)

    def __post_init__(self) -> None:
        if self.kind not in ("deterministic", "external"):
            raise ConfigError(
                f"backend.kind must be 'deterministic' or 'external', got {self.kind!r}"
            )
        if self.kind == "external" and not self.external.endpoint:
            raise ConfigError("backend.kind is 'external' but no endpoint is set")


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    data_root: Path = Path("data")
    cors_origins: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not 0 < self.port < 65536:
            raise ConfigError(f"service.port out of range: {self.port}")


@dataclass(frozen=True)
class AppConfig:
    """Fully materialized application configuration."""

    registry: Registry
    stats: StatConfig
    backend: BackendConfig
    service: ServiceConfig
    bundle_version: str = "1"


def _deep_merge(base: dict, overlay: Mapping) -> dict:
    """Recursively merge ``overlay`` into a copy of ``base``.

    Mappings merge key-by-key; any other value (including lists) replaces the
    base value wholesale, so a user config can swap a whole lexicon table
    without inheriting stale entries.
    """
    merged = dict(base)
    for key, value in overlay.items():
        if (
            key in merged
            and isinstance(merged[key], dict)
            and isinstance(value, Mapping)
        ):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def default_config_dict() -> dict:
    """Parse the packaged default configuration."""
    text = (
        resources.files("patient_insights")
        .joinpath("data/default_config.yaml")
        .read_text(encoding="utf-8")
    )
    raw = yaml.safe_load(text)
    if not isinstance(raw, dict):
        raise ConfigError("packaged default config did not parse to a mapping")
    return raw


def _apply_env(raw: dict, environ: Mapping[str, str]) -> dict:
    """Overlay ``PI_*`` environment variables onto the merged config."""
    env_map = {
        "PI_BACKEND_KIND": ("backend", "kind"),
        "PI_BACKEND_ENDPOINT": ("backend", "external", "endpoint"),
        "PI_BACKEND_MODEL": ("backend", "external", "model"),
        "PI_BACKEND_API_KEY": ("backend", "external", "api_key"),
        "PI_BACKEND_TIMEOUT_S": ("backend", "external", "timeout_s"),
        "PI_SERVICE_HOST": ("service", "host"),
        "PI_SERVICE_PORT": ("service", "port"),
        "PI_DATA_ROOT": ("service", "data_root"),
    }
    out = dict(raw)
    for name, path in env_map.items():
        if name not in environ:
            continue
        node = out
        for key in path[:-1]:
            child = dict(node.get(key, {}))
            node[key] = child
            node = child
        node[path[-1]] = environ[name]
    return out


def _coerce_float(value: Any, where: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a number, got {value!r}") from None


def _coerce_int(value: Any, where: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be an integer, got {value!r}") from None


def load_config(
    path: Optional[Path] = None,
    *,
    environ: Optional[Mapping[str, str]] = None,
) -> AppConfig:
    """Load, merge, and materialize configuration.

    ``path`` points at an optional user YAML overlay; ``environ`` defaults to
    ``os.environ`` and is injectable for tests.
    """
    environ = os.environ if environ is None else environ
    raw = default_config_dict()

    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            overlay = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
        if overlay is None:
            overlay = {}
        if not isinstance(overlay, Mapping):
            raise ConfigError(f"config file {path} must contain a mapping")
        raw = _deep_merge(raw, overlay)

    raw = _apply_env(raw, environ)

    try:
        registry = Registry.from_config(raw)
    except RegistryError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed registry configuration: {exc}") from exc

    s = raw.get("stats", {})
    stats = StatConfig(
        alpha=_coerce_float(s.get("alpha", 0.05), "stats.alpha"),
        stl_period=_coerce_int(s.get("stl_period", 7), "stats.stl_period"),
        mad_threshold=_coerce_float(s.get("mad_threshold", 3.5), "stats.mad_threshold"),
        acf_lag=_coerce_int(s.get("acf_lag", 7), "stats.acf_lag"),
        acf_cyclic_threshold=_coerce_float(
            s.get("acf_cyclic_threshold", 0.5), "stats.acf_cyclic_threshold"
        ),
        cv_stable_max=_coerce_float(s.get("cv_stable_max", 0.10), "stats.cv_stable_max"),
        cv_variable_min=_coerce_float(
            s.get("cv_variable_min", 0.30), "stats.cv_variable_min"
        ),
        min_points_per_interval=_coerce_int(
            s.get("min_points_per_interval", 5), "stats.min_points_per_interval"
        ),
    )

    b = raw.get("backend", {})
    ext = b.get("external", {}) or {}
    backend = BackendConfig(
        kind=str(b.get("kind", "deterministic")),
        external=ExternalBackendConfig(
            endpoint=str(ext.get("endpoint", "") or ""),
            model=str(ext.get("model", "") or ""),
            api_key=str(ext.get("api_key", "") or ""),
            timeout_s=_coerce_float(ext.get("timeout_s", 30.0), "backend.external.timeout_s"),
            max_retries=_coerce_int(ext.get("max_retries", 2), "backend.external.max_retries"),
        ),
    )

    v = raw.get("service", {})
    service = ServiceConfig(
        host=str(v.get("host", "127.0.0.1")),
        port=_coerce_int(v.get("port", 8765), "service.port"),
        data_root=Path(v.get("data_root", "data")),
        cors_origins=tuple(v.get("cors_origins", ()) or ()),
    )

    return AppConfig(
        registry=registry,
        stats=stats,
        backend=backend,
        service=service,
        bundle_version=str(raw.get("bundle_version", "1")),
    )


__all__ = [
    "AppConfig",
    "BackendConfig",
    "ConfigError",
    "ENV_PREFIX",
    "ExternalBackendConfig",
    "ServiceConfig",
    "StatConfig",
    "default_config_dict",
    "load_config",
]
