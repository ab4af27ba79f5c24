"""Shared fixtures: default config, generated patients, one pipeline run."""

from __future__ import annotations

from pathlib import Path

import pytest

from patient_insights.config import AppConfig, load_config
from patient_insights.datagen import InjectionSpec, generate_patient
from patient_insights.pipeline import PipelineResult, run_for_directory


@pytest.fixture(scope="session")
def app_config() -> AppConfig:
    return load_config(environ={})


@pytest.fixture(scope="session")
def injected_patient(tmp_path_factory) -> tuple[Path, dict]:
    """A simulated patient with one injection of each kind plus missing data."""
    spec = InjectionSpec.from_dict(
        {
            "seed": 42,
            "n_days": 112,
            "injections": [
                {"feature": "total_sleep", "kind": "shift", "effect_size": -2.0},
                {"feature": "bedtime", "kind": "spike", "magnitude": 8.0, "day": 95},
                {"feature": "total_steps", "kind": "trend", "slope": 1.5},
                {"feature": "total_screen_time", "kind": "cycle", "period": 7, "amplitude": 1.5},
            ],
            "missing_rate": 0.1,
        }
    )
    out = tmp_path_factory.mktemp("datagen")
    return generate_patient(spec, out)


@pytest.fixture(scope="session")
def pipeline_run(
    injected_patient: tuple[Path, dict], app_config: AppConfig, tmp_path_factory
) -> tuple[PipelineResult, Path]:
    patient_dir, _ = injected_patient
    out_root = tmp_path_factory.mktemp("bundles")
    return run_for_directory(patient_dir, app_config, out_root=out_root)
