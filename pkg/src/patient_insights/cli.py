"""Command-line entry point: run the pipeline, validate inputs, serve, generate.

Exit codes: 0 success, 2 validation failure, 3 missing/unreadable files,
4 backend failure.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import click

from .backends import BackendError, make_backend
from .bundle import validate_bundle_dict
from .config import AppConfig, load_config
from .core import CoreValidationError
from .datagen import InjectionSpec, generate_patient
from .ingest import MissingFileError, load_patient_dir
from .pipeline import run_for_directory

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_BACKEND = 4

logger = logging.getLogger(__name__)


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_app_config(config_path: Optional[str], backend_kind: Optional[str]) -> AppConfig:
    try:
        config = load_config(Path(config_path) if config_path else None)
    except CoreValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    if backend_kind and backend_kind != config.backend.kind:
        config = replace(config, backend=replace(config.backend, kind=backend_kind))
    return config


def _resolve_patient_dir(data_dir: str, patient: Optional[str]) -> Path:
    root = Path(data_dir)
    if patient:
        return root / patient
    if (root / "profile.json").is_file():
        return root
    _fail(EXIT_IO, f"{root} is not a patient directory; pass --patient")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Patient-data insight engine: analyze, narrate, bundle, serve."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command("run")
@click.option("--data-dir", required=True, help="Data root or a single patient directory.")
@click.option("--patient", default=None, help="Patient id (subdirectory of --data-dir).")
@click.option("--session", type=int, default=None, help="1-based session index (default: latest).")
@click.option("--config", "config_path", default=None, help="YAML config overlay.")
@click.option(
    "--backend",
    "backend_kind",
    type=click.Choice(["deterministic", "external"]),
    default=None,
    help="Override the configured backend.",
)
@click.option("--out", "out_root", default=None, help="Bundle output root (default: config data root).")
def cmd_run(
    data_dir: str,
    patient: Optional[str],
    session: Optional[int],
    config_path: Optional[str],
    backend_kind: Optional[str],
    out_root: Optional[str],
) -> None:
    """Run the full pipeline for one patient session and write the bundle."""
    config = _load_app_config(config_path, backend_kind)
    patient_dir = _resolve_patient_dir(data_dir, patient)
    try:
        backend = make_backend(config.backend)
    except BackendError as exc:
        _fail(EXIT_BACKEND, f"backend unavailable: {exc}")
    try:
        result, path = run_for_directory(
            patient_dir,
            config,
            backend=backend,
            session_index=session,
            out_root=Path(out_root) if out_root else None,
        )
    except MissingFileError as exc:
        _fail(EXIT_IO, str(exc))
    except FileNotFoundError as exc:
        _fail(EXIT_IO, str(exc))
    except BackendError as exc:
        _fail(EXIT_BACKEND, str(exc))
    except CoreValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))

    insights = result.bundle.sections.patient_data_insights
    click.echo(f"facts: {len(result.facts)}")
    click.echo(f"insights: {len(insights)}")
    click.echo(f"questions: {len(result.questions)}")
    if result.skip_log:
        click.echo(f"skipped ({len(result.skip_log)}):")
        for line in result.skip_log:
            click.echo(f"  - {line}")
    click.echo(f"bundle: {path}")


@main.command("validate")
@click.argument("target")
@click.option("--config", "config_path", default=None, help="YAML config overlay.")
def cmd_validate(target: str, config_path: Optional[str]) -> None:
    """Validate a patient data directory or a bundle JSON file."""
    config = _load_app_config(config_path, None)
    path = Path(target)
    if path.is_dir():
        try:
            record = load_patient_dir(path, config.registry)
        except MissingFileError as exc:
            _fail(EXIT_IO, str(exc))
        except CoreValidationError as exc:
            _fail(EXIT_VALIDATION, str(exc))
        click.echo(
            f"ok: {record.patient_id} with {len(record.available_features())} features, "
            f"{len(record.timeline.sessions)} sessions"
        )
        return
    if path.is_file():
        try:
            bundle_dict = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            _fail(EXIT_VALIDATION, f"{path}: not valid JSON ({exc})")
        problems = validate_bundle_dict(bundle_dict)
        if problems:
            for problem in problems:
                click.echo(f"violation: {problem}")
            sys.exit(EXIT_VALIDATION)
        click.echo(f"ok: {path} is a valid bundle")
        return
    _fail(EXIT_IO, f"no such file or directory: {target}")


@main.command("serve")
@click.option("--config", "config_path", default=None, help="YAML config overlay.")
@click.option("--host", default=None, help="Override listen host.")
@click.option("--port", type=int, default=None, help="Override listen port.")
def cmd_serve(config_path: Optional[str], host: Optional[str], port: Optional[int]) -> None:
    """Serve precomputed bundles over HTTP."""
    import uvicorn

    from .service import create_app

    config = _load_app_config(config_path, None)
    app = create_app(config)
    uvicorn.run(
        app,
        host=host or config.service.host,
        port=port or config.service.port,
    )


@main.command("datagen")
@click.option("--seed", type=int, default=0, help="Generator seed.")
@click.option("--days", type=int, default=None, help="Days of data to generate.")
@click.option("--spec", "spec_path", default=None, help="Injection spec JSON file.")
@click.option("--out", "out_root", required=True, help="Output root directory.")
def cmd_datagen(
    seed: int, days: Optional[int], spec_path: Optional[str], out_root: str
) -> None:
    """Generate a simulated patient directory with a ground-truth manifest."""
    raw: dict = {"seed": seed}
    if spec_path:
        path = Path(spec_path)
        if not path.is_file():
            _fail(EXIT_IO, f"spec file not found: {spec_path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            _fail(EXIT_VALIDATION, f"{spec_path}: not valid JSON ({exc})")
        raw.setdefault("seed", seed)
    if days is not None:
        raw["n_days"] = days
    try:
        spec = InjectionSpec.from_dict(raw)
        patient_dir, manifest = generate_patient(spec, Path(out_root))
    except CoreValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    click.echo(f"generated: {patient_dir}")
    click.echo(f"expected facts: {len(manifest['expected'])}")


if __name__ == "__main__":
    main()
