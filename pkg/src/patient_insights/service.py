"""Read-mostly HTTP layer over precomputed dashboard bundles.

Bundles are JSON files under ``<data_root>/<patient_id>/bundles/``; serving
never recomputes anything implicitly.  The one mutating endpoint, recompute,
runs the pipeline synchronously under a per-patient lock and answers 409
while a run is already in flight.  The pipeline runner is injectable so the
concurrency contract is testable without real pipeline latency.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from pathlib import Path
from typing import Any, Callable, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .backends import BackendError
from .config import AppConfig
from .core import CoreValidationError, Insight
from .narrator import EmptySelectionError, draft_message
from .registry import ActivityDef, Registry

logger = logging.getLogger(__name__)

_PATIENT_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]*$")
_BUNDLE_FILE_RE = re.compile(r"^session_(\d+)\.json$")


class DraftMessageRequest(BaseModel):
    insight_ids: list[str] = Field(default_factory=list)
    activity_ids: list[str] = Field(default_factory=list)


class ServiceState:
    """Shared state behind the endpoints: config, registry, per-patient locks."""

    def __init__(
        self,
        config: AppConfig,
        pipeline_runner: Optional[Callable[[str], Path]] = None,
    ):
        self.config = config
        self.registry: Registry = config.registry
        self.data_root: Path = Path(config.service.data_root)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self.pipeline_runner = pipeline_runner or self._default_runner

    def _default_runner(self, patient_id: str) -> Path:
        from .pipeline import run_for_directory

        _, path = run_for_directory(
            self.data_root / patient_id,
            self.config,
            out_root=self.data_root,
        )
        return path

    def lock_for(self, patient_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(patient_id, threading.Lock())

    # -- bundle access -----------------------------------------------------

    def patient_dir(self, patient_id: str) -> Path:
        if not _PATIENT_ID_RE.match(patient_id):
            raise HTTPException(status_code=404, detail=f"unknown patient {patient_id!r}")
        directory = self.data_root / patient_id
        if not directory.is_dir():
            raise HTTPException(status_code=404, detail=f"unknown patient {patient_id!r}")
        return directory

    def list_patients(self) -> list[dict[str, str]]:
        patients = []
        if not self.data_root.is_dir():
            return patients
        for directory in sorted(self.data_root.iterdir()):
            profile = directory / "profile.json"
            if not directory.is_dir() or not profile.is_file():
                continue
            try:
                name = json.loads(profile.read_text(encoding="utf-8"))["name"]
            except (json.JSONDecodeError, KeyError, OSError) as exc:
                logger.warning("skipping %s: unreadable profile (%s)", directory.name, exc)
                continue
            patients.append({"patient_id": directory.name, "name": name})
        return patients

    def available_sessions(self, patient_id: str) -> list[int]:
        bundles_dir = self.patient_dir(patient_id) / "bundles"
        if not bundles_dir.is_dir():
            return []
        found = []
        for path in bundles_dir.iterdir():
            match = _BUNDLE_FILE_RE.match(path.name)
            if match:
                found.append(int(match.group(1)))
        return sorted(found)

    def load_bundle(self, patient_id: str, session: Optional[int]) -> dict[str, Any]:
        sessions = self.available_sessions(patient_id)
        if not sessions:
            raise HTTPException(
                status_code=404,
                detail=f"no computed bundles for {patient_id!r}; POST recompute first",
            )
        k = session if session is not None else sessions[-1]
        if k not in sessions:
            raise HTTPException(
                status_code=404,
                detail=f"no bundle for session {k}; available: {sessions}",
            )
        path = self.patient_dir(patient_id) / "bundles" / f"session_{k}.json"
        return json.loads(path.read_text(encoding="utf-8"))


def create_app(
    config: AppConfig,
    pipeline_runner: Optional[Callable[[str], Path]] = None,
) -> FastAPI:
    """Build the service; ``pipeline_runner`` is injectable for tests."""
    state = ServiceState(config, pipeline_runner)
    app = FastAPI(title="patient-insights", version=config.bundle_version)
    if config.service.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.service.cors_origins),
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )
    app.state.service = state

    @app.get("/api/patients")
    def list_patients() -> list[dict[str, str]]:
        return state.list_patients()

    @app.get("/api/patients/{patient_id}/bundle")
    def get_bundle(
        patient_id: str, session: Optional[int] = Query(default=None, ge=1)
    ) -> dict[str, Any]:
        return state.load_bundle(patient_id, session)

    @app.get("/api/patients/{patient_id}/facts/{fact_id}/drilldown")
    def get_drilldown(
        patient_id: str,
        fact_id: str,
        session: Optional[int] = Query(default=None, ge=1),
    ) -> dict[str, Any]:
        bundle = state.load_bundle(patient_id, session)
        fact = bundle["facts"].get(fact_id)
        if fact is None:
            raise HTTPException(status_code=404, detail=f"unknown fact {fact_id!r}")
        chart = bundle["charts"].get(fact_id)
        # Evidence: the documents anchoring the questions of every insight
        # that cites this fact, with their spans for highlighting.
        evidence: dict[str, dict[str, Any]] = {}
        for insight in bundle["sections"]["patient_data_insights"]:
            if fact_id not in insight["fact_ids"] or insight["question_id"] is None:
                continue
            question = bundle["questions"].get(insight["question_id"])
            if question is None:
                continue
            span = question["span"]
            doc_id = span["document_id"]
            document = bundle["documents"].get(doc_id)
            if document is None:
                continue
            entry = evidence.setdefault(
                doc_id, {"id": doc_id, "kind": document["kind"], "text": document["text"], "spans": []}
            )
            entry["spans"].append(span)
        return {
            "fact": fact,
            "chart": chart,
            "evidence_documents": [evidence[did] for did in sorted(evidence)],
        }

    @app.post("/api/patients/{patient_id}/draft-message")
    def post_draft_message(patient_id: str, body: DraftMessageRequest) -> dict[str, str]:
        bundle = state.load_bundle(patient_id, None)
        insights_by_id = {
            i["id"]: i for i in bundle["sections"]["patient_data_insights"]
        }
        unknown = [iid for iid in body.insight_ids if iid not in insights_by_id]
        activities_by_id = {a["id"]: a for a in bundle["suggested_activities"]}
        unknown += [aid for aid in body.activity_ids if aid not in activities_by_id]
        if unknown:
            raise HTTPException(status_code=422, detail=f"unknown ids: {unknown}")
        insights = [Insight.from_dict(insights_by_id[iid]) for iid in body.insight_ids]
        activities = [
            ActivityDef(activity_id=aid, label=activities_by_id[aid]["label"])
            for aid in body.activity_ids
        ]
        try:
            text = draft_message(
                bundle["patient"]["name"], insights, activities, state.registry
            )
        except EmptySelectionError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"text": text}

    @app.post("/api/patients/{patient_id}/recompute")
    def post_recompute(patient_id: str) -> dict[str, str]:
        state.patient_dir(patient_id)
        lock = state.lock_for(patient_id)
        if not lock.acquire(blocking=False):
            raise HTTPException(
                status_code=409, detail=f"recompute already running for {patient_id!r}"
            )
        try:
            path = state.pipeline_runner(patient_id)
        except BackendError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        except CoreValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        finally:
            lock.release()
        return {"status": "ok", "bundle_path": str(path)}

    return app


__all__ = ["DraftMessageRequest", "ServiceState", "create_app"]
