"""Dashboard bundle assembly: chart specs, referential closure, canonical JSON.

A bundle is the complete JSON document one dashboard session renders from:
patient background, timeline, narrative sections, every cited fact, a chart
spec per fact, the source documents behind evidence spans, and the activity
catalog.  Bundles are precomputed and stored per (patient, session); the
HTTP layer serves them read-only.

Serialization is canonical — sorted keys, fixed float rounding in chart
geometry — so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

from .analyzer import AnalysisWindow
from .core import (
    CoreValidationError,
    DataFact,
    DataSourceType,
    DateInterval,
    Document,
    FactType,
    IntervalPair,
    MeanPair,
    PatientRecord,
    ScalarPair,
    ScalarValue,
    SessionTimeline,
    TimePoint,
    TimePointPair,
    TimeSeries,
)
from .narrator import NarrativeSections
from .registry import ActivityDef, Registry
from .synthesizer import Question

logger = logging.getLogger(__name__)


class BundleError(CoreValidationError):
    """Base class for bundle assembly failures."""


class SeriesUnavailableError(BundleError):
    """No observed data exists to draw a chart for a fact."""


class BrokenReferenceError(BundleError):
    """Referential closure failed; carries every dangling reference."""

    def __init__(self, problems: Sequence[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


def _round6(x: float) -> float:
    return round(float(x), 6)


# ---------------------------------------------------------------------------
# Chart annotations


@dataclass(frozen=True)
class MeanLine:
    value: float
    interval: DateInterval

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "mean_line",
            "value": _round6(self.value),
            "interval": {
                "start": self.interval.start.isoformat(),
                "end": self.interval.end.isoformat(),
            },
        }


@dataclass(frozen=True)
class TrendSegment:
    start_date: date
    start_value: float
    end_date: date
    end_value: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "trend_segment",
            "start_point": {"date": self.start_date.isoformat(), "value": _round6(self.start_value)},
            "end_point": {"date": self.end_date.isoformat(), "value": _round6(self.end_value)},
        }


@dataclass(frozen=True)
class HighlightPoint:
    date: date
    value: float

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "highlight_point", "date": self.date.isoformat(), "value": _round6(self.value)}


@dataclass(frozen=True)
class SplitMarker:
    date: date

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "split_marker", "date": self.date.isoformat()}


ChartAnnotation = Union[MeanLine, TrendSegment, HighlightPoint, SplitMarker]


@dataclass(frozen=True)
class ChartSpec:
    """Raw series plus annotations for one fact's drill-down chart."""

    fact_id: str
    chart_kind: str  # "line" | "bar"
    series: tuple[tuple[date, Optional[float]], ...]
    annotations: tuple[ChartAnnotation, ...]
    y_label: str

    def __post_init__(self) -> None:
        if self.chart_kind not in ("line", "bar"):
            raise BundleError(f"unknown chart kind {self.chart_kind!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "fact_id": self.fact_id,
            "chart_kind": self.chart_kind,
            "series": [
                {"date": d.isoformat(), "value": None if v is None else _round6(v)}
                for d, v in self.series
            ],
            "annotations": [a.to_dict() for a in self.annotations],
            "y_label": self.y_label,
        }


# ---------------------------------------------------------------------------
# Chart construction


def _least_squares_segment(series: TimeSeries, interval: DateInterval) -> Optional[TrendSegment]:
    """Fitted-line endpoints over the interval's observed points (display aid only)."""
    pts = [p for p in series.slice(interval).points if not p.missing]
    if len(pts) < 2:
        return None
    x = np.array([(p.date - pts[0].date).days for p in pts], dtype=float)
    y = np.array([p.value for p in pts], dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    return TrendSegment(
        start_date=pts[0].date,
        start_value=float(intercept),
        end_date=pts[-1].date,
        end_value=float(intercept + slope * x[-1]),
    )


def chart_spec_for(fact: DataFact, series: TimeSeries, window: AnalysisWindow) -> ChartSpec:
    """Build the chart paired with a fact.

    The series is the raw source cadence over the whole analysis range —
    never interpolated, missing days preserved as null.  Survey-score facts
    render as bars, sensing facts as lines; annotations depend on the fact
    type (interval means + session split for comparisons, a fitted segment
    for trends, highlighted points otherwise).
    """
    display_range = DateInterval(window.delta_t1.start, window.today)
    visible = series.slice(display_range)
    if not visible.observed():
        raise SeriesUnavailableError(
            f"no observed {series.feature_id} data in {display_range.start}..{display_range.end}"
        )
    chart_kind = "bar" if fact.source is DataSourceType.SURVEY_SCORES else "line"

    annotations: list[ChartAnnotation] = []
    if fact.fact_type is FactType.COMPARISON:
        assert isinstance(fact.time, IntervalPair) and isinstance(fact.value, MeanPair)
        annotations.append(MeanLine(fact.value.mean1, fact.time.first))
        annotations.append(MeanLine(fact.value.mean2, fact.time.second))
        annotations.append(SplitMarker(window.last_session))
    elif fact.fact_type is FactType.TREND:
        assert isinstance(fact.time, DateInterval)
        segment = _least_squares_segment(series, fact.time)
        if segment is not None:
            annotations.append(segment)
    elif fact.fact_type in (FactType.OUTLIER, FactType.EXTREME):
        assert isinstance(fact.time, TimePoint) and isinstance(fact.value, ScalarValue)
        annotations.append(HighlightPoint(fact.time.t, fact.value.value))
    elif fact.fact_type is FactType.DIFFERENCE:
        assert isinstance(fact.time, TimePointPair) and isinstance(fact.value, ScalarPair)
        annotations.append(HighlightPoint(fact.time.t1, fact.value.v1))
        annotations.append(HighlightPoint(fact.time.t2, fact.value.v2))

    return ChartSpec(
        fact_id=fact.id,
        chart_kind=chart_kind,
        series=tuple((p.date, p.value) for p in visible.points),
        annotations=tuple(annotations),
        y_label=f"{fact.entity.label} ({series.unit})",
    )


# ---------------------------------------------------------------------------
# Bundle assembly


@dataclass(frozen=True)
class DashboardBundle:
    version: str
    patient_id: str
    session_index: int
    patient: dict[str, Any]
    timeline: SessionTimeline
    sections: NarrativeSections
    facts: dict[str, DataFact]
    charts: dict[str, ChartSpec]
    documents: dict[str, Document]
    questions: dict[str, Question]
    suggested_activities: tuple[ActivityDef, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "patient_id": self.patient_id,
            "session_index": self.session_index,
            "patient": dict(self.patient),
            "timeline": self.timeline.to_dict(),
            "sections": self.sections.to_dict(),
            "facts": {fid: f.to_dict() for fid, f in self.facts.items()},
            "charts": {fid: c.to_dict() for fid, c in self.charts.items()},
            "documents": {
                did: {"kind": doc.kind.value, "text": doc.text}
                for did, doc in self.documents.items()
            },
            "questions": {qid: q.to_dict() for qid, q in self.questions.items()},
            "suggested_activities": [
                {"id": a.activity_id, "label": a.label} for a in self.suggested_activities
            ],
        }


def closure_problems(bundle_dict: Mapping[str, Any]) -> list[str]:
    """Every dangling reference in a serialized bundle (empty when closed)."""
    problems: list[str] = []
    facts = bundle_dict.get("facts", {})
    charts = bundle_dict.get("charts", {})
    documents = bundle_dict.get("documents", {})
    questions = bundle_dict.get("questions", {})
    sections = bundle_dict.get("sections", {})
    insights = sections.get("patient_data_insights", [])

    insight_ids = set()
    for insight in insights:
        insight_ids.add(insight["id"])
        for fid in insight["fact_ids"]:
            if fid not in facts:
                problems.append(f"insight {insight['id']} cites missing fact {fid}")
        qid = insight.get("question_id")
        if qid is not None and qid not in questions:
            problems.append(f"insight {insight['id']} cites missing question {qid}")
    for iid in sections.get("summary_pool", []):
        if iid not in insight_ids:
            problems.append(f"summary pool cites missing insight {iid}")
    for fid in facts:
        if fid not in charts:
            problems.append(f"fact {fid} has no chart")
    for fid in charts:
        if fid not in facts:
            problems.append(f"chart references missing fact {fid}")
    for card in sections.get("session_recap", []):
        for span in card.get("evidence", []):
            if span["document_id"] not in documents:
                problems.append(
                    f"recap evidence cites missing document {span['document_id']}"
                )
    for qid, question in questions.items():
        did = question["span"]["document_id"]
        if did not in documents:
            problems.append(f"question {qid} cites missing document {did}")
    return problems


def build_bundle(
    record: PatientRecord,
    window: AnalysisWindow,
    session_index: int,
    sections: NarrativeSections,
    facts: Sequence[DataFact],
    questions: Sequence[Question],
    registry: Registry,
    version: str,
) -> DashboardBundle:
    """Assemble and closure-check the bundle for one patient session.

    Only facts cited by a threaded insight are included (with their charts);
    documents are included when any evidence span or question points at them.
    """
    cited: set[str] = set()
    for insight in sections.patient_data_insights:
        cited.update(insight.fact_ids)
    facts_by_id = {f.id: f for f in facts if f.id in cited}

    charts: dict[str, ChartSpec] = {}
    for fid in sorted(facts_by_id):
        fact = facts_by_id[fid]
        series = record.series_for(fact.entity.feature_id)
        if series is None:
            raise SeriesUnavailableError(
                f"fact {fid} cites feature {fact.entity.feature_id} with no series"
            )
        charts[fid] = chart_spec_for(fact, series, window)

    doc_ids: set[str] = set()
    for card in sections.session_recap:
        doc_ids.update(span.document_id for span in card.evidence)
    for question in questions:
        doc_ids.add(question.span.document_id)
    all_docs = {**record.notes, **record.transcripts}
    missing_docs = sorted(doc_ids - all_docs.keys())
    if missing_docs:
        raise BrokenReferenceError(
            [f"evidence cites missing document {did}" for did in missing_docs]
        )
    documents = {did: all_docs[did] for did in sorted(doc_ids)}

    bundle = DashboardBundle(
        version=version,
        patient_id=record.patient_id,
        session_index=session_index,
        patient={
            "name": record.profile.name,
            "age": record.profile.age,
            "pronouns": record.profile.pronouns,
        },
        timeline=record.timeline,
        sections=sections,
        facts=facts_by_id,
        charts=charts,
        documents=documents,
        questions={q.id: q for q in questions},
        suggested_activities=tuple(registry.activities),
    )
    problems = closure_problems(bundle.to_dict())
    if problems:
        raise BrokenReferenceError(problems)
    return bundle


# ---------------------------------------------------------------------------
# Serialization, schema validation, storage


def canonical_json(payload: Mapping[str, Any]) -> str:
    """Stable serialization: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def load_bundle_schema() -> dict[str, Any]:
    text = resources.files("patient_insights").joinpath("schemas/bundle.schema.json").read_text()
    return json.loads(text)


def schema_problems(bundle_dict: Mapping[str, Any]) -> list[str]:
    """Schema violations for a serialized bundle (empty when valid)."""
    import jsonschema

    validator = jsonschema.Draft202012Validator(load_bundle_schema())
    return [
        f"{'/'.join(str(p) for p in err.path) or '<root>'}: {err.message}"
        for err in sorted(validator.iter_errors(bundle_dict), key=lambda e: list(e.path))
    ]


def validate_bundle_dict(bundle_dict: Mapping[str, Any]) -> list[str]:
    """Schema plus closure problems; empty list means the bundle is valid."""
    return schema_problems(bundle_dict) + closure_problems(bundle_dict)


def bundle_path(data_root: Path, patient_id: str, session_index: int) -> Path:
    return Path(data_root) / patient_id / "bundles" / f"session_{session_index}.json"


def write_bundle(data_root: Path, bundle: DashboardBundle) -> Path:
    """Atomically persist a bundle to its per-session file."""
    path = bundle_path(data_root, bundle.patient_id, bundle.session_index)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = canonical_json(bundle.to_dict())
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
    logger.info("wrote bundle %s (%d bytes)", path, len(text.encode("utf-8")))
    return path


def read_bundle_dict(data_root: Path, patient_id: str, session_index: int) -> dict[str, Any]:
    path = bundle_path(data_root, patient_id, session_index)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    return json.loads(path.read_text(encoding="utf-8"))


__all__ = [
    "BrokenReferenceError",
    "BundleError",
    "ChartSpec",
    "DashboardBundle",
    "HighlightPoint",
    "MeanLine",
    "SeriesUnavailableError",
    "SplitMarker",
    "TrendSegment",
    "build_bundle",
    "bundle_path",
    "canonical_json",
    "chart_spec_for",
    "closure_problems",
    "load_bundle_schema",
    "read_bundle_dict",
    "schema_problems",
    "validate_bundle_dict",
    "write_bundle",
]
