"""Shared domain types for the insight pipeline.

Everything here is an immutable value object: facts, insights, recap cards,
evidence spans, patient records and the time/value tuples they are built from.
Construction validates the structural invariants, so downstream code can trust
any instance it receives.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from datetime import date
from enum import Enum
from typing import Any, Mapping, Optional, Sequence, Union


class CoreValidationError(ValueError):
    """Raised when a core value object violates one of its invariants."""


class FactType(str, Enum):
    COMPARISON = "comparison"
    TREND = "trend"
    OUTLIER = "outlier"
    EXTREME = "extreme"
    DIFFERENCE = "difference"


class FactAttribute(str, Enum):
    # outlier
    SPIKE = "spike"
    DIP = "dip"
    # trend
    RISE = "rise"
    FALL = "fall"
    STABLE = "stable"
    CYCLIC = "cyclic"
    VARIABLE = "variable"
    NONE = "none"
    # comparison
    INCREASE = "increase"
    DECREASE = "decrease"
    REMAINED_STABLE = "remained_stable"
    # difference
    MORE = "more"
    LESS = "less"
    # extreme
    MAX = "max"
    MIN = "min"


ATTRIBUTES_BY_TYPE: dict[FactType, frozenset[FactAttribute]] = {
    FactType.OUTLIER: frozenset({FactAttribute.SPIKE, FactAttribute.DIP}),
    FactType.TREND: frozenset(
        {
            FactAttribute.RISE,
            FactAttribute.FALL,
            FactAttribute.STABLE,
            FactAttribute.CYCLIC,
            FactAttribute.VARIABLE,
            FactAttribute.NONE,
        }
    ),
    FactType.COMPARISON: frozenset(
        {FactAttribute.INCREASE, FactAttribute.DECREASE, FactAttribute.REMAINED_STABLE}
    ),
    FactType.DIFFERENCE: frozenset({FactAttribute.MORE, FactAttribute.LESS}),
    FactType.EXTREME: frozenset({FactAttribute.MAX, FactAttribute.MIN}),
}


class DataSourceType(str, Enum):
    PASSIVE_SENSING = "passive_sensing"
    SURVEY_SCORES = "survey_scores"
    CLINICAL_NOTES = "clinical_notes"
    TRANSCRIPTS = "transcripts"


class BiopsychosocialTag(str, Enum):
    BIOLOGICAL = "biological"
    PSYCHOLOGICAL = "psychological"
    SOCIAL = "social"


class Discovery(str, Enum):
    GUIDED = "guided"
    EXPLORATORY = "exploratory"


# --------------------------------------------------------------------------
# Time references
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TimePoint:
    t: date

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "point", "t": self.t.isoformat()}


@dataclass(frozen=True)
class TimePointPair:
    t1: date
    t2: date

    def __post_init__(self) -> None:
        if not self.t1 < self.t2:
            raise CoreValidationError(f"point pair requires t1 < t2, got {self.t1} and {self.t2}")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "point_pair", "t1": self.t1.isoformat(), "t2": self.t2.isoformat()}


@dataclass(frozen=True)
class DateInterval:
    start: date
    end: date

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise CoreValidationError(f"interval start {self.start} is after end {self.end}")

    def contains(self, d: date) -> bool:
        return self.start <= d <= self.end

    def overlaps(self, other: "DateInterval") -> bool:
        return self.start <= other.end and other.start <= self.end

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "interval", "start": self.start.isoformat(), "end": self.end.isoformat()}


@dataclass(frozen=True)
class IntervalPair:
    first: DateInterval
    second: DateInterval

    def __post_init__(self) -> None:
        if not self.first.end < self.second.start:
            raise CoreValidationError(
                f"interval pair requires first.end < second.start, "
                f"got {self.first.end} and {self.second.start}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "interval_pair", "first": self.first.to_dict(), "second": self.second.to_dict()}


TimeRef = Union[TimePoint, TimePointPair, DateInterval, IntervalPair]


def time_ref_from_dict(d: Mapping[str, Any]) -> TimeRef:
    kind = d["kind"]
    if kind == "point":
        return TimePoint(date.fromisoformat(d["t"]))
    if kind == "point_pair":
        return TimePointPair(date.fromisoformat(d["t1"]), date.fromisoformat(d["t2"]))
    if kind == "interval":
        return DateInterval(date.fromisoformat(d["start"]), date.fromisoformat(d["end"]))
    if kind == "interval_pair":
        return IntervalPair(time_ref_from_dict(d["first"]), time_ref_from_dict(d["second"]))
    raise CoreValidationError(f"unknown time ref kind {kind!r}")


def time_ref_span(ref: TimeRef) -> tuple[date, date]:
    """Earliest and latest date touched by a time reference."""
    if isinstance(ref, TimePoint):
        return ref.t, ref.t
    if isinstance(ref, TimePointPair):
        return ref.t1, ref.t2
    if isinstance(ref, DateInterval):
        return ref.start, ref.end
    return ref.first.start, ref.second.end


# --------------------------------------------------------------------------
# Value references
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarValue:
    value: float
    unit: str

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "scalar", "value": self.value, "unit": self.unit}


@dataclass(frozen=True)
class ScalarPair:
    v1: float
    v2: float
    unit: str

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "scalar_pair", "v1": self.v1, "v2": self.v2, "unit": self.unit}


@dataclass(frozen=True)
class MeanPair:
    mean1: float
    mean2: float
    unit: str

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "mean_pair", "mean1": self.mean1, "mean2": self.mean2, "unit": self.unit}


@dataclass(frozen=True)
class NoValue:
    def to_dict(self) -> dict[str, Any]:
        return {"kind": "none"}


ValueRef = Union[ScalarValue, ScalarPair, MeanPair, NoValue]


def value_ref_from_dict(d: Mapping[str, Any]) -> ValueRef:
    kind = d["kind"]
    if kind == "scalar":
        return ScalarValue(d["value"], d["unit"])
    if kind == "scalar_pair":
        return ScalarPair(d["v1"], d["v2"], d["unit"])
    if kind == "mean_pair":
        return MeanPair(d["mean1"], d["mean2"], d["unit"])
    if kind == "none":
        return NoValue()
    raise CoreValidationError(f"unknown value ref kind {kind!r}")


# Shape constraints per fact type: (allowed TimeRef classes, allowed ValueRef classes)
_FACT_SHAPES: dict[FactType, tuple[tuple[type, ...], tuple[type, ...]]] = {
    FactType.COMPARISON: ((IntervalPair,), (MeanPair,)),
    FactType.TREND: ((DateInterval,), (NoValue,)),
    FactType.OUTLIER: ((TimePoint,), (ScalarValue,)),
    FactType.EXTREME: ((TimePoint,), (ScalarValue,)),
    FactType.DIFFERENCE: ((TimePointPair,), (ScalarPair,)),
}


@dataclass(frozen=True)
class Entity:
    """The measured feature a fact is about: stable id plus human label."""

    feature_id: str
    label: str

    def to_dict(self) -> dict[str, Any]:
        return {"feature_id": self.feature_id, "label": self.label}


@dataclass(frozen=True)
class DataFact:
    """An atomic statistical observation: the {type, Time, Value, attribute} tuple
    over an entity, plus provenance and its rendered description."""

    id: str
    fact_type: FactType
    entity: Entity
    time: TimeRef
    value: ValueRef
    attribute: FactAttribute
    significant: bool
    p_value: Optional[float]
    source: DataSourceType
    description: str
    discovery: Discovery
    salience: float = 0.0

    def __post_init__(self) -> None:
        if self.attribute not in ATTRIBUTES_BY_TYPE[self.fact_type]:
            raise CoreValidationError(
                f"attribute {self.attribute.value!r} is not valid for fact type {self.fact_type.value!r}"
            )
        time_types, value_types = _FACT_SHAPES[self.fact_type]
        if not isinstance(self.time, time_types):
            raise CoreValidationError(
                f"{self.fact_type.value} fact requires time of {time_types}, got {type(self.time).__name__}"
            )
        if not isinstance(self.value, value_types):
            raise CoreValidationError(
                f"{self.fact_type.value} fact requires value of {value_types}, got {type(self.value).__name__}"
            )
        if self.significant and self.p_value is None:
            raise CoreValidationError("significant facts must carry a p-value")
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise CoreValidationError(f"p-value {self.p_value} out of [0, 1]")
        if self.salience < 0:
            raise CoreValidationError("salience must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "fact_type": self.fact_type.value,
            "entity": self.entity.to_dict(),
            "time": self.time.to_dict(),
            "value": self.value.to_dict(),
            "attribute": self.attribute.value,
            "significant": self.significant,
            "p_value": self.p_value,
            "source": self.source.value,
            "description": self.description,
            "discovery": self.discovery.value,
            "salience": self.salience,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "DataFact":
        return cls(
            id=d["id"],
            fact_type=FactType(d["fact_type"]),
            entity=Entity(**d["entity"]),
            time=time_ref_from_dict(d["time"]),
            value=value_ref_from_dict(d["value"]),
            attribute=FactAttribute(d["attribute"]),
            significant=d["significant"],
            p_value=d["p_value"],
            source=DataSourceType(d["source"]),
            description=d["description"],
            discovery=Discovery(d["discovery"]),
            salience=d.get("salience", 0.0),
        )

    def with_description(self, description: str) -> "DataFact":
        return replace(self, description=description)


def fact_id(
    fact_type: FactType,
    entity: Entity,
    time: TimeRef,
    value: ValueRef,
    attribute: FactAttribute,
    source: DataSourceType,
) -> str:
    """Deterministic content hash over a fact's defining fields.

    Excludes discovery path and description, so the same finding reached by
    both guided and exploratory discovery deduplicates to one id.
    """
    payload = json.dumps(
        {
            "type": fact_type.value,
            "entity": entity.to_dict(),
            "time": time.to_dict(),
            "value": value.to_dict(),
            "attribute": attribute.value,
            "source": source.value,
        },
        sort_keys=True,
    )
    return "f" + hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


# --------------------------------------------------------------------------
# Insights and narrative fragments
# --------------------------------------------------------------------------


def word_count(text: str) -> int:
    """Count maximal whitespace-separated tokens; hyphenated compounds are one word."""
    return len(text.split())


MAX_FACTS_PER_INSIGHT = 6
INSIGHT_WORD_LIMIT = 15  # strict: word count must be < 15
RECAP_WORD_LIMIT = 12  # inclusive: word count must be <= 12


@dataclass(frozen=True)
class TwoPartText:
    """Insight wording: a factual clause plus an emphasized implication."""

    fact_clause: str
    implication: str

    def combined(self) -> str:
        """Single displayable sentence; the implication half carries emphasis."""
        return f"{self.fact_clause}, suggesting {self.implication}."

    def to_dict(self) -> dict[str, Any]:
        return {"fact_clause": self.fact_clause, "implication": self.implication}


@dataclass(frozen=True)
class Insight:
    id: str
    text: TwoPartText
    tags: frozenset[BiopsychosocialTag]
    sources: frozenset[DataSourceType]
    fact_ids: tuple[str, ...]
    origin: Discovery
    question_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not 1 <= len(self.fact_ids) <= MAX_FACTS_PER_INSIGHT:
            raise CoreValidationError(
                f"insight must reference 1..{MAX_FACTS_PER_INSIGHT} facts, got {len(self.fact_ids)}"
            )
        if len(set(self.fact_ids)) != len(self.fact_ids):
            raise CoreValidationError("insight fact ids must be distinct")
        if not self.tags:
            raise CoreValidationError("insight needs at least one biopsychosocial tag")
        if not self.sources:
            raise CoreValidationError("insight needs at least one data source type")
        n = word_count(self.text.combined())
        if n >= INSIGHT_WORD_LIMIT:
            raise CoreValidationError(
                f"insight text has {n} words; must be fewer than {INSIGHT_WORD_LIMIT}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text.to_dict(),
            "tags": sorted(t.value for t in self.tags),
            "sources": sorted(s.value for s in self.sources),
            "fact_ids": list(self.fact_ids),
            "origin": self.origin.value,
            "question_id": self.question_id,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Insight":
        return cls(
            id=d["id"],
            text=TwoPartText(**d["text"]),
            tags=frozenset(BiopsychosocialTag(t) for t in d["tags"]),
            sources=frozenset(DataSourceType(s) for s in d["sources"]),
            fact_ids=tuple(d["fact_ids"]),
            origin=Discovery(d["origin"]),
            question_id=d.get("question_id"),
        )


def insight_id(origin: Discovery, fact_ids: Sequence[str], question_id: Optional[str]) -> str:
    payload = json.dumps(
        {"origin": origin.value, "facts": sorted(fact_ids), "question": question_id},
        sort_keys=True,
    )
    return "i" + hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def validate_insight(insight: Insight, known_fact_ids: set[str]) -> list[str]:
    """Return the list of invariant violations for an insight (empty when valid).

    Construction already enforces the structural limits; this re-checks them
    plus referential integrity, so tests and bundle validation share one path.
    """
    problems = []
    if not 1 <= len(insight.fact_ids) <= MAX_FACTS_PER_INSIGHT:
        problems.append(f"{insight.id}: references {len(insight.fact_ids)} facts")
    n = word_count(insight.text.combined())
    if n >= INSIGHT_WORD_LIMIT:
        problems.append(f"{insight.id}: text has {n} words")
    if not insight.tags:
        problems.append(f"{insight.id}: no biopsychosocial tags")
    for fid in insight.fact_ids:
        if fid not in known_fact_ids:
            problems.append(f"{insight.id}: dangling fact id {fid}")
    return problems


class RecapKind(str, Enum):
    SUBJECTIVE_OBJECTIVE = "subjective_objective"
    ASSESSMENT = "assessment"
    PLAN = "plan"


@dataclass(frozen=True)
class EvidenceSpan:
    """A verbatim slice of a source document, offsets in Unicode scalar values."""

    document_id: str
    start: int
    end: int
    quoted_text: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise CoreValidationError(f"invalid span offsets [{self.start}, {self.end})")

    def matches(self, document_text: str) -> bool:
        return (
            self.end <= len(document_text)
            and document_text[self.start : self.end] == self.quoted_text
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "document_id": self.document_id,
            "start": self.start,
            "end": self.end,
            "quoted_text": self.quoted_text,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "EvidenceSpan":
        return cls(d["document_id"], d["start"], d["end"], d["quoted_text"])


@dataclass(frozen=True)
class RecapCard:
    kind: RecapKind
    text: str
    evidence: tuple[EvidenceSpan, ...] = ()

    def __post_init__(self) -> None:
        n = word_count(self.text)
        if n > RECAP_WORD_LIMIT:
            raise CoreValidationError(f"recap card has {n} words; limit is {RECAP_WORD_LIMIT}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "text": self.text,
            "evidence": [s.to_dict() for s in self.evidence],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RecapCard":
        return cls(
            RecapKind(d["kind"]),
            d["text"],
            tuple(EvidenceSpan.from_dict(s) for s in d["evidence"]),
        )


# --------------------------------------------------------------------------
# Patient record
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Session:
    index: int
    date: date
    note_id: Optional[str] = None
    transcript_id: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "date": self.date.isoformat(),
            "note_id": self.note_id,
            "transcript_id": self.transcript_id,
        }


@dataclass(frozen=True)
class SessionTimeline:
    sessions: tuple[Session, ...]
    today: date

    def __post_init__(self) -> None:
        dates = [s.date for s in self.sessions]
        if any(a >= b for a, b in zip(dates, dates[1:])):
            raise CoreValidationError("session dates must be strictly increasing")
        if self.sessions and self.today <= self.sessions[-1].date:
            raise CoreValidationError(
                f"today ({self.today}) must be after the last session ({self.sessions[-1].date})"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "sessions": [s.to_dict() for s in self.sessions],
            "today": self.today.isoformat(),
        }


MISSING = None  # series points store None for missing observations


@dataclass(frozen=True)
class SeriesPoint:
    date: date
    value: Optional[float]

    @property
    def missing(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class TimeSeries:
    feature_id: str
    unit: str
    points: tuple[SeriesPoint, ...]

    def __post_init__(self) -> None:
        dates = [p.date for p in self.points]
        if any(a >= b for a, b in zip(dates, dates[1:])):
            raise CoreValidationError(f"series {self.feature_id}: dates must be strictly increasing")

    def observed(self) -> list[SeriesPoint]:
        return [p for p in self.points if not p.missing]

    def value_at(self, d: date) -> Optional[float]:
        for p in self.points:
            if p.date == d:
                return p.value
        return None

    def slice(self, interval: DateInterval) -> "TimeSeries":
        pts = tuple(p for p in self.points if interval.contains(p.date))
        return TimeSeries(self.feature_id, self.unit, pts)

    def missing_count(self) -> int:
        return sum(1 for p in self.points if p.missing)


@dataclass(frozen=True)
class HistoryItem:
    text: str
    onset: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {"text": self.text, "onset": self.onset}


@dataclass(frozen=True)
class PatientProfile:
    name: str
    age: int
    pronouns: str
    medical_history: tuple[HistoryItem, ...] = ()


@dataclass(frozen=True)
class Document:
    id: str
    kind: DataSourceType
    text: str


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    profile: PatientProfile
    timeline: SessionTimeline
    sensing: Mapping[str, TimeSeries]
    surveys: Mapping[str, TimeSeries]
    notes: Mapping[str, Document]
    transcripts: Mapping[str, Document]

    def __post_init__(self) -> None:
        for s in self.timeline.sessions:
            if s.note_id is not None and s.note_id not in self.notes:
                raise CoreValidationError(f"timeline references missing note {s.note_id!r}")
            if s.transcript_id is not None and s.transcript_id not in self.transcripts:
                raise CoreValidationError(
                    f"timeline references missing transcript {s.transcript_id!r}"
                )

    def series_for(self, feature_id: str) -> Optional[TimeSeries]:
        if feature_id in self.sensing:
            return self.sensing[feature_id]
        return self.surveys.get(feature_id)

    def available_features(self) -> list[str]:
        return sorted(self.sensing.keys()) + sorted(self.surveys.keys())
