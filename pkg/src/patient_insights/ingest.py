"""Load a patient data directory into an immutable :class:`PatientRecord`.

Directory layout (one directory per patient):

    profile.json               {name, age, pronouns, history: [{text, onset?}],
                                next_session?: ISO date}
    passive.csv                header: date,<feature_id>,... (daily cadence)
    surveys.csv                header: date,<instrument_id>,... (weekly or sparser)
    notes/<YYYY-MM-DD>.txt     plain text, optional SOAP headers
    transcripts/<YYYY-MM-DD>.txt  "SPEAKER: utterance" lines

Sessions derive from note filenames; transcripts attach to sessions by
matching date.  Unit conversions into display units happen here, once, so
every downstream consumer sees display-unit series.  Survey scores are
range-checked against their instrument.  Empty cells and the literal "NA"
parse as missing.
"""

from __future__ import annotations

import csv
import json
import logging
from datetime import date
from pathlib import Path
from typing import Optional

from .core import (
    CoreValidationError,
    DataSourceType,
    Document,
    HistoryItem,
    PatientProfile,
    PatientRecord,
    SeriesPoint,
    Session,
    SessionTimeline,
    TimeSeries,
)
from .registry import Registry

logger = logging.getLogger(__name__)

MISSING_TOKENS = {"", "NA"}


class IngestError(CoreValidationError):
    """Base class for data-directory loading failures."""


class MissingFileError(IngestError):
    """A required file or directory is absent."""


class UnknownFeatureColumnError(IngestError):
    """A CSV column does not map to any registered feature or instrument."""


class NonMonotonicDatesError(IngestError):
    """CSV dates are not strictly increasing."""


class EmptySeriesError(IngestError):
    """A series column contains no observed values at all."""


class OutOfRangeScoreError(IngestError):
    """A survey score falls outside its instrument's declared range."""


class AllMissingError(IngestError):
    """Interpolation requires at least one observed value."""


def convert_units(registry: Registry, feature_id: str, value: float) -> float:
    """Map a single raw value into its display unit (single application only)."""
    return registry.feature(feature_id).to_display(value)


def band_survey(registry: Registry, instrument_id: str, score: float) -> str:
    """Interpretation band label for a survey score."""
    instrument = registry.instrument(instrument_id)
    if not instrument.in_range(score):
        raise OutOfRangeScoreError(
            f"score {score} outside {instrument_id} range "
            f"[{instrument.score_min}, {instrument.score_max}]"
        )
    return instrument.band_for(score).label


def interpolate_interior(series: TimeSeries) -> TimeSeries:
    """Fill interior gaps linearly along the date axis.

    Leading and trailing missing values stay missing (no extrapolation) and
    observed values are never altered.  The returned series is for analysis
    only; displayed series keep their gaps.
    """
    observed_idx = [i for i, p in enumerate(series.points) if not p.missing]
    if not observed_idx:
        raise AllMissingError(f"series {series.feature_id!r} has no observed values")
    first, last = observed_idx[0], observed_idx[-1]
    new_points: list[SeriesPoint] = list(series.points)
    nxt = 0  # position in observed_idx of the next observed index >= i
    for i in range(first + 1, last):
        point = series.points[i]
        if not point.missing:
            continue
        while observed_idx[nxt] < i:
            nxt += 1
        left = series.points[observed_idx[nxt - 1]]
        right = series.points[observed_idx[nxt]]
        span = (right.date - left.date).days
        offset = (point.date - left.date).days
        value = left.value + (right.value - left.value) * offset / span
        new_points[i] = SeriesPoint(point.date, value)
    return TimeSeries(series.feature_id, series.unit, tuple(new_points))


def _read_wide_csv(
    path: Path, registry: Registry, *, survey: bool
) -> dict[str, TimeSeries]:
    """Parse a wide CSV (date + one column per feature) into display-unit series."""
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptySeriesError(f"{path.name}: file is empty") from None
        if not header or header[0] != "date":
            raise IngestError(f"{path.name}: first column must be 'date'")
        columns = header[1:]
        for col in columns:
            known = registry.is_instrument(col) if survey else registry.is_feature(col)
            if not known:
                raise UnknownFeatureColumnError(f"{path.name}: unknown column {col!r}")

        dates: list[date] = []
        cells: dict[str, list[Optional[float]]] = {c: [] for c in columns}
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise IngestError(
                    f"{path.name}:{row_no}: expected {len(header)} cells, got {len(row)}"
                )
            try:
                d = date.fromisoformat(row[0].strip())
            except ValueError:
                raise IngestError(
                    f"{path.name}:{row_no}: bad date {row[0]!r} (expected YYYY-MM-DD)"
                ) from None
            if dates and d <= dates[-1]:
                raise NonMonotonicDatesError(
                    f"{path.name}:{row_no}: date {d} not after previous {dates[-1]}"
                )
            dates.append(d)
            for col, cell in zip(columns, row[1:]):
                token = cell.strip()
                if token in MISSING_TOKENS:
                    cells[col].append(None)
                    continue
                try:
                    raw = float(token)
                except ValueError:
                    raise IngestError(
                        f"{path.name}:{row_no}: column {col!r} has non-numeric value {token!r}"
                    ) from None
                if survey:
                    if not registry.instrument(col).in_range(raw):
                        raise OutOfRangeScoreError(
                            f"{path.name}:{row_no}: {col} score {raw} outside "
                            f"[{registry.instrument(col).score_min}, "
                            f"{registry.instrument(col).score_max}]"
                        )
                    cells[col].append(raw)
                else:
                    cells[col].append(convert_units(registry, col, raw))

    series: dict[str, TimeSeries] = {}
    for col in columns:
        values = cells[col]
        if all(v is None for v in values):
            raise EmptySeriesError(f"{path.name}: column {col!r} has no observed values")
        unit = "score" if survey else registry.feature(col).display_unit
        series[col] = TimeSeries(
            feature_id=col,
            unit=unit,
            points=tuple(SeriesPoint(d, v) for d, v in zip(dates, values)),
        )
    return series


def _read_documents(
    directory: Path, kind: DataSourceType, *, required: bool
) -> dict[str, tuple[date, Document]]:
    """Read date-named text files into documents keyed by id ('note_2025-05-25')."""
    prefix = "note" if kind is DataSourceType.CLINICAL_NOTES else "transcript"
    if not directory.is_dir():
        if required:
            raise MissingFileError(f"missing directory: {directory}")
        return {}
    docs: dict[str, tuple[date, Document]] = {}
    for path in sorted(directory.glob("*.txt")):
        try:
            d = date.fromisoformat(path.stem)
        except ValueError:
            raise IngestError(
                f"{directory.name}/{path.name}: filename must be YYYY-MM-DD.txt"
            ) from None
        doc_id = f"{prefix}_{path.stem}"
        docs[doc_id] = (d, Document(id=doc_id, kind=kind, text=path.read_text("utf-8")))
    if required and not docs:
        raise MissingFileError(f"no notes found in {directory}")
    return docs


def _load_profile(path: Path) -> tuple[PatientProfile, Optional[date]]:
    try:
        raw = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestError(f"{path.name}: invalid JSON: {exc}") from exc
    for key in ("name", "age", "pronouns"):
        if key not in raw:
            raise IngestError(f"{path.name}: missing required key {key!r}")
    history = tuple(
        HistoryItem(text=item["text"], onset=item.get("onset"))
        for item in raw.get("history", [])
    )
    profile = PatientProfile(
        name=str(raw["name"]),
        age=int(raw["age"]),
        pronouns=str(raw["pronouns"]),
        medical_history=history,
    )
    next_session = None
    if raw.get("next_session"):
        try:
            next_session = date.fromisoformat(raw["next_session"])
        except ValueError:
            raise IngestError(
                f"{path.name}: bad next_session date {raw['next_session']!r}"
            ) from None
    return profile, next_session


def load_patient_dir(path: Path | str, registry: Registry) -> PatientRecord:
    """Load and link one patient directory.

    Raises :class:`MissingFileError`, :class:`UnknownFeatureColumnError`,
    :class:`NonMonotonicDatesError`, :class:`EmptySeriesError`, or
    :class:`OutOfRangeScoreError`, each naming the offending file or column.
    """
    root = Path(path)
    if not root.is_dir():
        raise MissingFileError(f"patient directory not found: {root}")
    for name in ("profile.json", "passive.csv", "surveys.csv"):
        if not (root / name).is_file():
            raise MissingFileError(f"missing file: {root / name}")

    profile, next_session = _load_profile(root / "profile.json")
    sensing = _read_wide_csv(root / "passive.csv", registry, survey=False)
    surveys = _read_wide_csv(root / "surveys.csv", registry, survey=True)
    note_docs = _read_documents(root / "notes", DataSourceType.CLINICAL_NOTES, required=True)
    transcript_docs = _read_documents(
        root / "transcripts", DataSourceType.TRANSCRIPTS, required=False
    )

    transcripts_by_date = {d: doc.id for doc_id, (d, doc) in transcript_docs.items()}
    sessions = tuple(
        Session(
            index=i + 1,
            date=d,
            note_id=doc.id,
            transcript_id=transcripts_by_date.get(d),
        )
        for i, (d, doc) in enumerate(
            sorted((d, doc) for d, doc in note_docs.values())
        )
    )

    all_dates = [
        p.date
        for series in list(sensing.values()) + list(surveys.values())
        for p in series.points
    ]
    if next_session is not None:
        today = next_session
    elif all_dates:
        today = max(all_dates)
    else:
        raise EmptySeriesError(f"{root}: no dated observations in any series")
    if sessions and today <= sessions[-1].date:
        raise IngestError(
            f"{root}: latest data date {today} is not after the last session "
            f"{sessions[-1].date}; set next_session in profile.json"
        )

    record = PatientRecord(
        patient_id=root.name,
        profile=profile,
        timeline=SessionTimeline(sessions=sessions, today=today),
        sensing=sensing,
        surveys=surveys,
        notes={doc.id: doc for _, doc in note_docs.values()},
        transcripts={doc.id: doc for _, doc in transcript_docs.values()},
    )
    logger.info(
        "loaded patient %s: %d sessions, %d passive series, %d survey series",
        record.patient_id,
        len(sessions),
        len(sensing),
        len(surveys),
    )
    return record


__all__ = [
    "AllMissingError",
    "EmptySeriesError",
    "IngestError",
    "MissingFileError",
    "NonMonotonicDatesError",
    "OutOfRangeScoreError",
    "UnknownFeatureColumnError",
    "band_survey",
    "convert_units",
    "interpolate_interior",
    "load_patient_dir",
]
