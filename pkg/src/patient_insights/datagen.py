"""Simulated patient generator with injected, manifest-documented findings.

Each feature is a feature-specific mean plus Gaussian noise in its original
recording unit; injections add structure on top (a level shift after the
last session, a linear drift, a single-day spike, or a weekly cycle), and
``manifest.json`` records exactly which finding each injection should
produce — the ground truth that recall tests score detectors against.

Everything is a pure function of the spec (seed included): the same spec
writes byte-identical directories.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .core import CoreValidationError

logger = logging.getLogger(__name__)

START_DATE = date(2025, 3, 3)
SURVEY_CADENCE_DAYS = 7
# Expected |x - median| / sd for a Gaussian — converts "spike size in robust
# units" into the raw offset the generator adds.
GAUSSIAN_MAD_PER_SD = 0.6745


class InvalidSpecError(CoreValidationError):
    """The injection spec is structurally unusable."""


@dataclass(frozen=True)
class BaseSignal:
    mean: float
    sd: float
    lo: Optional[float] = None
    hi: Optional[float] = None
    integer: bool = False
    decimals: int = 2


# Passive features in original recording units (minutes, meters, counts,
# or a 0..1 ratio); display conversion happens at ingest.
PASSIVE_SIGNALS: dict[str, BaseSignal] = {
    "distance_traveled": BaseSignal(5000.0, 1500.0, lo=0.0),
    "time_at_home": BaseSignal(600.0, 120.0, lo=0.0, hi=1440.0),
    "routine_consistency": BaseSignal(0.8, 0.07, lo=0.0, hi=1.0, decimals=4),
    "phone_unlocks": BaseSignal(60.0, 15.0, lo=0.0, integer=True),
    "total_screen_time": BaseSignal(240.0, 60.0, lo=0.0, hi=1440.0),
    "awakening_episodes": BaseSignal(2.0, 1.0, lo=0.0, integer=True),
    "total_sleep": BaseSignal(450.0, 45.0, lo=0.0, hi=1440.0),
    "bedtime": BaseSignal(90.0, 40.0, lo=-240.0, hi=720.0),
    "wake_time": BaseSignal(480.0, 45.0, lo=0.0, hi=1080.0),
    "inactive_periods": BaseSignal(6.0, 2.0, lo=0.0, integer=True),
    "total_steps": BaseSignal(7000.0, 1800.0, lo=0.0, integer=True),
}

SURVEY_SIGNALS: dict[str, BaseSignal] = {
    "phq4": BaseSignal(4.0, 2.0, lo=0.0, hi=12.0, integer=True),
    "phq4_anxiety": BaseSignal(2.0, 1.0, lo=0.0, hi=6.0, integer=True),
    "phq4_depression": BaseSignal(2.0, 1.0, lo=0.0, hi=6.0, integer=True),
    "pss4": BaseSignal(6.0, 2.0, lo=0.0, hi=16.0, integer=True),
    "positive_affect": BaseSignal(15.0, 3.0, lo=5.0, hi=25.0, integer=True),
    "negative_affect": BaseSignal(12.0, 3.0, lo=5.0, hi=25.0, integer=True),
}

ALL_SIGNALS = {**PASSIVE_SIGNALS, **SURVEY_SIGNALS}

# One subjective sentence per topic, each containing that topic's trigger;
# injected features pull their topic's sentence into the session notes so
# the guided path fires on them.
_TOPIC_SENTENCES: dict[str, str] = {
    "sleep": "Patient reports restless nights and poor sleep.",
    "activity": "Patient reports getting little exercise.",
    "stress": "Patient reports mounting stress at work.",
    "mood": "Patient reports a persistently low mood.",
    "social": "Patient reports feeling isolated from friends.",
    "screen": "Patient reports long evenings of screen use.",
}

_FEATURE_TOPICS: dict[str, str] = {
    "total_sleep": "sleep",
    "bedtime": "sleep",
    "wake_time": "sleep",
    "awakening_episodes": "sleep",
    "total_steps": "activity",
    "inactive_periods": "activity",
    "pss4": "stress",
    "phq4_anxiety": "stress",
    "phq4": "mood",
    "phq4_depression": "mood",
    "positive_affect": "mood",
    "negative_affect": "mood",
    "time_at_home": "social",
    "distance_traveled": "social",
    "routine_consistency": "social",
    "total_screen_time": "screen",
    "phone_unlocks": "screen",
}

_NAMES = [
    "Alex Rivera",
    "Sam Chen",
    "Jordan Lee",
    "Casey Morgan",
    "Riley Patel",
    "Avery Kim",
    "Quinn Davis",
    "Morgan Reyes",
]
_PRONOUNS = ["they/them", "she/her", "he/him"]
_HISTORY_POOL = [
    {"text": "Recurrent low mood, managed with medication", "onset": "2021"},
    {"text": "Work-related burnout episode", "onset": "2023-06"},
    {"text": "Sleep difficulties following relocation", "onset": "2024-02"},
    {"text": "Generalized worry, in ongoing therapy", "onset": "2022"},
]

_ASSESSMENT_VARIANTS = [
    "Assessment: Symptoms steady compared with the previous visit.",
    "Assessment: Gradual improvement in day-to-day functioning.",
    "Assessment: Ongoing difficulties consistent with recent reports.",
]
_PLAN_VARIANTS = [
    "Plan: Continue sertraline 50 mg daily; review at next visit.",
    "Plan: Maintain current medication; discussed keeping a regular routine.",
    "Plan: Refill sertraline prescription; encouraged brief daily walks.",
]


@dataclass(frozen=True)
class Injection:
    """One ground-truth structure added to a feature's series."""

    feature: str
    kind: str  # shift | trend | spike | cycle
    effect_size: float = 0.0  # shift: offset in base-sd units
    slope: float = 0.0  # trend: base-sd units per 14 days
    magnitude: float = 0.0  # spike: offset in robust (MAD) units
    day: Optional[int] = None  # spike: day offset from the start date
    period: int = 7  # cycle: days per oscillation
    amplitude: float = 0.0  # cycle: base-sd units

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], n_days: int) -> "Injection":
        feature = d.get("feature")
        kind = d.get("kind")
        if feature not in ALL_SIGNALS:
            raise InvalidSpecError(f"unknown injection feature {feature!r}")
        if kind == "shift":
            return cls(feature, "shift", effect_size=float(d["effect_size"]))
        if kind == "trend":
            return cls(feature, "trend", slope=float(d["slope"]))
        if kind == "spike":
            raw_day = d.get("day", d.get("date"))
            if isinstance(raw_day, str):
                day = (date.fromisoformat(raw_day) - START_DATE).days
            elif isinstance(raw_day, int):
                day = raw_day
            else:
                raise InvalidSpecError("spike injection needs a day offset or ISO date")
            if not 0 <= day < n_days:
                raise InvalidSpecError(f"spike day {day} outside 0..{n_days - 1}")
            return cls(feature, "spike", magnitude=float(d["magnitude"]), day=day)
        if kind == "cycle":
            period = int(d.get("period", 7))
            if period < 2:
                raise InvalidSpecError(f"cycle period must be >= 2, got {period}")
            return cls(feature, "cycle", period=period, amplitude=float(d["amplitude"]))
        raise InvalidSpecError(f"unknown injection kind {kind!r}")


@dataclass(frozen=True)
class InjectionSpec:
    """Complete recipe for one simulated patient."""

    seed: int
    n_days: int = 112
    features: tuple[str, ...] = tuple(ALL_SIGNALS)
    injections: tuple[Injection, ...] = ()
    missing_rate: float = 0.0
    session_count: int = 3
    session_spacing: int = 28
    noise_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise InvalidSpecError("seed must be non-negative")
        unknown = [f for f in self.features if f not in ALL_SIGNALS]
        if unknown:
            raise InvalidSpecError(f"unknown features: {unknown}")
        if not 0.0 <= self.missing_rate <= 0.5:
            raise InvalidSpecError(
                f"missing_rate must be in [0, 0.5], got {self.missing_rate}"
            )
        if self.session_count < 1 or self.session_spacing < 2:
            raise InvalidSpecError("need at least one session and spacing >= 2 days")
        if self.n_days <= self.session_count * self.session_spacing:
            raise InvalidSpecError(
                f"n_days={self.n_days} leaves no data after the last session "
                f"(day {self.session_count * self.session_spacing - 1})"
            )
        if self.noise_scale < 0:
            raise InvalidSpecError("noise_scale must be non-negative")
        targeted = [i.feature for i in self.injections]
        missing = [f for f in targeted if f not in self.features]
        if missing:
            raise InvalidSpecError(f"injections target absent features: {missing}")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "InjectionSpec":
        try:
            n_days = int(d.get("n_days", 112))
            sessions = d.get("sessions", {})
            return cls(
                seed=int(d["seed"]),
                n_days=n_days,
                features=tuple(d.get("features", tuple(ALL_SIGNALS))),
                injections=tuple(
                    Injection.from_dict(i, n_days) for i in d.get("injections", [])
                ),
                missing_rate=float(d.get("missing_rate", 0.0)),
                session_count=int(sessions.get("count", 3)),
                session_spacing=int(sessions.get("spacing", 28)),
                noise_scale=float(d.get("noise_scale", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpecError(f"malformed injection spec: {exc}") from exc

    @property
    def session_days(self) -> list[int]:
        return [i * self.session_spacing - 1 for i in range(1, self.session_count + 1)]

    @property
    def last_session_day(self) -> int:
        return self.session_days[-1]


def _apply_injection(values: np.ndarray, inj: Injection, spec: InjectionSpec) -> None:
    """Add one injection, in place, in the feature's original unit."""
    sd = ALL_SIGNALS[inj.feature].sd
    days = np.arange(len(values), dtype=float)
    split = spec.last_session_day
    if inj.kind == "shift":
        values[days > split] += inj.effect_size * sd
    elif inj.kind == "trend":
        after = days > split
        values[after] += inj.slope * sd * (days[after] - split) / 14.0
    elif inj.kind == "spike":
        values[inj.day] += inj.magnitude * GAUSSIAN_MAD_PER_SD * sd
    elif inj.kind == "cycle":
        values += inj.amplitude * sd * np.sin(2.0 * np.pi * days / inj.period)


def _expected_fact(inj: Injection, spec: InjectionSpec) -> dict[str, Any]:
    """The manifest entry an injection promises detectors will find."""
    sessions = spec.session_days
    split = spec.last_session_day
    t2 = {
        "start": (START_DATE + timedelta(days=split + 1)).isoformat(),
        "end": (START_DATE + timedelta(days=spec.n_days - 1)).isoformat(),
    }
    if inj.kind == "shift":
        t1_start = sessions[-2] + 1 if len(sessions) >= 2 else 0
        return {
            "feature": inj.feature,
            "fact_type": "comparison",
            "attribute": "increase" if inj.effect_size > 0 else "decrease",
            "window": {
                "t1": {
                    "start": (START_DATE + timedelta(days=t1_start)).isoformat(),
                    "end": (START_DATE + timedelta(days=split)).isoformat(),
                },
                "t2": t2,
            },
        }
    if inj.kind == "trend":
        return {
            "feature": inj.feature,
            "fact_type": "trend",
            "attribute": "rise" if inj.slope > 0 else "fall",
            "window": t2,
        }
    if inj.kind == "spike":
        return {
            "feature": inj.feature,
            "fact_type": "outlier",
            "attribute": "spike" if inj.magnitude > 0 else "dip",
            "date": (START_DATE + timedelta(days=inj.day)).isoformat(),
        }
    return {
        "feature": inj.feature,
        "fact_type": "trend",
        "attribute": "cyclic",
        "window": t2,
    }


def _format_value(value: float, signal: BaseSignal) -> str:
    if signal.integer:
        return str(int(round(value)))
    return f"{value:.{signal.decimals}f}"


def _generate_series(
    spec: InjectionSpec, rng: np.random.Generator
) -> dict[str, np.ndarray]:
    """Raw values per feature per day, injections applied, domains clipped."""
    series: dict[str, np.ndarray] = {}
    for feature in spec.features:
        signal = ALL_SIGNALS[feature]
        noise = rng.normal(0.0, signal.sd, size=spec.n_days) * spec.noise_scale
        values = np.full(spec.n_days, signal.mean) + noise
        for inj in spec.injections:
            if inj.feature == feature:
                _apply_injection(values, inj, spec)
        values = np.clip(
            values,
            signal.lo if signal.lo is not None else -np.inf,
            signal.hi if signal.hi is not None else np.inf,
        )
        series[feature] = values
    return series


def _missing_mask(
    spec: InjectionSpec, feature: str, rng: np.random.Generator
) -> np.ndarray:
    """True where a value is dropped; anchors and injected days stay observed."""
    mask = rng.random(spec.n_days) < spec.missing_rate
    protected = {0, spec.n_days - 1, *spec.session_days}
    protected.update(
        inj.day for inj in spec.injections if inj.kind == "spike" and inj.feature == feature
    )
    for day in protected:
        mask[day] = False
    return mask


def _note_text(spec: InjectionSpec, rng: np.random.Generator) -> str:
    topics: list[str] = []
    for inj in spec.injections:
        topic = _FEATURE_TOPICS.get(inj.feature)
        if topic and topic not in topics:
            topics.append(topic)
    if not topics:
        topics = ["sleep"]
    subjective = " ".join(_TOPIC_SENTENCES[t] for t in topics)
    objective = "Objective: Arrived on time; engaged throughout the visit."
    assessment = _ASSESSMENT_VARIANTS[int(rng.integers(len(_ASSESSMENT_VARIANTS)))]
    plan = _PLAN_VARIANTS[int(rng.integers(len(_PLAN_VARIANTS)))]
    return "\n".join([f"Subjective: {subjective}", objective, assessment, plan]) + "\n"


def _transcript_text(spec: InjectionSpec, rng: np.random.Generator) -> str:
    topic = _FEATURE_TOPICS.get(
        spec.injections[0].feature if spec.injections else "total_sleep", "sleep"
    )
    patient_line = _TOPIC_SENTENCES.get(topic, _TOPIC_SENTENCES["sleep"]).replace(
        "Patient reports", "Honestly, there has been"
    )
    return (
        "Clinician: How have the past few weeks been?\n"
        f"Patient: {patient_line}\n"
        "Clinician: Thank you for sharing; let's look at it together.\n"
    )


def _profile(spec: InjectionSpec, rng: np.random.Generator) -> dict[str, Any]:
    name = _NAMES[int(rng.integers(len(_NAMES)))]
    pronouns = _PRONOUNS[int(rng.integers(len(_PRONOUNS)))]
    age = int(rng.integers(20, 71))
    k = int(rng.integers(1, 3))
    picks = rng.choice(len(_HISTORY_POOL), size=k, replace=False)
    history = [_HISTORY_POOL[int(i)] for i in sorted(picks)]
    return {"name": name, "age": age, "pronouns": pronouns, "history": history}


def _stable_json(payload: Mapping[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def generate_patient(spec: InjectionSpec, out_root: Path) -> tuple[Path, dict[str, Any]]:
    """Write one simulated patient directory; returns (directory, manifest)."""
    rng = np.random.default_rng(spec.seed)
    patient_id = f"sim_{spec.seed:04d}"
    patient_dir = Path(out_root) / patient_id
    (patient_dir / "notes").mkdir(parents=True, exist_ok=True)
    (patient_dir / "transcripts").mkdir(parents=True, exist_ok=True)

    profile = _profile(spec, rng)
    series = _generate_series(spec, rng)
    masks = {f: _missing_mask(spec, f, rng) for f in spec.features}

    dates = [START_DATE + timedelta(days=d) for d in range(spec.n_days)]
    passive_features = [f for f in spec.features if f in PASSIVE_SIGNALS]
    survey_features = [f for f in spec.features if f in SURVEY_SIGNALS]

    def csv_rows(feature_ids: Sequence[str], day_indices: Sequence[int]) -> str:
        lines = ["date," + ",".join(feature_ids)]
        for d in day_indices:
            cells = [dates[d].isoformat()]
            for f in feature_ids:
                if masks[f][d]:
                    cells.append("")
                else:
                    cells.append(_format_value(series[f][d], ALL_SIGNALS[f]))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    (patient_dir / "passive.csv").write_text(
        csv_rows(passive_features, range(spec.n_days)), encoding="utf-8"
    )
    survey_days = list(range(0, spec.n_days, SURVEY_CADENCE_DAYS))
    (patient_dir / "surveys.csv").write_text(
        csv_rows(survey_features, survey_days), encoding="utf-8"
    )
    (patient_dir / "profile.json").write_text(_stable_json(profile), encoding="utf-8")

    for day in spec.session_days:
        stamp = dates[day].isoformat()
        (patient_dir / "notes" / f"{stamp}.txt").write_text(
            _note_text(spec, rng), encoding="utf-8"
        )
        (patient_dir / "transcripts" / f"{stamp}.txt").write_text(
            _transcript_text(spec, rng), encoding="utf-8"
        )

    manifest = {
        "patient_id": patient_id,
        "seed": spec.seed,
        "n_days": spec.n_days,
        "start_date": START_DATE.isoformat(),
        "sessions": [dates[d].isoformat() for d in spec.session_days],
        "today": dates[-1].isoformat(),
        "features": list(spec.features),
        "missing_rate": spec.missing_rate,
        "noise_scale": spec.noise_scale,
        "expected": [_expected_fact(inj, spec) for inj in spec.injections],
    }
    (patient_dir / "manifest.json").write_text(_stable_json(manifest), encoding="utf-8")
    logger.info(
        "generated %s: %d days, %d injections, missing_rate=%.2f",
        patient_id,
        spec.n_days,
        len(spec.injections),
        spec.missing_rate,
    )
    return patient_dir, manifest


__all__ = [
    "ALL_SIGNALS",
    "GAUSSIAN_MAD_PER_SD",
    "Injection",
    "InjectionSpec",
    "InvalidSpecError",
    "PASSIVE_SIGNALS",
    "START_DATE",
    "SURVEY_SIGNALS",
    "generate_patient",
]
