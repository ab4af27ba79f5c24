"""Fact discovery over patient series and template rendering of facts.

The five discovery operations each mine one fact type from a series:

* comparison — location test between the two inter-session windows;
* trend     — monotonic / cyclic / stability classification of the recent
              window;
* outliers  — robust residual anomalies, classified spike or dip;
* extreme   — max/min raw value scan;
* difference — two-date raw value change.

Each emitted fact carries a deterministic content-hash id, a salience score
used for ranking, and its rendered natural-language description.  Rendering
is template-based, byte-stable, and shared by every downstream consumer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm

from .config import StatConfig
from .core import (
    DataFact,
    DataSourceType,
    DateInterval,
    Discovery,
    Entity,
    FactAttribute,
    FactType,
    IntervalPair,
    MeanPair,
    NoValue,
    PatientRecord,
    ScalarPair,
    ScalarValue,
    SeriesPoint,
    TimePoint,
    TimePointPair,
    TimeRef,
    TimeSeries,
    ValueRef,
    fact_id,
)
from .ingest import AllMissingError, EmptySeriesError, interpolate_interior
from .registry import Registry
from .stats import (
    SeriesTooShortError,
    StatsError,
    TooFewPointsError,
    ZeroMeanError,
    ZeroVarianceError,
    autocorrelation,
    coefficient_of_variation,
    mad_outliers,
    mann_kendall,
    mann_whitney_u,
    robust_residuals,
)

logger = logging.getLogger(__name__)

SALIENCE_CAP = 40.0


class MissingAtDateError(EmptySeriesError):
    """A two-date difference was requested at a date with no observation."""


# ---------------------------------------------------------------------------
# Analysis window


@dataclass(frozen=True)
class AnalysisWindow:
    """The two inter-session intervals framing every discovery run.

    ``delta_t1`` covers the retrospective span ending at the last session;
    ``delta_t2`` covers the day after the last session through today.
    """

    delta_t1: DateInterval
    delta_t2: DateInterval
    last_session: date
    today: date

    def __post_init__(self) -> None:
        if self.delta_t1.end != self.last_session:
            raise ValueError(
                f"first window must end at the last session "
                f"({self.delta_t1.end} != {self.last_session})"
            )
        if self.delta_t2.start != self.last_session + timedelta(days=1):
            raise ValueError("second window must start the day after the last session")
        if self.delta_t2.end != self.today:
            raise ValueError("second window must end today")


def window_for_session(
    record: PatientRecord, session_index: Optional[int] = None
) -> AnalysisWindow:
    """Build the analysis window for one recorded session.

    ``session_index`` is 1-based over the recorded sessions; the default is
    the most recent one.  For historical sessions, "today" is the next
    session's date, reconstructing the view a reviewer had at that time.
    """
    sessions = record.timeline.sessions
    if not sessions:
        raise EmptySeriesError(f"patient {record.patient_id}: no sessions on timeline")
    n = len(sessions)
    k = n if session_index is None else session_index
    if not 1 <= k <= n:
        raise ValueError(f"session index {k} out of range 1..{n}")

    last_session = sessions[k - 1].date
    today = sessions[k].date if k < n else record.timeline.today

    if k >= 2:
        start1 = sessions[k - 2].date + timedelta(days=1)
    else:
        all_dates = [
            p.date
            for series in list(record.sensing.values()) + list(record.surveys.values())
            for p in series.points
        ]
        earliest = min(all_dates) if all_dates else last_session
        start1 = min(earliest, last_session)
    return AnalysisWindow(
        delta_t1=DateInterval(start1, last_session),
        delta_t2=DateInterval(last_session + timedelta(days=1), today),
        last_session=last_session,
        today=today,
    )


# ---------------------------------------------------------------------------
# Formatting helpers (template rendering must be byte-stable)

_MONTHS = (
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
)

# Units rendered as words after the number; singular when the number is "1".
_WORD_UNITS = {"hours": "hour", "miles": "mile", "times": "time"}
# Units that stay implicit (bare numbers).
_BARE_UNITS = {"count", "score", ""}

EN_DASH = "–"


def format_date(d: date) -> str:
    return f"{_MONTHS[d.month - 1]} {d.day}"


def format_interval(interval: DateInterval) -> str:
    return f"{format_date(interval.start)}{EN_DASH}{format_date(interval.end)}"


def format_number(value: float) -> str:
    """At most one decimal place, thousands-separated, no trailing '.0'."""
    rounded = round(float(value), 1)
    if rounded == int(rounded):
        return f"{int(rounded):,}"
    return f"{rounded:,.1f}"


def format_quantity(value: float, unit: str) -> str:
    number = format_number(value)
    if unit in _BARE_UNITS:
        return number
    if unit in _WORD_UNITS:
        singular = _WORD_UNITS[unit]
        return f"{number} {singular}" if number == "1" else f"{number} {singular}s"
    return f"{number} {unit}"


_TREND_PHRASES = {
    FactAttribute.RISE: "a rising",
    FactAttribute.FALL: "a falling",
    FactAttribute.STABLE: "a stable",
    FactAttribute.CYCLIC: "a cyclic",
    FactAttribute.VARIABLE: "a variable",
    FactAttribute.NONE: "no",
}

_COMPARISON_VERBS = {
    FactAttribute.INCREASE: "increased",
    FactAttribute.DECREASE: "decreased",
    FactAttribute.REMAINED_STABLE: "remained stable",
}

_OUTLIER_VERBS = {FactAttribute.SPIKE: "spiked", FactAttribute.DIP: "dipped"}


def render_fact_description(fact: DataFact) -> str:
    """Fill the sentence template for the fact's type; deterministic."""
    label = fact.entity.label
    if fact.fact_type is FactType.COMPARISON:
        assert isinstance(fact.time, IntervalPair) and isinstance(fact.value, MeanPair)
        return (
            f"The average {label} {_COMPARISON_VERBS[fact.attribute]} from "
            f"{format_quantity(fact.value.mean1, fact.value.unit)} "
            f"({format_interval(fact.time.first)}) to "
            f"{format_quantity(fact.value.mean2, fact.value.unit)} "
            f"({format_interval(fact.time.second)})."
        )
    if fact.fact_type is FactType.TREND:
        assert isinstance(fact.time, DateInterval)
        return (
            f"The {label} showed {_TREND_PHRASES[fact.attribute]} trend from "
            f"{format_date(fact.time.start)} to {format_date(fact.time.end)}."
        )
    if fact.fact_type is FactType.OUTLIER:
        assert isinstance(fact.time, TimePoint) and isinstance(fact.value, ScalarValue)
        return (
            f"An anomaly was detected for {label} on {format_date(fact.time.t)}, "
            f"which {_OUTLIER_VERBS[fact.attribute]} to "
            f"{format_quantity(fact.value.value, fact.value.unit)}."
        )
    if fact.fact_type is FactType.EXTREME:
        assert isinstance(fact.time, TimePoint) and isinstance(fact.value, ScalarValue)
        return (
            f"The {label} reached its {fact.attribute.value} value of "
            f"{format_quantity(fact.value.value, fact.value.unit)} on "
            f"{format_date(fact.time.t)}."
        )
    assert isinstance(fact.time, TimePointPair) and isinstance(fact.value, ScalarPair)
    return (
        f"The {label} was {format_quantity(fact.value.v1, fact.value.unit)} on "
        f"{format_date(fact.time.t1)} and became {fact.attribute.value} at "
        f"{format_quantity(fact.value.v2, fact.value.unit)} on "
        f"{format_date(fact.time.t2)}."
    )


# ---------------------------------------------------------------------------
# Discovery helpers


def _entity(registry: Registry, feature_id: str) -> Entity:
    return Entity(feature_id=feature_id, label=registry.label_for(feature_id))


def _source(registry: Registry, feature_id: str) -> DataSourceType:
    if registry.is_instrument(feature_id):
        return DataSourceType.SURVEY_SCORES
    return DataSourceType.PASSIVE_SENSING


def _p_to_salience(p: float) -> float:
    """Monotone map from a p-value to a z-like magnitude, capped."""
    p = max(min(p, 1.0), 1e-300)
    return float(min(norm.isf(p / 2.0), SALIENCE_CAP))


def _make_fact(
    registry: Registry,
    feature_id: str,
    fact_type: FactType,
    time: TimeRef,
    value: ValueRef,
    attribute: FactAttribute,
    *,
    significant: bool,
    p_value: Optional[float],
    discovery: Discovery,
    salience: float,
) -> DataFact:
    entity = _entity(registry, feature_id)
    source = _source(registry, feature_id)
    fid = fact_id(fact_type, entity, time, value, attribute, source)
    fact = DataFact(
        id=fid,
        fact_type=fact_type,
        entity=entity,
        time=time,
        value=value,
        attribute=attribute,
        significant=significant,
        p_value=p_value,
        source=source,
        description="",
        discovery=discovery,
        salience=salience,
    )
    return fact.with_description(render_fact_description(fact))


def _observed_in(series: TimeSeries, interval: DateInterval) -> list[SeriesPoint]:
    return [p for p in series.slice(interval).points if not p.missing]


def regular_values_in(
    series: TimeSeries, interval: DateInterval
) -> tuple[list[date], np.ndarray, list[bool]]:
    """Gap-free values over an interval for grid-based methods.

    Slices to the interval, fills interior gaps linearly, and trims
    leading/trailing missing points.  Returns the dates, the values, and a
    mask marking which grid points were originally observed.
    """
    window = series.slice(interval)
    observed_dates = {p.date for p in window.points if not p.missing}
    if not observed_dates:
        raise AllMissingError(
            f"series {series.feature_id!r} has no observations in {interval.start}..{interval.end}"
        )
    filled = interpolate_interior(window)
    pts = [p for p in filled.points if not p.missing]
    dates = [p.date for p in pts]
    values = np.asarray([p.value for p in pts], dtype=float)
    mask = [d in observed_dates for d in dates]
    return dates, values, mask


# ---------------------------------------------------------------------------
# Discovery operations


def discover_comparison(
    registry: Registry,
    series: TimeSeries,
    window: AnalysisWindow,
    config: StatConfig,
    discovery: Discovery = Discovery.EXPLORATORY,
) -> Optional[DataFact]:
    """Location comparison of the two windows; None when a window is too thin."""
    vals1 = [p.value for p in _observed_in(series, window.delta_t1)]
    vals2 = [p.value for p in _observed_in(series, window.delta_t2)]
    if min(len(vals1), len(vals2)) < config.min_points_per_interval:
        return None
    result = mann_whitney_u(vals1, vals2)
    significant = result.p_value < config.alpha
    if significant:
        delta = float(np.median(vals2)) - float(np.median(vals1))
        if delta > 0:
            attribute = FactAttribute.INCREASE
        elif delta < 0:
            attribute = FactAttribute.DECREASE
        else:
            attribute = FactAttribute.REMAINED_STABLE
    else:
        attribute = FactAttribute.REMAINED_STABLE
    return _make_fact(
        registry,
        series.feature_id,
        FactType.COMPARISON,
        IntervalPair(window.delta_t1, window.delta_t2),
        MeanPair(float(np.mean(vals1)), float(np.mean(vals2)), series.unit),
        attribute,
        significant=significant,
        p_value=result.p_value,
        discovery=discovery,
        salience=_p_to_salience(result.p_value),
    )


def discover_trend(
    registry: Registry,
    series: TimeSeries,
    interval: DateInterval,
    config: StatConfig,
    discovery: Discovery = Discovery.EXPLORATORY,
) -> DataFact:
    """Classify the interval's movement.

    Precedence: significant monotonic trend, then cyclic (autocorrelation at
    the configured lag on a gap-free grid), then stable/variable by relative
    dispersion, then none.
    """
    observed = [p.value for p in _observed_in(series, interval)]
    if len(observed) < 4:
        raise TooFewPointsError(
            f"trend on {series.feature_id!r} needs >= 4 observed points, "
            f"got {len(observed)}"
        )
    mk = mann_kendall(observed)

    attribute: Optional[FactAttribute] = None
    if mk.p_value < config.alpha and mk.s != 0:
        attribute = FactAttribute.RISE if mk.s > 0 else FactAttribute.FALL
    if attribute is None:
        try:
            _, grid_values, _ = regular_values_in(series, interval)
            r = autocorrelation(grid_values, config.acf_lag)
            if r >= config.acf_cyclic_threshold:
                attribute = FactAttribute.CYCLIC
        except (SeriesTooShortError, ZeroVarianceError, AllMissingError):
            pass
    if attribute is None:
        try:
            cv = coefficient_of_variation(observed)
            if cv <= config.cv_stable_max:
                attribute = FactAttribute.STABLE
            elif cv >= config.cv_variable_min:
                attribute = FactAttribute.VARIABLE
        except ZeroMeanError:
            pass
    if attribute is None:
        attribute = FactAttribute.NONE

    significant = attribute in (FactAttribute.RISE, FactAttribute.FALL)
    return _make_fact(
        registry,
        series.feature_id,
        FactType.TREND,
        interval,
        NoValue(),
        attribute,
        significant=significant,
        p_value=mk.p_value,
        discovery=discovery,
        salience=_p_to_salience(mk.p_value),
    )


def discover_outliers(
    registry: Registry,
    series: TimeSeries,
    interval: DateInterval,
    config: StatConfig,
    discovery: Discovery = Discovery.EXPLORATORY,
) -> list[DataFact]:
    """Robust residual anomalies at originally observed dates."""
    try:
        dates, values, mask = regular_values_in(series, interval)
    except AllMissingError as exc:
        raise SeriesTooShortError(str(exc)) from exc
    if len(values) < 4:
        raise SeriesTooShortError(
            f"outlier scan on {series.feature_id!r} needs >= 4 points after "
            f"trimming, got {len(values)}"
        )
    residuals = robust_residuals(values, config.stl_period)
    flags = mad_outliers(residuals, threshold=config.mad_threshold, mask=mask)
    facts = []
    for flag in flags:
        attribute = FactAttribute.SPIKE if flag.is_spike else FactAttribute.DIP
        facts.append(
            _make_fact(
                registry,
                series.feature_id,
                FactType.OUTLIER,
                TimePoint(dates[flag.index]),
                ScalarValue(float(values[flag.index]), series.unit),
                attribute,
                significant=False,
                p_value=None,
                discovery=discovery,
                salience=float(flag.score),
            )
        )
    return facts


def discover_extreme(
    registry: Registry,
    series: TimeSeries,
    interval: DateInterval,
    kind: FactAttribute,
    discovery: Discovery = Discovery.EXPLORATORY,
) -> DataFact:
    """Max or min observed value in the interval; ties go to the earliest date."""
    if kind not in (FactAttribute.MAX, FactAttribute.MIN):
        raise ValueError(f"extreme kind must be max or min, got {kind}")
    observed = _observed_in(series, interval)
    if not observed:
        raise EmptySeriesError(
            f"series {series.feature_id!r} has no observations in "
            f"{interval.start}..{interval.end}"
        )
    best = observed[0]
    for p in observed[1:]:
        if kind is FactAttribute.MAX and p.value > best.value:
            best = p
        elif kind is FactAttribute.MIN and p.value < best.value:
            best = p
    return _make_fact(
        registry,
        series.feature_id,
        FactType.EXTREME,
        TimePoint(best.date),
        ScalarValue(float(best.value), series.unit),
        kind,
        significant=False,
        p_value=None,
        discovery=discovery,
        salience=0.0,
    )


def discover_difference(
    registry: Registry,
    series: TimeSeries,
    t1: date,
    t2: date,
    discovery: Discovery = Discovery.EXPLORATORY,
) -> Optional[DataFact]:
    """Raw change between two dates; equal values yield no fact."""
    v1 = series.value_at(t1)
    v2 = series.value_at(t2)
    if v1 is None:
        raise MissingAtDateError(f"{series.feature_id!r} has no observation on {t1}")
    if v2 is None:
        raise MissingAtDateError(f"{series.feature_id!r} has no observation on {t2}")
    if v1 == v2:
        return None
    attribute = FactAttribute.MORE if v2 > v1 else FactAttribute.LESS
    denom = abs(v1) if v1 != 0 else 1.0
    return _make_fact(
        registry,
        series.feature_id,
        FactType.DIFFERENCE,
        TimePointPair(t1, t2),
        ScalarPair(float(v1), float(v2), series.unit),
        attribute,
        significant=False,
        p_value=None,
        discovery=discovery,
        salience=abs(v2 - v1) / denom,
    )


# ---------------------------------------------------------------------------
# Per-feature and whole-record discovery


def _default_difference_dates(
    series: TimeSeries, window: AnalysisWindow
) -> Optional[tuple[date, date]]:
    """Default two-date pick: the last session vs the newest observation."""
    observed = [p for p in series.points if not p.missing and p.date <= window.today]
    if not observed:
        return None
    t2 = observed[-1].date
    if t2 <= window.last_session:
        return None
    return window.last_session, t2


def discover_feature_facts(
    registry: Registry,
    series: TimeSeries,
    window: AnalysisWindow,
    config: StatConfig,
    discovery: Discovery,
    skip_log: list[str],
    fact_types: Optional[Sequence[FactType]] = None,
) -> list[DataFact]:
    """Run every requested discovery operation on one series, logging skips."""
    wanted = set(fact_types) if fact_types is not None else set(FactType)
    fid = series.feature_id
    facts: list[DataFact] = []

    if FactType.COMPARISON in wanted:
        fact = discover_comparison(registry, series, window, config, discovery)
        if fact is None:
            skip_log.append(
                f"{fid}/comparison: fewer than {config.min_points_per_interval} "
                "observed points in a window"
            )
        else:
            facts.append(fact)
    if FactType.TREND in wanted:
        try:
            facts.append(
                discover_trend(registry, series, window.delta_t2, config, discovery)
            )
        except (TooFewPointsError, StatsError) as exc:
            skip_log.append(f"{fid}/trend: {exc}")
    if FactType.OUTLIER in wanted:
        try:
            facts.extend(
                discover_outliers(registry, series, window.delta_t2, config, discovery)
            )
        except (SeriesTooShortError, AllMissingError) as exc:
            skip_log.append(f"{fid}/outliers: {exc}")
    if FactType.EXTREME in wanted:
        try:
            facts.append(
                discover_extreme(
                    registry, series, window.delta_t2, FactAttribute.MAX, discovery
                )
            )
            facts.append(
                discover_extreme(
                    registry, series, window.delta_t2, FactAttribute.MIN, discovery
                )
            )
        except EmptySeriesError as exc:
            skip_log.append(f"{fid}/extreme: {exc}")
    if FactType.DIFFERENCE in wanted:
        pair = _default_difference_dates(series, window)
        if pair is None:
            skip_log.append(f"{fid}/difference: no observation after the last session")
        else:
            try:
                fact = discover_difference(registry, series, pair[0], pair[1], discovery)
                if fact is not None:
                    facts.append(fact)
            except MissingAtDateError as exc:
                skip_log.append(f"{fid}/difference: {exc}")
    return facts


def exploratory_discover(
    registry: Registry,
    record: PatientRecord,
    window: AnalysisWindow,
    config: StatConfig,
) -> tuple[list[DataFact], list[str]]:
    """Mine all fact types across every available feature."""
    skip_log: list[str] = []
    facts: list[DataFact] = []
    for feature_id in record.available_features():
        series = record.series_for(feature_id)
        facts.extend(
            discover_feature_facts(
                registry, series, window, config, Discovery.EXPLORATORY, skip_log
            )
        )
    facts.sort(key=lambda f: (f.entity.feature_id, f.fact_type.value, f.id))
    logger.info(
        "exploratory discovery: %d facts, %d skips", len(facts), len(skip_log)
    )
    return facts, skip_log


__all__ = [
    "AnalysisWindow",
    "MissingAtDateError",
    "discover_comparison",
    "discover_difference",
    "discover_extreme",
    "discover_feature_facts",
    "discover_outliers",
    "discover_trend",
    "exploratory_discover",
    "format_date",
    "format_interval",
    "format_number",
    "format_quantity",
    "regular_values_in",
    "render_fact_description",
    "window_for_session",
]
