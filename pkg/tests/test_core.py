"""Domain-type invariants: fact shapes, ids, word limits, spans, timelines."""

from __future__ import annotations

from datetime import date

import pytest

from patient_insights.core import (
    BiopsychosocialTag,
    CoreValidationError,
    DataFact,
    DataSourceType,
    DateInterval,
    Discovery,
    Entity,
    EvidenceSpan,
    FactAttribute,
    FactType,
    Insight,
    IntervalPair,
    MeanPair,
    NoValue,
    RecapCard,
    RecapKind,
    ScalarPair,
    ScalarValue,
    Session,
    SessionTimeline,
    TimePoint,
    TimePointPair,
    TimeSeries,
    SeriesPoint,
    TwoPartText,
    fact_id,
    insight_id,
    time_ref_from_dict,
    time_ref_span,
    validate_insight,
    value_ref_from_dict,
    word_count,
)


def make_fact(**overrides) -> DataFact:
    base = dict(
        id="f" + "0" * 12,
        fact_type=FactType.OUTLIER,
        entity=Entity("bedtime", "bedtime"),
        time=TimePoint(date(2025, 6, 10)),
        value=ScalarValue(3.5, "hours"),
        attribute=FactAttribute.SPIKE,
        significant=True,
        p_value=0.001,
        source=DataSourceType.PASSIVE_SENSING,
        description="x",
        discovery=Discovery.EXPLORATORY,
    )
    base.update(overrides)
    return DataFact(**base)


class TestFactShapes:
    def test_attribute_must_match_type(self):
        with pytest.raises(CoreValidationError):
            make_fact(attribute=FactAttribute.RISE)

    def test_time_shape_enforced(self):
        with pytest.raises(CoreValidationError):
            make_fact(time=DateInterval(date(2025, 6, 1), date(2025, 6, 10)))

    def test_value_shape_enforced(self):
        with pytest.raises(CoreValidationError):
            make_fact(value=NoValue())

    def test_significant_requires_p_value(self):
        with pytest.raises(CoreValidationError):
            make_fact(p_value=None)

    def test_p_value_bounds(self):
        with pytest.raises(CoreValidationError):
            make_fact(p_value=1.5)

    def test_roundtrip_serialization(self):
        fact = make_fact()
        assert DataFact.from_dict(fact.to_dict()) == fact

    def test_comparison_shape(self):
        fact = make_fact(
            fact_type=FactType.COMPARISON,
            time=IntervalPair(
                DateInterval(date(2025, 5, 1), date(2025, 5, 28)),
                DateInterval(date(2025, 5, 29), date(2025, 6, 25)),
            ),
            value=MeanPair(7.2, 6.1, "hours"),
            attribute=FactAttribute.DECREASE,
        )
        assert DataFact.from_dict(fact.to_dict()) == fact


class TestTimeRefs:
    def test_interval_order_validated(self):
        with pytest.raises(CoreValidationError):
            DateInterval(date(2025, 6, 10), date(2025, 6, 1))

    def test_point_pair_order_validated(self):
        with pytest.raises(CoreValidationError):
            TimePointPair(date(2025, 6, 10), date(2025, 6, 10))

    def test_interval_pair_must_not_overlap(self):
        with pytest.raises(CoreValidationError):
            IntervalPair(
                DateInterval(date(2025, 5, 1), date(2025, 5, 28)),
                DateInterval(date(2025, 5, 28), date(2025, 6, 25)),
            )

    def test_span_covers_all_kinds(self):
        assert time_ref_span(TimePoint(date(2025, 6, 1))) == (
            date(2025, 6, 1),
            date(2025, 6, 1),
        )
        pair = IntervalPair(
            DateInterval(date(2025, 5, 1), date(2025, 5, 28)),
            DateInterval(date(2025, 5, 29), date(2025, 6, 25)),
        )
        assert time_ref_span(pair) == (date(2025, 5, 1), date(2025, 6, 25))

    def test_roundtrip_all_kinds(self):
        refs = [
            TimePoint(date(2025, 6, 1)),
            TimePointPair(date(2025, 6, 1), date(2025, 6, 2)),
            DateInterval(date(2025, 6, 1), date(2025, 6, 30)),
            IntervalPair(
                DateInterval(date(2025, 5, 1), date(2025, 5, 28)),
                DateInterval(date(2025, 5, 29), date(2025, 6, 25)),
            ),
        ]
        for ref in refs:
            assert time_ref_from_dict(ref.to_dict()) == ref

    def test_value_roundtrip_all_kinds(self):
        values = [
            ScalarValue(1.5, "hours"),
            ScalarPair(1.0, 2.0, "score"),
            MeanPair(7.2, 6.1, "hours"),
            NoValue(),
        ]
        for value in values:
            assert value_ref_from_dict(value.to_dict()) == value


class TestFactId:
    def test_deterministic_and_prefixed(self):
        fact = make_fact()
        fid = fact_id(
            fact.fact_type, fact.entity, fact.time, fact.value, fact.attribute, fact.source
        )
        assert fid == fact_id(
            fact.fact_type, fact.entity, fact.time, fact.value, fact.attribute, fact.source
        )
        assert fid.startswith("f") and len(fid) == 13

    def test_discovery_path_does_not_change_id(self):
        """The same finding reached by either path must deduplicate."""
        fact = make_fact()
        args = (fact.fact_type, fact.entity, fact.time, fact.value, fact.attribute, fact.source)
        assert fact_id(*args) == fact_id(*args)
        guided = make_fact(discovery=Discovery.GUIDED, description="other words")
        assert fact_id(
            guided.fact_type, guided.entity, guided.time, guided.value,
            guided.attribute, guided.source,
        ) == fact_id(*args)

    def test_value_change_changes_id(self):
        fact = make_fact()
        a = fact_id(fact.fact_type, fact.entity, fact.time, fact.value, fact.attribute, fact.source)
        b = fact_id(
            fact.fact_type, fact.entity, fact.time, ScalarValue(9.9, "hours"),
            fact.attribute, fact.source,
        )
        assert a != b


class TestWordLimits:
    def test_word_count_splits_on_whitespace(self):
        assert word_count("a b  c\td") == 4
        assert word_count("well-being matters") == 2

    def test_two_part_combined_shape(self):
        text = TwoPartText("Lower total sleep since last session", "less rest than before")
        assert text.combined() == (
            "Lower total sleep since last session, suggesting less rest than before."
        )

    def test_insight_word_limit_strict(self):
        fact_ids = ("f" + "0" * 12,)
        long_text = TwoPartText("one two three four five six seven eight", "nine ten eleven twelve a b")
        assert word_count(long_text.combined()) == 15
        with pytest.raises(CoreValidationError):
            Insight(
                id="i" + "0" * 12,
                text=long_text,
                tags=frozenset({BiopsychosocialTag.BIOLOGICAL}),
                sources=frozenset({DataSourceType.PASSIVE_SENSING}),
                fact_ids=fact_ids,
                origin=Discovery.GUIDED,
            )

    def test_insight_fact_count_bounds(self):
        text = TwoPartText("Short clause", "brief implication")
        with pytest.raises(CoreValidationError):
            Insight(
                id="i" + "0" * 12,
                text=text,
                tags=frozenset({BiopsychosocialTag.BIOLOGICAL}),
                sources=frozenset({DataSourceType.PASSIVE_SENSING}),
                fact_ids=tuple(f"f{i:012d}" for i in range(7)),
                origin=Discovery.GUIDED,
            )

    def test_insight_fact_ids_distinct(self):
        text = TwoPartText("Short clause", "brief implication")
        with pytest.raises(CoreValidationError):
            Insight(
                id="i" + "0" * 12,
                text=text,
                tags=frozenset({BiopsychosocialTag.BIOLOGICAL}),
                sources=frozenset({DataSourceType.PASSIVE_SENSING}),
                fact_ids=("f" + "0" * 12, "f" + "0" * 12),
                origin=Discovery.GUIDED,
            )

    def test_recap_card_limit_inclusive(self):
        RecapCard(RecapKind.PLAN, " ".join(["word"] * 12))
        with pytest.raises(CoreValidationError):
            RecapCard(RecapKind.PLAN, " ".join(["word"] * 13))

    def test_validate_insight_reports_dangling(self):
        text = TwoPartText("Short clause", "brief implication")
        insight = Insight(
            id="i" + "0" * 12,
            text=text,
            tags=frozenset({BiopsychosocialTag.BIOLOGICAL}),
            sources=frozenset({DataSourceType.PASSIVE_SENSING}),
            fact_ids=("f" + "a" * 12,),
            origin=Discovery.GUIDED,
        )
        problems = validate_insight(insight, known_fact_ids=set())
        assert any("dangling" in p for p in problems)

    def test_insight_id_ignores_fact_order(self):
        ids = ("f" + "1" * 12, "f" + "2" * 12)
        assert insight_id(Discovery.GUIDED, ids, "q_sleep") == insight_id(
            Discovery.GUIDED, ids[::-1], "q_sleep"
        )


class TestEvidenceSpan:
    def test_matches_exact_substring(self):
        doc = "Subjective: Patient reports poor sleep."
        span = EvidenceSpan("note_1", 12, 39, doc[12:39])
        assert span.matches(doc)

    def test_mismatch_detected(self):
        span = EvidenceSpan("note_1", 0, 4, "Xyz!")
        assert not span.matches("Subjective: text")

    def test_offsets_validated(self):
        with pytest.raises(CoreValidationError):
            EvidenceSpan("note_1", 5, 5, "x")


class TestTimeline:
    def test_sessions_strictly_increasing(self):
        with pytest.raises(CoreValidationError):
            SessionTimeline(
                sessions=(
                    Session(1, date(2025, 5, 1)),
                    Session(2, date(2025, 5, 1)),
                ),
                today=date(2025, 6, 1),
            )

    def test_today_after_last_session(self):
        with pytest.raises(CoreValidationError):
            SessionTimeline(
                sessions=(Session(1, date(2025, 5, 1)),),
                today=date(2025, 5, 1),
            )


class TestTimeSeries:
    def test_dates_strictly_increasing(self):
        with pytest.raises(CoreValidationError):
            TimeSeries(
                "total_sleep",
                "hours",
                (
                    SeriesPoint(date(2025, 5, 2), 7.0),
                    SeriesPoint(date(2025, 5, 1), 8.0),
                ),
            )

    def test_observed_and_missing_count(self):
        series = TimeSeries(
            "total_sleep",
            "hours",
            (
                SeriesPoint(date(2025, 5, 1), 7.0),
                SeriesPoint(date(2025, 5, 2), None),
                SeriesPoint(date(2025, 5, 3), 6.0),
            ),
        )
        assert [p.value for p in series.observed()] == [7.0, 6.0]
        assert series.missing_count() == 1
        assert series.value_at(date(2025, 5, 2)) is None
        assert series.value_at(date(2025, 5, 3)) == 6.0

    def test_slice_is_inclusive(self):
        series = TimeSeries(
            "total_sleep",
            "hours",
            tuple(
                SeriesPoint(date(2025, 5, d), float(d)) for d in range(1, 11)
            ),
        )
        window = series.slice(DateInterval(date(2025, 5, 3), date(2025, 5, 5)))
        assert [p.value for p in window.points] == [3.0, 4.0, 5.0]
