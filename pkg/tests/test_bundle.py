"""Chart derivation, referential closure, schema validation, and disk format."""

from __future__ import annotations

import json
import random
from datetime import date, timedelta

import pytest

from patient_insights.analyzer import AnalysisWindow
from patient_insights.bundle import (
    ChartSpec,
    HighlightPoint,
    MeanLine,
    SeriesUnavailableError,
    SplitMarker,
    TrendSegment,
    bundle_path,
    canonical_json,
    chart_spec_for,
    closure_problems,
    read_bundle_dict,
    schema_problems,
    validate_bundle_dict,
    write_bundle,
)
from patient_insights.core import (
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
    ScalarPair,
    ScalarValue,
    SeriesPoint,
    TimePoint,
    TimePointPair,
    TimeSeries,
    fact_id,
)

D0 = date(2025, 5, 1)


def mkwindow(*, start=D0, split_days=13, total_days=27):
    last = start + timedelta(days=split_days)
    today = start + timedelta(days=total_days)
    return AnalysisWindow(
        delta_t1=DateInterval(start, last),
        delta_t2=DateInterval(last + timedelta(days=1), today),
        last_session=last,
        today=today,
    )


def mkseries(values, *, feature_id="total_sleep", unit="hours", start=D0):
    return TimeSeries(
        feature_id, unit,
        tuple(SeriesPoint(start + timedelta(days=i),
                          None if v is None else float(v))
              for i, v in enumerate(values)),
    )


def mkfact(ftype, time, value, attr, *, feature_id="total_sleep",
           label="total sleep", source=DataSourceType.PASSIVE_SENSING,
           significant=False, p=None, salience=0.0):
    entity = Entity(feature_id, label)
    return DataFact(
        id=fact_id(ftype, entity, time, value, attr, source),
        fact_type=ftype, entity=entity, time=time, value=value, attribute=attr,
        significant=significant, p_value=p, source=source,
        description="The fact.", discovery=Discovery.EXPLORATORY,
        salience=salience,
    )


class TestChartSpecs:
    def test_comparison_chart_gets_mean_lines_and_split(self):
        window = mkwindow()
        series = mkseries([7.0, None] + [7.2] * 26)
        fact = mkfact(
            FactType.COMPARISON,
            IntervalPair(window.delta_t1, window.delta_t2),
            MeanPair(7.0, 7.2, "hours"),
            FactAttribute.INCREASE,
            significant=True, p=0.01,
        )
        chart = chart_spec_for(fact, series, window)
        assert chart.chart_kind == "line"
        assert chart.fact_id == fact.id
        # raw cadence with nulls preserved over the full display range
        assert len(chart.series) == 28
        assert chart.series[1] == (D0 + timedelta(days=1), None)
        means = [a for a in chart.annotations if isinstance(a, MeanLine)]
        splits = [a for a in chart.annotations if isinstance(a, SplitMarker)]
        assert len(means) == 2 and len(splits) == 1
        assert means[0].interval == window.delta_t1
        assert means[0].value == pytest.approx(7.0)
        assert splits[0].date == window.last_session
        assert chart.y_label == "total sleep (hours)"

    def test_trend_chart_gets_least_squares_segment(self):
        window = mkwindow()
        values = [7.0] * 14 + [6.0 + 0.1 * i for i in range(14)]
        series = mkseries(values)
        fact = mkfact(
            FactType.TREND, window.delta_t2, NoValue(), FactAttribute.RISE,
            significant=True, p=0.001,
        )
        chart = chart_spec_for(fact, series, window)
        segs = [a for a in chart.annotations if isinstance(a, TrendSegment)]
        assert len(segs) == 1
        seg = segs[0]
        assert seg.start_date == window.delta_t2.start
        assert seg.end_date == window.delta_t2.end
        # least-squares endpoints on an exact line reproduce it
        assert seg.start_value == pytest.approx(6.0, abs=1e-6)
        assert seg.end_value == pytest.approx(6.0 + 0.1 * 13, abs=1e-6)

    def test_outlier_chart_highlights_the_point(self):
        window = mkwindow()
        values = [7.0] * 28
        values[20] = 12.0
        series = mkseries(values)
        fact = mkfact(
            FactType.OUTLIER, TimePoint(D0 + timedelta(days=20)),
            ScalarValue(12.0, "hours"), FactAttribute.SPIKE, salience=5.0,
        )
        chart = chart_spec_for(fact, series, window)
        highlights = [a for a in chart.annotations if isinstance(a, HighlightPoint)]
        assert len(highlights) == 1
        assert highlights[0].date == D0 + timedelta(days=20)
        assert highlights[0].value == pytest.approx(12.0)

    def test_difference_chart_highlights_both_endpoints(self):
        window = mkwindow()
        series = mkseries([7.0] * 27 + [8.5])
        fact = mkfact(
            FactType.DIFFERENCE,
            TimePointPair(window.last_session, window.today),
            ScalarPair(7.0, 8.5, "hours"),
            FactAttribute.MORE,
        )
        chart = chart_spec_for(fact, series, window)
        highlights = [a for a in chart.annotations if isinstance(a, HighlightPoint)]
        assert len(highlights) == 2
        assert [h.date for h in highlights] == [window.last_session, window.today]

    def test_survey_fact_renders_as_bar(self):
        window = mkwindow()
        series = TimeSeries(
            "phq4", "score",
            tuple(SeriesPoint(D0 + timedelta(days=7 * i), 4.0 + i) for i in range(4)),
        )
        fact = mkfact(
            FactType.EXTREME, TimePoint(D0 + timedelta(days=21)),
            ScalarValue(7.0, "score"), FactAttribute.MAX,
            feature_id="phq4", label="PHQ-4 total",
            source=DataSourceType.SURVEY_SCORES,
        )
        chart = chart_spec_for(fact, series, window)
        assert chart.chart_kind == "bar"
        # survey cadence is preserved: one bar per administration in range
        assert len(chart.series) == 4

    def test_series_without_observations_in_range_errors(self):
        window = mkwindow()
        out_of_range = TimeSeries(
            "total_sleep", "hours",
            (SeriesPoint(D0 - timedelta(days=10), 7.0),),
        )
        fact = mkfact(
            FactType.EXTREME, TimePoint(D0 - timedelta(days=10)),
            ScalarValue(7.0, "hours"), FactAttribute.MAX,
        )
        with pytest.raises(SeriesUnavailableError):
            chart_spec_for(fact, out_of_range, window)

    def test_float_rounding_to_six_decimals(self):
        window = mkwindow()
        series = mkseries([7.123456789] * 28)
        fact = mkfact(
            FactType.EXTREME, TimePoint(D0), ScalarValue(7.123456789, "hours"),
            FactAttribute.MAX,
        )
        chart = chart_spec_for(fact, series, window)
        payload = chart.to_dict()
        assert payload["series"][0]["value"] == 7.123457


class TestBundleDocument:
    def test_pipeline_bundle_is_schema_clean(self, pipeline_run):
        result, _ = pipeline_run
        payload = result.bundle.to_dict()
        assert schema_problems(payload) == []
        assert closure_problems(payload) == []
        assert validate_bundle_dict(payload) == []

    def test_closure_detects_dangling_fact_reference(self, pipeline_run):
        result, _ = pipeline_run
        payload = json.loads(canonical_json(result.bundle.to_dict()))
        payload["sections"]["patient_data_insights"][0]["fact_ids"][0] = "f" + "e" * 12
        problems = closure_problems(payload)
        assert any("fact" in p for p in problems)

    def test_closure_detects_chart_fact_mismatch(self, pipeline_run):
        result, _ = pipeline_run
        payload = json.loads(canonical_json(result.bundle.to_dict()))
        del payload["charts"][next(iter(payload["charts"]))]
        problems = closure_problems(payload)
        assert any("chart" in p for p in problems)

    def test_closure_detects_missing_document(self, pipeline_run):
        result, _ = pipeline_run
        payload = json.loads(canonical_json(result.bundle.to_dict()))
        payload["documents"] = []
        assert closure_problems(payload)

    def test_random_reference_deletion_always_caught(self, pipeline_run):
        """Deleting any single referenced object must break closure."""
        result, _ = pipeline_run
        rnd = random.Random(2025)
        for _ in range(12):
            payload = json.loads(canonical_json(result.bundle.to_dict()))
            pool = payload["facts"]
            victim = rnd.choice(sorted(pool))
            del pool[victim]
            assert closure_problems(payload), "deletion went unnoticed"

    def test_schema_rejects_extra_keys(self, pipeline_run):
        result, _ = pipeline_run
        payload = json.loads(canonical_json(result.bundle.to_dict()))
        payload["unexpected"] = 1
        assert any("unexpected" in p for p in schema_problems(payload))

    def test_schema_rejects_bad_recap_count(self, pipeline_run):
        result, _ = pipeline_run
        payload = json.loads(canonical_json(result.bundle.to_dict()))
        payload["sections"]["session_recap"].pop()
        assert schema_problems(payload)


class TestCanonicalForm:
    def test_canonical_json_is_sorted_and_newline_terminated(self):
        text = canonical_json({"b": 1, "a": {"z": 2, "y": [3, 1]}})
        assert text.endswith("\n")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"b": 1, "a": {"z": 2, "y": [3, 1]}}

    def test_same_payload_same_bytes(self, pipeline_run):
        result, _ = pipeline_run
        a = canonical_json(result.bundle.to_dict())
        b = canonical_json(json.loads(a))
        assert a == b


class TestDiskLayout:
    def test_write_read_roundtrip(self, tmp_path, pipeline_run):
        result, _ = pipeline_run
        path = write_bundle(tmp_path, result.bundle)
        expected = bundle_path(tmp_path, result.bundle.patient_id,
                               result.bundle.session_index)
        assert path == expected
        assert path.name == f"session_{result.bundle.session_index}.json"
        assert path.parent.name == "bundles"
        on_disk = read_bundle_dict(tmp_path, result.bundle.patient_id,
                                   result.bundle.session_index)
        assert on_disk == result.bundle.to_dict()
        # bytes on disk are canonical
        assert path.read_text("utf-8") == canonical_json(result.bundle.to_dict())

    def test_rewrite_is_byte_identical(self, tmp_path, pipeline_run):
        result, _ = pipeline_run
        p1 = write_bundle(tmp_path, result.bundle)
        first = p1.read_bytes()
        p2 = write_bundle(tmp_path, result.bundle)
        assert p1 == p2
        assert p2.read_bytes() == first

    def test_read_missing_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_bundle_dict(tmp_path, "nobody", 1)
