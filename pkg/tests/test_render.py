"""Byte-exact golden renderings for each fact-description template."""

from __future__ import annotations

from datetime import date

import pytest

from patient_insights.analyzer import render_fact_description
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
    TimePoint,
    TimePointPair,
)


def mk(**kw) -> DataFact:
    defaults = dict(
        id="f" + "0" * 12,
        significant=False,
        p_value=None,
        discovery=Discovery.EXPLORATORY,
        description="",
        source=DataSourceType.PASSIVE_SENSING,
    )
    defaults.update(kw)
    return DataFact(**defaults)


GOLDENS = [
    (
        mk(
            fact_type=FactType.COMPARISON,
            entity=Entity("total_sleep", "total sleep"),
            time=IntervalPair(
                DateInterval(date(2025, 5, 1), date(2025, 5, 14)),
                DateInterval(date(2025, 5, 15), date(2025, 5, 28)),
            ),
            value=MeanPair(6.5, 7.5, "hours"),
            attribute=FactAttribute.INCREASE,
        ),
        "The average total sleep increased from 6.5 hours (May 1–May 14) "
        "to 7.5 hours (May 15–May 28).",
    ),
    (
        mk(
            fact_type=FactType.TREND,
            entity=Entity("total_steps", "total steps"),
            time=DateInterval(date(2025, 5, 29), date(2025, 6, 11)),
            value=NoValue(),
            attribute=FactAttribute.RISE,
        ),
        "The total steps showed a rising trend from May 29 to Jun 11.",
    ),
    (
        mk(
            fact_type=FactType.OUTLIER,
            entity=Entity("total_screen_time", "total screen time"),
            time=TimePoint(date(2025, 6, 6)),
            value=ScalarValue(9.4, "hours"),
            attribute=FactAttribute.SPIKE,
        ),
        "An anomaly was detected for total screen time on Jun 6, "
        "which spiked to 9.4 hours.",
    ),
    (
        mk(
            fact_type=FactType.EXTREME,
            entity=Entity("total_steps", "total steps"),
            time=TimePoint(date(2025, 6, 3)),
            value=ScalarValue(12000, "count"),
            attribute=FactAttribute.MAX,
        ),
        "The total steps reached its max value of 12,000 on Jun 3.",
    ),
    (
        mk(
            fact_type=FactType.DIFFERENCE,
            entity=Entity("phq4", "PHQ-4 total"),
            time=TimePointPair(date(2025, 5, 28), date(2025, 6, 10)),
            value=ScalarPair(4, 7, "score"),
            attribute=FactAttribute.MORE,
            source=DataSourceType.SURVEY_SCORES,
        ),
        "The PHQ-4 total was 4 on May 28 and became more at 7 on Jun 10.",
    ),
]


@pytest.mark.parametrize(
    "fact,expected", GOLDENS, ids=[f.fact_type.value for f, _ in GOLDENS]
)
def test_template_golden(fact, expected):
    assert render_fact_description(fact) == expected


class TestTemplateVariants:
    def test_comparison_decrease(self):
        fact = mk(
            fact_type=FactType.COMPARISON,
            entity=Entity("total_sleep", "total sleep"),
            time=IntervalPair(
                DateInterval(date(2025, 5, 1), date(2025, 5, 14)),
                DateInterval(date(2025, 5, 15), date(2025, 5, 28)),
            ),
            value=MeanPair(7.5, 6.5, "hours"),
            attribute=FactAttribute.DECREASE,
        )
        assert render_fact_description(fact) == (
            "The average total sleep decreased from 7.5 hours (May 1–May 14) "
            "to 6.5 hours (May 15–May 28)."
        )

    def test_comparison_stable_verb(self):
        fact = mk(
            fact_type=FactType.COMPARISON,
            entity=Entity("phone_unlocks", "phone unlocks"),
            time=IntervalPair(
                DateInterval(date(2025, 5, 1), date(2025, 5, 14)),
                DateInterval(date(2025, 5, 15), date(2025, 5, 28)),
            ),
            value=MeanPair(60, 60.4, "count"),
            attribute=FactAttribute.REMAINED_STABLE,
        )
        assert render_fact_description(fact) == (
            "The average phone unlocks remained stable from 60 (May 1–May 14) "
            "to 60.4 (May 15–May 28)."
        )

    def test_trend_fall_and_cyclic(self):
        base = dict(
            fact_type=FactType.TREND,
            entity=Entity("total_sleep", "total sleep"),
            time=DateInterval(date(2025, 5, 29), date(2025, 6, 11)),
            value=NoValue(),
        )
        assert render_fact_description(mk(**base, attribute=FactAttribute.FALL)) == (
            "The total sleep showed a falling trend from May 29 to Jun 11."
        )
        assert render_fact_description(mk(**base, attribute=FactAttribute.CYCLIC)) == (
            "The total sleep showed a cyclic trend from May 29 to Jun 11."
        )

    def test_outlier_dip(self):
        fact = mk(
            fact_type=FactType.OUTLIER,
            entity=Entity("total_sleep", "total sleep"),
            time=TimePoint(date(2025, 6, 6)),
            value=ScalarValue(1, "hours"),
            attribute=FactAttribute.DIP,
        )
        assert render_fact_description(fact) == (
            "An anomaly was detected for total sleep on Jun 6, "
            "which dipped to 1 hour."
        )

    def test_extreme_min(self):
        fact = mk(
            fact_type=FactType.EXTREME,
            entity=Entity("total_steps", "total steps"),
            time=TimePoint(date(2025, 6, 8)),
            value=ScalarValue(2300, "count"),
            attribute=FactAttribute.MIN,
        )
        assert render_fact_description(fact) == (
            "The total steps reached its min value of 2,300 on Jun 8."
        )

    def test_difference_less(self):
        fact = mk(
            fact_type=FactType.DIFFERENCE,
            entity=Entity("pss4", "PSS-4 total"),
            time=TimePointPair(date(2025, 5, 28), date(2025, 6, 10)),
            value=ScalarPair(9, 5, "score"),
            attribute=FactAttribute.LESS,
            source=DataSourceType.SURVEY_SCORES,
        )
        assert render_fact_description(fact) == (
            "The PSS-4 total was 9 on May 28 and became less at 5 on Jun 10."
        )


class TestRenderedDescriptionsMatchStoredOnes:
    def test_pipeline_facts_store_their_rendering(self, pipeline_run):
        result, _ = pipeline_run
        for fact in result.facts.values():
            assert fact.description == render_fact_description(fact)
