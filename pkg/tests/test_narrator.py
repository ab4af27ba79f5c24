"""Recap extraction, insight wording, ordering, and message drafting."""

from __future__ import annotations

from datetime import date, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patient_insights.backends import DeterministicBackend
from patient_insights.core import (
    BiopsychosocialTag,
    DataFact,
    DataSourceType,
    DateInterval,
    Discovery,
    Document,
    Entity,
    FactAttribute,
    FactType,
    Insight,
    NoValue,
    RecapKind,
    TwoPartText,
    fact_id,
    insight_id,
    word_count,
)
from patient_insights.narrator import (
    NOT_DOCUMENTED,
    EmptyNoteError,
    EmptySelectionError,
    NarrativeSections,
    NarratorError,
    compose_two_part,
    draft_message,
    narrate_fact,
    summarize_recap,
    thread,
    validate_word_limit,
)
from patient_insights.registry import ActivityDef, LexiconMissError

D0 = date(2025, 5, 1)

SOAP_NOTE = (
    "Subjective: Patient reports sleeping better this week and feeling rested. "
    "Energy improving.\n"
    "Objective: Appears calm; speech normal.\n"
    "Assessment: Making steady progress on routines.\n"
    "Plan: Continue sertraline 50 mg nightly. Follow up in two weeks.\n"
)


def mknote(text, doc_id="note_2025-05-28"):
    return Document(id=doc_id, kind=DataSourceType.CLINICAL_NOTES, text=text)


def mkfact(feature_id="total_sleep", label="total sleep", *, significant=True,
           source=DataSourceType.PASSIVE_SENSING, start=D0, days=13):
    entity = Entity(feature_id, label)
    time = DateInterval(start, start + timedelta(days=days))
    fid = fact_id(FactType.TREND, entity, time, NoValue(), FactAttribute.RISE, source)
    return DataFact(
        id=fid, fact_type=FactType.TREND, entity=entity, time=time,
        value=NoValue(), attribute=FactAttribute.RISE, significant=significant,
        p_value=0.01 if significant else None, source=source,
        description="The trend.", discovery=Discovery.EXPLORATORY,
    )


def mkinsight(fact_ids, *, origin=Discovery.EXPLORATORY, sources=None, qid=None):
    return Insight(
        id=insight_id(origin, tuple(fact_ids), qid),
        text=TwoPartText("Shifting sleep pattern", "a change worth reviewing"),
        tags=frozenset({BiopsychosocialTag.BIOLOGICAL}),
        sources=frozenset(sources or {DataSourceType.PASSIVE_SENSING}),
        fact_ids=tuple(fact_ids),
        origin=origin,
    )


@pytest.fixture
def registry(app_config):
    return app_config.registry


@pytest.fixture
def backend():
    return DeterministicBackend()


class TestRecap:
    def test_soap_note_yields_three_anchored_cards(self, registry, backend):
        note = mknote(SOAP_NOTE)
        cards = summarize_recap(note, registry, backend)
        assert [c.kind for c in cards] == [
            RecapKind.SUBJECTIVE_OBJECTIVE, RecapKind.ASSESSMENT, RecapKind.PLAN
        ]
        for card in cards:
            assert word_count(card.text) <= 12
            for span in card.evidence:
                assert span.matches(SOAP_NOTE)
        so, assessment, plan = cards
        assert "sleeping better" in so.evidence[0].quoted_text
        assert assessment.text.startswith("Making steady progress")
        # the Plan card is the first medication-bearing sentence
        assert "sertraline" in plan.evidence[0].quoted_text

    def test_long_sentence_truncated_with_ellipsis(self, registry, backend):
        words = " ".join(f"w{i}" for i in range(20))
        note = mknote(f"Subjective: {words}.\nAssessment: Fine.\nPlan: Adjust dose.\n")
        cards = summarize_recap(note, registry, backend)
        so = cards[0]
        assert so.text.endswith("…")
        assert word_count(so.text) == 12
        # evidence still covers the whole untruncated sentence
        assert so.evidence[0].quoted_text == words

    def test_plan_without_medication_sentence_is_not_documented(self, registry, backend):
        note = mknote(
            "Subjective: Slept fine.\nAssessment: Stable.\n"
            "Plan: Keep a regular wind-down routine.\n"
        )
        cards = summarize_recap(note, registry, backend)
        assert cards[2].text == NOT_DOCUMENTED
        assert cards[2].evidence == ()

    def test_missing_sections_become_placeholders(self, registry, backend):
        note = mknote("Subjective: Slept fine this week.\n")
        cards = summarize_recap(note, registry, backend)
        assert cards[0].text == "Slept fine this week"
        assert cards[1].text == NOT_DOCUMENTED
        assert cards[2].text == NOT_DOCUMENTED

    def test_unstructured_note_uses_first_sentence(self, registry, backend):
        note = mknote("Session went well overall. Patient cheerful.")
        cards = summarize_recap(note, registry, backend)
        assert cards[0].text == "Session went well overall"
        assert cards[0].evidence[0].quoted_text == "Session went well overall"
        assert cards[1].text == NOT_DOCUMENTED

    def test_empty_note_raises(self, registry, backend):
        with pytest.raises(EmptyNoteError):
            summarize_recap(mknote("   \n"), registry, backend)


class TestTwoPartWording:
    def test_clause_filled_and_capitalized(self, registry):
        fact = mkfact()
        text = compose_two_part(fact, registry)
        assert text.fact_clause[0].isupper()
        assert "total sleep" in text.fact_clause.lower()
        assert text.implication
        assert word_count(text.combined()) < 15

    def test_unknown_feature_is_a_lexicon_miss(self, registry):
        fact = mkfact("made_up", "made up")
        with pytest.raises(LexiconMissError):
            compose_two_part(fact, registry)

    def test_deterministic_fact_narration_is_verbatim(self, backend):
        fact = mkfact()
        assert narrate_fact(fact, backend) == fact.description

    def test_word_limit_strictness(self):
        text = " ".join(["w"] * 12)
        assert validate_word_limit(text, 12) == (True, 12)
        assert validate_word_limit(text, 12, strict=True) == (False, 12)


class TestThread:
    def make_fixtures(self):
        f_sig1 = mkfact("total_sleep", "total sleep", significant=True)
        f_sig2 = mkfact("bedtime", "bedtime", significant=True)
        f_insig = mkfact("wake_time", "wake time", significant=False)
        f_survey = mkfact("phq4", "PHQ-4 total", significant=True,
                          source=DataSourceType.SURVEY_SCORES)
        facts = {f.id: f for f in (f_sig1, f_sig2, f_insig, f_survey)}

        guided = [
            mkinsight([f_sig1.id], origin=Discovery.GUIDED,
                      sources={DataSourceType.PASSIVE_SENSING,
                               DataSourceType.CLINICAL_NOTES}, qid="q_sleep"),
        ]
        exploratory = [
            mkinsight([f_sig2.id]),
            mkinsight([f_insig.id]),
            mkinsight([f_sig1.id, f_survey.id],
                      sources={DataSourceType.PASSIVE_SENSING,
                               DataSourceType.SURVEY_SCORES}),
        ]
        return guided, exploratory, facts

    def test_multimodal_first_then_guided(self):
        guided, exploratory, facts = self.make_fixtures()
        ordered = thread(guided, exploratory, facts)
        assert len(ordered) == 4
        # two-source insights first; guided leads at equal breadth
        assert ordered[0].origin is Discovery.GUIDED
        assert len(ordered[1].sources) == 2
        # single-source: significant exploratory before insignificant
        assert [len(i.sources) for i in ordered] == [2, 2, 1, 1]

    def test_exploratory_capped_at_six(self):
        guided, _, facts = self.make_fixtures()
        many = []
        for i in range(9):
            f = mkfact("total_steps", "total steps", significant=(i % 2 == 0),
                       start=D0 + timedelta(days=2 * i), days=1)
            facts[f.id] = f
            many.append(mkinsight([f.id]))
        ordered = thread(guided, many, facts)
        assert len(ordered) == len(guided) + 6

    @given(st.randoms())
    @settings(max_examples=25, deadline=None)
    def test_permutation_invariant(self, rnd):
        guided, exploratory, facts = self.make_fixtures()
        baseline = [i.id for i in thread(guided, exploratory, facts)]
        g, e = list(guided), list(exploratory)
        rnd.shuffle(g)
        rnd.shuffle(e)
        assert [i.id for i in thread(g, e, facts)] == baseline


class TestNarrativeSections:
    def test_kind_order_enforced(self, registry, backend):
        cards = summarize_recap(mknote(SOAP_NOTE), registry, backend)
        with pytest.raises(NarratorError):
            NarrativeSections(
                medical_history=(),
                session_recap=(cards[1], cards[0], cards[2]),
                patient_data_insights=(),
                summary_pool=(),
            )

    def test_summary_pool_must_reference_insights(self, registry, backend):
        cards = summarize_recap(mknote(SOAP_NOTE), registry, backend)
        with pytest.raises(NarratorError, match="summary pool"):
            NarrativeSections(
                medical_history=(),
                session_recap=tuple(cards),
                patient_data_insights=(),
                summary_pool=("i" + "0" * 12,),
            )


class TestDraftMessage:
    def test_golden_message(self, registry):
        fact = mkfact()
        insight = mkinsight([fact.id])
        insight = Insight(
            id=insight.id,
            text=TwoPartText("Rising total sleep since last session",
                             "lengthening sleep pattern"),
            tags=insight.tags,
            sources=insight.sources,
            fact_ids=insight.fact_ids,
            origin=insight.origin,
        )
        activity = ActivityDef(activity_id="walk", label="Take a short daily walk")
        message = draft_message("Alex", [insight], [activity], registry)
        assert message == (
            "Hi Alex,\n"
            "- We noticed rising total sleep since your last session.\n"
            "- Suggested activity: Take a short daily walk.\n"
            "See you at our next session."
        )

    def test_empty_selection_rejected(self, registry):
        with pytest.raises(EmptySelectionError):
            draft_message("Alex", [], [], registry)

    def test_blocked_terms_elided(self, registry):
        insight = mkinsight([mkfact().id])
        insight = Insight(
            id=insight.id,
            text=TwoPartText("Maybe a disorder pattern forming", "watch it"),
            tags=insight.tags,
            sources=insight.sources,
            fact_ids=insight.fact_ids,
            origin=insight.origin,
        )
        message = draft_message("Alex", [insight], [], registry)
        assert "disorder" not in message
        assert "  " not in message.splitlines()[1]

    def test_activities_only_message(self, registry):
        activity = ActivityDef(activity_id="walk", label="Take a short daily walk")
        message = draft_message("Sam", [], [activity], registry)
        lines = message.splitlines()
        assert lines[0] == "Hi Sam,"
        assert lines[-1] == "See you at our next session."
        assert len(lines) == 3
