"""Insight synthesis: question-guided and exploratory paths.

Guided path: scan the last session's note and transcript for registered
topic triggers, plan which available features answer each question, and
compose one insight per answerable plan from that plan's facts.  When any
fact reached significance, only significant facts are cited; otherwise up
to six facts ranked by salience serve as the fallback.

Exploratory path: cluster all discovered facts by feature and overlapping
time span, composing one insight per cluster so unanticipated patterns
surface even when no question pointed at them.

Both paths compose wording deterministically from the lexicons; an external
backend may propose wording instead, validated against the same constraints
(word limit, two-part shape, diagnostic-language screen) with deterministic
fallback after its retries are exhausted.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .backends import (
    Backend,
    BackendError,
    DeterministicBackend,
    ExternalBackend,
    compose_external,
)
from .core import (
    BiopsychosocialTag,
    CoreValidationError,
    DataFact,
    DataSourceType,
    Discovery,
    Document,
    EvidenceSpan,
    Insight,
    INSIGHT_WORD_LIMIT,
    PatientRecord,
    TwoPartText,
    insight_id,
    time_ref_span,
    word_count,
)
from .narrator import compose_two_part
from .registry import QuestionTopic, Registry, UnknownFeatureError

logger = logging.getLogger(__name__)


class SynthesisError(CoreValidationError):
    """Base class for synthesis failures."""


class NoLastSessionNoteError(SynthesisError):
    """Question generation requires a note for the last session."""


class NoFactsError(SynthesisError):
    """Insight synthesis received no facts."""


@dataclass(frozen=True)
class Question:
    """A guided-discovery question anchored to a source document."""

    id: str
    text: str
    topic_id: str
    trigger: str
    target_features: tuple[str, ...]
    span: EvidenceSpan
    doc_kind: DataSourceType

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "topic_id": self.topic_id,
            "trigger": self.trigger,
            "target_features": list(self.target_features),
            "span": self.span.to_dict(),
            "doc_kind": self.doc_kind.value,
        }


@dataclass(frozen=True)
class QuestionPlan:
    """Which available features can answer a question."""

    question_id: str
    answerable: bool
    features: tuple[str, ...]
    fact_types_requested: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.answerable != bool(self.features):
            raise SynthesisError(
                f"plan for {self.question_id}: answerable must mirror feature availability"
            )


# ---------------------------------------------------------------------------
# Question generation


def _question_from_topic(
    topic: QuestionTopic, trigger: str, doc: Document, text: Optional[str] = None
) -> Question:
    lowered = doc.text.lower()
    offset = lowered.find(trigger.lower())
    span = EvidenceSpan(
        document_id=doc.id,
        start=offset,
        end=offset + len(trigger),
        quoted_text=doc.text[offset : offset + len(trigger)],
    )
    return Question(
        id=f"q_{topic.topic_id}",
        text=text or topic.question,
        topic_id=topic.topic_id,
        trigger=trigger,
        target_features=topic.target_features,
        span=span,
        doc_kind=doc.kind,
    )


def _scan_documents(registry: Registry, documents: Sequence[Document]) -> list[Question]:
    questions: dict[str, Question] = {}
    for doc in documents:
        for topic, trigger in registry.match_topics(doc.text):
            if topic.topic_id not in questions:
                questions[topic.topic_id] = _question_from_topic(topic, trigger, doc)
    return [questions[tid] for tid in sorted(questions)]


def _external_questions(
    registry: Registry, documents: Sequence[Document], backend: ExternalBackend
) -> Optional[list[Question]]:
    """Model-proposed questions, kept only when a registry topic anchors them."""
    source_text = "\n\n".join(doc.text for doc in documents)
    for attempt in range(backend.config.max_retries + 1):
        try:
            text = compose_external(
                backend,
                "Read the clinical note and propose short follow-up questions "
                "about the patient's recent behavior, one per line.",
                source_text,
                purpose="question generation",
            )
        except BackendError as exc:
            logger.warning("question generation attempt %d failed: %s", attempt + 1, exc)
            continue
        questions: dict[str, Question] = {}
        for line in text.splitlines():
            line = line.strip().lstrip("-*0123456789. ").strip()
            if not line:
                continue
            for topic, trigger in registry.match_topics(line):
                if topic.topic_id in questions:
                    continue
                anchor = next(
                    (d for d in documents if trigger.lower() in d.text.lower()), None
                )
                if anchor is None:
                    continue  # no evidence span possible; drop the question
                questions[topic.topic_id] = _question_from_topic(
                    topic, trigger, anchor, text=line
                )
        if questions:
            return [questions[tid] for tid in sorted(questions)]
    return None


def generate_questions(
    registry: Registry, documents: Sequence[Document], backend: Backend
) -> list[Question]:
    """Questions for the documents of one session, de-duplicated by topic."""
    docs = [d for d in documents if d is not None]
    if not docs:
        raise NoLastSessionNoteError("no documents supplied for question generation")
    if isinstance(backend, ExternalBackend):
        questions = _external_questions(registry, docs, backend)
        if questions is not None:
            return questions
        logger.warning("external question generation failed; using trigger scan")
    return _scan_documents(registry, docs)


def generate_questions_for_session(
    registry: Registry,
    record: PatientRecord,
    backend: Backend,
    session_index: Optional[int] = None,
) -> list[Question]:
    """Locate the session's note/transcript and generate questions from them."""
    sessions = record.timeline.sessions
    if not sessions:
        raise NoLastSessionNoteError(f"patient {record.patient_id}: no sessions")
    k = len(sessions) if session_index is None else session_index
    session = sessions[k - 1]
    if session.note_id is None or session.note_id not in record.notes:
        raise NoLastSessionNoteError(
            f"patient {record.patient_id}: session {k} has no note"
        )
    documents = [record.notes[session.note_id]]
    if session.transcript_id and session.transcript_id in record.transcripts:
        documents.append(record.transcripts[session.transcript_id])
    return generate_questions(registry, documents, backend)


def plan_question(question: Question, available_features: Sequence[str]) -> QuestionPlan:
    """Intersect the question's targets with what the record actually has."""
    available = set(available_features)
    features = tuple(f for f in question.target_features if f in available)
    return QuestionPlan(
        question_id=question.id,
        answerable=bool(features),
        features=features,
        fact_types_requested=(
            "comparison", "trend", "outlier", "extreme", "difference",
        ),
    )


# ---------------------------------------------------------------------------
# Tagging and fact ranking


def tag_biopsychosocial(
    facts: Sequence[DataFact], registry: Registry
) -> frozenset[BiopsychosocialTag]:
    """Union of per-feature tags; unmapped features default to psychological."""
    tags = set()
    for fact in facts:
        try:
            tags.add(registry.tag_for(fact.entity.feature_id))
        except UnknownFeatureError:
            tags.add(BiopsychosocialTag.PSYCHOLOGICAL)
    return frozenset(tags)


def _rank_facts(facts: Sequence[DataFact]) -> list[DataFact]:
    return sorted(facts, key=lambda f: (not f.significant, -f.salience, f.id))


def _select_facts(facts: Sequence[DataFact]) -> list[DataFact]:
    """Significant facts only when any exist; otherwise the top six by salience."""
    ranked = _rank_facts(facts)
    significant = [f for f in ranked if f.significant]
    if significant:
        return significant[:6]
    return ranked[:6]


# ---------------------------------------------------------------------------
# Insight composition


def _external_two_part(
    facts: Sequence[DataFact],
    registry: Registry,
    backend: ExternalBackend,
    context: str,
) -> Optional[TwoPartText]:
    """Model-composed wording: 'factual clause | implication', validated."""
    payload_lines = [context] if context else []
    payload_lines += [f"- {f.description}" for f in facts]
    for attempt in range(backend.config.max_retries + 1):
        try:
            text = compose_external(
                backend,
                "Compose one short clinician-facing insight from the observations. "
                "Answer as: factual clause | implication. Under 15 words total. "
                "Never use diagnostic language.",
                "\n".join(payload_lines),
                purpose="insight composition",
            )
        except BackendError as exc:
            logger.warning("insight composition attempt %d failed: %s", attempt + 1, exc)
            continue
        if text.count("|") != 1:
            continue
        clause, _, implication = (part.strip() for part in text.partition("|"))
        if not clause or not implication:
            continue
        candidate = TwoPartText(fact_clause=clause, implication=implication)
        if word_count(candidate.combined()) >= INSIGHT_WORD_LIMIT:
            continue
        if registry.contains_blocked_term(candidate.combined()):
            logger.warning("external insight used a blocked term; rejected")
            continue
        return candidate
    return None


def _compose_insight_text(
    facts: Sequence[DataFact],
    registry: Registry,
    backend: Backend,
    context: str = "",
) -> TwoPartText:
    if isinstance(backend, ExternalBackend):
        candidate = _external_two_part(facts, registry, backend, context)
        if candidate is not None:
            return candidate
        logger.warning("external insight wording failed; using lexicon wording")
    return compose_two_part(facts[0], registry)


def guided_synthesize(
    question: Question,
    plan: QuestionPlan,
    facts: Sequence[DataFact],
    registry: Registry,
    backend: Backend,
) -> Insight:
    """One insight answering a question from the facts its plan produced."""
    if not plan.answerable:
        raise NoFactsError(f"plan for {plan.question_id} is not answerable")
    if not facts:
        raise NoFactsError(f"no facts discovered for question {plan.question_id}")
    chosen = _select_facts(facts)
    text = _compose_insight_text(chosen, registry, backend, context=question.text)
    sources = frozenset({f.source for f in chosen} | {question.doc_kind})
    fact_ids = tuple(f.id for f in chosen)
    return Insight(
        id=insight_id(Discovery.GUIDED, fact_ids, question.id),
        text=text,
        tags=tag_biopsychosocial(chosen, registry),
        sources=sources,
        fact_ids=fact_ids,
        origin=Discovery.GUIDED,
        question_id=question.id,
    )


def _overlap_clusters(facts: Sequence[DataFact]) -> list[list[DataFact]]:
    """Group facts by feature, then merge facts whose time spans overlap."""
    by_feature: dict[str, list[DataFact]] = defaultdict(list)
    for fact in facts:
        by_feature[fact.entity.feature_id].append(fact)

    clusters: list[list[DataFact]] = []
    for feature_id in sorted(by_feature):
        ordered = sorted(
            by_feature[feature_id],
            key=lambda f: (*time_ref_span(f.time), f.id),
        )
        current = [ordered[0]]
        current_end = time_ref_span(ordered[0].time)[1]
        for fact in ordered[1:]:
            start, end = time_ref_span(fact.time)
            if start <= current_end:
                current.append(fact)
                current_end = max(current_end, end)
            else:
                clusters.append(current)
                current = [fact]
                current_end = end
        clusters.append(current)
    return clusters


def exploratory_synthesize(
    all_facts: Sequence[DataFact],
    registry: Registry,
    backend: Backend,
    min_candidates: int = 15,
) -> list[Insight]:
    """One insight per (feature, overlapping-time) cluster of facts.

    Emits every cluster, ranked by significance count then source spread;
    when the data supports fewer than ``min_candidates`` clusters the
    shortfall is logged rather than padded.
    """
    if not all_facts:
        raise NoFactsError("exploratory synthesis received no facts")
    insights: list[Insight] = []
    for cluster in _overlap_clusters(all_facts):
        chosen = _select_facts(cluster)
        text = _compose_insight_text(chosen, registry, backend)
        fact_ids = tuple(f.id for f in chosen)
        insights.append(
            Insight(
                id=insight_id(Discovery.EXPLORATORY, fact_ids, None),
                text=text,
                tags=tag_biopsychosocial(chosen, registry),
                sources=frozenset(f.source for f in chosen),
                fact_ids=fact_ids,
                origin=Discovery.EXPLORATORY,
            )
        )
    if len(insights) < min_candidates:
        logger.info(
            "exploratory synthesis produced %d candidates (target %d); "
            "data supports no more clusters",
            len(insights),
            min_candidates,
        )

    by_id = {f.id: f for f in all_facts}

    def significance_count(insight: Insight) -> int:
        return sum(1 for fid in insight.fact_ids if by_id[fid].significant)

    insights.sort(key=lambda i: (-significance_count(i), -len(i.sources), i.id))
    return insights


__all__ = [
    "NoFactsError",
    "NoLastSessionNoteError",
    "Question",
    "QuestionPlan",
    "SynthesisError",
    "exploratory_synthesize",
    "generate_questions",
    "generate_questions_for_session",
    "guided_synthesize",
    "plan_question",
    "tag_biopsychosocial",
]
