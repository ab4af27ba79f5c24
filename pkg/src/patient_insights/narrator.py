"""Narrative composition: recap cards, insight wording, threading, messages.

Deterministic composition is the reference behavior: SOAP parsing plus
sentence extraction for the recap, lexicon lookups for the two-part insight
wording, and fixed templates for patient messages.  An external backend may
propose alternative wording, but everything it returns is validated against
the same constraints (word limits, evidence substrings, token preservation)
and falls back to the deterministic output on any failure.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from datetime import date
from typing import Mapping, Optional, Sequence

from .analyzer import format_date
from .backends import (
    Backend,
    BackendError,
    DeterministicBackend,
    ExternalBackend,
    compose_external,
)
from .core import (
    CoreValidationError,
    DataFact,
    DateInterval,
    Discovery,
    Document,
    EvidenceSpan,
    HistoryItem,
    Insight,
    RECAP_WORD_LIMIT,
    RecapCard,
    RecapKind,
    TimePoint,
    TimePointPair,
    TimeRef,
    TwoPartText,
    word_count,
)
from .registry import ActivityDef, LexiconMissError, Registry, UnknownFeatureError

logger = logging.getLogger(__name__)


class NarratorError(CoreValidationError):
    """Base class for narrative composition failures."""


class EmptyNoteError(NarratorError):
    """The note to summarize has no content."""


class EmptySelectionError(NarratorError):
    """Message drafting needs at least one insight or activity."""


NOT_DOCUMENTED = "(not documented)"

_SOAP_HEADER_RE = re.compile(
    r"^[ \t]*(subjective|objective|assessment|plan)[ \t]*:[ \t]*",
    re.IGNORECASE | re.MULTILINE,
)
_SENTENCE_END_RE = re.compile(r"[.;!?]")


def validate_word_limit(text: str, limit: int, *, strict: bool = False) -> tuple[bool, int]:
    """Check a word-count limit; strict means the count must stay below it."""
    n = word_count(text)
    ok = n < limit if strict else n <= limit
    return ok, n


# ---------------------------------------------------------------------------
# Two-part insight wording


def _primary_date(time: TimeRef) -> date:
    if isinstance(time, TimePoint):
        return time.t
    if isinstance(time, TimePointPair):
        return time.t2
    if isinstance(time, DateInterval):
        return time.end
    return time.second.end


def compose_two_part(fact: DataFact, registry: Registry) -> TwoPartText:
    """Lexicon-driven wording for a fact: factual clause plus implication."""
    feature_id = fact.entity.feature_id
    try:
        clause_template = registry.fact_clause(feature_id, fact.fact_type, fact.attribute)
        implication = registry.implication(feature_id, fact.fact_type, fact.attribute)
    except UnknownFeatureError:
        raise LexiconMissError(
            f"({feature_id}, {fact.fact_type.value}, {fact.attribute.value})"
        ) from None
    clause = clause_template.format(
        label=fact.entity.label, date=format_date(_primary_date(fact.time))
    )
    clause = clause[0].upper() + clause[1:]
    return TwoPartText(fact_clause=clause, implication=implication)


def narrate_insight(
    insight: Insight, facts_by_id: Mapping[str, DataFact], registry: Registry
) -> TwoPartText:
    """Recompose an insight's wording from its highest-ranked fact."""
    top = facts_by_id[insight.fact_ids[0]]
    return compose_two_part(top, registry)


_NUMBER_RE = re.compile(r"\d[\d,.]*")


def narrate_fact(fact: DataFact, backend: Backend) -> str:
    """Readable fact text; deterministic mode returns the template verbatim.

    External paraphrases must preserve every number, unit word, and date
    token of the template output exactly or the template is used instead.
    """
    if isinstance(backend, DeterministicBackend):
        return fact.description
    assert isinstance(backend, ExternalBackend)
    required = set(_NUMBER_RE.findall(fact.description))
    required.update(
        tok for tok in ("hours", "hour", "miles", "mile", "times", "time")
        if re.search(rf"\b{tok}\b", fact.description)
    )
    required.update(
        mon for mon in (
            "Jan", "Feb", "Mar", "Apr", "May", "Jun",
            "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
        )
        if mon in fact.description
    )
    for attempt in range(backend.config.max_retries + 1):
        try:
            text = compose_external(
                backend,
                "Paraphrase the observation in one plain sentence. Preserve every "
                "number, unit, and date exactly as written. Do not add numbers.",
                fact.description,
                purpose="fact paraphrase",
            )
        except BackendError as exc:
            logger.warning("fact paraphrase attempt %d failed: %s", attempt + 1, exc)
            continue
        if all(token in text for token in required):
            return text
        logger.warning("fact paraphrase dropped tokens; retrying")
    return fact.description


# ---------------------------------------------------------------------------
# Session recap


def _soap_sections(text: str) -> dict[str, tuple[int, int]]:
    """Section name -> (content_start, content_end) offsets; first wins."""
    matches = list(_SOAP_HEADER_RE.finditer(text))
    sections: dict[str, tuple[int, int]] = {}
    for i, match in enumerate(matches):
        name = match.group(1).lower()
        start = match.end()
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        sections.setdefault(name, (start, end))
    return sections


def _sentence_spans(text: str, lo: int, hi: int) -> list[tuple[int, int]]:
    """Trimmed [start, end) sentence spans inside text[lo:hi], no terminators."""
    bounds: list[tuple[int, int]] = []
    cursor = lo
    for match in _SENTENCE_END_RE.finditer(text, lo, hi):
        bounds.append((cursor, match.start()))
        cursor = match.end()
    if cursor < hi:
        bounds.append((cursor, hi))
    spans = []
    for start, end in bounds:
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if start < end:
            spans.append((start, end))
    return spans


def _card_from_span(kind: RecapKind, note: Document, span: tuple[int, int]) -> RecapCard:
    start, end = span
    sentence = note.text[start:end]
    words = sentence.split()
    if len(words) > RECAP_WORD_LIMIT:
        text = " ".join(words[:RECAP_WORD_LIMIT]) + "…"
    else:
        text = sentence
    return RecapCard(
        kind=kind,
        text=text,
        evidence=(EvidenceSpan(note.id, start, end, sentence),),
    )


def _placeholder_card(kind: RecapKind) -> RecapCard:
    return RecapCard(kind=kind, text=NOT_DOCUMENTED, evidence=())


def _deterministic_recap(
    note: Document, registry: Registry
) -> tuple[RecapCard, RecapCard, RecapCard]:
    sections = _soap_sections(note.text)

    if sections:
        so_span = None
        for name in ("subjective", "objective"):
            if name in sections:
                spans = _sentence_spans(note.text, *sections[name])
                if spans:
                    so_span = spans[0]
                    break
        so_card = (
            _card_from_span(RecapKind.SUBJECTIVE_OBJECTIVE, note, so_span)
            if so_span
            else _placeholder_card(RecapKind.SUBJECTIVE_OBJECTIVE)
        )

        if "assessment" in sections:
            spans = _sentence_spans(note.text, *sections["assessment"])
            assessment_card = (
                _card_from_span(RecapKind.ASSESSMENT, note, spans[0])
                if spans
                else _placeholder_card(RecapKind.ASSESSMENT)
            )
        else:
            assessment_card = _placeholder_card(RecapKind.ASSESSMENT)

        plan_card = _placeholder_card(RecapKind.PLAN)
        if "plan" in sections:
            for span in _sentence_spans(note.text, *sections["plan"]):
                if registry.mentions_medication(note.text[span[0] : span[1]]):
                    plan_card = _card_from_span(RecapKind.PLAN, note, span)
                    break
        return so_card, assessment_card, plan_card

    # No SOAP structure: the whole note stands in for Subjective/Objective.
    spans = _sentence_spans(note.text, 0, len(note.text))
    so_card = (
        _card_from_span(RecapKind.SUBJECTIVE_OBJECTIVE, note, spans[0])
        if spans
        else _placeholder_card(RecapKind.SUBJECTIVE_OBJECTIVE)
    )
    return (
        so_card,
        _placeholder_card(RecapKind.ASSESSMENT),
        _placeholder_card(RecapKind.PLAN),
    )


def _external_recap(
    note: Document, registry: Registry, backend: ExternalBackend
) -> Optional[tuple[RecapCard, RecapCard, RecapCard]]:
    """Ask the endpoint for three cards; None when validation never passes.

    Expected response: three lines, each "text ||| verbatim source quote".
    """
    kinds = (RecapKind.SUBJECTIVE_OBJECTIVE, RecapKind.ASSESSMENT, RecapKind.PLAN)
    for attempt in range(backend.config.max_retries + 1):
        try:
            text = compose_external(
                backend,
                "Summarize the clinical note as three lines (patient report, "
                "assessment, medication plan). Each line: summary of at most 12 "
                "words, then ' ||| ', then an exact quote from the note.",
                note.text,
                purpose="recap summary",
            )
        except BackendError as exc:
            logger.warning("recap attempt %d failed: %s", attempt + 1, exc)
            continue
        lines = [line.strip() for line in text.splitlines() if line.strip()]
        if len(lines) != 3:
            continue
        cards = []
        for kind, line in zip(kinds, lines):
            if "|||" not in line:
                break
            summary, _, quote = (part.strip() for part in line.partition("|||"))
            offset = note.text.find(quote) if quote else -1
            if not summary or word_count(summary) > RECAP_WORD_LIMIT or offset < 0:
                break
            cards.append(
                RecapCard(
                    kind=kind,
                    text=summary,
                    evidence=(
                        EvidenceSpan(note.id, offset, offset + len(quote), quote),
                    ),
                )
            )
        if len(cards) == 3:
            return cards[0], cards[1], cards[2]
    return None


def summarize_recap(
    note: Document, registry: Registry, backend: Backend
) -> tuple[RecapCard, RecapCard, RecapCard]:
    """Three recap cards: merged Subjective/Objective, Assessment, Plan.

    The Plan card only ever quotes medication-related sentences; sections
    that contribute nothing become explicit "(not documented)" cards.
    """
    if not note.text.strip():
        raise EmptyNoteError(f"note {note.id!r} is empty")
    if isinstance(backend, ExternalBackend):
        cards = _external_recap(note, registry, backend)
        if cards is not None:
            return cards
        logger.warning("external recap failed validation; using deterministic recap")
    return _deterministic_recap(note, registry)


# ---------------------------------------------------------------------------
# Threading


def thread(
    guided: Sequence[Insight],
    exploratory: Sequence[Insight],
    facts_by_id: Mapping[str, DataFact],
) -> list[Insight]:
    """Assemble the final ordered narrative.

    Keeps every guided insight, adds up to six exploratory ones (preferring
    six when available), and orders the result multimodal-first: source
    count descending, then guided before exploratory, then significance
    count descending, then id.  The ordering is a total order, so permuting
    the inputs never changes the output.
    """

    def significance_count(insight: Insight) -> int:
        return sum(
            1
            for fid in insight.fact_ids
            if (fact := facts_by_id.get(fid)) is not None and fact.significant
        )

    ranked = sorted(
        exploratory,
        key=lambda i: (-significance_count(i), -len(i.sources), i.id),
    )
    k = min(6, len(ranked))
    combined = list(guided) + ranked[:k]
    combined.sort(
        key=lambda i: (
            -len(i.sources),
            0 if i.origin is Discovery.GUIDED else 1,
            -significance_count(i),
            i.id,
        )
    )
    return combined


@dataclass(frozen=True)
class NarrativeSections:
    """The four dashboard sections in display order."""

    medical_history: tuple[HistoryItem, ...]
    session_recap: tuple[RecapCard, ...]
    patient_data_insights: tuple[Insight, ...]
    summary_pool: tuple[str, ...]

    def __post_init__(self) -> None:
        kinds = [card.kind for card in self.session_recap]
        expected = [RecapKind.SUBJECTIVE_OBJECTIVE, RecapKind.ASSESSMENT, RecapKind.PLAN]
        if kinds != expected:
            raise NarratorError(
                f"session recap must be exactly one card per kind in order; got {kinds}"
            )
        insight_ids = {i.id for i in self.patient_data_insights}
        dangling = [iid for iid in self.summary_pool if iid not in insight_ids]
        if dangling:
            raise NarratorError(f"summary pool references unknown insights: {dangling}")

    def to_dict(self) -> dict:
        return {
            "medical_history": [h.to_dict() for h in self.medical_history],
            "session_recap": [card.to_dict() for card in self.session_recap],
            "patient_data_insights": [i.to_dict() for i in self.patient_data_insights],
            "summary_pool": list(self.summary_pool),
        }


# ---------------------------------------------------------------------------
# Patient message drafting


def _lower_first(text: str) -> str:
    if len(text) >= 2 and text[0].isupper() and text[1].islower():
        return text[0].lower() + text[1:]
    return text


def _screen_blocked_terms(text: str, registry: Registry) -> str:
    """Remove blocklisted diagnostic terms, logging each elision."""
    cleaned = text
    for term in registry.diagnostic_blocklist:
        pattern = re.compile(re.escape(term), re.IGNORECASE)
        if pattern.search(cleaned):
            logger.warning("elided blocked term %r from drafted message", term)
            cleaned = pattern.sub("", cleaned)
    return re.sub(r"[ \t]{2,}", " ", cleaned).strip()


def draft_message(
    patient_name: str,
    insights: Sequence[Insight],
    activities: Sequence[ActivityDef],
    registry: Registry,
) -> str:
    """Deterministic plain-language patient message from selected items."""
    if not insights and not activities:
        raise EmptySelectionError("select at least one insight or activity")
    lines = [f"Hi {patient_name},"]
    for insight in insights:
        clause = _lower_first(insight.text.fact_clause)
        clause = clause.replace("last session", "your last session")
        clause = _screen_blocked_terms(clause, registry)
        lines.append(f"- We noticed {clause}.")
    for activity in activities:
        lines.append(f"- Suggested activity: {activity.label}.")
    lines.append("See you at our next session.")
    return "\n".join(lines)


__all__ = [
    "EmptyNoteError",
    "EmptySelectionError",
    "NOT_DOCUMENTED",
    "NarrativeSections",
    "NarratorError",
    "compose_two_part",
    "draft_message",
    "narrate_fact",
    "narrate_insight",
    "summarize_recap",
    "thread",
    "validate_word_limit",
]
