"""End-to-end run for one patient session: ingest through bundle.

Stage order: load the record, fix the analysis window, generate questions
from the last session's documents, plan them against available features,
mine facts per plan (guided) and across all features (exploratory), compose
insights on both paths, thread them into the final narrative order, recap
the note, pair every cited fact with a chart, and assemble the bundle.

Guided facts win deduplication: a fact discovered on both paths keeps its
guided stamp, since the same finding reached through a clinician's question
carries the question's provenance.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .analyzer import (
    AnalysisWindow,
    discover_feature_facts,
    exploratory_discover,
    window_for_session,
)
from .backends import Backend, make_backend
from .bundle import DashboardBundle, build_bundle, write_bundle
from .config import AppConfig
from .core import DataFact, Discovery, PatientRecord
from .ingest import load_patient_dir
from .narrator import NarrativeSections, summarize_recap, thread
from .synthesizer import (
    NoFactsError,
    Question,
    QuestionPlan,
    exploratory_synthesize,
    generate_questions_for_session,
    guided_synthesize,
    plan_question,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineResult:
    """Everything one run produced, for inspection and bundling."""

    record: PatientRecord
    window: AnalysisWindow
    session_index: int
    questions: tuple[Question, ...]
    plans: tuple[QuestionPlan, ...]
    facts: dict[str, DataFact]
    bundle: DashboardBundle
    skip_log: tuple[str, ...]
    elapsed_s: float


def run_pipeline(
    record: PatientRecord,
    config: AppConfig,
    backend: Backend,
    session_index: Optional[int] = None,
) -> PipelineResult:
    """Run every stage for one patient session and assemble the bundle."""
    started = time.perf_counter()
    registry = config.registry
    window = window_for_session(record, session_index)
    k = session_index if session_index is not None else len(record.timeline.sessions)
    skip_log: list[str] = []

    # Question-guided path: questions from the session's documents, then
    # fact mining restricted to each plan's features.
    questions = tuple(
        generate_questions_for_session(registry, record, backend, session_index=k)
    )
    plans = tuple(plan_question(q, record.available_features()) for q in questions)

    facts_by_id: dict[str, DataFact] = {}
    guided_insights = []
    for question, plan in zip(questions, plans):
        if not plan.answerable:
            skip_log.append(f"question {question.id}: no targeted feature has data")
            continue
        question_facts: list[DataFact] = []
        for feature_id in plan.features:
            series = record.series_for(feature_id)
            found = discover_feature_facts(
                registry, series, window, config.stats, Discovery.GUIDED, skip_log
            )
            question_facts.extend(found)
        deduped: list[DataFact] = []
        for fact in question_facts:
            kept = facts_by_id.setdefault(fact.id, fact)
            deduped.append(kept)
        if not question_facts:
            skip_log.append(f"question {question.id}: no facts discovered")
            continue
        guided_insights.append(
            guided_synthesize(question, plan, deduped, registry, backend)
        )

    # Exploratory path over every feature; facts already claimed by the
    # guided path keep their guided stamp.
    exploratory_facts, exploratory_skips = exploratory_discover(
        registry, record, window, config.stats
    )
    skip_log.extend(exploratory_skips)
    exploratory_pool: list[DataFact] = []
    for fact in exploratory_facts:
        kept = facts_by_id.setdefault(fact.id, fact)
        exploratory_pool.append(kept)
    try:
        exploratory_insights = exploratory_synthesize(
            exploratory_pool, registry, backend
        )
    except NoFactsError:
        skip_log.append("exploratory synthesis: no facts discovered")
        exploratory_insights = []

    threaded = thread(guided_insights, exploratory_insights, facts_by_id)

    session = record.timeline.sessions[k - 1]
    note = record.notes[session.note_id]
    recap = summarize_recap(note, registry, backend)

    sections = NarrativeSections(
        medical_history=record.profile.medical_history,
        session_recap=tuple(recap),
        patient_data_insights=tuple(threaded),
        summary_pool=tuple(i.id for i in threaded),
    )
    bundle = build_bundle(
        record=record,
        window=window,
        session_index=k,
        sections=sections,
        facts=list(facts_by_id.values()),
        questions=questions,
        registry=registry,
        version=config.bundle_version,
    )
    elapsed = time.perf_counter() - started
    logger.info(
        "pipeline for %s session %d: %d facts, %d insights, %d skips, %.2fs",
        record.patient_id,
        k,
        len(facts_by_id),
        len(threaded),
        len(skip_log),
        elapsed,
    )
    return PipelineResult(
        record=record,
        window=window,
        session_index=k,
        questions=questions,
        plans=plans,
        facts=facts_by_id,
        bundle=bundle,
        skip_log=tuple(skip_log),
        elapsed_s=elapsed,
    )


def run_for_directory(
    patient_dir: Path,
    config: AppConfig,
    backend: Optional[Backend] = None,
    session_index: Optional[int] = None,
    out_root: Optional[Path] = None,
) -> tuple[PipelineResult, Path]:
    """Ingest a patient directory, run the pipeline, persist the bundle."""
    record = load_patient_dir(Path(patient_dir), config.registry)
    if backend is None:
        backend = make_backend(config.backend)
    result = run_pipeline(record, config, backend, session_index=session_index)
    root = Path(out_root) if out_root is not None else config.service.data_root
    path = write_bundle(root, result.bundle)
    return result, path


__all__ = ["PipelineResult", "run_for_directory", "run_pipeline"]
