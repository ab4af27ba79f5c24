"""Multimodal patient-data insight engine and narrative dashboard backend.

Turns passive sensing series, survey scores, clinical notes, and session
transcripts into statistically grounded data facts, clinician-facing
insights, and a per-session dashboard bundle served over HTTP.
"""

from .analyzer import AnalysisWindow, render_fact_description, window_for_session
from .backends import (
    BackendError,
    BackendTimeoutError,
    DeterministicBackend,
    EndpointUnavailableError,
    ExternalBackend,
    MalformedResponseError,
    make_backend,
)
from .bundle import (
    BrokenReferenceError,
    ChartSpec,
    DashboardBundle,
    build_bundle,
    chart_spec_for,
    validate_bundle_dict,
    write_bundle,
)
from .config import AppConfig, ConfigError, StatConfig, load_config
from .core import (
    BiopsychosocialTag,
    CoreValidationError,
    DataFact,
    DataSourceType,
    Discovery,
    EvidenceSpan,
    FactAttribute,
    FactType,
    Insight,
    PatientRecord,
    RecapCard,
    RecapKind,
    TimeSeries,
    TwoPartText,
)
from .datagen import InjectionSpec, InvalidSpecError, generate_patient
from .ingest import IngestError, load_patient_dir
from .narrator import (
    NarrativeSections,
    draft_message,
    narrate_fact,
    narrate_insight,
    summarize_recap,
    thread,
)
from .pipeline import PipelineResult, run_for_directory, run_pipeline
from .registry import Registry, build_registry
from .service import create_app
from .synthesizer import (
    Question,
    QuestionPlan,
    exploratory_synthesize,
    generate_questions,
    guided_synthesize,
    plan_question,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisWindow",
    "AppConfig",
    "BackendError",
    "BackendTimeoutError",
    "BiopsychosocialTag",
    "BrokenReferenceError",
    "ChartSpec",
    "ConfigError",
    "CoreValidationError",
    "DashboardBundle",
    "DataFact",
    "DataSourceType",
    "DeterministicBackend",
    "Discovery",
    "EndpointUnavailableError",
    "EvidenceSpan",
    "ExternalBackend",
    "FactAttribute",
    "FactType",
    "IngestError",
    "InjectionSpec",
    "Insight",
    "InvalidSpecError",
    "MalformedResponseError",
    "NarrativeSections",
    "PatientRecord",
    "PipelineResult",
    "Question",
    "QuestionPlan",
    "RecapCard",
    "RecapKind",
    "Registry",
    "StatConfig",
    "TimeSeries",
    "TwoPartText",
    "build_bundle",
    "build_registry",
    "chart_spec_for",
    "create_app",
    "draft_message",
    "exploratory_synthesize",
    "generate_patient",
    "generate_questions",
    "guided_synthesize",
    "load_config",
    "load_patient_dir",
    "make_backend",
    "narrate_fact",
    "narrate_insight",
    "plan_question",
    "render_fact_description",
    "run_for_directory",
    "run_pipeline",
    "summarize_recap",
    "thread",
    "validate_bundle_dict",
    "window_for_session",
    "write_bundle",
]
