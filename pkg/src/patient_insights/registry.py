"""Registries describing what the pipeline knows how to measure and say.

The registry is built from the packaged default configuration (optionally
overlaid by a user config file) and answers three kinds of questions:

* feature metadata — unit conversion into display units, group, label,
  biopsychosocial tag;
* survey instrument metadata — score ranges and interpretation bands;
* composition resources — question topics with trigger phrases, factual
  clause templates, implication phrases, medication terms, the diagnostic
  blocklist, and the suggested-activity catalog.

Lookups are strict: asking for an unknown feature or a missing lexicon slot
raises instead of silently degrading, so coverage gaps surface at startup
(the registry validates total lexicon coverage when constructed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .core import (
    ATTRIBUTES_BY_TYPE,
    BiopsychosocialTag,
    CoreValidationError,
    FactAttribute,
    FactType,
)


class RegistryError(CoreValidationError):
    """Raised for malformed registry configuration or unknown lookups."""


class UnknownFeatureError(RegistryError):
    """Raised when a feature or instrument id is not registered."""


class LexiconMissError(RegistryError):
    """Raised when no phrase is registered for a (feature, type, attribute)."""


@dataclass(frozen=True)
class UnitConversion:
    """Affine-free linear map from original units to display units.

    Stored as a ratio so exact divisors (60 minutes/hour, 1609.344
    meters/mile) round-trip cleanly: ``display = value * numerator /
    denominator``.
    """

    numerator: float
    denominator: float

    def __post_init__(self) -> None:
        if self.numerator <= 0 or self.denominator <= 0:
            raise RegistryError(
                "unit conversion must be positive (got "
                f"{self.numerator}/{self.denominator})"
            )

    def apply(self, value: float) -> float:
        return value * self.numerator / self.denominator


@dataclass(frozen=True)
class FeatureDef:
    """A passively sensed feature and how to present it."""

    feature_id: str
    label: str
    group: str
    tag: BiopsychosocialTag
    original_unit: str
    display_unit: str
    conversion: UnitConversion

    def to_display(self, value: float) -> float:
        return self.conversion.apply(value)


@dataclass(frozen=True)
class ScoreBand:
    """An inclusive score interval with an interpretation label."""

    label: str
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise RegistryError(f"band {self.label!r} has lo {self.lo} > hi {self.hi}")

    def contains(self, score: float) -> bool:
        return self.lo <= score <= self.hi


@dataclass(frozen=True)
class InstrumentDef:
    """A survey instrument with its score range and interpretation bands."""

    instrument_id: str
    label: str
    group: str
    tag: BiopsychosocialTag
    score_min: int
    score_max: int
    higher_is_worse: bool
    bands: tuple[ScoreBand, ...]

    def __post_init__(self) -> None:
        if self.score_min >= self.score_max:
            raise RegistryError(
                f"instrument {self.instrument_id!r} has empty score range"
            )
        if not self.bands:
            raise RegistryError(f"instrument {self.instrument_id!r} has no bands")
        # Bands must tile the score range exactly: contiguous, in order,
        # first band starts at score_min, last ends at score_max.
        cursor = self.score_min
        for band in self.bands:
            if band.lo != cursor:
                raise RegistryError(
                    f"instrument {self.instrument_id!r} bands leave a gap at {cursor}"
                )
            cursor = band.hi + 1
        if cursor != self.score_max + 1:
            raise RegistryError(
                f"instrument {self.instrument_id!r} bands stop at {cursor - 1}, "
                f"expected {self.score_max}"
            )

    def in_range(self, score: float) -> bool:
        return self.score_min <= score <= self.score_max

    def band_for(self, score: float) -> ScoreBand:
        for band in self.bands:
            if band.contains(score):
                return band
        raise RegistryError(
            f"score {score} outside {self.instrument_id!r} range "
            f"[{self.score_min}, {self.score_max}]"
        )


@dataclass(frozen=True)
class QuestionTopic:
    """A guided-question topic: trigger phrases plus the features it probes."""

    topic_id: str
    question: str
    triggers: tuple[str, ...]
    target_features: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.triggers:
            raise RegistryError(f"topic {self.topic_id!r} has no triggers")
        if not self.target_features:
            raise RegistryError(f"topic {self.topic_id!r} has no target features")


@dataclass(frozen=True)
class ActivityDef:
    """A suggested activity offered in drafted patient messages."""

    activity_id: str
    label: str


_TagMap = Mapping[str, BiopsychosocialTag]

_TAG_NAMES: _TagMap = {t.value: t for t in BiopsychosocialTag}


def _require(mapping: Mapping, key: str, where: str):
    if key not in mapping:
        raise RegistryError(f"{where} is missing required key {key!r}")
    return mapping[key]


def _phrase_table(
    raw: Mapping, where: str, *, partial: bool = False
) -> dict[tuple[FactType, FactAttribute], str]:
    """Parse a {type: {attribute: phrase}} mapping, validating names."""
    table: dict[tuple[FactType, FactAttribute], str] = {}
    for type_name, by_attr in raw.items():
        try:
            fact_type = FactType(type_name)
        except ValueError:
            raise RegistryError(f"{where}: unknown fact type {type_name!r}") from None
        allowed = ATTRIBUTES_BY_TYPE[fact_type]
        for attr_name, phrase in by_attr.items():
            try:
                attr = FactAttribute(attr_name)
            except ValueError:
                raise RegistryError(
                    f"{where}: unknown attribute {attr_name!r}"
                ) from None
            if attr not in allowed:
                raise RegistryError(
                    f"{where}: attribute {attr_name!r} not valid for {type_name}"
                )
            if not isinstance(phrase, str) or not phrase.strip():
                raise RegistryError(
                    f"{where}: empty phrase for {type_name}/{attr_name}"
                )
            table[(fact_type, attr)] = phrase
    if not partial:
        for fact_type, allowed in ATTRIBUTES_BY_TYPE.items():
            for attr in allowed:
                if (fact_type, attr) not in table:
                    raise RegistryError(
                        f"{where}: no phrase for {fact_type.value}/{attr.value}"
                    )
    return table


@dataclass
class Registry:
    """Immutable-by-convention lookup hub for features, surveys, and phrasing."""

    features: dict[str, FeatureDef]
    instruments: dict[str, InstrumentDef]
    topics: tuple[QuestionTopic, ...]
    fact_clauses: dict[tuple[FactType, FactAttribute], str]
    fact_clause_overrides: dict[str, dict[tuple[FactType, FactAttribute], str]]
    implications: dict[str, dict[tuple[FactType, FactAttribute], str]]
    implication_overrides: dict[str, dict[tuple[FactType, FactAttribute], str]]
    medication_terms: tuple[str, ...]
    diagnostic_blocklist: tuple[str, ...]
    activities: tuple[ActivityDef, ...] = field(default_factory=tuple)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_config(cls, raw: Mapping) -> "Registry":
        features: dict[str, FeatureDef] = {}
        for item in _require(raw, "features", "config"):
            conv = _require(item, "conversion", f"feature {item.get('id')!r}")
            feature = FeatureDef(
                feature_id=_require(item, "id", "feature"),
                label=_require(item, "label", f"feature {item.get('id')!r}"),
                group=_require(item, "group", f"feature {item.get('id')!r}"),
                tag=_TAG_NAMES[_require(item, "tag", f"feature {item.get('id')!r}")],
                original_unit=_require(item, "original_unit", f"feature {item.get('id')!r}"),
                display_unit=_require(item, "display_unit", f"feature {item.get('id')!r}"),
                conversion=UnitConversion(
                    float(conv["numerator"]), float(conv["denominator"])
                ),
            )
            if feature.feature_id in features:
                raise RegistryError(f"duplicate feature id {feature.feature_id!r}")
            features[feature.feature_id] = feature

        instruments: dict[str, InstrumentDef] = {}
        for item in _require(raw, "instruments", "config"):
            lo, hi = _require(item, "score_range", f"instrument {item.get('id')!r}")
            instrument = InstrumentDef(
                instrument_id=_require(item, "id", "instrument"),
                label=_require(item, "label", f"instrument {item.get('id')!r}"),
                group=_require(item, "group", f"instrument {item.get('id')!r}"),
                tag=_TAG_NAMES[_require(item, "tag", f"instrument {item.get('id')!r}")],
                score_min=int(lo),
                score_max=int(hi),
                higher_is_worse=bool(item.get("higher_is_worse", True)),
                bands=tuple(
                    ScoreBand(b["label"], int(b["lo"]), int(b["hi"]))
                    for b in _require(item, "bands", f"instrument {item.get('id')!r}")
                ),
            )
            if instrument.instrument_id in features or instrument.instrument_id in instruments:
                raise RegistryError(
                    f"duplicate id {instrument.instrument_id!r} across registries"
                )
            instruments[instrument.instrument_id] = instrument

        known_ids = set(features) | set(instruments)
        topics = []
        for item in _require(raw, "topics", "config"):
            topic = QuestionTopic(
                topic_id=_require(item, "id", "topic"),
                question=_require(item, "question", f"topic {item.get('id')!r}"),
                triggers=tuple(_require(item, "triggers", f"topic {item.get('id')!r}")),
                target_features=tuple(
                    _require(item, "target_features", f"topic {item.get('id')!r}")
                ),
            )
            for fid in topic.target_features:
                if fid not in known_ids:
                    raise RegistryError(
                        f"topic {topic.topic_id!r} targets unknown feature {fid!r}"
                    )
            topics.append(topic)

        fact_clauses = _phrase_table(_require(raw, "fact_clauses", "config"), "fact_clauses")
        clause_overrides = {
            fid: _phrase_table(tbl, f"fact_clause_overrides[{fid}]", partial=True)
            for fid, tbl in raw.get("fact_clause_overrides", {}).items()
        }
        implications = {
            group: _phrase_table(tbl, f"implications[{group}]")
            for group, tbl in _require(raw, "implications", "config").items()
        }
        impl_overrides = {
            fid: _phrase_table(tbl, f"implication_overrides[{fid}]", partial=True)
            for fid, tbl in raw.get("implication_overrides", {}).items()
        }

        for fid in list(clause_overrides) + list(impl_overrides):
            if fid not in known_ids:
                raise RegistryError(f"lexicon override for unknown feature {fid!r}")

        registry = cls(
            features=features,
            instruments=instruments,
            topics=tuple(topics),
            fact_clauses=fact_clauses,
            fact_clause_overrides=clause_overrides,
            implications=implications,
            implication_overrides=impl_overrides,
            medication_terms=tuple(raw.get("medication_terms", ())),
            diagnostic_blocklist=tuple(raw.get("diagnostic_blocklist", ())),
            activities=tuple(
                ActivityDef(a["id"], a["label"])
                for a in raw.get("suggested_activities", ())
            ),
        )
        registry.validate_coverage()
        return registry

    # -- validation -------------------------------------------------------

    def validate_coverage(self) -> None:
        """Every registered group must have a full implication table."""
        groups = {f.group for f in self.features.values()}
        groups |= {i.group for i in self.instruments.values()}
        missing = sorted(groups - set(self.implications))
        if missing:
            raise LexiconMissError(
                f"implication lexicon missing groups: {', '.join(missing)}"
            )
        if not self.medication_terms:
            raise RegistryError("medication term list is empty")

    # -- feature / instrument lookups --------------------------------------

    def is_feature(self, feature_id: str) -> bool:
        return feature_id in self.features

    def is_instrument(self, feature_id: str) -> bool:
        return feature_id in self.instruments

    def known_ids(self) -> set[str]:
        return set(self.features) | set(self.instruments)

    def feature(self, feature_id: str) -> FeatureDef:
        try:
            return self.features[feature_id]
        except KeyError:
            raise UnknownFeatureError(f"unknown feature {feature_id!r}") from None

    def instrument(self, instrument_id: str) -> InstrumentDef:
        try:
            return self.instruments[instrument_id]
        except KeyError:
            raise UnknownFeatureError(
                f"unknown instrument {instrument_id!r}"
            ) from None

    def label_for(self, feature_id: str) -> str:
        if feature_id in self.features:
            return self.features[feature_id].label
        if feature_id in self.instruments:
            return self.instruments[feature_id].label
        raise UnknownFeatureError(f"unknown feature {feature_id!r}")

    def group_for(self, feature_id: str) -> str:
        if feature_id in self.features:
            return self.features[feature_id].group
        if feature_id in self.instruments:
            return self.instruments[feature_id].group
        raise UnknownFeatureError(f"unknown feature {feature_id!r}")

    def tag_for(self, feature_id: str) -> BiopsychosocialTag:
        if feature_id in self.features:
            return self.features[feature_id].tag
        if feature_id in self.instruments:
            return self.instruments[feature_id].tag
        raise UnknownFeatureError(f"unknown feature {feature_id!r}")

    def display_unit_for(self, feature_id: str) -> str:
        if feature_id in self.features:
            return self.features[feature_id].display_unit
        if feature_id in self.instruments:
            return "score"
        raise UnknownFeatureError(f"unknown feature {feature_id!r}")

    # -- lexicon lookups ----------------------------------------------------

    def fact_clause(
        self, feature_id: str, fact_type: FactType, attribute: FactAttribute
    ) -> str:
        override = self.fact_clause_overrides.get(feature_id, {})
        if (fact_type, attribute) in override:
            return override[(fact_type, attribute)]
        try:
            return self.fact_clauses[(fact_type, attribute)]
        except KeyError:
            raise LexiconMissError(
                f"no factual clause for {fact_type.value}/{attribute.value}"
            ) from None

    def implication(
        self, feature_id: str, fact_type: FactType, attribute: FactAttribute
    ) -> str:
        override = self.implication_overrides.get(feature_id, {})
        if (fact_type, attribute) in override:
            return override[(fact_type, attribute)]
        group = self.group_for(feature_id)
        table = self.implications.get(group)
        if table is None or (fact_type, attribute) not in table:
            raise LexiconMissError(
                f"no implication for group {group!r} "
                f"{fact_type.value}/{attribute.value}"
            )
        return table[(fact_type, attribute)]

    def topic_by_id(self, topic_id: str) -> Optional[QuestionTopic]:
        for topic in self.topics:
            if topic.topic_id == topic_id:
                return topic
        return None

    def match_topics(self, text: str) -> list[tuple[QuestionTopic, str]]:
        """Return (topic, matched trigger) pairs found in ``text``.

        Matching is case-insensitive substring search; each topic reports its
        first matching trigger only, in registry order.
        """
        lowered = text.lower()
        hits: list[tuple[QuestionTopic, str]] = []
        for topic in self.topics:
            for trigger in topic.triggers:
                if trigger.lower() in lowered:
                    hits.append((topic, trigger))
                    break
        return hits

    def contains_blocked_term(self, text: str) -> Optional[str]:
        lowered = text.lower()
        for term in self.diagnostic_blocklist:
            if term.lower() in lowered:
                return term
        return None

    def mentions_medication(self, sentence: str) -> bool:
        lowered = sentence.lower()
        return any(term.lower() in lowered for term in self.medication_terms)


def build_registry(raw: Mapping) -> Registry:
    """Module-level convenience wrapper around :meth:`Registry.from_config`."""
    return Registry.from_config(raw)


__all__: Sequence[str] = [
    "ActivityDef",
    "FeatureDef",
    "InstrumentDef",
    "LexiconMissError",
    "QuestionTopic",
    "Registry",
    "RegistryError",
    "ScoreBand",
    "UnitConversion",
    "UnknownFeatureError",
    "build_registry",
]
