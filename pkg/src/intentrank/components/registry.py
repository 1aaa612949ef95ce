"""Component registry: builds scorers from declarative config records.

A component record looks like

    {"component_id": "text", "kind": "text_relevance", "scope": "generic",
     "params": {...}, "weight": 1.0}

Intent-specific records add an "intent" field. Weights are collected here
and handed to the ranker config; the registry itself only resolves scorers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from ..corpus import SocialGraph
from ..errors import ConfigurationError
from ..intent.space import IntentSpace
from ..records import read_records
from .engagement import EngagementModel, EngagementScorer
from .generic import (
    DocumentQualityScorer,
    LanguageMatchScorer,
    LocationRelevanceScorer,
    PassthroughScorer,
    Scorer,
    SocialRelevanceScorer,
    TextRelevanceScorer,
)
from .intent_specific import FriendIntentScorer, GrammarIntentScorer, VideoPublisherScorer

GENERIC_KINDS = (
    "text_relevance",
    "social_relevance",
    "location_relevance",
    "language_match",
    "document_quality",
    "engagement",
    "passthrough",
)
INTENT_KINDS = ("friend_intent", "grammar_intent", "video_publisher")
VALID_KINDS = GENERIC_KINDS + INTENT_KINDS


@dataclass(frozen=True)
class ComponentSpec:
    component_id: str
    kind: str
    scope: str = "generic"  # "generic" | "intent_specific"
    intent: Optional[str] = None
    params: Mapping[str, Any] = field(default_factory=dict)
    weight: float = 1.0


class ComponentRegistry:
    """Resolves (scope, id) to a scorer; one specific component per intent."""

    def __init__(self) -> None:
        self.generic: dict[str, Scorer] = {}
        self.intent_specific: dict[str, Scorer] = {}  # intent id -> scorer
        self._ids: set[str] = set()

    def add_generic(self, scorer: Scorer) -> None:
        self._claim(scorer.component_id)
        self.generic[scorer.component_id] = scorer

    def add_intent_specific(self, intent_id: str, scorer: Scorer) -> None:
        self._claim(scorer.component_id)
        if intent_id in self.intent_specific:
            raise ConfigurationError(
                f"intent {intent_id!r} already has component "
                f"{self.intent_specific[intent_id].component_id!r}"
            )
        self.intent_specific[intent_id] = scorer

    def _claim(self, component_id: str) -> None:
        if component_id in self._ids:
            raise ConfigurationError(f"duplicate component_id {component_id!r}")
        self._ids.add(component_id)

    def component_for_intent(self, intent_id: str) -> Optional[Scorer]:
        return self.intent_specific.get(intent_id)

    def __len__(self) -> int:
        return len(self._ids)


def _load_passthrough_scores(path: Path) -> dict[tuple[str, str], float]:
    scores = {}
    for _, rec in read_records(path):
        scores[(rec["query_text"], rec["doc_id"])] = float(rec["score"])
    return scores


def build_registry(
    specs: Sequence[ComponentSpec],
    space: IntentSpace,
    graph: Optional[SocialGraph] = None,
    engagement_model: Optional[EngagementModel] = None,
    base_dir: Optional[Path] = None,
) -> tuple[ComponentRegistry, dict[str, float], dict[str, float]]:
    """Build scorers plus the (generic, intent) weight maps from config."""
    registry = ComponentRegistry()
    generic_weights: dict[str, float] = {}
    intent_weights: dict[str, float] = {}

    for spec in specs:
        if spec.kind not in VALID_KINDS:
            raise ConfigurationError(
                f"component {spec.component_id!r}: unknown kind {spec.kind!r}; "
                f"valid kinds: {', '.join(VALID_KINDS)}"
            )
        if spec.weight < 0 or spec.weight != spec.weight:
            raise ConfigurationError(
                f"component {spec.component_id!r}: weight must be finite and >= 0"
            )
        params = dict(spec.params)
        if spec.kind in INTENT_KINDS or spec.scope == "intent_specific":
            intent_id = spec.intent
            if not intent_id:
                raise ConfigurationError(
                    f"component {spec.component_id!r}: intent-specific components "
                    f"need an 'intent' field"
                )
            if intent_id not in space or intent_id == space.fallback_id:
                raise ConfigurationError(
                    f"component {spec.component_id!r}: intent {intent_id!r} is not a "
                    f"detectable intent in the space"
                )
            scorer = _build_intent_scorer(spec, params, graph)
            scorer.intent = intent_id
            registry.add_intent_specific(intent_id, scorer)
            intent_weights[intent_id] = spec.weight
        else:
            scorer = _build_generic_scorer(spec, params, engagement_model, base_dir)
            registry.add_generic(scorer)
            generic_weights[spec.component_id] = spec.weight
    return registry, generic_weights, intent_weights


def _build_generic_scorer(spec, params, engagement_model, base_dir) -> Scorer:
    cid = spec.component_id
    if spec.kind == "text_relevance":
        mix = params.get("mix", None)
        return TextRelevanceScorer(cid, tuple(mix)) if mix else TextRelevanceScorer(cid)
    if spec.kind == "social_relevance":
        weights = params.get("relation_weights")
        return SocialRelevanceScorer(cid, weights) if weights else SocialRelevanceScorer(cid)
    if spec.kind == "location_relevance":
        return LocationRelevanceScorer(cid, float(params.get("tau_km", 50.0)))
    if spec.kind == "language_match":
        return LanguageMatchScorer(cid)
    if spec.kind == "document_quality":
        return DocumentQualityScorer(cid)
    if spec.kind == "engagement":
        return EngagementScorer(cid, engagement_model)
    if spec.kind == "passthrough":
        path = params.get("path")
        scores: dict[tuple[str, str], float] = {}
        if path:
            resolved = Path(path) if base_dir is None else Path(base_dir) / path
            scores = _load_passthrough_scores(resolved)
        return PassthroughScorer(cid, scores, float(params.get("default", 0.0)))
    raise ConfigurationError(f"unhandled generic kind {spec.kind!r}")


def _build_intent_scorer(spec, params, graph) -> Scorer:
    cid = spec.component_id
    if spec.kind == "friend_intent":
        return FriendIntentScorer(cid, graph)
    if spec.kind == "grammar_intent":
        return GrammarIntentScorer(cid)
    if spec.kind == "video_publisher":
        return VideoPublisherScorer(cid, params.get("mode", "binary"))
    raise ConfigurationError(f"unhandled intent kind {spec.kind!r}")


def specs_from_records(records: Sequence[Mapping[str, Any]]) -> list[ComponentSpec]:
    specs = []
    for rec in records:
        specs.append(
            ComponentSpec(
                component_id=rec["component_id"],
                kind=rec["kind"],
                scope=rec.get("scope", "generic"),
                intent=rec.get("intent"),
                params=rec.get("params", {}),
                weight=float(rec.get("weight", 1.0)),
            )
        )
    return specs
