"""Score combination, ranking, traces, and trigger monitoring.

The final relevance of a document is

    F = sum_c w_c * sigma_c   +   sum_t P(t|q) * w_t * sigma_t

where c ranges over generic components and t over intents whose probability
clears the trigger threshold. A reference evaluator computes the same score
in its expanded mixture form, sum_t P(t|q) * (generic sum + w_t * sigma_t);
the two must agree whenever the threshold is zero, and tests hold the
implementation to that.

Every scored document carries a full trace of its weighted contributions,
which is what makes ranking behavior inspectable after the fact.
"""

from __future__ import annotations

import difflib
import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .components.generic import document_quality
from .components.registry import ComponentRegistry
from .components.signals import SharedSignals
from .corpus import Document, QueryContext
from .errors import ConfigurationError, IntentRankError
from .intent.space import IntentDistribution

DEFAULT_TRIGGER_THRESHOLD = 0.05


@dataclass(frozen=True)
class RankerConfig:
    """Weights and knobs that define one ranking arm."""

    generic_weights: dict = field(default_factory=dict)
    intent_weights: dict = field(default_factory=dict)
    trigger_threshold: float = DEFAULT_TRIGGER_THRESHOLD
    k_final: int = 10

    def validate(self) -> None:
        for name, weights in (("generic", self.generic_weights), ("intent", self.intent_weights)):
            for key, w in weights.items():
                if not (w == w and abs(w) != float("inf")) or w < 0:
                    raise ConfigurationError(f"{name} weight {key!r}={w} must be finite and >= 0")
        if not 0.0 <= self.trigger_threshold <= 1.0:
            raise ConfigurationError(
                f"trigger_threshold {self.trigger_threshold} outside [0,1]"
            )
        if self.k_final < 1:
            raise ConfigurationError(f"k_final must be >= 1, got {self.k_final}")

    def fingerprint(self) -> str:
        canon = json.dumps(
            {
                "generic_weights": dict(sorted(self.generic_weights.items())),
                "intent_weights": dict(sorted(self.intent_weights.items())),
                "trigger_threshold": self.trigger_threshold,
                "k_final": self.k_final,
            },
            sort_keys=True,
        )
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]

    def replace(self, **kwargs) -> "RankerConfig":
        data = {
            "generic_weights": dict(self.generic_weights),
            "intent_weights": dict(self.intent_weights),
            "trigger_threshold": self.trigger_threshold,
            "k_final": self.k_final,
        }
        data.update(kwargs)
        return RankerConfig(**data)

    def to_record(self) -> dict:
        return {
            "generic_weights": dict(sorted(self.generic_weights.items())),
            "intent_weights": dict(sorted(self.intent_weights.items())),
            "trigger_threshold": self.trigger_threshold,
            "k_final": self.k_final,
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "RankerConfig":
        config = cls(
            generic_weights={k: float(v) for k, v in rec.get("generic_weights", {}).items()},
            intent_weights={k: float(v) for k, v in rec.get("intent_weights", {}).items()},
            trigger_threshold=float(rec.get("trigger_threshold", DEFAULT_TRIGGER_THRESHOLD)),
            k_final=int(rec.get("k_final", 10)),
        )
        config.validate()
        return config


@dataclass(frozen=True)
class GenericTerm:
    component_id: str
    sigma: float
    weight: float
    contribution: float


@dataclass(frozen=True)
class IntentTerm:
    intent_id: str
    probability: float
    component_id: str
    sigma: Optional[float]  # None when skipped by the trigger threshold
    weight: float
    contribution: float
    skipped: bool = False


@dataclass(frozen=True)
class ScoreTrace:
    """Per-document decomposition of the final score."""

    doc_id: str
    final_score: float
    generic_terms: tuple[GenericTerm, ...] = ()
    intent_terms: tuple[IntentTerm, ...] = ()
    filtered: Optional[str] = None

    def contribution_sum(self) -> float:
        return sum(t.contribution for t in self.generic_terms) + sum(
            t.contribution for t in self.intent_terms
        )

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "final_score": self.final_score,
            "filtered": self.filtered,
            "generic_terms": [
                [t.component_id, t.sigma, t.weight, t.contribution] for t in self.generic_terms
            ],
            "intent_terms": [
                [t.intent_id, t.probability, t.component_id, t.sigma, t.weight,
                 t.contribution, t.skipped]
                for t in self.intent_terms
            ],
        }


@dataclass(frozen=True)
class RankedItem:
    doc_id: str
    score: float


@dataclass(frozen=True)
class RankedList:
    """Final ordering plus the traces behind it."""

    query_id: str
    items: tuple[RankedItem, ...]
    traces: Mapping[str, ScoreTrace]
    config_fingerprint: str
    triggered_intents: frozenset = frozenset()

    def doc_ids(self) -> tuple[str, ...]:
        return tuple(item.doc_id for item in self.items)

    def rank_of(self, doc_id: str) -> Optional[int]:
        """1-based rank, or None if not in the final list."""
        for i, item in enumerate(self.items, start=1):
            if item.doc_id == doc_id:
                return i
        return None


def validate_config(registry: ComponentRegistry, config: RankerConfig) -> None:
    """Raise before scoring starts if the config references unknown components."""
    config.validate()
    missing = sorted(set(config.generic_weights) - set(registry.generic))
    if missing:
        raise ConfigurationError(f"generic weights reference unregistered components: {missing}")
    missing = sorted(set(config.intent_weights) - set(registry.intent_specific))
    if missing:
        raise ConfigurationError(
            f"intent weights reference intents with no registered component: {missing}"
        )


def score_candidate(
    ctx: QueryContext,
    doc: Document,
    signals: SharedSignals,
    intents: IntentDistribution,
    registry: ComponentRegistry,
    config: RankerConfig,
) -> tuple[float, ScoreTrace]:
    """Factored scoring: generic sum plus threshold-gated intent terms."""
    generic_terms = []
    total = 0.0
    for component_id in sorted(config.generic_weights):
        weight = config.generic_weights[component_id]
        sigma = registry.generic[component_id].score(ctx, doc, signals)
        contribution = weight * sigma
        total += contribution
        generic_terms.append(GenericTerm(component_id, sigma, weight, contribution))

    intent_terms = []
    for intent_id in sorted(config.intent_weights):
        weight = config.intent_weights[intent_id]
        scorer = registry.intent_specific[intent_id]
        p = intents.get(intent_id)
        if p < config.trigger_threshold or p == 0.0:
            intent_terms.append(
                IntentTerm(intent_id, p, scorer.component_id, None, weight, 0.0, skipped=True)
            )
            continue
        sigma = scorer.score(ctx, doc, signals)
        contribution = p * weight * sigma
        total += contribution
        intent_terms.append(
            IntentTerm(intent_id, p, scorer.component_id, sigma, weight, contribution)
        )

    trace = ScoreTrace(
        doc_id=doc.doc_id,
        final_score=total,
        generic_terms=tuple(generic_terms),
        intent_terms=tuple(intent_terms),
    )
    return total, trace


def score_candidate_mixture(
    ctx: QueryContext,
    doc: Document,
    signals: SharedSignals,
    intents: IntentDistribution,
    registry: ComponentRegistry,
    config: RankerConfig,
) -> float:
    """Reference evaluator in expanded mixture form, with no thresholding.

    Computes sum over every intent in the distribution of P(t|q) times the
    full generic sum plus that intent's own weighted term. Kept separate
    from score_candidate so the two can check each other.
    """
    generic_sum = 0.0
    for component_id in sorted(config.generic_weights):
        weight = config.generic_weights[component_id]
        generic_sum += weight * registry.generic[component_id].score(ctx, doc, signals)

    total = 0.0
    for intent_id, p in intents.items():
        specific = 0.0
        if intent_id in config.intent_weights:
            scorer = registry.intent_specific[intent_id]
            specific = config.intent_weights[intent_id] * scorer.score(ctx, doc, signals)
        total += p * (generic_sum + specific)
    return total


def rank(
    ctx: QueryContext,
    scored_inputs: Sequence[tuple[Document, SharedSignals]],
    intents: IntentDistribution,
    registry: ComponentRegistry,
    config: RankerConfig,
    query_id: str = "",
) -> RankedList:
    """Filter policy-rejected docs, score the rest, sort, truncate.

    Ties break by document quality (descending) then doc_id so the order is
    total and reproducible.
    """
    validate_config(registry, config)
    traces: dict[str, ScoreTrace] = {}
    scored: list[tuple[float, float, str]] = []  # (score, quality, doc_id)
    for doc, signals in scored_inputs:
        quality_mean, rejected = document_quality(doc.quality)
        if rejected:
            traces[doc.doc_id] = ScoreTrace(doc.doc_id, 0.0, filtered="policy")
            continue
        score, trace = score_candidate(ctx, doc, signals, intents, registry, config)
        traces[doc.doc_id] = trace
        scored.append((score, quality_mean, doc.doc_id))

    scored.sort(key=lambda row: (-row[0], -row[1], row[2]))
    items = tuple(RankedItem(doc_id, score) for score, _, doc_id in scored[: config.k_final])
    triggered = frozenset(
        intent_id
        for intent_id in config.intent_weights
        if intents.get(intent_id) >= config.trigger_threshold and intents.get(intent_id) > 0.0
    )
    return RankedList(
        query_id=query_id,
        items=items,
        traces=traces,
        config_fingerprint=config.fingerprint(),
        triggered_intents=triggered,
    )


def explain(ranked: RankedList, doc_id: str) -> str:
    """Human-readable trace table for one document of a ranked list."""
    trace = ranked.traces.get(doc_id)
    if trace is None:
        near = difflib.get_close_matches(doc_id, sorted(ranked.traces), n=3, cutoff=0.0)
        raise IntentRankError(
            f"doc {doc_id!r} was not scored for query {ranked.query_id!r}; "
            f"nearest traced ids: {', '.join(near) if near else '(none)'}"
        )
    lines = []
    rank_pos = ranked.rank_of(doc_id)
    rank_text = f"rank {rank_pos}" if rank_pos is not None else "below cutoff"
    lines.append(f"doc {doc_id}  query {ranked.query_id!r}  config {ranked.config_fingerprint}")
    if trace.filtered is not None:
        lines.append(f"  filtered out before scoring: reason={trace.filtered}")
        return "\n".join(lines) + "\n"
    lines.append(f"  final score {trace.final_score:.9f}  ({rank_text})")
    lines.append("  scope    component             sigma      weight     p(t|q)   contribution")
    for t in trace.generic_terms:
        lines.append(
            f"  generic  {t.component_id:<20} {t.sigma:>9.6f} {t.weight:>10.4f}        -  "
            f"{t.contribution:>13.9f}"
        )
    for t in trace.intent_terms:
        if t.skipped:
            lines.append(
                f"  intent   {t.intent_id + '/' + t.component_id:<20}      skip "
                f"{t.weight:>10.4f} {t.probability:>8.4f}  {'(below threshold)':>13}"
            )
        else:
            lines.append(
                f"  intent   {t.intent_id + '/' + t.component_id:<20} {t.sigma:>9.6f} "
                f"{t.weight:>10.4f} {t.probability:>8.4f}  {t.contribution:>13.9f}"
            )
    lines.append(f"  contributions sum {trace.contribution_sum():.9f}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TriggerStats:
    """How often each intent's component fired over a query batch."""

    counts: Mapping[str, int]
    total_queries: int

    def rate(self, intent_id: str) -> float:
        if self.total_queries == 0:
            return 0.0
        return self.counts.get(intent_id, 0) / self.total_queries


def trigger_stats(ranked_lists: Iterable[RankedList]) -> TriggerStats:
    counts: dict[str, int] = {}
    total = 0
    for ranked in ranked_lists:
        total += 1
        for intent_id in ranked.triggered_intents:
            counts[intent_id] = counts.get(intent_id, 0) + 1
    return TriggerStats(counts=dict(sorted(counts.items())), total_queries=total)


@dataclass(frozen=True)
class TriggerAlert:
    intent_id: str
    rate: float
    baseline_rate: float
    delta: float
    alert: bool


def compare_trigger_stats(
    current: TriggerStats, baseline: TriggerStats, band: float = 0.1
) -> list[TriggerAlert]:
    """Rate deltas against a baseline snapshot; flags |delta| beyond the band."""
    intents = sorted(set(current.counts) | set(baseline.counts))
    alerts = []
    for intent_id in intents:
        rate = current.rate(intent_id)
        base = baseline.rate(intent_id)
        delta = rate - base
        alerts.append(TriggerAlert(intent_id, rate, base, delta, abs(delta) > band))
    return alerts


def export_traces(ranked: RankedList) -> list[dict]:
    """Trace records (one per scored or filtered doc) for offline analysis."""
    return [ranked.traces[doc_id].to_record() for doc_id in sorted(ranked.traces)]
