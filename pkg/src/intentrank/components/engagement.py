"""Trainable engagement component: logistic model over shared signals.

Labels come from the query log (good-clicked among shown documents). The
model is deliberately small: a linear layer plus sigmoid over named
features, trained by full-batch gradient descent on L2-regularized
log-loss, deterministic for a fixed seed.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from ..corpus import Document, QueryContext, QueryRecord
from ..errors import ConfigurationError, IntentRankError
from .generic import (
    DEFAULT_LOCATION_TAU_KM,
    DEFAULT_RELATION_WEIGHTS,
    social_relevance_value,
    squash,
)
from .generic import Scorer
from .signals import SharedSignals

log = logging.getLogger(__name__)

INTENT_FEATURE_PREFIX = "intent:"

#: name -> extractor over SharedSignals; every value already lives in [0,1].
FEATURE_EXTRACTORS: dict[str, Callable[[SharedSignals], float]] = {
    "bm25_squashed": lambda s: squash(s.first_pass_bm25),
    "proximity": lambda s: s.proximity,
    "title_hit_ratio": lambda s: s.title_hit_ratio,
    "social": lambda s: social_relevance_value(s.relations, DEFAULT_RELATION_WEIGHTS),
    "location": lambda s: (
        0.0 if s.distance_km is None else float(np.exp(-s.distance_km / DEFAULT_LOCATION_TAU_KM))
    ),
    "language": lambda s: s.language_overlap,
    "quality": lambda s: s.quality_mean,
    "ctr_qd": lambda s: s.ctr_qd(),
    "good_ctr_qd": lambda s: s.good_ctr_qd(),
    "doc_good_ctr": lambda s: s.doc_good_ctr(),
}

DEFAULT_FEATURES = (
    "bm25_squashed", "title_hit_ratio", "social", "language",
    "quality", "ctr_qd", "good_ctr_qd",
)


def extract_features(
    names: Sequence[str], signals: SharedSignals, warnings: Optional[Counter] = None
) -> np.ndarray:
    """Feature vector in declared order; unknown names become 0 with a warning."""
    values = np.zeros(len(names), dtype=np.float64)
    for i, name in enumerate(names):
        if name in FEATURE_EXTRACTORS:
            values[i] = FEATURE_EXTRACTORS[name](signals)
        elif name.startswith(INTENT_FEATURE_PREFIX):
            intent_id = name[len(INTENT_FEATURE_PREFIX):]
            values[i] = signals.intents.get(intent_id) if signals.intents is not None else 0.0
        else:
            if warnings is not None:
                warnings[name] += 1
            if warnings is None or warnings[name] == 1:
                log.warning("unknown engagement feature %r treated as 0", name)
    return values


def sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    # exp(-logaddexp(0, -z)) never overflows, unlike 1 / (1 + exp(-z))
    return np.exp(-np.logaddexp(0.0, -np.asarray(z, dtype=np.float64)))


@dataclass(frozen=True)
class EngagementModel:
    features: tuple[str, ...]
    weights: tuple[float, ...]
    bias: float = 0.0

    def __post_init__(self) -> None:
        if len(self.features) != len(self.weights):
            raise ConfigurationError(
                f"engagement model has {len(self.features)} features but "
                f"{len(self.weights)} weights"
            )

    def predict(self, x: np.ndarray) -> float:
        z = float(np.dot(np.asarray(self.weights), x) + self.bias)
        return float(sigmoid(z))

    def to_record(self) -> dict:
        return {
            "features": list(self.features),
            "weights": list(self.weights),
            "bias": self.bias,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EngagementModel":
        return cls(
            features=tuple(rec["features"]),
            weights=tuple(float(w) for w in rec["weights"]),
            bias=float(rec.get("bias", 0.0)),
        )

    @classmethod
    def zeros(cls, features: Sequence[str]) -> "EngagementModel":
        return cls(features=tuple(features), weights=tuple(0.0 for _ in features), bias=0.0)


def save_model(model: EngagementModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_record(), sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> EngagementModel:
    return EngagementModel.from_record(json.loads(Path(path).read_text(encoding="utf-8")))


class EngagementScorer(Scorer):
    """Logistic engagement probability as a ranking component."""

    def __init__(self, component_id: str = "engagement", model: Optional[EngagementModel] = None):
        super().__init__(component_id)
        self.model = model if model is not None else EngagementModel.zeros(DEFAULT_FEATURES)
        self.feature_warnings: Counter = Counter()

    def score(self, ctx: QueryContext, doc: Document, signals: SharedSignals) -> float:
        x = extract_features(self.model.features, signals, self.feature_warnings)
        return self.model.predict(x)


def loss_and_gradient(
    x: np.ndarray, y: np.ndarray, weights: np.ndarray, bias: float, l2: float = 0.0
) -> tuple[float, np.ndarray, float]:
    """Mean log-loss with L2 on weights, plus analytic gradients.

    Uses logaddexp for the loss so large |z| cannot overflow.
    """
    z = x @ weights + bias
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * float(np.dot(weights, weights))
    residual = sigmoid(z) - y
    grad_w = x.T @ residual / len(y) + l2 * weights
    grad_b = float(np.mean(residual))
    return loss, grad_w, grad_b


@dataclass(frozen=True)
class TrainParams:
    learning_rate: float = 1.0
    iterations: int = 500
    l2: float = 1e-4
    seed: int = 0


@dataclass
class TrainReport:
    final_loss: float
    train_auc: float
    n_examples: int
    n_positive: int
    loss_curve: list = field(default_factory=list)


def auc_score(labels: np.ndarray, scores: np.ndarray) -> float:
    """Rank-based AUC with average ranks for ties."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise IntentRankError("AUC undefined with a single class")
    return float((ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def build_training_matrix(
    log_records: Iterable[QueryRecord],
    signals_for: Callable[[QueryRecord, str], Optional[SharedSignals]],
    feature_names: Sequence[str],
) -> tuple[np.ndarray, np.ndarray]:
    """(X, y) over every shown document; label is good-clicked membership."""
    rows = []
    labels = []
    warnings: Counter = Counter()
    for rec in log_records:
        for doc_id in rec.shown_doc_ids:
            signals = signals_for(rec, doc_id)
            if signals is None:
                continue
            rows.append(extract_features(feature_names, signals, warnings))
            labels.append(1.0 if doc_id in rec.good_clicked else 0.0)
    if not rows:
        raise IntentRankError("query log produced no training examples")
    return np.asarray(rows), np.asarray(labels)


def train_engagement(
    log_records: Sequence[QueryRecord],
    signals_for: Callable[[QueryRecord, str], Optional[SharedSignals]],
    feature_names: Sequence[str] = DEFAULT_FEATURES,
    params: TrainParams = TrainParams(),
) -> tuple[EngagementModel, TrainReport]:
    """Full-batch gradient descent on log-loss; deterministic given the seed."""
    if not log_records:
        raise IntentRankError("query log is empty; nothing to train on")
    x, y = build_training_matrix(log_records, signals_for, feature_names)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == len(y):
        raise IntentRankError(
            "training labels are all one class; add query records with both "
            "good-clicked and skipped documents"
        )

    # Zero init keeps the run reproducible; the loss is convex so nothing
    # is lost. The seed is reserved for future minibatch shuffling.
    weights = np.zeros(len(feature_names))
    bias = 0.0
    curve = []
    for _ in range(params.iterations):
        loss, grad_w, grad_b = loss_and_gradient(x, y, weights, bias, params.l2)
        curve.append(loss)
        weights = weights - params.learning_rate * grad_w
        bias = bias - params.learning_rate * grad_b
    final_loss, _, _ = loss_and_gradient(x, y, weights, bias, params.l2)
    scores = sigmoid(x @ weights + bias)
    report = TrainReport(
        final_loss=final_loss,
        train_auc=auc_score(y, np.asarray(scores)),
        n_examples=len(y),
        n_positive=n_pos,
        loss_curve=curve,
    )
    model = EngagementModel(
        features=tuple(feature_names),
        weights=tuple(float(w) for w in weights),
        bias=float(bias),
    )
    return model, report
