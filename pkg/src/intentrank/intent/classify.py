"""Rule-based reference intent classifiers.

A classifier is any pure callable (query_text, user_context) -> confidence
in [0,1]. The registry evaluates them all and keeps the max per intent.
Outputs outside [0,1] are clamped with a warning rather than rejected, so a
misbehaving classifier cannot take down detection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from ..corpus import SocialGraph, UserContext
from ..index import tokenize
from ..errors import ConfigurationError

log = logging.getLogger(__name__)

ClassifierFn = Callable[[str, UserContext], float]


@dataclass(frozen=True)
class RegisteredClassifier:
    intent_id: str
    name: str
    fn: ClassifierFn


class KeywordClassifier:
    """Fires a calibrated confidence when any keyword appears in the query."""

    def __init__(self, keyword_confidence: Mapping[str, float]):
        self.keyword_confidence = {k.lower(): float(v) for k, v in keyword_confidence.items()}

    def __call__(self, query_text: str, ctx_user: UserContext) -> float:
        tokens = set(tokenize(query_text))
        hits = [conf for kw, conf in self.keyword_confidence.items() if kw in tokens]
        return max(hits) if hits else 0.0


class CharNgramClassifier:
    """Fires when any configured character n-gram occurs in the query."""

    def __init__(self, ngrams: Sequence[str], confidence: float = 0.6):
        self.ngrams = tuple(g.lower() for g in ngrams)
        self.confidence = float(confidence)

    def __call__(self, query_text: str, ctx_user: UserContext) -> float:
        text = query_text.lower()
        return self.confidence if any(g in text for g in self.ngrams) else 0.0


class FriendNameClassifier:
    """Detects queries that name one of the searcher's friends.

    Calibration: a query equal to a friend's full name scores 0.9; a query
    whose tokens are all contained in some friend's name scores 0.75.
    """

    FULL_MATCH = 0.9
    PARTIAL_MATCH = 0.75

    def __init__(self, names_by_user: Mapping[str, str], graph: SocialGraph):
        self._name_tokens = {uid: tuple(tokenize(name)) for uid, name in names_by_user.items()}
        self._graph = graph

    def matching_friend(self, query_text: str, ctx_user: UserContext) -> Optional[tuple[str, float]]:
        query = tuple(tokenize(query_text))
        if not query:
            return None
        best: Optional[tuple[str, float]] = None
        for friend_id in sorted(self._graph.friends(ctx_user.user_id)):
            name = self._name_tokens.get(friend_id)
            if not name:
                continue
            if query == name:
                conf = self.FULL_MATCH
            elif set(query) <= set(name):
                conf = self.PARTIAL_MATCH
            else:
                continue
            if best is None or conf > best[1]:
                best = (friend_id, conf)
        return best

    def __call__(self, query_text: str, ctx_user: UserContext) -> float:
        match = self.matching_friend(query_text, ctx_user)
        return match[1] if match else 0.0


@dataclass
class ClassifierRegistry:
    classifiers: list[RegisteredClassifier] = field(default_factory=list)

    def register(self, intent_id: str, name: str, fn: ClassifierFn) -> None:
        if any(c.name == name and c.intent_id == intent_id for c in self.classifiers):
            raise ConfigurationError(f"classifier {name!r} already registered for {intent_id!r}")
        self.classifiers.append(RegisteredClassifier(intent_id, name, fn))

    def classify(self, query_text: str, ctx_user: UserContext) -> dict[str, float]:
        """Max confidence per intent over all registered classifiers."""
        if not query_text.strip():
            return {}
        out: dict[str, float] = {}
        for reg in self.classifiers:
            value = float(reg.fn(query_text, ctx_user))
            if value < 0.0 or value > 1.0:
                log.warning(
                    "classifier %s/%s emitted %s, clamping to [0,1]",
                    reg.intent_id, reg.name, value,
                )
                value = min(1.0, max(0.0, value))
            if value > out.get(reg.intent_id, 0.0):
                out[reg.intent_id] = value
        return {k: v for k, v in out.items() if v > 0.0}
