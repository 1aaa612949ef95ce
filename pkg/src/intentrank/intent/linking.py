"""Lexical-context entity linking.

Candidates come from exact token-aligned alias matches. Each candidate is
scored by how well the rest of the query agrees with the entity's
description terms and by entity popularity; entities directly connected to
the searcher (friends, joined groups) get their popularity floored so a
friend named like a celebrity still links. Non-overlapping spans are then
picked greedily by score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..corpus import SocialGraph, UserContext
from .patterns import EntityRecord, KnowledgeBase

DEFAULT_LINK_THRESHOLD = 0.3
CONNECTED_POPULARITY_FLOOR = 0.8


@dataclass(frozen=True)
class LinkedSpan:
    start: int
    end: int  # exclusive
    entity_id: str
    entity_type: str
    score: float

    def overlaps(self, other: "LinkedSpan") -> bool:
        return self.start < other.end and other.start < self.end


def jaccard(a: set, b: set) -> float:
    if not a or not b:
        return 0.0
    union = a | b
    return len(a & b) / len(union)


def is_connected(graph: Optional[SocialGraph], user_id: str, entity_id: str) -> bool:
    """Directly connected: friendship or group membership."""
    if graph is None:
        return False
    return graph.has_edge(user_id, entity_id, "friend") or graph.has_edge(
        user_id, entity_id, "member"
    )


def score_entity_span(
    query_tokens: Sequence[str],
    start: int,
    end: int,
    entity: EntityRecord,
    ctx_user: Optional[UserContext] = None,
    graph: Optional[SocialGraph] = None,
) -> float:
    """Link score in [0,1] for an exact alias hit on tokens[start:end]."""
    alias_exactness = 1.0  # candidates are exact token-aligned alias hits
    outside = set(query_tokens[:start]) | set(query_tokens[end:])
    context_overlap = jaccard(outside, set(entity.description_terms))
    popularity = entity.popularity
    if ctx_user is not None and is_connected(graph, ctx_user.user_id, entity.entity_id):
        popularity = max(popularity, CONNECTED_POPULARITY_FLOOR)
    return alias_exactness * (0.5 + 0.5 * context_overlap) * (0.5 + 0.5 * popularity)


def link_entities(
    query_tokens: Sequence[str],
    kb: KnowledgeBase,
    ctx_user: Optional[UserContext] = None,
    graph: Optional[SocialGraph] = None,
    threshold: float = DEFAULT_LINK_THRESHOLD,
) -> list[LinkedSpan]:
    """Best non-overlapping entity spans, greedy by score, above threshold."""
    candidates: list[LinkedSpan] = []
    for start in range(len(query_tokens)):
        for length, entity in kb.alias_matches_at(query_tokens, start):
            score = score_entity_span(query_tokens, start, start + length, entity,
                                      ctx_user, graph)
            if score >= threshold:
                candidates.append(
                    LinkedSpan(start, start + length, entity.entity_id,
                               entity.entity_type, score)
                )
    candidates.sort(key=lambda s: (-s.score, s.start, -(s.end - s.start), s.entity_id))
    chosen: list[LinkedSpan] = []
    for cand in candidates:
        if not any(cand.overlaps(done) for done in chosen):
            chosen.append(cand)
    chosen.sort(key=lambda s: s.start)
    return chosen
