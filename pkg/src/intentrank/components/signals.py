"""Per-candidate precomputed features shared by all scoring components.

Built once per (query, document) pair, read-only afterward, so scorers stay
pure and cheap. Carries both the retrieval-stage features and the detection
captures the intent-specific scorers need.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..corpus import PairCounts
from ..intent.patterns import SpecialGrammar
from ..intent.space import IntentDistribution


@dataclass(frozen=True)
class SharedSignals:
    query_tokens: tuple[str, ...] = ()
    first_pass_bm25: float = 0.0
    proximity: float = 0.0
    title_hit_ratio: float = 0.0
    relations: frozenset = frozenset()
    distance_km: Optional[float] = None
    language_overlap: float = 0.0
    quality_mean: float = 0.0
    pair_counts: PairCounts = field(default_factory=PairCounts)
    doc_impressions: int = 0
    doc_clicks: int = 0
    doc_good_clicks: int = 0
    intents: Optional[IntentDistribution] = None
    friend_target: Optional[str] = None
    publisher_entity: Optional[str] = None
    grammar: Optional[SpecialGrammar] = None
    now_ts: int = 0
    graph_warning: bool = False

    def ctr_qd(self) -> float:
        if self.pair_counts.impressions == 0:
            return 0.0
        return self.pair_counts.clicks / self.pair_counts.impressions

    def good_ctr_qd(self) -> float:
        return self.pair_counts.good_clicks / (self.pair_counts.clicks + 1)

    def doc_good_ctr(self) -> float:
        return self.doc_good_clicks / (self.doc_clicks + 1)
