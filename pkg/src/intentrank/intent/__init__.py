from .space import FALLBACK_INTENT, IntentDistribution, IntentSpace, normalize_evidence
from .patterns import (
    Dictionary,
    DictSlot,
    EntityRecord,
    EntitySlot,
    KnowledgeBase,
    Literal,
    PatternMatch,
    QueryPattern,
    SpecialGrammar,
    match_pattern,
    parse_pattern,
    parse_pattern_tokens,
)
from .linking import LinkedSpan, link_entities, score_entity_span
from .classify import (
    CharNgramClassifier,
    ClassifierRegistry,
    FriendNameClassifier,
    KeywordClassifier,
)
from .detect import (
    DetectionResult,
    EvidenceItem,
    IntentConfig,
    SUGGESTION_EVIDENCE,
    detect,
    grammar_window,
    load_dictionaries,
    load_entities,
    load_patterns,
)

__all__ = [
    "FALLBACK_INTENT",
    "IntentDistribution",
    "IntentSpace",
    "normalize_evidence",
    "Dictionary",
    "DictSlot",
    "EntityRecord",
    "EntitySlot",
    "KnowledgeBase",
    "Literal",
    "PatternMatch",
    "QueryPattern",
    "SpecialGrammar",
    "match_pattern",
    "parse_pattern",
    "parse_pattern_tokens",
    "LinkedSpan",
    "link_entities",
    "score_entity_span",
    "CharNgramClassifier",
    "ClassifierRegistry",
    "FriendNameClassifier",
    "KeywordClassifier",
    "DetectionResult",
    "EvidenceItem",
    "IntentConfig",
    "SUGGESTION_EVIDENCE",
    "detect",
    "grammar_window",
    "load_dictionaries",
    "load_entities",
    "load_patterns",
]
