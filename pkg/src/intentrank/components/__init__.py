from .signals import SharedSignals
from .generic import (
    DEFAULT_LOCATION_TAU_KM,
    DEFAULT_RELATION_WEIGHTS,
    DEFAULT_TEXT_MIX,
    DocumentQualityScorer,
    LanguageMatchScorer,
    LocationRelevanceScorer,
    PassthroughScorer,
    Scorer,
    SocialRelevanceScorer,
    TextRelevanceScorer,
    document_quality,
    haversine_km,
    language_match_value,
    location_relevance_value,
    min_cover_window,
    proximity_score,
    social_relevance_value,
    squash,
    text_relevance_value,
    title_hit_ratio,
)
from .intent_specific import (
    FriendIntentScorer,
    GrammarIntentScorer,
    VideoPublisherScorer,
    friend_intent_value,
    grammar_intent_value,
    video_publisher_value,
)
from .engagement import (
    DEFAULT_FEATURES,
    EngagementModel,
    EngagementScorer,
    TrainParams,
    TrainReport,
    auc_score,
    extract_features,
    load_model,
    loss_and_gradient,
    save_model,
    sigmoid,
    train_engagement,
)
from .registry import (
    ComponentRegistry,
    ComponentSpec,
    build_registry,
    specs_from_records,
    VALID_KINDS,
)
