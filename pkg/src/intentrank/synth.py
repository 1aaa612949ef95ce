"""Synthetic fixture generators: corpora, logs, judgments, suites.

Each builder returns a Fixture holding every asset an engine needs; the
writer lays it out as a directory with an engine.json plus a manifest the
generator computes about itself (so loaders can be checked against it).
Builders are deterministic for a fixed seed.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .records import write_records

DEMO_NOW_TS = 1_750_000_000  # fixed clock so engagement windows are stable


@dataclass
class Fixture:
    name: str
    documents: list = field(default_factory=list)
    users: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    entities: list = field(default_factory=list)
    dictionaries: list = field(default_factory=list)
    patterns: list = field(default_factory=list)
    classifiers: list = field(default_factory=list)
    components: list = field(default_factory=list)
    query_log: list = field(default_factory=list)
    judgments: list = field(default_factory=list)
    bvt_cases: list = field(default_factory=list)
    intent_space: list = field(default_factory=lambda: [
        "friend", "video_publisher", "special_grammar", "news", "sports",
    ])
    ranker: dict = field(default_factory=lambda: {"trigger_threshold": 0.05, "k_final": 10})
    retrieval: dict = field(default_factory=lambda: {"num_shards": 2, "k": 50})
    now_ts: int = DEMO_NOW_TS
    extra_files: dict = field(default_factory=dict)  # relative path -> records

    def manifest(self) -> dict:
        counts: dict[str, int] = {}
        for doc in self.documents:
            counts[doc["doc_type"]] = counts.get(doc["doc_type"], 0) + 1
        return {
            "fixture": self.name,
            "documents_total": len(self.documents),
            "doc_type_counts": dict(sorted(counts.items())),
            "users_total": len(self.users),
            "edges_total": len(self.edges),
            "query_log_total": len(self.query_log),
            "judgments_total": len(self.judgments),
            "bvt_total": len(self.bvt_cases),
        }


def write_fixture(fixture: Fixture, out_dir: str | Path) -> Path:
    """Write the fixture as an engine directory; returns the engine config path."""
    out = Path(out_dir)
    corpus_dir = out / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    write_records(corpus_dir / "documents.jsonl", fixture.documents)
    write_records(corpus_dir / "users.jsonl", fixture.users)
    write_records(corpus_dir / "edges.jsonl", fixture.edges)

    engine_config: dict = {
        "corpus_dir": "corpus",
        "retrieval": fixture.retrieval,
        "ranker": fixture.ranker,
        "components": fixture.components,
        "intent": {"space": fixture.intent_space, "classifiers": fixture.classifiers},
        "now_ts": fixture.now_ts,
    }
    if fixture.entities:
        write_records(out / "entities.jsonl", fixture.entities)
        engine_config["intent"]["entities"] = "entities.jsonl"
    if fixture.dictionaries:
        write_records(out / "dictionaries.jsonl", fixture.dictionaries)
        engine_config["intent"]["dictionaries"] = "dictionaries.jsonl"
    if fixture.patterns:
        write_records(out / "patterns.jsonl", fixture.patterns)
        engine_config["intent"]["patterns"] = "patterns.jsonl"
    if fixture.query_log:
        write_records(out / "query_log.jsonl", fixture.query_log)
        engine_config["query_log"] = "query_log.jsonl"
    if fixture.judgments:
        write_records(out / "judgments.jsonl", fixture.judgments)
        engine_config["judgments"] = "judgments.jsonl"
    if fixture.bvt_cases:
        write_records(out / "bvts.jsonl", fixture.bvt_cases)
        engine_config["bvt_suite"] = "bvts.jsonl"
    for rel_path, records in fixture.extra_files.items():
        write_records(out / rel_path, records)

    (out / "manifest.json").write_text(
        json.dumps(fixture.manifest(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    config_path = out / "engine.json"
    config_path.write_text(
        json.dumps(engine_config, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return config_path


# ------------------------------------------------------------------ #
# shared record helpers


def doc(doc_id: str, doc_type: str, title: str, body: str = "", **kwargs) -> dict:
    rec = {"doc_id": doc_id, "doc_type": doc_type, "title": title, "body": body,
           "languages": {"en": 1.0}, "created_ts": DEMO_NOW_TS - 30 * 86400}
    rec.update(kwargs)
    return rec


def quality(mean_like: float, policy_reject: bool = False, video: Optional[float] = None) -> dict:
    rec = {
        "kids_friendly": mean_like,
        "authentic": mean_like,
        "authoritative": mean_like,
        "readability": mean_like,
        "policy_reject": policy_reject,
    }
    if video is not None:
        rec["video_resolution"] = video
    return rec


def default_components(
    text: float = 1.0,
    engagement: float = 0.5,
    social: float = 1.0,
    location: float = 0.5,
    language: float = 0.75,
    doc_quality: float = 0.25,
    friend: float = 1.5,
    grammar: float = 1.2,
    publisher: float = 1.5,
    publisher_mode: str = "binary",
) -> list[dict]:
    return [
        {"component_id": "text", "kind": "text_relevance", "weight": text},
        {"component_id": "engagement", "kind": "engagement", "weight": engagement},
        {"component_id": "social", "kind": "social_relevance", "weight": social},
        {"component_id": "location", "kind": "location_relevance", "weight": location},
        {"component_id": "language", "kind": "language_match", "weight": language},
        {"component_id": "quality", "kind": "document_quality", "weight": doc_quality},
        {"component_id": "friend_match", "kind": "friend_intent",
         "scope": "intent_specific", "intent": "friend", "weight": friend},
        {"component_id": "grammar_match", "kind": "grammar_intent",
         "scope": "intent_specific", "intent": "special_grammar", "weight": grammar},
        {"component_id": "publisher_match", "kind": "video_publisher",
         "scope": "intent_specific", "intent": "video_publisher", "weight": publisher,
         "params": {"mode": publisher_mode}},
    ]


# ------------------------------------------------------------------ #
# demo fixture: small social world with every feature exercised


def build_demo() -> Fixture:
    fx = Fixture(name="demo")
    yesterday_noon = DEMO_NOW_TS - DEMO_NOW_TS % 86400 - 43200
    sf = [37.7749, -122.4194]
    oakland = [37.8044, -122.2712]

    fx.users = [
        {"user_id": "u_alice", "languages": ["en"], "location": sf,
         "engaged_doc_ids": {"d_post_bob": yesterday_noon, "d_vid_shake": yesterday_noon}},
        {"user_id": "u_bob", "languages": ["en"], "location": oakland, "engaged_doc_ids": {}},
        {"user_id": "u_carol", "languages": ["en", "es"], "engaged_doc_ids": {}},
        {"user_id": "u_dan", "languages": ["en"], "engaged_doc_ids": {}},
        {"user_id": "u_eve", "languages": ["en"], "engaged_doc_ids": {}},
    ]
    fx.edges = [
        {"src": "u_alice", "dst": "u_bob", "label": "friend"},
        {"src": "u_bob", "dst": "u_alice", "label": "friend"},
        {"src": "u_bob", "dst": "u_carol", "label": "friend"},
        {"src": "u_carol", "dst": "u_bob", "label": "friend"},
        {"src": "u_dan", "dst": "u_alice", "label": "pending_friend"},
        {"src": "u_alice", "dst": "u_eve", "label": "follow"},
        {"src": "u_alice", "dst": "d_post_bob", "label": "engaged"},
        {"src": "u_alice", "dst": "d_vid_shake", "label": "engaged"},
        {"src": "u_bob", "dst": "d_group_mom", "label": "engaged"},
        {"src": "u_alice", "dst": "d_group_mom", "label": "pending_join"},
    ]

    fx.documents = [
        doc("d_user_alice", "user", "Alice Park", author_id="u_alice"),
        doc("d_user_bob", "user", "Bob Stone", author_id="u_bob"),
        doc("d_user_carol", "user", "Carol Reyes", author_id="u_carol"),
        doc("d_user_dan", "user", "Dan Field", author_id="u_dan"),
        doc("d_user_eve", "user", "Eve Quinn", author_id="u_eve"),
        doc("d_page_tswift", "page", "Taylor Swift",
            body="official page music tour dates", author_id="pg_tswift",
            quality=quality(0.9)),
        doc("d_page_5mc", "page", "5 Minute Crafts",
            body="crafts diy hacks page", author_id="pg_5mc", quality=quality(0.8)),
        doc("d_vid_shake", "video", "Taylor Swift shake it off",
            body="official music video", publisher_id="pg_tswift",
            quality=quality(0.9, video=0.9),
            engagement={"impressions": 900, "clicks": 300, "good_clicks": 240}),
        doc("d_vid_taylor_ar", "video", "taylor swift concert clip",
            body="taylor swift taylor swift live", languages={"ar": 1.0},
            quality=quality(0.3, video=0.4),
            engagement={"impressions": 500, "clicks": 80, "good_clicks": 4}),
        doc("d_vid_5mc", "video", "5 minute crafts kitchen hacks",
            body="crafts video", publisher_id="pg_5mc", quality=quality(0.8, video=0.8),
            engagement={"impressions": 700, "clicks": 210, "good_clicks": 150}),
        doc("d_vid_avengers", "video", "avengers official trailer",
            body="movie teaser", publisher_id="pg_marvel",
            quality=quality(0.85, video=0.9), entity_ids=["m_avengers"]),
        doc("d_post_bob", "post", "camping trip photos",
            body="great weekend camping with the crew", author_id="u_bob",
            created_ts=yesterday_noon),
        doc("d_post_carol", "post", "nba finals watch party",
            body="hosting a nba finals night", author_id="u_carol"),
        doc("d_post_spam", "post", "taylor swift free tickets click here",
            body="taylor swift taylor swift win now", author_id="u_eve",
            quality=quality(0.1, policy_reject=True)),
        doc("d_group_mom", "group", "new mom groups of the bay",
            body="support group for new moms", location=oakland),
        doc("d_event_show", "event", "taylor swift eras tour stop",
            body="stadium show", location=sf, quality=quality(0.7)),
        doc("d_photo_bob", "photo", "sunset at the lake", author_id="u_bob"),
    ]

    fx.entities = [
        {"entity_id": "pg_tswift", "entity_type": "publisher",
         "aliases": ["taylor swift"], "description_terms": ["music", "pop", "video"],
         "popularity": 0.95},
        {"entity_id": "pg_5mc", "entity_type": "publisher",
         "aliases": ["5 minute crafts"], "description_terms": ["crafts", "diy", "video"],
         "popularity": 0.9},
        {"entity_id": "pg_marvel", "entity_type": "publisher",
         "aliases": ["marvel"], "description_terms": ["movie"], "popularity": 0.85},
        {"entity_id": "m_avengers", "entity_type": "movie",
         "aliases": ["avengers", "the avengers"], "description_terms": ["marvel", "movie"],
         "popularity": 0.9},
        {"entity_id": "m_lifeofpi", "entity_type": "movie",
         "aliases": ["life of pi"], "description_terms": ["movie"], "popularity": 0.7},
        {"entity_id": "e_adele", "entity_type": "page",
         "aliases": ["adele"], "description_terms": ["singer", "music", "hello"],
         "popularity": 0.9},
        {"entity_id": "s_hello", "entity_type": "song",
         "aliases": ["hello"], "description_terms": ["adele", "song"], "popularity": 0.7},
        {"entity_id": "u_bob", "entity_type": "person",
         "aliases": ["bob stone", "bob"], "description_terms": [], "popularity": 0.2},
        {"entity_id": "u_carol", "entity_type": "person",
         "aliases": ["carol reyes"], "description_terms": [], "popularity": 0.2},
    ]
    fx.dictionaries = [
        {"dictionary_id": "trailers", "phrases": ["trailer", "trailers", "teaser"]},
        {"dictionary_id": "videos", "phrases": ["video", "videos", "clips"]},
    ]
    fx.patterns = [
        {"pattern_id": "p_movie_trailers", "pattern": "<movie:entity> <trailers:dictionary>",
         "target_intent": "video_publisher", "base_confidence": 0.85},
        {"pattern_id": "p_publisher", "pattern": "<publisher:entity>",
         "target_intent": "video_publisher", "base_confidence": 0.85},
        {"pattern_id": "p_posts_seen", "pattern": "posts i have seen",
         "target_intent": "special_grammar", "base_confidence": 0.9,
         "grammar": {"doc_type": "post", "self_seen": True}},
        {"pattern_id": "p_videos_yday", "pattern": "videos i watched yesterday",
         "target_intent": "special_grammar", "base_confidence": 0.9,
         "grammar": {"doc_type": "video", "self_seen": True, "window": "yesterday"}},
    ]
    fx.classifiers = [
        {"intent": "friend", "kind": "friend_name", "name": "friend_name"},
        {"intent": "sports", "kind": "keyword", "name": "sports_kw",
         "params": {"keyword_confidence": {"nba": 0.7, "finals": 0.6, "playoffs": 0.6}}},
        {"intent": "news", "kind": "keyword", "name": "news_kw",
         "params": {"keyword_confidence": {"news": 0.6, "election": 0.65}}},
    ]
    fx.components = default_components(publisher_mode="good_click_weighted")

    fx.query_log = [
        {"query_text": "taylor swift", "user_id": "u_alice", "ts": DEMO_NOW_TS - 5 * 86400,
         "shown_doc_ids": ["d_vid_shake", "d_page_tswift", "d_vid_taylor_ar", "d_event_show"],
         "clicked": ["d_vid_shake", "d_vid_taylor_ar"], "good_clicked": ["d_vid_shake"]},
        {"query_text": "taylor swift", "user_id": "u_carol", "ts": DEMO_NOW_TS - 4 * 86400,
         "shown_doc_ids": ["d_page_tswift", "d_vid_shake", "d_event_show"],
         "clicked": ["d_page_tswift"], "good_clicked": ["d_page_tswift"]},
        {"query_text": "5 minute crafts", "user_id": "u_bob", "ts": DEMO_NOW_TS - 3 * 86400,
         "shown_doc_ids": ["d_vid_5mc", "d_page_5mc"],
         "clicked": ["d_vid_5mc"], "good_clicked": ["d_vid_5mc"],
         "suggestion_click": {"entity_id": "pg_5mc", "intent_id": "video_publisher"}},
        {"query_text": "bob stone", "user_id": "u_alice", "ts": DEMO_NOW_TS - 2 * 86400,
         "shown_doc_ids": ["d_user_bob", "d_post_bob"],
         "clicked": ["d_user_bob"], "good_clicked": ["d_user_bob"]},
        {"query_text": "nba finals", "user_id": "u_alice", "ts": DEMO_NOW_TS - 86400,
         "shown_doc_ids": ["d_post_carol"], "clicked": [], "good_clicked": []},
    ]
    fx.judgments = [
        {"query_text": "taylor swift", "user_id": "u_alice", "doc_id": "d_vid_shake", "grade": 4},
        {"query_text": "taylor swift", "user_id": "u_alice", "doc_id": "d_page_tswift", "grade": 3},
        {"query_text": "taylor swift", "user_id": "u_alice", "doc_id": "d_vid_taylor_ar", "grade": 0},
        {"query_text": "taylor swift", "user_id": "u_alice", "doc_id": "d_event_show", "grade": 2},
        {"query_text": "bob stone", "user_id": "u_alice", "doc_id": "d_user_bob", "grade": 4},
        {"query_text": "bob stone", "user_id": "u_alice", "doc_id": "d_post_bob", "grade": 2},
        {"query_text": "5 minute crafts", "user_id": "u_bob", "doc_id": "d_vid_5mc", "grade": 4},
        {"query_text": "5 minute crafts", "user_id": "u_bob", "doc_id": "d_page_5mc", "grade": 3},
    ]
    fx.bvt_cases = [
        {"case_id": "bvt_friend_profile", "query": "bob stone", "user_id": "u_alice",
         "intent_tag": "friend", "expectations": ["top1: relation=friend type=user"]},
        {"case_id": "bvt_publisher_5mc", "query": "5 minute crafts", "user_id": "u_alice",
         "intent_tag": "video_publisher",
         "expectations": ["topk: d_vid_5mc 2", "before: d_vid_5mc d_page_5mc"]},
        {"case_id": "bvt_grammar_posts", "query": "posts i have seen", "user_id": "u_alice",
         "intent_tag": "special_grammar", "expectations": ["top1: doc=d_post_bob"]},
        {"case_id": "bvt_policy_spam", "query": "taylor swift", "user_id": "u_alice",
         "intent_tag": "generic",
         "expectations": ["excludes: d_post_spam", "doc@rank: d_vid_shake <= 3"]},
        {"case_id": "bvt_language", "query": "taylor swift", "user_id": "u_alice",
         "intent_tag": "generic", "expectations": ["before: d_vid_shake d_vid_taylor_ar"]},
    ]
    return fx


# ------------------------------------------------------------------ #
# directional fixtures


def build_publisher_conflict(n_queries: int = 50, n_controls: int = 20,
                             distractors_per_query: int = 2) -> Fixture:
    """Publisher-name queries where exact-text low-quality videos crowd out
    the real publisher's video unless the publisher component is enabled."""
    fx = Fixture(name="publisher_conflict")
    fx.users = [{"user_id": "u_search", "languages": ["en"], "engaged_doc_ids": {}}]
    fx.edges = [{"src": "u_search", "dst": "d_ctrl_0", "label": "engaged"}]
    fx.retrieval = {"num_shards": 2, "k": 20}

    for i in range(n_queries):
        name = f"maker{i} studio{i}"
        pub_id = f"pub{i}"
        fx.entities.append({
            "entity_id": pub_id, "entity_type": "publisher", "aliases": [name],
            "description_terms": [], "popularity": 0.8,
        })
        fx.documents.append(
            doc(f"d_real_{i}", "video", f"{name} official channel",
                body="weekly show", publisher_id=pub_id, quality=quality(0.9, video=0.9),
                engagement={"impressions": 300, "clicks": 120, "good_clicks": 90})
        )
        for j in range(distractors_per_query):
            fx.documents.append(
                doc(f"d_spam_{i}_{j}", "video", f"{name} {name} compilation",
                    body="reupload", quality=quality(0.2, video=0.2),
                    engagement={"impressions": 300, "clicks": 30, "good_clicks": 0})
            )
        fx.judgments.append({"query_text": name, "user_id": "u_search",
                             "doc_id": f"d_real_{i}", "grade": 4})
        for j in range(distractors_per_query):
            fx.judgments.append({"query_text": name, "user_id": "u_search",
                                 "doc_id": f"d_spam_{i}_{j}", "grade": 0})
        fx.bvt_cases.append({
            "case_id": f"bvt_pub_{i:03d}", "query": name, "user_id": "u_search",
            "intent_tag": "video_publisher",
            "expectations": [f"top1: publisher={pub_id} type=video"],
        })
        fx.query_log.append({
            "query_text": name, "user_id": "u_search", "ts": DEMO_NOW_TS - 86400,
            "shown_doc_ids": [f"d_real_{i}"] + [f"d_spam_{i}_{j}" for j in range(distractors_per_query)],
            "clicked": [f"d_real_{i}"], "good_clicked": [f"d_real_{i}"],
        })

    for j in range(n_controls):
        fx.documents.append(doc(f"d_ctrl_{j}", "post", f"ctrltopic{j} ctrlword{j} notes",
                                body=f"plain notes about ctrltopic{j}"))
        fx.bvt_cases.append({
            "case_id": f"bvt_ctrl_{j:03d}", "query": f"ctrltopic{j} ctrlword{j}",
            "user_id": "u_search", "intent_tag": "generic",
            "expectations": [f"top1: doc=d_ctrl_{j}"],
        })

    fx.patterns = [{"pattern_id": "p_publisher", "pattern": "<publisher:entity>",
                    "target_intent": "video_publisher", "base_confidence": 0.85}]
    fx.components = [
        {"component_id": "text", "kind": "text_relevance", "weight": 1.0},
        {"component_id": "publisher_match", "kind": "video_publisher",
         "scope": "intent_specific", "intent": "video_publisher", "weight": 0.0,
         "params": {"mode": "binary"}},
    ]
    return fx


def build_language_conflict(n_queries: int = 30,
                            n_distractors: Optional[int] = None) -> Fixture:
    """Queries whose best text match is in a language the user cannot read.

    The first n_distractors queries (default: all) get the mismatched
    distractor; the rest have only the readable document, which pins the
    average effect size when the distractor-arm flip is worth a known delta.
    """
    fx = Fixture(name="language_conflict")
    fx.users = [{"user_id": "u_en", "languages": ["en"], "engaged_doc_ids": {}}]
    fx.edges = [{"src": "u_en", "dst": "d_match_0", "label": "engaged"}]
    fx.retrieval = {"num_shards": 2, "k": 20}
    if n_distractors is None:
        n_distractors = n_queries

    for i in range(n_queries):
        query = f"topic{i} guide{i}"
        fx.documents.append(
            doc(f"d_match_{i}", "post", f"{query} overview", body="handbook",
                languages={"en": 1.0})
        )
        shown = [f"d_match_{i}"]
        fx.judgments.append({"query_text": query, "user_id": "u_en",
                             "doc_id": f"d_match_{i}", "grade": 4})
        if i < n_distractors:
            fx.documents.append(
                doc(f"d_mismatch_{i}", "post", f"{query} {query}", body="",
                    languages={"ar": 1.0})
            )
            shown.append(f"d_mismatch_{i}")
            fx.judgments.append({"query_text": query, "user_id": "u_en",
                                 "doc_id": f"d_mismatch_{i}", "grade": 0})
        fx.query_log.append({
            "query_text": query, "user_id": "u_en", "ts": DEMO_NOW_TS - 86400,
            "shown_doc_ids": shown,
            "clicked": [f"d_match_{i}"], "good_clicked": [f"d_match_{i}"],
        })
        fx.bvt_cases.append({
            "case_id": f"bvt_lang_{i:03d}", "query": query, "user_id": "u_en",
            "intent_tag": "language",
            "expectations": [f"top1: doc=d_match_{i}"],
        })

    fx.components = [
        {"component_id": "text", "kind": "text_relevance", "weight": 1.0},
        {"component_id": "language", "kind": "language_match", "weight": 0.0},
    ]
    return fx


def build_replay(n_queries: int = 1000, n_docs: int = 240, seed: int = 7) -> Fixture:
    """Broad replay corpus with policy-rejected docs mixed into every topic."""
    rng = random.Random(seed)
    fx = Fixture(name="replay")
    fx.retrieval = {"num_shards": 4, "k": 20}
    n_topics = 60
    fx.users = [
        {"user_id": f"u{k}", "languages": ["en"], "engaged_doc_ids": {}} for k in range(20)
    ]
    fx.edges = [{"src": "u0", "dst": "u1", "label": "friend"},
                {"src": "u1", "dst": "u0", "label": "friend"}]

    doc_ids_by_topic: dict[int, list[str]] = {t: [] for t in range(n_topics)}
    for d in range(n_docs):
        topic = d % n_topics
        extra = f"aspect{rng.randrange(n_topics)}"
        rejected = rng.random() < 0.15
        doc_id = f"doc{d:03d}"
        fx.documents.append(
            doc(doc_id, rng.choice(["post", "video", "page"]),
                f"subject{topic} {extra} item{d}",
                body=f"subject{topic} notes {extra}",
                quality=quality(0.1 if rejected else round(rng.uniform(0.4, 0.9), 2),
                                policy_reject=rejected),
                engagement={"impressions": 50, "clicks": rng.randrange(0, 30),
                            "good_clicks": 0})
        )
        doc_ids_by_topic[topic].append(doc_id)

    for q in range(n_queries):
        topic = rng.randrange(n_topics)
        shown = doc_ids_by_topic[topic][:6]
        clicked = [d for d in shown if rng.random() < 0.4]
        good = [d for d in clicked if rng.random() < 0.5]
        fx.query_log.append({
            "query_text": f"subject{topic} aspect{rng.randrange(n_topics)}",
            "user_id": f"u{rng.randrange(20)}",
            "ts": DEMO_NOW_TS - rng.randrange(1, 30) * 86400,
            "shown_doc_ids": shown, "clicked": clicked, "good_clicked": good,
        })

    fx.components = default_components()
    return fx


def build_guardrail() -> Fixture:
    """A weight that buys objective by breaking the friend expectation.

    The distractor post is judged higher than the friend profile, and a
    planted external score favors it; raising that component's weight lifts
    the metric but demotes the profile below rank one.
    """
    fx = Fixture(name="guardrail")
    fx.retrieval = {"num_shards": 1, "k": 10}
    fx.users = [
        {"user_id": "u_searcher", "languages": ["en"], "engaged_doc_ids": {}},
        {"user_id": "u_ann", "languages": ["en"], "engaged_doc_ids": {}},
    ]
    fx.edges = [
        {"src": "u_searcher", "dst": "u_ann", "label": "friend"},
        {"src": "u_ann", "dst": "u_searcher", "label": "friend"},
    ]
    fx.documents = [
        doc("d_prof_ann", "user", "ann smith", author_id="u_ann"),
        doc("d_post_fan", "post", "ann smith ann smith fan club", body="viral thread"),
        doc("d_cook", "post", "easy dinner recipes", body="cooking at home"),
    ]
    fx.judgments = [
        {"query_text": "ann smith", "user_id": "u_searcher", "doc_id": "d_post_fan", "grade": 4},
        {"query_text": "ann smith", "user_id": "u_searcher", "doc_id": "d_prof_ann", "grade": 1},
    ]
    fx.bvt_cases = [
        {"case_id": "bvt_friend_ann", "query": "ann smith", "user_id": "u_searcher",
         "intent_tag": "friend", "expectations": ["top1: relation=friend type=user"]},
    ]
    fx.extra_files["external_scores.jsonl"] = [
        {"query_text": "ann smith", "doc_id": "d_post_fan", "score": 0.95},
        {"query_text": "ann smith", "doc_id": "d_prof_ann", "score": 0.0},
    ]
    fx.components = [
        {"component_id": "text", "kind": "text_relevance", "weight": 0.5},
        {"component_id": "social", "kind": "social_relevance", "weight": 1.0},
        {"component_id": "clickbait_model", "kind": "passthrough", "weight": 0.25,
         "params": {"path": "external_scores.jsonl"}},
    ]
    return fx


def build_engagement_training(n_queries: int = 25, docs_per_query: int = 8,
                              records_per_query: int = 8, seed: int = 3) -> Fixture:
    """Log where historical good-click rate cleanly separates the labels."""
    rng = random.Random(seed)
    fx = Fixture(name="engagement_training")
    fx.retrieval = {"num_shards": 1, "k": 20}
    fx.users = [{"user_id": "u_t", "languages": ["en"], "engaged_doc_ids": {}}]
    fx.edges = [{"src": "u_t", "dst": "q0_d0", "label": "engaged"}]

    for q in range(n_queries):
        query = f"need{q} thing{q}"
        shown = []
        for d in range(docs_per_query):
            doc_id = f"q{q}_d{d}"
            fx.documents.append(
                doc(doc_id, "post", f"need{q} thing{q} take{d}", body=f"about need{q}")
            )
            shown.append(doc_id)
        good = shown[:2]  # always good-clicked, so history separates perfectly
        for _ in range(records_per_query):
            clicked = sorted(set(good) | {d for d in shown[2:] if rng.random() < 0.1})
            fx.query_log.append({
                "query_text": query, "user_id": "u_t",
                "ts": DEMO_NOW_TS - rng.randrange(1, 20) * 86400,
                "shown_doc_ids": shown, "clicked": clicked, "good_clicked": good,
            })
    fx.components = default_components()
    return fx


FIXTURE_BUILDERS = {
    "demo": build_demo,
    "publisher": build_publisher_conflict,
    "language": build_language_conflict,
    "replay": build_replay,
    "guardrail": build_guardrail,
    "engagement": build_engagement_training,
}
