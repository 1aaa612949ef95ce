"""Sharded inverted index and the fan-out/merge retrieval topology.

Documents are hashed onto shards; every shard scores its own postings with
first-pass BM25 computed against GLOBAL corpus statistics, so the shard
count can never change a score. Shard results flow through a two-tier
merge (rank aggregators, then a top aggregator) simulated in-process; the
merge is a deterministic reduction over (score desc, doc_id asc).

Token positions are kept in the postings so the term-proximity feature can
be computed without re-reading raw text.
"""

from __future__ import annotations

import json
import math
import re
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .corpus import Corpus, Document
from .errors import ConfigurationError, RecordParseError

INDEX_FORMAT = "intentrank-index"
INDEX_VERSION = 1

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs. No stemming."""
    return _TOKEN_RE.findall(text.lower())


def shard_of(doc_id: str, num_shards: int) -> int:
    # crc32 rather than hash(): stable across processes and runs
    return zlib.crc32(doc_id.encode("utf-8")) % num_shards


@dataclass(frozen=True)
class Posting:
    doc_id: str
    tf: int
    in_title: bool
    in_body: bool
    positions: tuple[int, ...]


@dataclass
class Shard:
    """Postings and document lengths for one slice of the corpus."""

    postings: dict[str, list[Posting]] = field(default_factory=dict)
    doc_lengths: dict[str, int] = field(default_factory=dict)

    def add_document(self, doc_id: str, title_tokens: Sequence[str], body_tokens: Sequence[str]) -> None:
        stream = list(title_tokens) + list(body_tokens)
        self.doc_lengths[doc_id] = len(stream)
        by_term: dict[str, list[int]] = {}
        for pos, term in enumerate(stream):
            by_term.setdefault(term, []).append(pos)
        title_set = set(title_tokens)
        body_set = set(body_tokens)
        for term, positions in by_term.items():
            self.postings.setdefault(term, []).append(
                Posting(
                    doc_id=doc_id,
                    tf=len(positions),
                    in_title=term in title_set,
                    in_body=term in body_set,
                    positions=tuple(positions),
                )
            )

    def finalize(self) -> None:
        for plist in self.postings.values():
            plist.sort(key=lambda p: p.doc_id)


@dataclass(frozen=True)
class GlobalStats:
    """Corpus-wide statistics shared by every shard's scorer."""

    n_docs: int
    df: dict[str, int]
    avgdl: float


@dataclass(frozen=True)
class Candidate:
    doc_id: str
    first_pass_score: float


def idf(n_docs: int, doc_freq: int) -> float:
    return math.log(1.0 + (n_docs - doc_freq + 0.5) / (doc_freq + 0.5))


def first_pass_score(
    query_tokens: Sequence[str],
    tf_by_term: dict[str, int],
    doc_length: int,
    stats: GlobalStats,
    k1: float = 1.2,
    b: float = 0.75,
) -> float:
    """BM25 over the unique query terms; absent terms contribute zero."""
    if k1 <= 0:
        raise ConfigurationError(f"k1 must be positive, got {k1}")
    if not 0.0 <= b <= 1.0:
        raise ConfigurationError(f"b must be within [0,1], got {b}")
    if stats.avgdl <= 0:
        return 0.0
    norm = k1 * (1.0 - b + b * doc_length / stats.avgdl)
    score = 0.0
    for term in sorted(set(query_tokens)):
        tf = tf_by_term.get(term, 0)
        if tf == 0:
            continue
        df = stats.df.get(term, 0)
        score += idf(stats.n_docs, df) * tf * (k1 + 1.0) / (tf + norm)
    return score


class ShardedIndex:
    """Immutable sharded inverted index over a corpus."""

    def __init__(self, num_shards: int, shards: list[Shard], stats: GlobalStats,
                 k1: float = 1.2, b: float = 0.75) -> None:
        self.num_shards = num_shards
        self.shards = shards
        self.stats = stats
        self.k1 = k1
        self.b = b
        self._shard_by_doc: dict[str, int] = {}
        for i, shard in enumerate(shards):
            for doc_id in shard.doc_lengths:
                self._shard_by_doc[doc_id] = i

    def doc_count(self) -> int:
        return self.stats.n_docs

    def has_doc(self, doc_id: str) -> bool:
        return doc_id in self._shard_by_doc

    def doc_length(self, doc_id: str) -> int:
        return self.shards[self._shard_by_doc[doc_id]].doc_lengths[doc_id]

    def positions(self, term: str, doc_id: str) -> tuple[int, ...]:
        """Positions of `term` in the document's title+body token stream."""
        shard_idx = self._shard_by_doc.get(doc_id)
        if shard_idx is None:
            return ()
        for posting in self.shards[shard_idx].postings.get(term, ()):
            if posting.doc_id == doc_id:
                return posting.positions
        return ()

    def term_frequencies(self, doc_id: str, terms: Iterable[str]) -> dict[str, int]:
        shard_idx = self._shard_by_doc.get(doc_id)
        if shard_idx is None:
            return {}
        shard = self.shards[shard_idx]
        out = {}
        for term in set(terms):
            for posting in shard.postings.get(term, ()):
                if posting.doc_id == doc_id:
                    out[term] = posting.tf
                    break
        return out

    def score_doc(self, query_tokens: Sequence[str], doc_id: str) -> float:
        """First-pass score for one known document (explain path)."""
        if not self.has_doc(doc_id):
            return 0.0
        tfs = self.term_frequencies(doc_id, query_tokens)
        return first_pass_score(query_tokens, tfs, self.doc_length(doc_id), self.stats,
                                self.k1, self.b)


def build_index(
    corpus: Corpus,
    num_shards: int = 1,
    k1: float = 1.2,
    b: float = 0.75,
    fields: tuple[str, ...] = ("title", "body"),
) -> ShardedIndex:
    """Tokenize and shard the corpus; global stats cover every document."""
    if num_shards < 1:
        raise ConfigurationError(f"num_shards must be >= 1, got {num_shards}")
    shards = [Shard() for _ in range(num_shards)]
    df: dict[str, int] = {}
    total_len = 0
    for doc_id in sorted(corpus.documents):
        doc = corpus.documents[doc_id]
        title_tokens = tokenize(doc.title) if "title" in fields else []
        body_tokens = tokenize(doc.body) if "body" in fields else []
        shards[shard_of(doc_id, num_shards)].add_document(doc_id, title_tokens, body_tokens)
        total_len += len(title_tokens) + len(body_tokens)
        for term in set(title_tokens) | set(body_tokens):
            df[term] = df.get(term, 0) + 1
    for shard in shards:
        shard.finalize()
    n = len(corpus.documents)
    stats = GlobalStats(n_docs=n, df=df, avgdl=(total_len / n) if n else 0.0)
    return ShardedIndex(num_shards, shards, stats, k1=k1, b=b)


def _shard_top(shard: Shard, query_tokens: Sequence[str], stats: GlobalStats,
               limit: int, k1: float, b: float) -> list[Candidate]:
    """One index node: score local postings with global stats, keep top `limit`."""
    terms = sorted(set(query_tokens))
    tf_by_doc: dict[str, dict[str, int]] = {}
    for term in terms:
        for posting in shard.postings.get(term, ()):
            tf_by_doc.setdefault(posting.doc_id, {})[term] = posting.tf
    scored = [
        Candidate(doc_id, first_pass_score(terms, tfs, shard.doc_lengths[doc_id], stats, k1, b))
        for doc_id, tfs in tf_by_doc.items()
    ]
    scored.sort(key=lambda c: (-c.first_pass_score, c.doc_id))
    return scored[:limit]


def _merge(lists: Iterable[list[Candidate]], limit: int) -> list[Candidate]:
    merged: list[Candidate] = []
    for lst in lists:
        merged.extend(lst)
    merged.sort(key=lambda c: (-c.first_pass_score, c.doc_id))
    return merged[:limit]


def retrieve(
    index: ShardedIndex,
    query_tokens: Sequence[str],
    k: int,
    per_shard_k: Optional[int] = None,
    enforce_per_shard_k: bool = True,
) -> list[Candidate]:
    """Fan out to shards, merge through rank aggregators, return global top k.

    per_shard_k defaults to k. Values below k can drop documents a
    single-shard run would return, so they are rejected unless
    enforce_per_shard_k is disabled.
    """
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    if per_shard_k is None:
        per_shard_k = k
    if per_shard_k < k and enforce_per_shard_k:
        raise ConfigurationError(
            f"per_shard_k={per_shard_k} < k={k} can lose results; pass "
            f"enforce_per_shard_k=False to allow it"
        )
    if not query_tokens:
        return []

    shard_tops = [
        _shard_top(shard, query_tokens, index.stats, per_shard_k, index.k1, index.b)
        for shard in index.shards
    ]
    # Two-tier merge: shards feed rank aggregators round-robin, whose merged
    # tops feed the top aggregator. Grouping never changes the result because
    # the reduction is associative under the (score, doc_id) order.
    num_aggs = max(1, math.isqrt(index.num_shards))
    groups: list[list[list[Candidate]]] = [[] for _ in range(num_aggs)]
    for i, top in enumerate(shard_tops):
        groups[i % num_aggs].append(top)
    aggregator_tops = [_merge(group, per_shard_k) for group in groups if group]
    return _merge(aggregator_tops, k)


def save_index(index: ShardedIndex, path: str | Path) -> None:
    """Versioned line-delimited snapshot; loading a mismatch fails loudly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "num_shards": index.num_shards,
            "k1": index.k1,
            "b": index.b,
            "n_docs": index.stats.n_docs,
            "avgdl": index.stats.avgdl,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        fh.write(json.dumps({"df": dict(sorted(index.stats.df.items()))}, sort_keys=True) + "\n")
        for shard_idx, shard in enumerate(index.shards):
            for term in sorted(shard.postings):
                rec = {
                    "shard": shard_idx,
                    "term": term,
                    "postings": [
                        [p.doc_id, p.tf, int(p.in_title), int(p.in_body), list(p.positions)]
                        for p in shard.postings[term]
                    ],
                }
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
            rec = {"shard": shard_idx, "doc_lengths": dict(sorted(shard.doc_lengths.items()))}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_index(path: str | Path) -> ShardedIndex:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise RecordParseError(str(path), 1, "empty index snapshot")
    header = json.loads(lines[0])
    if header.get("format") != INDEX_FORMAT:
        raise RecordParseError(str(path), 1, f"not an index snapshot: {header.get('format')!r}")
    if header.get("version") != INDEX_VERSION:
        raise RecordParseError(
            str(path), 1,
            f"unsupported index version {header.get('version')!r} "
            f"(expected {INDEX_VERSION})",
        )
    df = json.loads(lines[1])["df"]
    shards = [Shard() for _ in range(header["num_shards"])]
    for line_no, line in enumerate(lines[2:], start=3):
        rec = json.loads(line)
        shard = shards[rec["shard"]]
        if "doc_lengths" in rec:
            shard.doc_lengths.update(rec["doc_lengths"])
        else:
            shard.postings[rec["term"]] = [
                Posting(doc_id, tf, bool(t), bool(bd), tuple(pos))
                for doc_id, tf, t, bd, pos in rec["postings"]
            ]
    stats = GlobalStats(n_docs=header["n_docs"], df=df, avgdl=header["avgdl"])
    return ShardedIndex(header["num_shards"], shards, stats, k1=header["k1"], b=header["b"])
