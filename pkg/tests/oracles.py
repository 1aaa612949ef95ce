"""Independent reference implementations used to check the package.

Everything here is deliberately written from the definitions, against raw
inputs (edge lists, raw texts, permutations), without touching the package's
data structures, so a bug cannot hide in both paths at once.
"""

from __future__ import annotations

import itertools
import math
import re


# --------------------------------------------------------------------- #
# social relations: explicit path enumeration over a raw edge list


def relations_oracle(edges, searcher, doc_id, author):
    edge_set = set(edges)
    nodes = {n for e in edges for n in (e[0], e[1])}

    def has(src, dst, label):
        return (src, dst, label) in edge_set

    rels = set()
    if author is not None and author == searcher:
        rels.add("self")
    if author is not None and author != searcher:
        if has(searcher, author, "friend"):
            rels.add("friend")
        else:
            for mid in nodes:  # every length-2 friend path, brute force
                if has(searcher, mid, "friend") and has(mid, author, "friend"):
                    rels.add("friend_of_friend")
                    break
        if has(author, searcher, "pending_friend"):
            rels.add("pending_friend")
    if has(searcher, doc_id, "engaged"):
        rels.add("self_engaged")
    for mid in nodes:
        if has(searcher, mid, "friend") and has(mid, doc_id, "engaged"):
            rels.add("friend_engaged")
            break
    targets = {doc_id} | ({author} if author is not None else set())
    if any(has(searcher, t, "follow") for t in targets):
        rels.add("followee")
    if any(has(t, searcher, "follow") for t in targets if t != searcher):
        rels.add("follower")
    if has(searcher, doc_id, "pending_join"):
        rels.add("pending_joining")
    return rels


# --------------------------------------------------------------------- #
# BM25 recomputed from raw texts, no index structures


def _tok(text):
    return re.findall(r"[^\W_]+", text.lower())


def bm25_oracle(texts_by_doc, query_text, k1=1.2, b=0.75):
    """doc_id -> score for every doc with any query-term overlap."""
    token_lists = {d: _tok(t) for d, t in texts_by_doc.items()}
    n = len(texts_by_doc)
    avgdl = sum(len(toks) for toks in token_lists.values()) / n if n else 0.0
    terms = sorted(set(_tok(query_text)))
    df = {
        term: sum(1 for toks in token_lists.values() if term in toks) for term in terms
    }
    scores = {}
    for doc_id, toks in token_lists.items():
        s = 0.0
        for term in terms:
            tf = toks.count(term)
            if tf == 0:
                continue
            idf = math.log(1.0 + (n - df[term] + 0.5) / (df[term] + 0.5))
            s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len(toks) / avgdl))
        if s != 0.0:
            scores[doc_id] = s
    return scores


# --------------------------------------------------------------------- #
# minimal covering window by quadratic scan


def min_window_oracle(stream, terms):
    """Smallest window of `stream` containing every term; None if impossible."""
    terms = set(terms)
    if not terms or not terms <= set(stream):
        return None
    best = None
    for i in range(len(stream)):
        seen = set()
        for j in range(i, len(stream)):
            if stream[j] in terms:
                seen.add(stream[j])
            if seen == terms:
                width = j - i + 1
                if best is None or width < best:
                    best = width
                break
    return best


# --------------------------------------------------------------------- #
# pattern matching by exhaustive segmentation


def segmentations_oracle(pattern_tokens, query, entities, dictionaries):
    """All-valid-assignments matcher.

    pattern_tokens: list of ("lit", word) | ("ent", type) | ("dict", dict_id)
    entities: list of (entity_id, entity_type, alias_tuple, popularity)
    dictionaries: dict_id -> set of phrase tuples
    Returns the winning assignment as a list of per-token captures
    (word | entity_id | phrase string), or None.
    """
    k = len(pattern_tokens)
    n = len(query)
    if k == 0:
        return None
    valid = []
    for split in itertools.product(range(1, n + 1), repeat=k):
        if sum(split) != n:
            continue
        pos = 0
        captures = []
        ok = True
        for (kind, arg), length in zip(pattern_tokens, split):
            chunk = tuple(query[pos:pos + length])
            if kind == "lit":
                if length != 1 or chunk[0] != arg:
                    ok = False
                    break
                captures.append(chunk[0])
            elif kind == "ent":
                hits = [
                    (pop, eid)
                    for eid, etype, alias, pop in entities
                    if etype == arg and alias == chunk
                ]
                if not hits:
                    ok = False
                    break
                best = min(hits, key=lambda h: (-h[0], h[1]))
                captures.append(best[1])
            else:
                if chunk not in dictionaries[arg]:
                    ok = False
                    break
                captures.append(" ".join(chunk))
            pos += length
        if ok:
            valid.append((split, captures))
    if not valid:
        return None
    # the matcher prefers the longest span at each position, left to right
    split, captures = max(valid, key=lambda v: v[0])
    return captures


# --------------------------------------------------------------------- #
# graded metrics by definition and enumeration


def dcg_oracle(grades_in_order, k):
    return sum(
        (2 ** g - 1) / math.log2(i + 1)
        for i, g in enumerate(grades_in_order[:k], start=1)
    )


def ndcg_oracle(ranked_ids, grades, k):
    """IDCG found by trying every permutation of the judged docs."""
    positives = [g for g in grades.values() if g > 0]
    if not positives:
        return None
    dcg = dcg_oracle([grades.get(d, 0) for d in ranked_ids], k)
    best = 0.0
    for perm in itertools.permutations(grades.values()):
        best = max(best, dcg_oracle(list(perm), k))
    return dcg / best


def err_oracle(ranked_ids, grades, k):
    """Expected 1/stop-rank by enumerating every satisfaction outcome."""
    positives = [g for g in grades.values() if g > 0]
    if not positives:
        return None
    probs = [(2 ** grades.get(d, 0) - 1) / 16.0 for d in ranked_ids[:k]]
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=len(probs)):
        p = 1.0
        for satisfied, r in zip(outcome, probs):
            p *= r if satisfied else (1.0 - r)
        stops = [i for i, satisfied in enumerate(outcome, start=1) if satisfied]
        if stops:
            total += p / stops[0]
    return total


# --------------------------------------------------------------------- #
# geometry and calculus


def haversine_oracle(a, b, radius_km=6371.0):
    """atan2 form of the great-circle distance (implementation uses asin)."""
    phi1, lam1 = math.radians(a[0]), math.radians(a[1])
    phi2, lam2 = math.radians(b[0]), math.radians(b[1])
    h = (
        math.sin((phi2 - phi1) / 2) ** 2
        + math.cos(phi1) * math.cos(phi2) * math.sin((lam2 - lam1) / 2) ** 2
    )
    return 2 * radius_km * math.atan2(math.sqrt(h), math.sqrt(1 - h))


def central_difference_gradient(f, x, h=1e-6):
    """Componentwise central finite differences of a scalar function."""
    import numpy as np

    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(len(x)):
        up = x.copy()
        down = x.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (f(up) - f(down)) / (2 * h)
    return grad
