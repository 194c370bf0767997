"""Field-weighted BM25 scoring and retrieval.

First retrieval stage: rank index documents against a weighted keyword
query, combining per-field BM25 scores (w_title * BM25_title +
w_body * BM25_body), excluding the query article itself and anything
published after it.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from backlink.index import FIELDS, InvertedIndex
from backlink.kernels import bm25_accumulate


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError(f"k1 must be positive, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass
class RankedList:
    """Retrieval output for one topic: (doc_id, score) sorted by score
    descending, exact ties broken by doc_id ascending."""

    topic_id: str
    entries: list[tuple[str, float]] = dc_field(default_factory=list)

    def doc_ids(self) -> list[str]:
        return [d for d, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _field_weights(query) -> dict[str, float]:
    return {"title": query.title_weight, "body": query.body_weight}


def _length_norms(index: InvertedIndex, field_name: str, params: Bm25Params) -> np.ndarray:
    lengths = index.field_lengths[field_name].astype(np.float64)
    avg = index.avg_field_length[field_name]
    ratio = lengths / avg if avg > 0 else np.zeros_like(lengths)
    return params.k1 * (1.0 - params.b + params.b * ratio)


def score(query, doc_ordinal: int, index: InvertedIndex, params: Bm25Params = Bm25Params()) -> float:
    """Closed-form BM25 score of one document against a weighted query.

    Per field f and query term t with repetition weight r:
        w_f * r * idf(t, f) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len/avg))
    summed over all fields and terms.
    """
    if index.doc_count < 1:
        raise ValueError("cannot score against an empty index")
    weights = _field_weights(query)
    total = 0.0
    for field_name in FIELDS:
        w_f = weights[field_name]
        length = float(index.field_lengths[field_name][doc_ordinal])
        avg = index.avg_field_length[field_name]
        ratio = length / avg if avg > 0 else 0.0
        norm = params.k1 * (1.0 - params.b + params.b * ratio)
        for term, repetition in query.terms:
            tf = float(index.tf(term, doc_ordinal, field_name))
            if tf == 0.0:
                continue
            idf = index.idf(term, field_name)
            total += (w_f * repetition * idf) * (tf * (params.k1 + 1.0)) / (tf + norm)
    return total


def score_all(query, index: InvertedIndex, params: Bm25Params = Bm25Params()) -> np.ndarray:
    """BM25 scores for every document, term-at-a-time via the kernel."""
    scores = np.zeros(index.doc_count, dtype=np.float64)
    weights = _field_weights(query)
    for field_name in FIELDS:
        w_f = weights[field_name]
        norms = _length_norms(index, field_name, params)
        for term, repetition in query.terms:
            entry = index.term_postings(term, field_name)
            if entry is None:
                continue
            ords, tfs = entry
            coef = w_f * repetition * index.idf(term, field_name)
            bm25_accumulate(ords, tfs, coef, params.k1, norms, scores)
    return scores


def search(
    query,
    index: InvertedIndex,
    limit: int,
    date_cutoff: int | None = None,
    exclude_id: str | None = None,
    params: Bm25Params = Bm25Params(),
) -> RankedList:
    """Top-`limit` eligible documents by BM25 score.

    Eligible means published on or before the cutoff, not the query
    article itself, and scoring strictly above zero. date_cutoff and
    exclude_id default to the query's own publication date and source
    document. May return fewer than `limit` entries.
    """
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    if date_cutoff is None:
        date_cutoff = query.date_cutoff
    if exclude_id is None:
        exclude_id = query.source_doc_id

    if index.doc_count == 0:
        return RankedList(topic_id=query.topic_id)

    scores = score_all(query, index, params)
    eligible = (index.doc_dates <= date_cutoff) & (scores > 0.0)
    if exclude_id is not None and exclude_id in index:
        eligible[index.ordinal(exclude_id)] = False

    chosen = np.nonzero(eligible)[0]
    if len(chosen) > limit:
        # select the top-limit band before the python sort: everything
        # strictly above the limit-th score, plus enough of the boundary
        # ties taken in doc_id order
        escores = scores[chosen]
        kth = np.partition(escores, len(escores) - limit)[len(escores) - limit]
        above = chosen[escores > kth]
        ties = sorted(chosen[escores == kth], key=lambda i: index.doc_ids[i])
        chosen = np.concatenate([
            above, np.asarray(ties[: limit - len(above)], dtype=chosen.dtype)
        ])

    candidates = [(index.doc_ids[i], float(scores[i])) for i in chosen]
    candidates.sort(key=lambda e: (-e[1], e[0]))
    return RankedList(topic_id=query.topic_id, entries=candidates[:limit])
