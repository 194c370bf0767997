"""Weighted keyword query construction.

Keywords are the query article's own terms ranked by tf-idf against the
corpus; each keyword gets an integer repetition weight proportional to its
share of the total tf-idf mass, clamped to [rep_min, rep_max]. The
repetition count multiplies the term's contribution at BM25 time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from backlink.corpus import Article, ProcessedDocument, process_article
from backlink.index import InvertedIndex

DEFAULT_KEYWORDS = 100
DEFAULT_REP_MIN = 1
DEFAULT_REP_MAX = 5
DEFAULT_TITLE_WEIGHT = 0.7
DEFAULT_BODY_WEIGHT = 0.3


class DegenerateQueryError(ValueError):
    """The article yields no usable keywords (empty or all stopwords)."""


@dataclass(frozen=True)
class KeywordScore:
    term: str
    score: float  # tf(term in article) * idf(term in corpus), >= 0


@dataclass
class WeightedQuery:
    topic_id: str
    terms: list[tuple[str, int]]  # (term, repetition), unique terms
    title_weight: float
    body_weight: float
    date_cutoff: int  # epoch ms; retrieval never looks past this
    source_doc_id: str

    def __post_init__(self):
        if abs(self.title_weight + self.body_weight - 1.0) > 1e-9:
            raise ValueError(
                f"title and body weights must sum to 1, got "
                f"{self.title_weight} + {self.body_weight}"
            )


def extract_keywords(
    doc: ProcessedDocument, index: InvertedIndex, n: int
) -> list[KeywordScore]:
    """Top-n distinct document terms by tf-idf, descending.

    Title and body tokens are pooled for the term frequency; document
    frequency comes from the corpus body field. Ties break
    lexicographically. Fewer than n are returned when the document
    vocabulary is smaller.
    """
    if n < 1:
        raise ValueError(f"keyword count must be >= 1, got {n}")
    counts: dict[str, int] = {}
    for tok in doc.title_tokens + doc.body_tokens:
        counts[tok] = counts.get(tok, 0) + 1
    scored = [
        KeywordScore(term=t, score=c * index.idf(t, "body"))
        for t, c in counts.items()
    ]
    scored.sort(key=lambda k: (-k.score, k.term))
    return scored[:n]


def _nint(x: float) -> int:
    """Round half away from zero (0.5 -> 1); inputs here are >= 0."""
    return int(x + 0.5)


def compute_weights(
    scores: Sequence[KeywordScore], rep_min: int, rep_max: int
) -> list[tuple[str, int]]:
    """Integer repetition weight per keyword.

    w_i = clamp(nint(s_i / sum(s) * n), rep_min, rep_max) with n the
    number of keywords. Scale-invariant in the scores.
    """
    if rep_min < 1 or rep_max < rep_min:
        raise ValueError(f"need 1 <= rep_min <= rep_max, got {rep_min}..{rep_max}")
    if not scores:
        raise DegenerateQueryError("no keywords to weight")
    total = sum(k.score for k in scores)
    if total <= 0.0:
        raise DegenerateQueryError("all keyword scores are zero")
    n = len(scores)
    return [
        (k.term, min(max(_nint(k.score / total * n), rep_min), rep_max))
        for k in scores
    ]


def build_query(
    article: Article,
    index: InvertedIndex,
    stopwords: frozenset[str],
    n: int = DEFAULT_KEYWORDS,
    rep_min: int = DEFAULT_REP_MIN,
    rep_max: int = DEFAULT_REP_MAX,
    title_weight: float = DEFAULT_TITLE_WEIGHT,
    body_weight: float = DEFAULT_BODY_WEIGHT,
    topic_id: str | None = None,
) -> WeightedQuery:
    """Full query construction for one article.

    The cutoff date is the article's own publication time, so retrieval
    only ever sees documents published up to the query article.
    """
    doc = process_article(article, stopwords)
    keywords = extract_keywords(doc, index, n)
    if not keywords:
        raise DegenerateQueryError(
            f"article {article.id!r} has no indexable terms"
        )
    terms = compute_weights(keywords, rep_min, rep_max)
    return WeightedQuery(
        topic_id=topic_id if topic_id is not None else article.id,
        terms=terms,
        title_weight=title_weight,
        body_weight=body_weight,
        date_cutoff=article.published_at,
        source_doc_id=article.id,
    )
