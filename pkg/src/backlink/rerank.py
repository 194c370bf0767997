"""Semantic re-ranking of first-stage candidates.

Each candidate's body is reduced to its top keywords, the keyword strings
and the query's keywords are embedded in one batch, and candidates are
re-scored by a steep sigmoid over cosine similarity centred at 0.95 --
similarities below the hub barely register, near-duplicates saturate
toward one. The sigmoid is strictly monotonic, so the re-ranked order is
exactly the cosine order; the squashing only shapes the reported scores.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from backlink.backends import Embedding, EmbeddingBackend, EmbeddingBackendError
from backlink.bm25 import RankedList
from backlink.index import InvertedIndex
from backlink.query_builder import WeightedQuery
from backlink.rake import RakeConfig, extract, keywords_sentence

log = logging.getLogger(__name__)

DEFAULT_FIRST_STAGE_DEPTH = 100  # candidates taken from BM25
DEFAULT_FINAL_DEPTH = 10  # documents kept after re-ranking

SIGMOID_STEEPNESS = 100.0
SIGMOID_CENTER = 0.95


@dataclass(frozen=True)
class RerankConfig:
    backend: EmbeddingBackend
    rake: RakeConfig
    first_stage_depth: int = DEFAULT_FIRST_STAGE_DEPTH
    final_depth: int = DEFAULT_FINAL_DEPTH

    def __post_init__(self):
        if not self.first_stage_depth >= self.final_depth >= 1:
            raise ValueError(
                f"need first_stage_depth >= final_depth >= 1, got "
                f"{self.first_stage_depth} >= {self.final_depth}"
            )


def cosine_sim(e1: Embedding, e2: Embedding) -> float:
    """Cosine similarity of two nonzero same-dimension vectors, in [-1, 1]."""
    if e1.dim != e2.dim:
        raise ValueError(f"dimension mismatch: {e1.dim} vs {e2.dim}")
    n1 = float(np.linalg.norm(e1.values))
    n2 = float(np.linalg.norm(e2.values))
    if n1 == 0.0 or n2 == 0.0:
        raise ValueError("cosine similarity undefined for a zero vector")
    cos = float(np.dot(e1.values, e2.values)) / (n1 * n2)
    # guard against float overshoot just past +/-1
    return max(-1.0, min(1.0, cos))


def relevance_score(cos: float) -> float:
    """Sigmoid-normalized similarity: 1 / (1 + exp(-100 * (cos - 0.95)))."""
    if not -1.0 <= cos <= 1.0:
        raise ValueError(f"cosine must be in [-1, 1], got {cos}")
    return 1.0 / (1.0 + math.exp(-SIGMOID_STEEPNESS * (cos - SIGMOID_CENTER)))


def query_text(query: WeightedQuery) -> str:
    """The query rendered for embedding: distinct keywords, space-joined.

    Repetition weights are dropped here; repeated words distort sentence
    embeddings without adding meaning.
    """
    return " ".join(term for term, _ in query.terms)


def compute_relevance(
    query: WeightedQuery,
    candidates: RankedList,
    index: InvertedIndex,
    config: RerankConfig,
) -> RankedList:
    """Re-rank first-stage candidates by embedded-keyword similarity.

    Candidates whose keyword reduction comes out empty are kept with score
    zero (logged, never silently dropped). Backend failures raise
    EmbeddingBackendError with the number of texts completed.
    """
    if len(candidates) > config.first_stage_depth:
        raise ValueError(
            f"{len(candidates)} candidates exceed configured first-stage "
            f"depth {config.first_stage_depth}"
        )

    sentences: list[str] = []
    for doc_id, _ in candidates.entries:
        body = index.raw_bodies[index.ordinal(doc_id)]
        phrases = extract(body, config.rake)
        sentences.append(keywords_sentence(phrases, config.rake.min_phrases))

    to_embed = [query_text(query)]
    embed_slots: list[int | None] = []
    for sent in sentences:
        if sent:
            embed_slots.append(len(to_embed))
            to_embed.append(sent)
        else:
            embed_slots.append(None)

    embeddings = config.backend.embed(to_embed)
    query_vec = embeddings[0]
    if float(np.linalg.norm(query_vec.values)) == 0.0:
        raise EmbeddingBackendError("backend produced a zero vector for the query")

    scored: list[tuple[str, float]] = []
    for (doc_id, _), slot in zip(candidates.entries, embed_slots):
        if slot is None:
            log.warning(
                "topic %s: candidate %s reduced to no keywords; scored 0",
                candidates.topic_id, doc_id,
            )
            scored.append((doc_id, 0.0))
            continue
        vec = embeddings[slot]
        if float(np.linalg.norm(vec.values)) == 0.0:
            log.warning(
                "topic %s: zero embedding for candidate %s; scored 0",
                candidates.topic_id, doc_id,
            )
            scored.append((doc_id, 0.0))
            continue
        scored.append((doc_id, relevance_score(cosine_sim(vec, query_vec))))

    scored.sort(key=lambda e: (-e[1], e[0]))
    return RankedList(
        topic_id=candidates.topic_id, entries=scored[: config.final_depth]
    )
