"""Retrieval metrics and TREC exchange formats.

Graded gain for nDCG defaults to 2^(r-1) with zero gain at r = 0 (the
task's convention); the 2^r - 1 variant common in other evaluators is
available for cross-checking. Diversity is the mean pairwise cosine
distance between the tf-idf body vectors of each topic's retrieved
documents, averaged over topics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

from backlink.bm25 import RankedList
from backlink.index import InvertedIndex

MAX_RELEVANCE = 4

GAIN_MODES = ("shifted", "minus-one")  # 2^(r-1), zero at 0   vs   2^r - 1
DIVERSITY_NORMS = ("pairs", "size")  # divide pair-sum by t*(t-1)  vs  by t


class FormatError(Exception):
    """Malformed run or qrels line."""


@dataclass
class Qrels:
    # topic_id -> doc_id -> relevance level in 0..4
    judgments: dict[str, dict[str, int]] = field(default_factory=dict)

    def add(self, topic_id: str, doc_id: str, relevance: int) -> None:
        if not 0 <= relevance <= MAX_RELEVANCE:
            raise ValueError(
                f"relevance {relevance} out of range 0..{MAX_RELEVANCE} "
                f"for ({topic_id}, {doc_id})"
            )
        self.judgments.setdefault(topic_id, {})[doc_id] = relevance

    def relevance(self, topic_id: str, doc_id: str) -> int:
        return self.judgments.get(topic_id, {}).get(doc_id, 0)

    def topics(self) -> list[str]:
        return sorted(self.judgments)


class RunRow(NamedTuple):
    topic_id: str
    doc_id: str
    rank: int
    score: float
    tag: str


@dataclass
class RunFile:
    rows: list[RunRow] = field(default_factory=list)

    def ranked_lists(self) -> dict[str, RankedList]:
        """Group rows into per-topic RankedLists, rank order preserved."""
        by_topic: dict[str, list[RunRow]] = {}
        for row in self.rows:
            by_topic.setdefault(row.topic_id, []).append(row)
        out = {}
        for topic_id, rows in by_topic.items():
            rows.sort(key=lambda r: r.rank)
            out[topic_id] = RankedList(
                topic_id=topic_id, entries=[(r.doc_id, r.score) for r in rows]
            )
        return out


def gain(relevance: int, mode: str = "shifted") -> float:
    if mode == "shifted":
        return 0.0 if relevance == 0 else float(2 ** (relevance - 1))
    if mode == "minus-one":
        return float(2**relevance - 1)
    raise ValueError(f"unknown gain mode {mode!r}; expected one of {GAIN_MODES}")


def ndcg_at_k(
    run: RankedList, qrels: Qrels, k: int, gain_mode: str = "shifted"
) -> float:
    """Normalized discounted cumulative gain at depth k.

    Unjudged documents gain nothing; the ideal ordering comes from the
    topic's full judgment set. Returns 0 when nothing relevant is judged.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    judged = qrels.judgments.get(run.topic_id, {})

    dcg = 0.0
    for i, (doc_id, _) in enumerate(run.entries[:k], start=1):
        dcg += gain(judged.get(doc_id, 0), gain_mode) / math.log2(i + 1)

    ideal = sorted(judged.values(), reverse=True)[:k]
    idcg = sum(
        gain(r, gain_mode) / math.log2(i + 1)
        for i, r in enumerate(ideal, start=1)
    )
    return dcg / idcg if idcg > 0 else 0.0


def precision_at_k(run: RankedList, qrels: Qrels, k: int) -> float:
    """Fraction of the top k that is judged relevant (r >= 1).

    The denominator stays k even when fewer documents were retrieved;
    unjudged documents count as non-relevant.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    judged = qrels.judgments.get(run.topic_id, {})
    hits = sum(1 for doc_id, _ in run.entries[:k] if judged.get(doc_id, 0) >= 1)
    return hits / k


def _doc_vectors(index: InvertedIndex, ordinals: set[int]) -> dict[int, dict[str, float]]:
    """tf-idf body vectors for a set of documents, one postings sweep."""
    vecs: dict[int, dict[str, float]] = {o: {} for o in ordinals}
    for term, (ords, tfs) in index.postings["body"].items():
        idf = None
        for o, tf in zip(ords.tolist(), tfs.tolist()):
            if o in vecs:
                if idf is None:
                    idf = index.idf(term, "body")
                vecs[o][term] = float(tf) * idf
    return vecs


def tfidf_distance(vec_a: Mapping[str, float], vec_b: Mapping[str, float]) -> float:
    """1 - cosine similarity of sparse tf-idf vectors, in [0, 1].

    Two empty vectors count as identical (distance 0); one empty vector is
    maximally distant from a non-empty one, consistent with the
    disjoint-vocabulary case.
    """
    if not vec_a and not vec_b:
        return 0.0
    if not vec_a or not vec_b:
        return 1.0
    dot = 0.0
    small, big = (vec_a, vec_b) if len(vec_a) <= len(vec_b) else (vec_b, vec_a)
    for term, weight in small.items():
        other = big.get(term)
        if other is not None:
            dot += weight * other
    norm_a = math.sqrt(sum(w * w for w in vec_a.values()))
    norm_b = math.sqrt(sum(w * w for w in vec_b.values()))
    cos = dot / (norm_a * norm_b)
    return 1.0 - max(0.0, min(1.0, cos))


def diversity(
    runs: Mapping[str, RankedList], index: InvertedIndex, norm: str = "pairs"
) -> float:
    """Mean over topics of the summed pairwise tf-idf distance.

    norm="pairs" averages each topic's sum over its t*(t-1) ordered pairs;
    norm="size" divides by the list size t only. Topics with fewer than
    two documents contribute zero. Unknown doc ids raise.
    """
    if norm not in DIVERSITY_NORMS:
        raise ValueError(f"unknown diversity norm {norm!r}; expected one of {DIVERSITY_NORMS}")
    if not runs:
        return 0.0

    needed: set[int] = set()
    for topic_id in runs:
        for doc_id, _ in runs[topic_id].entries:
            if doc_id not in index:
                raise ValueError(f"document {doc_id!r} not present in the index")
            needed.add(index.ordinal(doc_id))
    vectors = _doc_vectors(index, needed)

    per_topic = []
    for topic_id in sorted(runs):
        entries = runs[topic_id].entries
        t = len(entries)
        if t < 2:
            per_topic.append(0.0)
            continue
        ordinals = [index.ordinal(doc_id) for doc_id, _ in entries]
        pair_sum = 0.0
        for i in range(t):
            for j in range(i + 1, t):
                pair_sum += tfidf_distance(vectors[ordinals[i]], vectors[ordinals[j]])
        ordered_sum = 2.0 * pair_sum  # distances are symmetric
        denom = t * (t - 1) if norm == "pairs" else t
        per_topic.append(ordered_sum / denom)
    return sum(per_topic) / len(per_topic)


# -- TREC exchange formats -------------------------------------------------


def write_run(runs: Iterable[RankedList], path: str | Path, tag: str) -> None:
    """Write ranked lists as `topic Q0 docid rank score tag` lines.

    Scores are written with full float precision so a write/parse
    round-trip is exact.
    """
    with open(path, "w", encoding="utf-8") as handle:
        for ranked in runs:
            for rank, (doc_id, score) in enumerate(ranked.entries, start=1):
                handle.write(
                    f"{ranked.topic_id} Q0 {doc_id} {rank} {score!r} {tag}\n"
                )


def parse_run(path: str | Path) -> RunFile:
    """Parse a run file, validating rank contiguity and score ordering."""
    rows: list[RunRow] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise FormatError(
                    f"{path}:{lineno}: expected 6 fields, got {len(parts)}"
                )
            topic_id, q0, doc_id, rank_s, score_s, tag = parts
            try:
                rank = int(rank_s)
                score = float(score_s)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            if rank < 1:
                raise FormatError(f"{path}:{lineno}: rank must be >= 1")
            rows.append(RunRow(topic_id, doc_id, rank, score, tag))

    state: dict[str, RunRow] = {}
    for row in rows:
        prev = state.get(row.topic_id)
        if prev is None:
            if row.rank != 1:
                raise FormatError(
                    f"topic {row.topic_id}: ranks must start at 1, got {row.rank}"
                )
        else:
            if row.rank != prev.rank + 1:
                raise FormatError(
                    f"topic {row.topic_id}: rank {row.rank} after {prev.rank}; "
                    f"ranks must be contiguous"
                )
            if row.score > prev.score:
                raise FormatError(
                    f"topic {row.topic_id}: score increases at rank {row.rank}"
                )
        state[row.topic_id] = row
    return RunFile(rows=rows)


def parse_qrels(path: str | Path) -> Qrels:
    """Parse `topic 0 docid relevance` judgment lines."""
    qrels = Qrels()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise FormatError(
                    f"{path}:{lineno}: expected 4 fields, got {len(parts)}"
                )
            topic_id, _, doc_id, rel_s = parts
            try:
                relevance = int(rel_s)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            try:
                qrels.add(topic_id, doc_id, relevance)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return qrels
