"""Benchmark: compiled scoring kernel vs pure-Python fallback.

Builds a synthetic corpus, runs the same batch of weighted queries through
backlink.bm25.search with each kernel, checks the rankings agree, and
reports the speedup.

    python benchmarks/bench_bm25.py --docs 20000 --vocab 5000 --queries 40
"""

from __future__ import annotations

import argparse
import random
import time

import backlink.bm25 as bm25
from backlink.corpus import ProcessedDocument
from backlink.index import build
from backlink.kernels import pyfallback
from backlink.query_builder import WeightedQuery

try:
    from backlink.kernels import _native
except ImportError:
    _native = None


def synthetic_index(n_docs: int, vocab_size: int, seed: int = 7):
    rng = random.Random(seed)
    vocab = [f"w{i}" for i in range(vocab_size)]
    # zipf-ish skew: low ids far more common, like real term distributions
    weights = [1.0 / (i + 1) for i in range(vocab_size)]

    def sample_tokens(k):
        return rng.choices(vocab, weights=weights, k=k)

    docs = []
    for i in range(n_docs):
        docs.append((
            ProcessedDocument(
                id=f"d{i:06d}",
                title_tokens=tuple(sample_tokens(rng.randint(3, 8))),
                body_tokens=tuple(sample_tokens(rng.randint(80, 300))),
                raw_body="",
            ),
            rng.randint(0, 10**9),
        ))
    return build(docs), vocab, rng


def make_queries(vocab, rng, count):
    queries = []
    for i in range(count):
        terms = [(t, rng.randint(1, 5)) for t in rng.sample(vocab[:400], k=20)]
        queries.append(WeightedQuery(
            topic_id=f"q{i}", terms=terms, title_weight=0.7, body_weight=0.3,
            date_cutoff=10**9, source_doc_id="__none__",
        ))
    return queries


def run_batch(index, queries, limit):
    results = []
    start = time.perf_counter()
    for query in queries:
        results.append(bm25.search(query, index, limit=limit))
    elapsed = time.perf_counter() - start
    return elapsed, results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=20000)
    parser.add_argument("--vocab", type=int, default=5000)
    parser.add_argument("--queries", type=int, default=40)
    parser.add_argument("--limit", type=int, default=100)
    args = parser.parse_args()

    print(f"building synthetic index: {args.docs} docs, vocab {args.vocab} ...")
    index, vocab, rng = synthetic_index(args.docs, args.vocab)
    queries = make_queries(vocab, rng, args.queries)

    kernels = [("python", pyfallback.bm25_accumulate)]
    if _native is not None:
        kernels.insert(0, ("native", _native.bm25_accumulate))
    else:
        print("compiled kernel not built; benchmarking fallback only")

    timings = {}
    rankings = {}
    for name, kernel in kernels:
        bm25.bm25_accumulate = kernel
        # warm-up pass so first-touch costs don't skew the comparison
        run_batch(index, queries[:2], args.limit)
        elapsed, results = run_batch(index, queries, args.limit)
        timings[name] = elapsed
        rankings[name] = [r.doc_ids() for r in results]
        print(f"{name:>7}: {elapsed:8.3f}s total, "
              f"{args.queries / elapsed:7.1f} queries/s")

    if len(kernels) == 2:
        assert rankings["native"] == rankings["python"], "kernels disagree on ranking"
        print(f"speedup: {timings['python'] / timings['native']:.1f}x "
              f"(rankings identical)")


if __name__ == "__main__":
    main()
