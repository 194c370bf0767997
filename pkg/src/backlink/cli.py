"""Command-line pipeline driver.

Subcommands: index (build an index from a corpus), search (first-stage
BM25 retrieval), rerank (BM25 + keyword-embedding re-ranking), eval
(metrics against judgments), sweep (single-parameter tuning runs).

Exit codes: 0 success, 1 internal error, 2 usage or I/O error,
3 embedding backend unavailable. Output files are written atomically via
a .partial suffix; nothing but diagnostics is emitted on failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from backlink import backends, bm25, corpus, evaluation, query_builder, rerank
from backlink import index as index_mod
from backlink.rake import (
    DEFAULT_MAX_WORDS_PER_PHRASE,
    DEFAULT_MIN_PHRASES,
    RakeConfig,
)

log = logging.getLogger("backlink")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE_IO = 2
EXIT_BACKEND = 3

SWEEP_INT_PARAMS = {
    "n", "rep_min", "rep_max", "limit", "p", "t", "min_phrases",
    "max_phrase_words",
}
SWEEP_FLOAT_PARAMS = {"title_weight", "k1", "b"}
SWEEP_RERANK_PARAMS = {"p", "t", "min_phrases", "max_phrase_words"}


class UsageError(Exception):
    pass


@contextlib.contextmanager
def atomic_output(path: str | Path):
    """Yield a temporary path; move it into place only on success."""
    path = Path(path)
    partial = path.with_name(path.name + ".partial")
    try:
        yield partial
    except BaseException:
        with contextlib.suppress(OSError):
            partial.unlink()
        raise
    os.replace(partial, path)


def load_topics(path: str | Path) -> list[tuple[str, str]]:
    """Two-column whitespace-separated topics: topic_id query_doc_id."""
    topics: list[tuple[str, str]] = []
    seen = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise UsageError(
                    f"{path}:{lineno}: expected 'topic_id doc_id', got {line.strip()!r}"
                )
            topic_id, doc_id = parts
            if topic_id in seen:
                raise UsageError(f"{path}:{lineno}: duplicate topic id {topic_id!r}")
            seen.add(topic_id)
            topics.append((topic_id, doc_id))
    return topics


# -- index ------------------------------------------------------------------


def cmd_index(args) -> int:
    stopwords = corpus.load_stopwords(args.stopwords)
    reader = corpus.load_corpus(args.corpus)
    filtered = 0

    def indexable():
        nonlocal filtered
        for article in reader:
            if not corpus.should_index(article):
                filtered += 1
                continue
            yield (corpus.process_article(article, stopwords), article.published_at)

    idx = index_mod.build(indexable())
    with atomic_output(args.index) as tmp:
        index_mod.save(idx, tmp)

    if idx.doc_count == 0:
        log.warning("corpus %s produced an empty index", args.corpus)
    print(
        f"indexed {idx.doc_count} document(s); "
        f"filtered {filtered} by kicker; "
        f"rejected {reader.stats.rejected} line(s)"
    )
    return EXIT_OK


# -- search / rerank ----------------------------------------------------------


def _gather_query_articles(corpus_path, topics):
    """Map query doc ids to Articles; warn for topics not in the corpus."""
    found = corpus.find_articles(corpus_path, [doc_id for _, doc_id in topics])
    kept = []
    for topic_id, doc_id in topics:
        if doc_id not in found:
            log.warning(
                "topic %s: query document %s not in corpus file; skipped",
                topic_id, doc_id,
            )
            continue
        kept.append((topic_id, found[doc_id]))
    return kept


def _run_topics(topic_articles, worker, jobs):
    """Run worker(topic_id, article) per topic; results kept in topic order.

    Failed topics (degenerate queries) are warned about and skipped.
    """
    results: list[bm25.RankedList | None] = [None] * len(topic_articles)

    def run_one(i):
        topic_id, article = topic_articles[i]
        try:
            results[i] = worker(topic_id, article)
        except query_builder.DegenerateQueryError as exc:
            log.warning("topic %s: %s; skipped", topic_id, exc)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(run_one, range(len(topic_articles))))
    else:
        for i in range(len(topic_articles)):
            run_one(i)
    return [r for r in results if r is not None]


def _build_query(args, article, topic_id, idx, stopwords):
    return query_builder.build_query(
        article,
        idx,
        stopwords,
        n=args.keywords,
        rep_min=args.rep_min,
        rep_max=args.rep_max,
        title_weight=args.title_weight,
        body_weight=args.body_weight,
        topic_id=topic_id,
    )


def cmd_search(args) -> int:
    idx = index_mod.load(args.index)
    stopwords = corpus.load_stopwords(args.stopwords)
    topics = load_topics(args.topics)
    topic_articles = _gather_query_articles(args.corpus, topics)
    params = bm25.Bm25Params(k1=args.k1, b=args.b)

    def worker(topic_id, article):
        query = _build_query(args, article, topic_id, idx, stopwords)
        return bm25.search(query, idx, limit=args.limit, params=params)

    runs = _run_topics(topic_articles, worker, args.jobs)
    with atomic_output(args.out) as tmp:
        evaluation.write_run(runs, tmp, args.tag)
    print(f"wrote {sum(len(r) for r in runs)} row(s) for {len(runs)} topic(s) to {args.out}")
    return EXIT_OK


def cmd_rerank(args) -> int:
    if args.first_stage < args.final:
        raise UsageError(
            f"first-stage depth p={args.first_stage} must be >= final depth t={args.final}"
        )
    backend = backends.backend_from_spec(args.backend)
    idx = index_mod.load(args.index)
    stopwords = corpus.load_stopwords(args.stopwords)
    rake_config = RakeConfig(
        stopwords=corpus.load_stopwords(args.rake_stopwords),
        min_phrases=args.min_phrases,
        max_words_per_phrase=args.max_phrase_words,
    )
    config = rerank.RerankConfig(
        backend=backend,
        rake=rake_config,
        first_stage_depth=args.first_stage,
        final_depth=args.final,
    )
    topics = load_topics(args.topics)
    topic_articles = _gather_query_articles(args.corpus, topics)
    params = bm25.Bm25Params(k1=args.k1, b=args.b)

    def worker(topic_id, article):
        query = _build_query(args, article, topic_id, idx, stopwords)
        candidates = bm25.search(query, idx, limit=args.first_stage, params=params)
        attempt = 0
        while True:
            try:
                return rerank.compute_relevance(query, candidates, idx, config)
            except backends.EmbeddingBackendError:
                attempt += 1
                if attempt > args.retries:
                    raise
                log.warning(
                    "topic %s: embedding backend failed (attempt %d/%d); retrying",
                    topic_id, attempt, args.retries,
                )
                time.sleep(0.2 * attempt)

    runs = _run_topics(topic_articles, worker, args.jobs)
    with atomic_output(args.out) as tmp:
        evaluation.write_run(runs, tmp, args.tag)
    print(f"wrote {sum(len(r) for r in runs)} row(s) for {len(runs)} topic(s) to {args.out}")
    return EXIT_OK


# -- eval ---------------------------------------------------------------------


def _parse_k_list(spec: str) -> list[int]:
    try:
        ks = [int(part) for part in spec.split(",") if part]
    except ValueError as exc:
        raise UsageError(f"bad depth list {spec!r}: {exc}") from exc
    if not ks or any(k < 1 for k in ks):
        raise UsageError(f"depth list must contain integers >= 1, got {spec!r}")
    return ks


def _topic_metrics(ranked, qrels, ks, gain_mode):
    metrics = {}
    for k in ks:
        metrics[f"ndcg@{k}"] = evaluation.ndcg_at_k(ranked, qrels, k, gain_mode)
        metrics[f"p@{k}"] = evaluation.precision_at_k(ranked, qrels, k)
    return metrics


def cmd_eval(args) -> int:
    if args.diversity and not args.index:
        raise UsageError("--diversity requires --index")
    ks = _parse_k_list(args.k)
    run_lists = evaluation.parse_run(args.run).ranked_lists()
    qrels = evaluation.parse_qrels(args.qrels)

    run_topics = set(run_lists)
    qrels_topics = set(qrels.judgments)
    common = sorted(run_topics & qrels_topics)
    if run_topics != qrels_topics:
        log.warning(
            "run and qrels topics differ (run-only: %s, qrels-only: %s); "
            "evaluating the %d common topic(s)",
            sorted(run_topics - qrels_topics) or "none",
            sorted(qrels_topics - run_topics) or "none",
            len(common),
        )

    metric_names = [f"ndcg@{k}" for k in ks] + [f"p@{k}" for k in ks]
    per_topic = {
        t: _topic_metrics(run_lists[t], qrels, ks, args.gain) for t in common
    }
    means = {
        name: (sum(per_topic[t][name] for t in common) / len(common) if common else 0.0)
        for name in metric_names
    }

    div_value = None
    if args.diversity:
        idx = index_mod.load(args.index)
        div_value = evaluation.diversity(
            {t: run_lists[t] for t in common}, idx, norm=args.diversity_norm
        )

    if args.json:
        for t in common:
            print(json.dumps({"topic": t, **per_topic[t]}, sort_keys=True))
        summary = {"topic": "all", **means}
        if div_value is not None:
            summary["diversity"] = div_value
        print(json.dumps(summary, sort_keys=True))
    else:
        width = max([len("topic")] + [len(t) for t in common])
        header = "topic".ljust(width) + "".join(f"  {m:>9}" for m in metric_names)
        print(header)
        for t in common:
            row = t.ljust(width) + "".join(
                f"  {per_topic[t][m]:>9.4f}" for m in metric_names
            )
            print(row)
        print(
            "all".ljust(width)
            + "".join(f"  {means[m]:>9.4f}" for m in metric_names)
        )
        if div_value is not None:
            print(f"diversity ({args.diversity_norm} norm): {div_value:.4f}")
    return EXIT_OK


# -- sweep --------------------------------------------------------------------


def _parse_sweep_spec(spec: str):
    if "=" not in spec:
        raise UsageError(f"sweep spec must look like name=v1,v2,..., got {spec!r}")
    name, _, raw_values = spec.partition("=")
    name = name.strip()
    if name in SWEEP_INT_PARAMS:
        cast = int
    elif name in SWEEP_FLOAT_PARAMS:
        cast = float
    else:
        known = sorted(SWEEP_INT_PARAMS | SWEEP_FLOAT_PARAMS)
        raise UsageError(f"unknown sweep parameter {name!r}; known: {', '.join(known)}")
    try:
        values = [cast(v) for v in raw_values.split(",") if v]
    except ValueError as exc:
        raise UsageError(f"bad sweep values in {spec!r}: {exc}") from exc
    if not values:
        raise UsageError(f"sweep spec {spec!r} has no values")
    return name, values


def _apply_sweep_value(args, name, value):
    if name == "n":
        args.keywords = value
    elif name == "title_weight":
        args.title_weight = value
        args.body_weight = 1.0 - value
    elif name == "p":
        args.first_stage = value
    elif name == "t":
        args.final = value
    else:
        setattr(args, name, value)


def cmd_sweep(args) -> int:
    name, values = _parse_sweep_spec(args.param)
    pipeline = args.pipeline
    if pipeline == "auto":
        pipeline = "rerank" if name in SWEEP_RERANK_PARAMS else "search"

    qrels = evaluation.parse_qrels(args.qrels)
    idx = index_mod.load(args.index)
    stopwords = corpus.load_stopwords(args.stopwords)
    topics = load_topics(args.topics)
    topic_articles = _gather_query_articles(args.corpus, topics)

    rows = []
    for value in values:
        _apply_sweep_value(args, name, value)
        params = bm25.Bm25Params(k1=args.k1, b=args.b)

        if pipeline == "search":
            def worker(topic_id, article):
                query = _build_query(args, article, topic_id, idx, stopwords)
                return bm25.search(query, idx, limit=args.limit, params=params)
        else:
            backend = backends.backend_from_spec(args.backend)
            rake_config = RakeConfig(
                stopwords=corpus.load_stopwords(args.rake_stopwords),
                min_phrases=args.min_phrases,
                max_words_per_phrase=args.max_phrase_words,
            )
            config = rerank.RerankConfig(
                backend=backend,
                rake=rake_config,
                first_stage_depth=args.first_stage,
                final_depth=args.final,
            )

            def worker(topic_id, article):
                query = _build_query(args, article, topic_id, idx, stopwords)
                candidates = bm25.search(
                    query, idx, limit=args.first_stage, params=params
                )
                return rerank.compute_relevance(query, candidates, idx, config)

        runs = _run_topics(topic_articles, worker, args.jobs)
        if args.keep_runs:
            keep_dir = Path(args.keep_runs)
            keep_dir.mkdir(parents=True, exist_ok=True)
            evaluation.write_run(
                runs, keep_dir / f"sweep_{name}_{value}.run", args.tag
            )
        ndcg5 = (
            sum(evaluation.ndcg_at_k(r, qrels, 5) for r in runs) / len(runs)
            if runs else 0.0
        )
        p5 = (
            sum(evaluation.precision_at_k(r, qrels, 5) for r in runs) / len(runs)
            if runs else 0.0
        )
        rows.append((name, value, ndcg5, p5))

    def emit(stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["param", "value", "ndcg@5", "p@5"])
        for row in rows:
            writer.writerow([row[0], row[1], repr(row[2]), repr(row[3])])

    if args.out:
        with atomic_output(args.out) as tmp, open(tmp, "w", encoding="utf-8") as fh:
            emit(fh)
        print(f"wrote {len(rows)} sweep row(s) to {args.out}")
    else:
        emit(sys.stdout)
    return EXIT_OK


# -- argument plumbing --------------------------------------------------------


def _add_query_flags(parser):
    parser.add_argument("--keywords", "-n", type=int, default=query_builder.DEFAULT_KEYWORDS,
                        help="keywords extracted from the query article (default %(default)s)")
    parser.add_argument("--rep-min", type=int, default=query_builder.DEFAULT_REP_MIN,
                        help="minimum keyword repetition weight (default %(default)s)")
    parser.add_argument("--rep-max", type=int, default=query_builder.DEFAULT_REP_MAX,
                        help="maximum keyword repetition weight (default %(default)s)")
    parser.add_argument("--title-weight", type=float, default=query_builder.DEFAULT_TITLE_WEIGHT,
                        help="title field weight (default %(default)s)")
    parser.add_argument("--body-weight", type=float, default=query_builder.DEFAULT_BODY_WEIGHT,
                        help="body field weight (default %(default)s)")
    parser.add_argument("--k1", type=float, default=1.2, help="BM25 k1 (default %(default)s)")
    parser.add_argument("--b", type=float, default=0.75, help="BM25 b (default %(default)s)")
    parser.add_argument("--stopwords", default=None,
                        help="stopword file, one word per line (default: packaged list)")
    parser.add_argument("--jobs", type=int, default=1,
                        help="topics processed concurrently (default %(default)s)")
    parser.add_argument("--tag", default="backlink", help="run tag (default %(default)s)")


def _add_rerank_flags(parser):
    parser.add_argument("-p", "--first-stage", type=int, default=rerank.DEFAULT_FIRST_STAGE_DEPTH,
                        help="candidates retrieved by BM25 (default %(default)s)")
    parser.add_argument("-t", "--final", type=int, default=rerank.DEFAULT_FINAL_DEPTH,
                        help="documents kept after re-ranking (default %(default)s)")
    parser.add_argument("--backend", default="hash",
                        help="embedding backend: 'hash' or 'http:<url>' (default %(default)s)")
    parser.add_argument("--retries", type=int, default=2,
                        help="embedding backend retries per topic (default %(default)s)")
    parser.add_argument("--rake-stopwords", default=None,
                        help="stopword file for keyword extraction (default: packaged list)")
    parser.add_argument("--min-phrases", type=int, default=DEFAULT_MIN_PHRASES,
                        help="minimum keyword phrases kept per document (default %(default)s)")
    parser.add_argument("--max-phrase-words", type=int, default=DEFAULT_MAX_WORDS_PER_PHRASE,
                        help="longest keyword phrase kept (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="backlink",
        description="Background-linking retrieval over a news corpus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="build an index from a JSON-Lines corpus")
    p_index.add_argument("corpus")
    p_index.add_argument("index")
    p_index.add_argument("--stopwords", default=None)
    p_index.set_defaults(func=cmd_index)

    p_search = sub.add_parser("search", help="first-stage BM25 retrieval")
    p_search.add_argument("index")
    p_search.add_argument("topics")
    p_search.add_argument("corpus", help="corpus file (source of query articles)")
    p_search.add_argument("out")
    p_search.add_argument("--limit", type=int, default=100,
                          help="rows per topic (default %(default)s)")
    _add_query_flags(p_search)
    p_search.set_defaults(func=cmd_search)

    p_rerank = sub.add_parser("rerank", help="BM25 + embedding re-ranking")
    p_rerank.add_argument("index")
    p_rerank.add_argument("topics")
    p_rerank.add_argument("corpus", help="corpus file (source of query articles)")
    p_rerank.add_argument("out")
    _add_query_flags(p_rerank)
    _add_rerank_flags(p_rerank)
    p_rerank.set_defaults(func=cmd_rerank)

    p_eval = sub.add_parser("eval", help="score a run against judgments")
    p_eval.add_argument("run")
    p_eval.add_argument("qrels")
    p_eval.add_argument("--k", default="5,10", help="depth list (default %(default)s)")
    p_eval.add_argument("--json", action="store_true", help="JSON lines instead of a table")
    p_eval.add_argument("--gain", choices=evaluation.GAIN_MODES, default="shifted",
                        help="nDCG gain: 'shifted' = 2^(r-1) with zero at r=0; "
                             "'minus-one' = 2^r - 1 (default %(default)s)")
    p_eval.add_argument("--diversity", action="store_true",
                        help="also report mean pairwise tf-idf distance (needs --index)")
    p_eval.add_argument("--diversity-norm", choices=evaluation.DIVERSITY_NORMS,
                        default="pairs",
                        help="divide each topic's pair-sum by the ordered-pair count "
                             "or by the list size (default %(default)s)")
    p_eval.add_argument("--index", default=None, help="index file, required for --diversity")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="evaluate one parameter over several values")
    p_sweep.add_argument("index")
    p_sweep.add_argument("topics")
    p_sweep.add_argument("corpus")
    p_sweep.add_argument("qrels")
    p_sweep.add_argument("--param", required=True, help="sweep spec, e.g. n=10,50,100")
    p_sweep.add_argument("--pipeline", choices=("auto", "search", "rerank"), default="auto",
                         help="pipeline to sweep (default: inferred from the parameter)")
    p_sweep.add_argument("--limit", type=int, default=100)
    p_sweep.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p_sweep.add_argument("--keep-runs", default=None,
                         help="directory for per-value run files")
    _add_query_flags(p_sweep)
    _add_rerank_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE_IO
    except backends.EmbeddingBackendError as exc:
        print(f"error: embedding backend unavailable: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (OSError, corpus.CorpusError, evaluation.FormatError,
            index_mod.InvertedIndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE_IO
    except Exception as exc:  # noqa: BLE001 - last-resort diagnostic
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
