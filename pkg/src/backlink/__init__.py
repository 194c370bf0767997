"""Background-linking retrieval for news corpora.

Given a query article, find earlier articles that supply its background
context: a weighted keyword query scored with field-boosted BM25 over an
in-package inverted index, optionally re-ranked by keyword-embedding
similarity, plus nDCG/precision/diversity evaluation tooling.
"""

from backlink.backends import (
    Embedding,
    EmbeddingBackend,
    EmbeddingBackendError,
    HashEmbeddingBackend,
    HttpEmbeddingBackend,
)
from backlink.bm25 import Bm25Params, RankedList, score, search
from backlink.corpus import (
    Article,
    CorpusError,
    ProcessedDocument,
    load_corpus,
    load_stopwords,
    normalize,
    parse_article,
    process_article,
    should_index,
    strip_html,
)
from backlink.evaluation import (
    Qrels,
    RunFile,
    diversity,
    ndcg_at_k,
    parse_qrels,
    parse_run,
    precision_at_k,
    write_run,
)
from backlink.index import InvertedIndex, build as build_index, load as load_index, save as save_index
from backlink.query_builder import (
    DegenerateQueryError,
    KeywordScore,
    WeightedQuery,
    build_query,
    compute_weights,
    extract_keywords,
)
from backlink.rake import RakeConfig, RakePhrase, extract as rake_extract, keywords_sentence
from backlink.rerank import RerankConfig, compute_relevance, cosine_sim, relevance_score

__version__ = "0.1.0"
