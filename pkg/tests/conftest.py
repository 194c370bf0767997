import json
from pathlib import Path

import pytest

from backlink import corpus, index as index_mod

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_paths():
    return {
        "corpus": FIXTURES / "corpus.jsonl",
        "topics": FIXTURES / "topics.txt",
        "qrels": FIXTURES / "qrels.txt",
    }


@pytest.fixture(scope="session")
def stopwords():
    return corpus.load_stopwords()


@pytest.fixture(scope="session")
def fixture_articles(fixture_paths):
    return list(corpus.load_corpus(fixture_paths["corpus"]))


@pytest.fixture(scope="session")
def fixture_index(fixture_articles, stopwords):
    return index_mod.build(
        (corpus.process_article(a, stopwords), a.published_at)
        for a in fixture_articles
        if corpus.should_index(a)
    )


def make_article_line(doc_id, title="", paragraphs=(), date=0, kicker=None, author=None):
    obj = {
        "id": doc_id,
        "title": title,
        "published_date": date,
        "contents": [
            {"type": "sanitized_html", "subtype": "paragraph", "content": p}
            for p in paragraphs
        ],
    }
    if kicker is not None:
        obj["kicker"] = kicker
    if author is not None:
        obj["author"] = author
    return json.dumps(obj)


def make_article(doc_id, title="", paragraphs=(), date=0, kicker=None, author=None):
    return corpus.parse_article(
        make_article_line(doc_id, title, paragraphs, date, kicker, author)
    )
