"""Corpus parsing and text normalization.

Reads JSON-Lines news corpora (one article object per line, Washington
Post collection layout), strips HTML from paragraph content, normalizes
text into index tokens, and decides which articles are eligible for
indexing.
"""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from html.parser import HTMLParser
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

from backlink.stem import stem

log = logging.getLogger(__name__)

# Section labels whose articles are excluded from the index (exact,
# case-sensitive match on the kicker field).
EXCLUDED_KICKERS = frozenset({"Opinion", "Letters to the Editor", "The Post's View"})

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Tags that separate text blocks; all other tags are dropped without
# introducing whitespace so inline markup never splits words.
_BLOCK_TAGS = frozenset({"p", "div", "br", "li"})


class CorpusError(Exception):
    """Raised when an article line cannot be turned into an Article."""


@dataclass(frozen=True)
class Article:
    """One news document as read from the corpus file."""

    id: str
    title: str
    published_at: int  # epoch milliseconds UTC
    kicker: str | None
    paragraphs: tuple[str, ...]  # raw HTML fragments, body paragraphs only
    author: str | None = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("article id must be non-empty")
        if self.published_at < 0:
            raise CorpusError(f"negative publication date on {self.id!r}")


@dataclass(frozen=True)
class ProcessedDocument:
    """Normalized view of an article: lowercased, stopped, stemmed tokens."""

    id: str
    title_tokens: tuple[str, ...]
    body_tokens: tuple[str, ...]
    raw_body: str  # plain text after HTML strip, before normalization


def parse_article(json_line: str) -> Article:
    """Parse one corpus line into an Article.

    Body paragraphs are the ``content`` values of contents entries with
    type "sanitized_html" and subtype "paragraph"; every other entry
    (images, multimedia, ...) is ignored.
    """
    try:
        obj = json.loads(json_line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise CorpusError("article line is not a JSON object")

    doc_id = obj.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusError("missing or empty id")

    title = obj.get("title") or ""
    if not isinstance(title, str):
        raise CorpusError(f"non-string title on {doc_id!r}")

    published = obj.get("published_date", 0)
    if not isinstance(published, int) or isinstance(published, bool) or published < 0:
        raise CorpusError(f"bad published_date on {doc_id!r}: {published!r}")

    kicker = obj.get("kicker")
    if kicker is not None and not isinstance(kicker, str):
        raise CorpusError(f"non-string kicker on {doc_id!r}")
    author = obj.get("author")
    if author is not None and not isinstance(author, str):
        raise CorpusError(f"non-string author on {doc_id!r}")

    paragraphs = []
    contents = obj.get("contents") or []
    if not isinstance(contents, list):
        raise CorpusError(f"contents is not an array on {doc_id!r}")
    for entry in contents:
        if (
            isinstance(entry, dict)
            and entry.get("type") == "sanitized_html"
            and entry.get("subtype") == "paragraph"
            and isinstance(entry.get("content"), str)
        ):
            paragraphs.append(entry["content"])

    return Article(
        id=doc_id,
        title=title,
        published_at=published,
        kicker=kicker,
        paragraphs=tuple(paragraphs),
        author=author,
    )


def serialize_article(article: Article) -> str:
    """Inverse of parse_article; emits one corpus-format JSON line."""
    obj = {
        "id": article.id,
        "title": article.title,
        "published_date": article.published_at,
        "contents": [
            {"type": "sanitized_html", "subtype": "paragraph", "content": p}
            for p in article.paragraphs
        ],
    }
    if article.kicker is not None:
        obj["kicker"] = article.kicker
    if article.author is not None:
        obj["author"] = article.author
    return json.dumps(obj, ensure_ascii=False)


class _TextExtractor(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_data(self, data):
        self.parts.append(data)


def strip_html(html: str) -> str:
    """Extract plain text from an HTML fragment.

    Inline tags are removed without inserting whitespace ("a<b>c</b>d"
    gives "acd"); block tags (p, div, br, li) become line breaks.
    Entity references are decoded; unclosed tags are treated as closed at
    the end of input. Whitespace inside each line is collapsed to single
    spaces and empty lines are dropped.
    """
    parser = _TextExtractor()
    parser.feed(html)
    parser.close()
    lines = ("".join(parser.parts)).split("\n")
    cleaned = [" ".join(line.split()) for line in lines]
    return "\n".join(line for line in cleaned if line)


def fold_ascii(text: str) -> str:
    """ASCII-fold accented characters; anything else non-ASCII is dropped."""
    return unicodedata.normalize("NFKD", text).encode("ascii", "ignore").decode("ascii")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric character; digits kept."""
    return _TOKEN_RE.findall(fold_ascii(text.casefold()))


def normalize(text: str, stopwords: frozenset[str] | set[str]) -> list[str]:
    """Tokenize, drop stopwords, then Porter-stem.

    Stopwords are matched on the surface token (pre-stemming) and must be
    lowercase.
    """
    return [stem(t) for t in tokenize(text) if t not in stopwords]


def should_index(article: Article) -> bool:
    """False only for the excluded kicker labels; absent kicker indexes."""
    return article.kicker not in EXCLUDED_KICKERS


def process_article(article: Article, stopwords: frozenset[str]) -> ProcessedDocument:
    """Strip, join and normalize an article's title and body."""
    raw_body = "\n".join(
        text for text in (strip_html(p) for p in article.paragraphs) if text
    )
    return ProcessedDocument(
        id=article.id,
        title_tokens=tuple(normalize(article.title, stopwords)),
        body_tokens=tuple(normalize(raw_body, stopwords)),
        raw_body=raw_body,
    )


@dataclass
class CorpusStats:
    lines: int = 0
    parsed: int = 0
    rejected: int = 0
    rejections: list[tuple[int, str]] = field(default_factory=list)


class CorpusReader:
    """Streams Articles from a JSON-Lines file, counting rejected lines.

    Iterate to consume; ``stats`` is complete once iteration finishes.
    Blank lines are skipped without being counted as rejections.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.stats = CorpusStats()

    def __iter__(self) -> Iterator[Article]:
        with open(self.path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                self.stats.lines += 1
                try:
                    article = parse_article(line)
                except CorpusError as exc:
                    self.stats.rejected += 1
                    self.stats.rejections.append((lineno, str(exc)))
                    log.warning("%s:%d: rejected line: %s", self.path, lineno, exc)
                    continue
                self.stats.parsed += 1
                yield article
        log.info(
            "%s: %d article(s) parsed, %d line(s) rejected",
            self.path, self.stats.parsed, self.stats.rejected,
        )


def load_corpus(path: str | Path) -> CorpusReader:
    """Open a corpus for streaming; raises OSError if unreadable."""
    reader = CorpusReader(path)
    # fail fast on unreadable paths instead of at first iteration
    with open(reader.path, encoding="utf-8"):
        pass
    return reader


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a one-word-per-line stopword file; None loads the packaged list."""
    if path is None:
        text = (
            resources.files("backlink.data")
            .joinpath("stopwords_english.txt")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def find_articles(path: str | Path, wanted_ids: Iterable[str]) -> dict[str, Article]:
    """Single-pass scan for specific article ids (query articles may be
    kicker-filtered out of the index, so they are fetched from the corpus
    file)."""
    wanted = set(wanted_ids)
    found: dict[str, Article] = {}
    if not wanted:
        return found
    for article in load_corpus(path):
        if article.id in wanted:
            found[article.id] = article
            if len(found) == len(wanted):
                break
    return found
