"""Rapid automatic keyword extraction.

Candidate phrases are maximal runs of non-stopword tokens between
stopwords, punctuation and line boundaries. Each word w is scored
deg(w) / freq(w), where freq counts occurrences across candidates and deg
adds up the lengths of the phrases each occurrence sits in; a phrase
scores the sum of its word scores. The top scorers, joined into a single
string, stand in for a candidate document at embedding time.

Tokens are the corpus tokenizer's (lowercase, split on non-alphanumerics)
but are deliberately not stemmed: keywords are surface words, and stemming
would merge phrases that read differently.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from backlink.corpus import tokenize

# Punctuation that ends a candidate phrase even without a stopword.
_PHRASE_BOUNDARY_RE = re.compile(r"[.!?;:,\n]")

DEFAULT_MIN_PHRASES = 10
DEFAULT_MAX_WORDS_PER_PHRASE = 4


@dataclass(frozen=True)
class RakePhrase:
    words: tuple[str, ...]
    score: float

    def text(self) -> str:
        return " ".join(self.words)


@dataclass(frozen=True)
class RakeConfig:
    stopwords: frozenset[str]
    min_phrases: int = DEFAULT_MIN_PHRASES
    max_words_per_phrase: int = DEFAULT_MAX_WORDS_PER_PHRASE

    def __post_init__(self):
        if self.min_phrases < 1:
            raise ValueError(f"min_phrases must be >= 1, got {self.min_phrases}")
        if self.max_words_per_phrase < 1:
            raise ValueError(
                f"max_words_per_phrase must be >= 1, got {self.max_words_per_phrase}"
            )


def _candidate_phrases(text: str, config: RakeConfig) -> list[tuple[str, ...]]:
    """Stopword/punctuation-delimited token runs, in reading order.

    Runs longer than max_words_per_phrase are dropped outright; they are
    almost always run-on fragments rather than keywords.
    """
    phrases: list[tuple[str, ...]] = []
    for fragment in _PHRASE_BOUNDARY_RE.split(text):
        run: list[str] = []
        for token in tokenize(fragment):
            if token in config.stopwords:
                if run and len(run) <= config.max_words_per_phrase:
                    phrases.append(tuple(run))
                run = []
            else:
                run.append(token)
        if run and len(run) <= config.max_words_per_phrase:
            phrases.append(tuple(run))
    return phrases


def extract(text: str, config: RakeConfig) -> list[RakePhrase]:
    """Scored candidate phrases, best first (ties break lexicographically).

    Empty or all-stopword text yields an empty list.
    """
    candidates = _candidate_phrases(text, config)
    if not candidates:
        return []

    freq: dict[str, int] = {}
    deg: dict[str, int] = {}
    for phrase in candidates:
        length = len(phrase)
        for word in phrase:  # per occurrence, so repeats count fully
            freq[word] = freq.get(word, 0) + 1
            deg[word] = deg.get(word, 0) + length

    word_score = {w: deg[w] / freq[w] for w in freq}
    seen: dict[tuple[str, ...], float] = {}
    for phrase in candidates:
        if phrase not in seen:
            seen[phrase] = sum(word_score[w] for w in phrase)

    ranked = [RakePhrase(words=w, score=s) for w, s in seen.items()]
    ranked.sort(key=lambda p: (-p.score, p.words))
    return ranked


def keywords_sentence(phrases: list[RakePhrase], min_phrases: int) -> str:
    """Join the top phrases into one embedding-ready string.

    Keeps the top third of the candidates (the usual keyword cut), but
    never fewer than min_phrases; short lists are kept whole.
    """
    if not phrases:
        return ""
    keep = max(min_phrases, math.ceil(len(phrases) / 3))
    top = sorted(phrases, key=lambda p: (-p.score, p.words))[:keep]
    return " ".join(p.text() for p in top)
