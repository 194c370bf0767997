import pytest
from hypothesis import given, strategies as st

from backlink.corpus import tokenize
from backlink.rake import RakeConfig, RakePhrase, extract, keywords_sentence


def config(stopwords=(), min_phrases=10, max_words=8):
    return RakeConfig(
        stopwords=frozenset(stopwords),
        min_phrases=min_phrases,
        max_words_per_phrase=max_words,
    )


class TestExtract:
    def test_red_green_apples_hand_scores(self):
        got = extract("red apples and green apples", config(["and"]))
        assert [(p.words, p.score) for p in got] == [
            (("green", "apples"), 4.0),
            (("red", "apples"), 4.0),
        ]
        # underlying word stats: freq(apples)=2, deg(apples)=4 -> 2.0;
        # freq(red)=1, deg(red)=2 -> 2.0; phrase = 2 + 2

    def test_all_stopwords(self):
        assert extract("the and of", config(["the", "and", "of"])) == []

    def test_empty_text(self):
        assert extract("", config()) == []

    def test_single_word_degenerate(self):
        got = extract("word", config())
        assert got == [RakePhrase(words=("word",), score=1.0)]

    def test_punctuation_breaks_phrases(self):
        got = extract("deep learning, neural networks", config())
        assert {p.words for p in got} == {
            ("deep", "learning"), ("neural", "networks"),
        }

    def test_stopword_breaks_phrases(self):
        got = extract("deep learning of neural networks", config(["of"]))
        assert {p.words for p in got} == {
            ("deep", "learning"), ("neural", "networks"),
        }

    def test_long_runs_dropped(self):
        got = extract("one two three four five", config(max_words=3))
        assert got == []

    def test_lowercasing(self):
        got = extract("Solar Panels", config())
        assert got[0].words == ("solar", "panels")

    def test_no_stopword_in_output(self):
        stop = ["the", "of", "and", "a"]
        got = extract(
            "the rapid diffusion of large models and the cost of training", config(stop)
        )
        assert got
        for phrase in got:
            assert not set(phrase.words) & set(stop)

    def test_phrases_verbatim_in_input(self):
        text = "coastal flooding damaged the harbor wall, emergency crews responded"
        tokens = tokenize(text)
        joined = " ".join(tokens)
        for phrase in extract(text, config(["the"])):
            assert " ".join(phrase.words) in joined

    @given(st.permutations(["one alpha beta.", "two gamma delta.", "three epsilon zeta."]))
    def test_sentence_permutation_invariance(self, sentences):
        base = extract(" ".join(["one alpha beta.", "two gamma delta.", "three epsilon zeta."]), config())
        permuted = extract(" ".join(sentences), config())
        assert {(p.words, p.score) for p in base} == {(p.words, p.score) for p in permuted}

    @given(st.integers(min_value=1, max_value=12))
    def test_unique_word_run_scores_length_squared(self, length):
        words = [f"w{i}" for i in range(length)]
        got = extract(" ".join(words), config(max_words=length))
        assert len(got) == 1
        assert got[0].words == tuple(words)
        # every word: deg = L, freq = 1 -> word score L; phrase = L * L
        assert got[0].score == pytest.approx(length * length)

    def test_duplicate_phrases_deduped(self):
        got = extract("solar panels, solar panels", config())
        assert len(got) == 1
        assert got[0].words == ("solar", "panels")


class TestKeywordsSentence:
    def test_empty(self):
        assert keywords_sentence([], min_phrases=5) == ""

    def test_min_floor_dominates_short_lists(self):
        phrases = [RakePhrase(words=(f"w{i}",), score=float(10 - i)) for i in range(3)]
        assert keywords_sentence(phrases, min_phrases=10) == "w0 w1 w2"

    def test_one_third_rule(self):
        phrases = [RakePhrase(words=(f"w{i:02d}",), score=float(100 - i)) for i in range(30)]
        got = keywords_sentence(phrases, min_phrases=5)
        assert got.split() == [f"w{i:02d}" for i in range(10)]

    def test_score_order_preserved(self):
        phrases = [
            RakePhrase(words=("low",), score=1.0),
            RakePhrase(words=("high", "pair"), score=9.0),
            RakePhrase(words=("mid",), score=5.0),
        ]
        assert keywords_sentence(phrases, min_phrases=3) == "high pair mid low"

    def test_matches_one_third_of_extract_output(self):
        text = (
            "solar panels, wind turbines, battery storage, transmission lines, "
            "hydro dams, geothermal wells, tidal generators, biomass plants, "
            "insulation retrofits"
        )
        phrases = extract(text, config())
        assert len(phrases) == 9
        got = keywords_sentence(phrases, min_phrases=1)
        kept = [p.text() for p in phrases[:3]]  # ceil(9/3) = 3
        assert got == " ".join(kept)
