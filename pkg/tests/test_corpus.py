"""Tests for corpus ingestion, indexing and BM25 search."""

import json
import math
import random

import pytest

from castkit import BM25Params, CorpusError, ParseError, Passage
from castkit.models import InvertedIndex
from castkit.operations.corpus import bm25_idf, tokenize
from tests import oracles

VOCABULARY = ["social", "security", "trust", "fund", "almonds", "tea", "coffee", "x"]
WORDS = [*VOCABULARY, *(f"w{i}" for i in range(40))]


class TestTokenize:
    """Test cases for the shared tokenizer."""

    def test_case_folds_and_splits(self):
        """Test punctuation splits tokens and case is folded."""
        assert tokenize("Can it be FIXED?") == ["can", "it", "be", "fixed"]

    def test_underscore_and_hyphen_separate(self):
        """Test underscores and hyphens are separators."""
        assert tokenize("long-term snake_case") == ["long", "term", "snake", "case"]

    def test_keeps_digits_and_unicode_letters(self):
        """Test digits and non-ASCII letters stay inside tokens."""
        assert tokenize("Straße 160 café") == ["strasse", "160", "café"]

    def test_empty_text(self):
        """Test blank text has no tokens."""
        assert tokenize("  ?! ") == []


class TestBuildIndex:
    """Test cases for index construction."""

    def test_statistics(self, tiny_index: InvertedIndex):
        """Test document lengths, counts and postings."""
        assert tiny_index.total_docs == 4
        assert tiny_index.doc_lengths == {"d1": 3, "d2": 2, "d3": 4, "d4": 1}
        assert tiny_index.avg_doc_length == 2.5
        assert tiny_index.postings["security"] == {"d1": 1, "d2": 1}
        assert tiny_index.term_frequency("almonds", "d3") == 2
        assert tiny_index.document_frequency("missing") == 0

    def test_document_frequencies_match_scan(self, corpus_ops):
        """Test per-term document frequencies against a brute-force scan."""
        rng = random.Random(5)
        documents = {
            f"p{i:04d}": " ".join(rng.choices(WORDS, k=rng.randint(0, 25)))
            for i in range(1000)
        }
        index = corpus_ops.build_index(
            Passage(id=pid, text=text) for pid, text in documents.items()
        )
        token_sets = [set(tokenize(text)) for text in documents.values()]
        for term in WORDS:
            expected = sum(1 for tokens in token_sets if term in tokens)
            assert index.document_frequency(term) == expected
        assert set(index.postings) == set().union(*token_sets)

    def test_duplicate_id(self, corpus_ops):
        """Test a repeated passage id is rejected."""
        passages = [Passage(id="d1", text="a"), Passage(id="d1", text="b")]
        with pytest.raises(CorpusError, match="duplicate passage id d1"):
            corpus_ops.build_index(passages)

    def test_empty_corpus(self, corpus_ops):
        """Test an empty corpus gives an empty index and no results."""
        index = corpus_ops.build_index([])
        assert index.total_docs == 0
        assert index.avg_doc_length == 0.0
        assert corpus_ops.search(index, ["tea"]) == []

    def test_passage_without_tokens(self, corpus_ops):
        """Test a passage of punctuation only is indexed with length 0."""
        index = corpus_ops.build_index([
            Passage(id="d1", text="?!"),
            Passage(id="d2", text="tea"),
        ])
        assert index.doc_lengths["d1"] == 0
        assert corpus_ops.search(index, ["tea"])[0][0] == "d2"


class TestBM25:
    """Test cases for BM25 scoring and search."""

    def test_single_term_score(self, corpus_ops, tiny_index):
        """Test a hand-computed score."""
        idf = math.log((4 - 2 + 0.5) / (2 + 0.5) + 1)
        norm = 1 - 0.68 + 0.68 * (2 / 2.5)
        expected = idf * 1 * 1.82 / (1 + 0.82 * norm)
        score = corpus_ops.bm25_score(tiny_index, ["security"], "d2")
        assert score == pytest.approx(expected)

    def test_idf_is_non_negative(self):
        """Test idf stays positive even for a term in every passage."""
        assert bm25_idf(10, 10) > 0
        assert bm25_idf(0, 10) > bm25_idf(5, 10)

    def test_duplicate_query_terms_count_once(self, corpus_ops, tiny_index):
        """Test repeating a query term does not change the scores."""
        once = corpus_ops.search(tiny_index, ["security", "fund"])
        twice = corpus_ops.search(tiny_index, ["security", "fund", "security"])
        assert once == twice

    def test_unknown_terms_give_no_results(self, corpus_ops, tiny_index):
        """Test only passages with a positive score are returned."""
        assert corpus_ops.search(tiny_index, ["walnuts"]) == []
        assert corpus_ops.search(tiny_index, []) == []

    def test_ties_break_by_pid(self, corpus_ops):
        """Test equal scores are ordered by ascending pid."""
        index = corpus_ops.build_index([
            Passage(id="b", text="tea cup"),
            Passage(id="a", text="tea pot"),
            Passage(id="c", text="coffee mug"),
        ])
        assert [pid for pid, _ in corpus_ops.search(index, ["tea"])] == ["a", "b"]

    def test_depth(self, corpus_ops, tiny_index):
        """Test the depth cut and its validation."""
        assert len(corpus_ops.search(tiny_index, ["security", "tea"], depth=1)) == 1
        with pytest.raises(ValueError, match="depth must be >= 1"):
            corpus_ops.search(tiny_index, ["tea"], depth=0)

    def test_custom_parameters(self, corpus_ops, tiny_index):
        """Test b = 0 removes length normalization."""
        params = BM25Params(k1=1.2, b=0.0)
        scores = dict(corpus_ops.search(tiny_index, ["security"], params))
        assert scores["d1"] == pytest.approx(scores["d2"])

    def test_score_of_unknown_passage(self, corpus_ops, tiny_index):
        """Test scoring an unknown pid raises CorpusError."""
        with pytest.raises(CorpusError, match="unknown passage id zz"):
            corpus_ops.bm25_score(tiny_index, ["tea"], "zz")

    def test_search_matches_bm25_score(self, corpus_ops, sample_index):
        """Test search scores equal per-passage scores."""
        terms = tokenize("social security trust fund owed")
        for pid, score in corpus_ops.search(sample_index, terms, depth=10):
            assert score == pytest.approx(
                corpus_ops.bm25_score(sample_index, terms, pid)
            )

    @pytest.mark.slow
    def test_random_corpora_match_oracle(self, corpus_ops):
        """Test search against a from-scratch scorer on random corpora."""
        rng = random.Random(7)
        for _ in range(200):
            documents = {
                f"d{i:03d}": " ".join(rng.choices(WORDS, k=rng.randint(1, 30)))
                for i in range(rng.randint(1, 500))
            }
            query = " ".join(rng.choices(WORDS, k=rng.randint(1, 5)))
            index = corpus_ops.build_index(
                Passage(id=pid, text=text) for pid, text in documents.items()
            )
            result = corpus_ops.search(index, tokenize(query), depth=10)
            scores = oracles.bm25_scores(documents, query)
            expected = oracles.ranked(scores, 10)
            assert len(result) == len(expected)
            assert len({pid for pid, _ in result}) == len(result)
            for (pid, got), (_, want) in zip(result, expected, strict=True):
                assert abs(got - want) <= 1e-9
                assert abs(got - scores[pid]) <= 1e-9

    def test_length_ignored_without_normalization(self, corpus_ops):
        """Test b = 0 scores equal tf and df the same at any passage length."""
        rng = random.Random(11)
        params = BM25Params(b=0.0)
        for _ in range(50):
            tf = rng.randint(1, 4)
            padding = [rng.randint(0, 40) for _ in range(3)]
            passages = [
                Passage(id=f"d{i}", text=" ".join(["tea"] * tf + ["x"] * pad))
                for i, pad in enumerate(padding)
            ]
            passages.append(Passage(id="other", text="coffee " * rng.randint(1, 9)))
            index = corpus_ops.build_index(passages)
            scores = [
                corpus_ops.bm25_score(index, ["tea"], f"d{i}", params)
                for i in range(len(padding))
            ]
            assert max(scores) - min(scores) <= 1e-12

    def test_absent_term_leaves_score_unchanged(self, corpus_ops):
        """Test adding a query term a passage lacks does not change its score."""
        rng = random.Random(13)
        documents = {
            f"d{i:03d}": " ".join(rng.choices(WORDS, k=rng.randint(1, 20)))
            for i in range(200)
        }
        index = corpus_ops.build_index(
            Passage(id=pid, text=text) for pid, text in documents.items()
        )
        for pid, text in rng.sample(sorted(documents.items()), 50):
            present = set(tokenize(text))
            absent = [word for word in WORDS if word not in present]
            if not absent:
                continue
            terms = rng.sample(sorted(present), min(2, len(present)))
            before = corpus_ops.bm25_score(index, terms, pid)
            after = corpus_ops.bm25_score(index, [*terms, rng.choice(absent)], pid)
            assert after == before


class TestReadCorpus:
    """Test cases for corpus file reading."""

    def test_fixture_corpus(self, corpus_ops, fixtures_dir):
        """Test the sample TSV corpus."""
        passages = corpus_ops.read_corpus(fixtures_dir / "corpus.tsv")
        assert len(passages) == 50
        assert passages[0].id == "MARCO_1001"

    def test_jsonl_detected_by_suffix(self, corpus_ops, tmp_path):
        """Test JSON-lines input and blank-line skipping."""
        path = tmp_path / "corpus.jsonl"
        lines = [
            json.dumps({"id": "p1", "text": "tea"}),
            "",
            json.dumps({"id": "p2", "text": "x"}),
        ]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        passages = corpus_ops.read_corpus(path)
        assert [p.id for p in passages] == ["p1", "p2"]

    def test_tsv_text_keeps_later_tabs(self, corpus_ops):
        """Test only the first tab separates id and text."""
        passage = next(corpus_ops.parse_corpus(["p1\tone\ttwo\r\n"]))
        assert passage.text == "one\ttwo"

    @pytest.mark.parametrize(
        ("line", "fmt", "message"),
        [
            ("no tab here", "tsv", "line 1: expected id<TAB>text"),
            ("\ttext", "tsv", "line 1: invalid passage"),
            ("has space\ttext", "tsv", "line 1: invalid passage"),
            ("{not json", "jsonl", "line 1: invalid JSON"),
            ("[1, 2]", "jsonl", "line 1: expected a JSON object"),
            ('{"id": 3, "text": "x"}', "jsonl", "line 1: fields 'id' and 'text'"),
        ],
    )
    def test_malformed_lines(self, corpus_ops, line, fmt, message):
        """Test malformed lines raise ParseError with the line number."""
        with pytest.raises(ParseError, match=message) as exc_info:
            list(corpus_ops.parse_corpus([line], fmt))
        assert exc_info.value.line_number == 1

    def test_unknown_format(self, corpus_ops):
        """Test an unknown format is rejected."""
        with pytest.raises(ValueError, match="unknown corpus format"):
            list(corpus_ops.parse_corpus([], "xml"))


class TestIndexSnapshot:
    """Test cases for saving and loading indexes."""

    def test_round_trip(self, corpus_ops, sample_index, tmp_path):
        """Test a loaded snapshot searches exactly like the original."""
        path = tmp_path / "index.json"
        corpus_ops.save_index(sample_index, path)
        loaded = corpus_ops.load_index(path)
        terms = tokenize("history of coffee and tea")
        assert loaded == sample_index
        assert corpus_ops.search(loaded, terms) == (
            corpus_ops.search(sample_index, terms)
        )

    def test_invalid_snapshot(self, corpus_ops, tmp_path):
        """Test a foreign JSON file is rejected."""
        path = tmp_path / "index.json"
        path.write_text('{"format": "other"}', encoding="utf-8")
        with pytest.raises(CorpusError, match="invalid index snapshot"):
            corpus_ops.load_index(path)
