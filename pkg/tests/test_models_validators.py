"""Tests for model validators."""

import pytest
from pydantic import ValidationError

from castkit.models import (
    CLASS_ORDER,
    PATTERN_ORDER,
    AnalysisConfig,
    AnalysisTable,
    Conversation,
    ErrorClass,
    InvertedIndex,
    MetricId,
    Passage,
    QueryClassification,
    ResolvedQuery,
    RunEntry,
    Turn,
)


def _table(**overrides) -> AnalysisTable:
    fields = {
        "metric": "ndcg@3",
        "threshold": 0.0,
        "total": 2,
        "pattern_counts": dict.fromkeys(PATTERN_ORDER, 0) | {"vvv": 2},
        "row_percentages": {},
        "class_counts": dict.fromkeys(map(str, CLASS_ORDER), 0) | {"no_error": 2},
        "class_percentages": {},
        "original_pass_pct": 100.0,
    }
    return AnalysisTable(**(fields | overrides))


def _stats(**overrides) -> dict:
    fields = {"doc_lengths": {"d1": 1}, "total_docs": 1, "avg_doc_length": 1.0}
    return fields | overrides


class TestModelValidators:
    """Test cases for model field validators."""

    def test_identifier_coerces_integers(self):
        """Test integer conversation numbers become string ids."""
        conversation = Conversation(number=31, turn=[])
        assert conversation.conversation_id == "31"
        assert conversation.qid(2) == "31_2"

    def test_identifier_strips_outer_whitespace(self):
        """Test surrounding whitespace is removed from ids."""
        assert Passage(id="  MARCO_1 ", text="x").id == "MARCO_1"

    @pytest.mark.parametrize("pid", ["", "MARCO 1", "a\tb"])
    def test_identifier_rejects_inner_whitespace(self, pid):
        """Test ids must be non-empty and free of whitespace."""
        with pytest.raises(ValidationError):
            Passage(id=pid, text="x")

    def test_turn_blank_texts_become_none(self):
        """Test blank rewrites and responses are treated as absent."""
        turn = Turn(
            number=1,
            raw_utterance="What is tea?",
            automatic_rewritten_utterance="",
            manual_rewritten_utterance="   ",
            canonical_response_text=None,
        )
        assert turn.auto_rewrite is None
        assert turn.manual_rewrite is None
        assert turn.canonical_response is None

    def test_turn_requires_raw_query(self):
        """Test an empty raw utterance is rejected."""
        with pytest.raises(ValidationError):
            Turn(number=1, raw_utterance="  ")

    def test_conversation_turn_numbers(self):
        """Test turns must be numbered 1..n in order."""
        turns = [
            {"number": 1, "raw_utterance": "a"},
            {"number": 3, "raw_utterance": "b"},
        ]
        with pytest.raises(ValidationError, match="turn numbers must be 1..2"):
            Conversation(number="7", turn=turns)

    def test_conversation_turn_lookup(self):
        """Test 1-based turn lookup and its range check."""
        conversation = Conversation(
            number="7", turn=[{"number": 1, "raw_utterance": "a"}]
        )
        assert conversation.turn(1).raw_query == "a"
        with pytest.raises(IndexError, match="turn 2 out of range"):
            conversation.turn(2)

    def test_inverted_index_consistency(self):
        """Test the index statistics must agree with the postings."""
        index = InvertedIndex(
            postings={"tea": {"d1": 2}},
            doc_lengths={"d1": 3, "d2": 1},
            total_docs=2,
            avg_doc_length=2.0,
        )
        assert index.document_frequency("tea") == 1
        assert index.term_frequency("tea", "d1") == 2
        assert index.term_frequency("tea", "d2") == 0

    @pytest.mark.parametrize(
        ("fields", "message"),
        [
            ({"doc_lengths": {"d1": 1}, "total_docs": 2}, "total_docs"),
            (_stats(postings={"t": {"d9": 1}}), "unknown id d9"),
            (_stats(postings={"t": {"d1": 0}}), "< 1"),
            (_stats(avg_doc_length=3.0), "avg_doc_length"),
        ],
    )
    def test_inverted_index_rejects(self, fields, message):
        """Test inconsistent index statistics."""
        with pytest.raises(ValidationError, match=message):
            InvertedIndex(**fields)

    def test_resolved_query_text(self):
        """Test the original text is a prefix of the resolved text."""
        query = ResolvedQuery(
            original_text="How much is owed?",
            original_terms=("how", "much", "is", "owed"),
            appended_terms=("social", "security"),
        )
        assert query.text == "How much is owed? social security"
        assert query.terms[-2:] == ["social", "security"]
        plain = ResolvedQuery(original_text="Tea?", original_terms=("tea",))
        assert plain.text == "Tea?"

    def test_resolved_query_unique_terms(self):
        """Test appended terms must be distinct."""
        with pytest.raises(ValidationError, match="unique"):
            ResolvedQuery(
                original_text="q", original_terms=("q",), appended_terms=("a", "a")
            )

    @pytest.mark.parametrize(
        ("text", "expected"),
        [
            ("ndcg@3", "ndcg@3"),
            ("NDCG@10", "ndcg@10"),
            ("map", "map"),
            (" mrr ", "mrr"),
            ("recall@100", "recall@100"),
        ],
    )
    def test_metric_id_parse(self, text, expected):
        """Test metric ids parse to their canonical form."""
        assert str(MetricId.parse(text)) == expected

    @pytest.mark.parametrize("text", ["ndcg", "map@3", "p@10", "ndcg@x", "ndcg@0"])
    def test_metric_id_rejects(self, text):
        """Test unsupported metric ids."""
        with pytest.raises(ValueError):
            MetricId.parse(text)

    def test_analysis_config_normalizes_metric(self):
        """Test the analysis metric is stored in canonical form."""
        assert AnalysisConfig(metric="NDCG@3").metric == "ndcg@3"
        with pytest.raises(ValidationError):
            AnalysisConfig(threshold=1.5)

    def test_query_classification_contradiction(self):
        """Test the error class must follow from the pattern."""
        ok = QueryClassification(
            pattern=(False, False, True),
            error_class=ErrorClass.QUERY_RESOLUTION_ERROR,
        )
        assert ok.pattern_key == "oov"
        with pytest.raises(ValidationError, match="contradicts"):
            QueryClassification(
                pattern=(True, True, False), error_class=ErrorClass.NO_ERROR
            )

    def test_analysis_table_counts(self):
        """Test pattern and class counts must sum to the total."""
        assert _table().total == 2
        with pytest.raises(ValidationError, match="pattern counts must sum"):
            _table(total=3)
        with pytest.raises(ValidationError, match="PATTERN_ORDER"):
            _table(pattern_counts={"vvv": 2})

    def test_run_entry_rendered_score(self):
        """Test the score text is kept verbatim when present."""
        entry = RunEntry(qid="q", pid="p", rank=1, score=1.5, tag="t")
        assert entry.rendered_score == "1.500000"
        parsed = entry.model_copy(update={"score_text": "1.5000000001"})
        assert parsed.rendered_score == "1.5000000001"
        with pytest.raises(ValidationError):
            RunEntry(qid="q", pid="p", rank=0, score=1.0, tag="t")
