"""Pytest configuration and fixtures."""

from collections.abc import Generator
from pathlib import Path

import pytest

from castkit import Passage
from castkit.configuration import CONFIG_ENV_VAR
from castkit.models import Conversation, InvertedIndex
from castkit.operations import (
    ConversationOperations,
    CorpusOperations,
    ErrorAnalysisOperations,
    EvaluationOperations,
    FusionOperations,
    TrecOperations,
)

FIXTURES = Path(__file__).parent / "fixtures"

# Pattern counts ooo, voo, ovo, vvo, oov, vov, ovv, vvv of a 208-query
# NDCG@3 > 0 analysis.
SAMPLE_COUNTS = (20, 0, 7, 1, 51, 2, 88, 39)


@pytest.fixture(autouse=True)
def _no_config_env(monkeypatch: pytest.MonkeyPatch) -> Generator[None]:
    """Keep a developer's CASTKIT_CONFIG out of the tests."""
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
    yield


@pytest.fixture
def fixtures_dir() -> Path:
    """Directory holding the sample corpus, conversations and qrels."""
    return FIXTURES


@pytest.fixture
def corpus_ops() -> CorpusOperations:
    """Sequential corpus operations."""
    return CorpusOperations()


@pytest.fixture
def conversation_ops() -> ConversationOperations:
    """Sequential conversation operations."""
    return ConversationOperations()


@pytest.fixture
def trec_ops() -> TrecOperations:
    """TREC run and qrels operations."""
    return TrecOperations()


@pytest.fixture
def evaluation_ops() -> EvaluationOperations:
    """Metric operations."""
    return EvaluationOperations()


@pytest.fixture
def fusion_ops() -> FusionOperations:
    """Sequential fusion operations."""
    return FusionOperations()


@pytest.fixture
def analysis_ops() -> ErrorAnalysisOperations:
    """Sequential error analysis operations."""
    return ErrorAnalysisOperations()


@pytest.fixture
def tiny_passages() -> list[Passage]:
    """Four short passages with known statistics.

    Returns:
        Passages of lengths 3, 2, 4 and 1 (average 2.5).

    """
    return [
        Passage(id="d1", text="social security trust"),
        Passage(id="d2", text="security fund"),
        Passage(id="d3", text="almonds almonds have calories"),
        Passage(id="d4", text="tea"),
    ]


@pytest.fixture
def tiny_index(
    corpus_ops: CorpusOperations, tiny_passages: list[Passage]
) -> InvertedIndex:
    """Index over `tiny_passages`."""
    return corpus_ops.build_index(tiny_passages)


@pytest.fixture
def sample_index(corpus_ops: CorpusOperations) -> InvertedIndex:
    """Index over the 50-passage fixture corpus."""
    return corpus_ops.build_index(corpus_ops.read_corpus(FIXTURES / "corpus.tsv"))


@pytest.fixture
def sample_conversations(
    conversation_ops: ConversationOperations,
) -> list[Conversation]:
    """The three fixture conversations."""
    return conversation_ops.read_conversations(FIXTURES / "conversations.json")
