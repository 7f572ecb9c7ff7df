"""Term classifiers deciding which history terms belong in the resolved query.

Three implementations ship with the toolkit:

- `NullClassifier` marks nothing relevant, which reproduces the raw-query
  baseline.
- `OracleClassifier` marks a history term relevant when it occurs in the
  turn's gold rewrite but not in the original query.
- `HeuristicClassifier` marks a history term relevant when it is not a
  stopword, not already in the query, and rare enough in the corpus.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, ClassVar, Literal, override

from .operations.corpus import bm25_idf, tokenize

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .models import HistoryContext, InvertedIndex, Turn

# Function words and conversational filler never appended by HeuristicClassifier.
STOPWORDS: frozenset[str] = frozenset({
    "a", "about", "an", "and", "are", "as", "at", "be", "but", "by", "can",
    "could", "did", "do", "does", "for", "from", "had", "has", "have", "he",
    "her", "him", "his", "how", "i", "if", "in", "is", "it", "its", "me", "my",
    "no", "not", "of", "oh", "on", "or", "our", "she", "so", "some", "tell",
    "than", "that", "the", "their", "them", "then", "there", "these", "they",
    "this", "those", "to", "us", "was", "we", "were", "what", "when", "where",
    "which", "who", "why", "will", "with", "would", "you", "your",
})  # fmt: skip


class TermClassifier(ABC):
    """Decide, per history term occurrence, whether it is relevant to the query."""

    name: ClassVar[str]

    @abstractmethod
    def classify(
        self,
        history: HistoryContext,
        query_terms: Sequence[str],
        turn: Turn | None = None,
    ) -> list[bool]:
        """Return one verdict per term occurrence of `history.terms`, in order.

        Args:
            history: The conversation history of the current turn.
            query_terms: Tokenized current-turn query.
            turn: The current turn, for classifiers that need its rewrites.

        """


class NullClassifier(TermClassifier):
    """Never relevant; resolution becomes the identity."""

    name = "null"

    @override
    def classify(
        self,
        history: HistoryContext,
        query_terms: Sequence[str],
        turn: Turn | None = None,
    ) -> list[bool]:
        """Mark every history term irrelevant.

        Returns:
            A list of False, one per history term.

        """
        return [False] * len(history.terms)


class OracleClassifier(TermClassifier):
    """Relevant iff the term is in the gold rewrite but not in the original query.

    Args:
        source: Which rewrite is gold. `manual` falls back to the automatic
            rewrite when the turn has no manual one, and vice versa.

    """

    name = "oracle"

    def __init__(self, source: Literal["manual", "auto"] = "manual") -> None:
        """Initialize the oracle with its preferred rewrite source."""
        self.source = source

    def gold_rewrite(self, turn: Turn) -> str | None:
        """Return the rewrite used as gold for `turn`, if it has one."""
        if self.source == "manual":
            return turn.manual_rewrite or turn.auto_rewrite
        return turn.auto_rewrite or turn.manual_rewrite

    @override
    def classify(
        self,
        history: HistoryContext,
        query_terms: Sequence[str],
        turn: Turn | None = None,
    ) -> list[bool]:
        """Mark history terms that the gold rewrite adds to the query.

        Returns:
            One verdict per history term; all False without a gold rewrite.

        """
        gold = self.gold_rewrite(turn) if turn is not None else None
        if gold is None:
            return [False] * len(history.terms)
        added = set(tokenize(gold)) - set(query_terms)
        return [term in added for term in history.terms]


class HeuristicClassifier(TermClassifier):
    """Relevant iff not a stopword, not in the query, and idf >= `min_idf`.

    Args:
        index: Corpus index providing document frequencies.
        min_idf: Minimum idf of a relevant term. Defaults to the idf of a term
            occurring in `max_df_ratio` of the passages.
        max_df_ratio: Document-frequency ratio defining the default `min_idf`.
        stopwords: Terms never considered relevant.

    """

    name = "heuristic"

    def __init__(
        self,
        index: InvertedIndex,
        min_idf: float | None = None,
        max_df_ratio: float = 0.1,
        stopwords: frozenset[str] = STOPWORDS,
    ) -> None:
        """Initialize the heuristic from corpus statistics."""
        self.index = index
        self.stopwords = stopwords
        if min_idf is None:
            min_idf = bm25_idf(max_df_ratio * index.total_docs, index.total_docs)
        self.min_idf = min_idf

    def idf(self, term: str) -> float:
        """Return the corpus idf of a term."""
        return bm25_idf(self.index.document_frequency(term), self.index.total_docs)

    @override
    def classify(
        self,
        history: HistoryContext,
        query_terms: Sequence[str],
        turn: Turn | None = None,
    ) -> list[bool]:
        """Mark rare, non-stopword history terms missing from the query.

        Returns:
            One verdict per history term.

        """
        in_query = set(query_terms)
        return [
            term not in self.stopwords
            and term not in in_query
            and self.idf(term) >= self.min_idf
            for term in history.terms
        ]
