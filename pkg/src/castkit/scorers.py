"""Score tables and the built-in deterministic passage scorer."""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from typing import TYPE_CHECKING, override

from .models import RCLogits

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .models import InvertedIndex, Ranking


class ScoreTable[T](Mapping[tuple[str, str], T]):
    """Immutable mapping (qid, pid) -> score.

    `lookup` returns None for absent pairs, so a missing score is never
    confused with a present score of 0.
    """

    def __init__(self, scores: Mapping[tuple[str, str], T] | None = None) -> None:
        """Initialize the table from a (qid, pid) keyed mapping."""
        self._scores: dict[tuple[str, str], T] = dict(scores or {})

    @override
    def __getitem__(self, key: tuple[str, str]) -> T:
        return self._scores[key]

    @override
    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(self._scores)

    @override
    def __len__(self) -> int:
        return len(self._scores)

    def lookup(self, qid: str, pid: str) -> T | None:
        """Return the score of (qid, pid), or None when absent."""
        return self._scores.get((qid, pid))

    def for_query(self, qid: str) -> dict[str, T]:
        """Return the scores of one query keyed by pid."""
        return {pid: score for (q, pid), score in self._scores.items() if q == qid}


class TermOverlapScorer:
    """Score a passage by the number of distinct query terms it contains.

    Stands in for the neural re-ranker and reading comprehension model so that
    the full pipeline runs without external score files.
    """

    def __init__(self, index: InvertedIndex) -> None:
        """Initialize the scorer over an index."""
        self.index = index

    def score(self, query_terms: Sequence[str], pid: str) -> float:
        """Return the count of distinct query terms occurring in passage `pid`."""
        present = [
            term
            for term in dict.fromkeys(query_terms)
            if self.index.term_frequency(term, pid)
        ]
        return float(len(present))

    def score_table(
        self,
        queries: Mapping[str, Sequence[str]],
        rankings: Mapping[str, Ranking],
    ) -> ScoreTable[float]:
        """Score every candidate of every query.

        Args:
            queries: Tokenized queries keyed by qid.
            rankings: Candidate lists keyed by qid.

        Returns:
            The re-ranking score table.

        """
        return ScoreTable({
            (qid, pid): self.score(queries[qid], pid)
            for qid, ranking in rankings.items()
            for pid, _ in ranking
        })

    def logits_table(
        self,
        queries: Mapping[str, Sequence[str]],
        rankings: Mapping[str, Ranking],
    ) -> ScoreTable[RCLogits]:
        """Express the overlap score as span logits (start = score, end = 0).

        Args:
            queries: Tokenized queries keyed by qid.
            rankings: Candidate lists keyed by qid.

        Returns:
            The reading comprehension logits table.

        """
        scores = self.score_table(queries, rankings)
        return ScoreTable({
            key: RCLogits(start_logit=score, end_logit=0.0)
            for key, score in scores.items()
        })
