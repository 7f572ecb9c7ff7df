"""Re-ranking by interpolating re-ranker and reading comprehension scores."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ..exceptions import EvaluationError, MissingScoreError, ParseError
from ..models import (
    FusionConfig,
    GainFunction,
    MissingScorePolicy,
    RCLogits,
    TuningResult,
)
from ..scorers import ScoreTable
from ..utils.base_operations import BaseOperations
from .evaluation import EvaluationOperations
from .mixins.scores_transform import ScoresTransformMixin

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from ..models import Qrels, Ranking
    from .evaluation import MetricSpec


def default_weight_grid() -> list[float]:
    """Return 0.0, 0.05, ..., 1.0."""
    return np.round(np.linspace(0.0, 1.0, 21), 2).tolist()


@dataclass(frozen=True, slots=True)
class _Candidate:
    pid: str
    rerank: float
    rc: float


def _min_max(values: Sequence[float]) -> list[float]:
    """Scale to [0, 1]; a constant stream maps to 0."""
    array = np.asarray(values, dtype=np.float64)
    if array.size == 0:
        return []
    low, high = float(array.min()), float(array.max())
    if high == low:
        return [0.0] * array.size
    return ((array - low) / (high - low)).tolist()


class FusionOperations(BaseOperations, ScoresTransformMixin):
    """Fuse re-ranker and reading comprehension scores over BM25 candidates.

    The fused score is `w * rerank + (1 - w) * rc` where `rc` is the sum of
    the start and end span logits.

    Note:
        This class is already initialized via the pipeline and usable as
        `pipeline.fusion.method`

    """

    def __init__(
        self, workers: int = 1, evaluation: EvaluationOperations | None = None
    ) -> None:
        """Initialize fusion operations.

        Args:
            workers: Number of threads used for per-query re-ranking.
            evaluation: Metric operations used by `tune_weight`.

        """
        super().__init__(workers)
        self._evaluation = evaluation or EvaluationOperations()

    def rc_score(self, logits: RCLogits) -> float:
        """Return the reading comprehension score `start_logit + end_logit`."""
        return logits.start_logit + logits.end_logit

    def fuse(self, rerank: float, rc: float, config: FusionConfig) -> float:
        """Interpolate a re-ranker score with a reading comprehension score.

        Args:
            rerank: Re-ranker score.
            rc: Reading comprehension score.
            config: Holds the weight `w` of the re-ranker score.

        Returns:
            `w * rerank + (1 - w) * rc`

        """
        return config.weight * rerank + (1.0 - config.weight) * rc

    def rerank(
        self,
        initial: Mapping[str, Ranking],
        rerank_scores: ScoreTable[float],
        rc_scores: ScoreTable[RCLogits],
        config: FusionConfig | None = None,
        cutoff: int = 100,
        missing: MissingScorePolicy = MissingScorePolicy.STRICT,
    ) -> dict[str, Ranking]:
        """Re-rank every query's candidates by fused score.

        Only passages of the initial list are candidates. Results are sorted
        by fused score descending, ties by pid ascending, and cut at `cutoff`.

        Args:
            initial: Initial (pid, score) lists keyed by qid.
            rerank_scores: Re-ranker scores.
            rc_scores: Reading comprehension logits.
            config: Weight and normalization (defaults to w = 0.5, raw scores).
            cutoff: Maximum number of passages kept per query.
            missing: `strict` raises on a missing score, `min` substitutes the
                per-query minimum of that score stream.

        Returns:
            The re-ranked (pid, fused score) lists, in the order of `initial`.

        Raises:
            MissingScoreError: If a candidate has no score under `strict`, or
                no candidate of the query has one under `min`.
            ValueError: If cutoff is smaller than 1.

        """
        self._validate_positive(cutoff, "cutoff")
        config = config or FusionConfig()

        def rerank_query(qid: str) -> Ranking:
            candidates = self._candidates(
                qid, initial[qid], rerank_scores, rc_scores, missing, config.normalize
            )
            return self._fuse_candidates(candidates, config.weight, cutoff)

        qids = list(initial)
        reranked = self._map_ordered(rerank_query, qids)
        self._logger.info("re-ranked %d queries with w=%s", len(qids), config.weight)
        return dict(zip(qids, reranked, strict=True))

    def tune_weight(
        self,
        initial: Mapping[str, Ranking],
        rerank_scores: ScoreTable[float],
        rc_scores: ScoreTable[RCLogits],
        qrels: Qrels,
        metric: MetricSpec = "ndcg@3",
        grid: Sequence[float] | None = None,
        normalize: bool = False,
        cutoff: int = 100,
        missing: MissingScorePolicy = MissingScorePolicy.STRICT,
        gain: GainFunction = GainFunction.LINEAR,
    ) -> TuningResult:
        """Pick the interpolation weight maximizing a mean metric.

        Grid values are tried in ascending order and the best one is replaced
        only on a strict improvement, so ties go to the smallest weight.

        Args:
            initial: Development-set candidate lists keyed by qid.
            rerank_scores: Re-ranker scores.
            rc_scores: Reading comprehension logits.
            qrels: Development-set judgments.
            metric: Metric id to maximize.
            grid: Candidate weights in [0, 1]; defaults to 0.0, 0.05, ..., 1.0.
            normalize: Min-max normalize each score stream per query.
            cutoff: Maximum number of passages kept per query.
            missing: Missing-score policy, as for `rerank`.
            gain: NDCG gain function.

        Returns:
            The best weight, its score and the whole curve.

        Raises:
            EvaluationError: If the qrels are empty or the metric is undefined
                for every query.
            ValueError: If the grid is empty or holds a value outside [0, 1].

        Example:
            ```python
            result = pipeline.fusion.tune_weight(initial, rerank, rc, qrels)
            result.best_weight
            # Returns: 0.35
            ```

        """
        if len(qrels) == 0:
            raise EvaluationError("qrels are empty")
        weights = sorted(default_weight_grid() if grid is None else grid)
        if not weights:
            raise ValueError("grid must not be empty")
        for weight in weights:
            self._validate_unit_interval(weight, "grid value")

        candidates = {
            qid: self._candidates(
                qid, ranking, rerank_scores, rc_scores, missing, normalize
            )
            for qid, ranking in initial.items()
        }
        metric_name = str(self._evaluation.parse_metric(metric))

        curve: list[tuple[float, float]] = []
        best_weight, best_score = weights[0], -math.inf
        for weight in weights:
            rankings = {
                qid: [pid for pid, _ in self._fuse_candidates(items, weight, cutoff)]
                for qid, items in candidates.items()
            }
            report = self._evaluation.evaluate_rankings(
                rankings, qrels, [metric_name], gain
            )
            if metric_name not in report.means:
                raise EvaluationError(f"{metric_name} is undefined for every query")
            score = report.means[metric_name]
            curve.append((weight, score))
            if score > best_score:
                best_weight, best_score = weight, score
            self._logger.debug("w=%s %s=%.6f", weight, metric_name, score)

        self._logger.info("best w=%s (%s=%.4f)", best_weight, metric_name, best_score)
        return TuningResult(
            metric=metric_name,
            best_weight=best_weight,
            best_score=best_score,
            curve=tuple(curve),
        )

    def read_score_table(self, path: str | Path) -> ScoreTable[float]:
        """Read a `qid<TAB>pid<TAB>score` re-ranker score file.

        Raises:
            ParseError: If a line is malformed or a pair repeats.

        """
        scores: dict[tuple[str, str], float] = {}
        for line_number, line in self._score_lines(path):
            qid, pid, score = self._transform_score_line(line, line_number)
            self._store_score(scores, (qid, pid), score, line_number)
        return ScoreTable(scores)

    def read_rc_logits(self, path: str | Path) -> ScoreTable[RCLogits]:
        """Read a `qid<TAB>pid<TAB>start_logit<TAB>end_logit` file.

        Raises:
            ParseError: If a line is malformed or a pair repeats.

        """
        logits: dict[tuple[str, str], RCLogits] = {}
        for line_number, line in self._score_lines(path):
            qid, pid, value = self._transform_logits_line(line, line_number)
            self._store_score(logits, (qid, pid), value, line_number)
        return ScoreTable(logits)

    def _score_lines(self, path: str | Path) -> list[tuple[int, str]]:
        with Path(path).open(encoding="utf-8") as handle:
            lines = [
                (line_number, line.rstrip("\r\n"))
                for line_number, line in enumerate(handle, start=1)
                if line.strip()
            ]
        self._logger.info("read %d scores from %s", len(lines), path)
        return lines

    def _store_score[T](
        self,
        table: dict[tuple[str, str], T],
        key: tuple[str, str],
        value: T,
        line_number: int,
    ) -> None:
        if key in table:
            raise ParseError(f"duplicate score for ({key[0]}, {key[1]})", line_number)
        table[key] = value

    def _candidates(
        self,
        qid: str,
        ranking: Ranking,
        rerank_scores: ScoreTable[float],
        rc_scores: ScoreTable[RCLogits],
        missing: MissingScorePolicy,
        normalize: bool,
    ) -> list[_Candidate]:
        """Collect both score streams of a query's candidates."""
        pids = [pid for pid, _ in ranking]
        rerank = [rerank_scores.lookup(qid, pid) for pid in pids]
        rc = [
            None if logits is None else self.rc_score(logits)
            for logits in (rc_scores.lookup(qid, pid) for pid in pids)
        ]
        rerank_values = self._fill_missing(qid, pids, rerank, missing, "rerank score")
        rc_values = self._fill_missing(qid, pids, rc, missing, "rc logits")
        if normalize:
            rerank_values = _min_max(rerank_values)
            rc_values = _min_max(rc_values)
        return [
            _Candidate(pid, r, c)
            for pid, r, c in zip(pids, rerank_values, rc_values, strict=True)
        ]

    def _fill_missing(
        self,
        qid: str,
        pids: Sequence[str],
        values: Sequence[float | None],
        missing: MissingScorePolicy,
        table: str,
    ) -> list[float]:
        present = [v for v in values if v is not None]
        if len(present) == len(values):
            return list(present)
        first_missing = pids[values.index(None)]
        if missing == MissingScorePolicy.STRICT or not present:
            raise MissingScoreError(qid, first_missing, table)
        floor = min(present)
        self._logger.debug(
            "query %s: %d candidates lack a %s, using %s",
            qid,
            len(values) - len(present),
            table,
            floor,
        )
        return [floor if v is None else v for v in values]

    def _fuse_candidates(
        self, candidates: Sequence[_Candidate], weight: float, cutoff: int
    ) -> Ranking:
        config = FusionConfig(weight=weight)
        fused = (
            (c.pid, self.fuse(c.rerank, c.rc, config)) for c in candidates
        )
        return heapq.nsmallest(cutoff, fused, key=lambda item: (-item[1], item[0]))
