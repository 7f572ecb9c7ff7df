"""trec_eval-style ranking metrics over runs and qrels."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from ..exceptions import EvaluationError
from ..models import GainFunction, MetricId, MetricName, MetricReport
from ..utils.base_operations import BaseOperations

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence

    from ..models import Qrels, Run

type MetricSpec = str | MetricId

DEFAULT_METRICS: tuple[str, ...] = ("ndcg@3", "map", "mrr", "recall@100")


def _discounts(length: int) -> np.ndarray:
    """Return 1 / log2(i + 1) for ranks i = 1..length."""
    return 1.0 / np.log2(np.arange(2, length + 2, dtype=np.float64))


def _gains(grades: Sequence[int], gain: GainFunction) -> np.ndarray:
    values = np.asarray(grades, dtype=np.float64)
    if gain == GainFunction.EXPONENTIAL:
        return np.exp2(values) - 1.0
    return values


class EvaluationOperations(BaseOperations):
    """Compute NDCG@k, MAP, MRR and Recall@k.

    A metric is undefined (None) for a query without relevant judgments. NDCG
    counts any grade > 0 as relevant; the binary metrics use grade >=
    `binarize_at`.

    Note:
        This class is already initialized via the pipeline and usable as
        `pipeline.evaluation.method`

    """

    def ndcg_at_k(
        self,
        ranking: Sequence[str],
        qrels: Qrels,
        qid: str,
        k: int,
        gain: GainFunction = GainFunction.LINEAR,
    ) -> float | None:
        """Return NDCG@k of a ranked pid list.

        The ideal DCG comes from every judgment of the query, not only the
        retrieved ones.

        Args:
            ranking: Passage ids, best first.
            qrels: Relevance judgments.
            qid: The query id.
            k: Rank cutoff.
            gain: `linear` (grade) or `exponential` (2^grade - 1).

        Returns:
            The NDCG value, or None if the query has no grade > 0.

        Raises:
            ValueError: If k is smaller than 1.

        Example:
            ```python
            ops.ndcg_at_k(["d1", "d2"], Qrels(judgments={"q": {"d1": 1}}), "q", 3)
            # Returns: 1.0
            ```

        """
        self._validate_positive(k, "k")
        judged = qrels.for_query(qid)
        ideal = sorted((g for g in judged.values() if g > 0), reverse=True)[:k]
        if not ideal:
            return None
        top = [qrels.grade(qid, pid) for pid in ranking[:k]]
        dcg = float(_gains(top, gain) @ _discounts(len(top)))
        idcg = float(_gains(ideal, gain) @ _discounts(len(ideal)))
        return dcg / idcg

    def average_precision(
        self, ranking: Sequence[str], qrels: Qrels, qid: str, binarize_at: int = 1
    ) -> float | None:
        """Return the average precision of the full ranking.

        The denominator is the number of relevant judgments, retrieved or not.

        Returns:
            AP, or None if the query has no relevant judgment.

        """
        relevant = self._relevant(qrels, qid, binarize_at)
        if not relevant:
            return None
        hits = 0
        total = 0.0
        for rank, pid in enumerate(ranking, start=1):
            if pid in relevant:
                hits += 1
                total += hits / rank
        return total / len(relevant)

    def reciprocal_rank(
        self, ranking: Sequence[str], qrels: Qrels, qid: str, binarize_at: int = 1
    ) -> float | None:
        """Return 1 / rank of the first relevant passage, 0 if none is retrieved.

        Returns:
            RR, or None if the query has no relevant judgment.

        """
        relevant = self._relevant(qrels, qid, binarize_at)
        if not relevant:
            return None
        for rank, pid in enumerate(ranking, start=1):
            if pid in relevant:
                return 1.0 / rank
        return 0.0

    def recall_at_k(
        self,
        ranking: Sequence[str],
        qrels: Qrels,
        qid: str,
        k: int,
        binarize_at: int = 1,
    ) -> float | None:
        """Return the share of relevant passages found in the top k.

        Returns:
            Recall@k, or None if the query has no relevant judgment.

        Raises:
            ValueError: If k is smaller than 1.

        """
        self._validate_positive(k, "k")
        relevant = self._relevant(qrels, qid, binarize_at)
        if not relevant:
            return None
        return len(relevant.intersection(ranking[:k])) / len(relevant)

    def compute(
        self,
        metric: MetricSpec,
        ranking: Sequence[str],
        qrels: Qrels,
        qid: str,
        gain: GainFunction = GainFunction.LINEAR,
        binarize_at: int = 1,
    ) -> float | None:
        """Compute one metric given by id, e.g. `ndcg@3` or `map`.

        Returns:
            The metric value, or None when undefined for the query.

        """
        metric = self.parse_metric(metric)
        match metric.name:
            case MetricName.NDCG:
                return self.ndcg_at_k(ranking, qrels, qid, metric.k or 1, gain)
            case MetricName.MAP:
                return self.average_precision(ranking, qrels, qid, binarize_at)
            case MetricName.MRR:
                return self.reciprocal_rank(ranking, qrels, qid, binarize_at)
            case _:
                return self.recall_at_k(
                    ranking, qrels, qid, metric.k or 1, binarize_at
                )

    def evaluate_rankings(
        self,
        rankings: Mapping[str, Sequence[str]],
        qrels: Qrels,
        metrics: Iterable[MetricSpec] = DEFAULT_METRICS,
        gain: GainFunction = GainFunction.LINEAR,
        binarize_at: int = 1,
    ) -> MetricReport:
        """Evaluate ranked pid lists keyed by qid.

        Queries only in the rankings are ignored. Judged queries missing from
        the rankings score 0 on every defined metric. Means are taken over the
        queries where the metric is defined.

        Args:
            rankings: Passage ids, best first, keyed by qid.
            qrels: Relevance judgments.
            metrics: Metric ids to compute.
            gain: NDCG gain function.
            binarize_at: Minimum grade counted relevant by MAP, MRR and recall.

        Returns:
            The per-query and mean report.

        Raises:
            EvaluationError: If the qrels are empty, a metric id is invalid, or
                rankings and qrels share no query.

        """
        if len(qrels) == 0:
            raise EvaluationError("qrels are empty")
        metric_ids = [self.parse_metric(metric) for metric in metrics]
        shared = [qid for qid in qrels.qids() if qid in rankings]
        if not shared:
            raise EvaluationError("run and qrels have no query in common")

        per_query: dict[str, dict[str, float]] = {}
        skipped: list[str] = []
        for qid in qrels.qids():
            ranking = rankings.get(qid, ())
            values = {
                str(metric): self.compute(
                    metric, ranking, qrels, qid, gain, binarize_at
                )
                for metric in metric_ids
            }
            defined = {name: v for name, v in values.items() if v is not None}
            if defined:
                per_query[qid] = defined
            else:
                skipped.append(qid)

        means: dict[str, float] = {}
        for metric in metric_ids:
            name = str(metric)
            column = [v[name] for v in per_query.values() if name in v]
            if column:
                means[name] = float(np.mean(column))
        if skipped:
            self._logger.info(
                "%d queries have no relevant judgments and were skipped", len(skipped)
            )
        return MetricReport(
            per_query=per_query,
            means=means,
            evaluated_query_count=len(per_query),
            skipped_qids=tuple(skipped),
        )

    def evaluate_run(
        self,
        run: Run,
        qrels: Qrels,
        metrics: Iterable[MetricSpec] = DEFAULT_METRICS,
        gain: GainFunction = GainFunction.LINEAR,
        binarize_at: int = 1,
    ) -> MetricReport:
        """Evaluate a parsed run; see `evaluate_rankings`.

        Example:
            ```python
            report = pipeline.evaluation.evaluate_run(run, qrels, ["ndcg@3"])
            report.means
            # Returns: {'ndcg@3': 0.75}
            ```

        """
        rankings = {qid: [e.pid for e in entries] for qid, entries in run.items()}
        return self.evaluate_rankings(rankings, qrels, metrics, gain, binarize_at)

    def emit_report(self, report: MetricReport) -> str:
        """Render a report as `metric<TAB>qid<TAB>value` lines plus `all` means.

        Returns:
            The TSV text with a header line.

        """
        lines = ["metric\tqid\tvalue\n"]
        for qid, values in report.per_query.items():
            lines.extend(
                f"{name}\t{qid}\t{value:.4f}\n" for name, value in values.items()
            )
        lines.extend(
            f"{name}\tall\t{value:.4f}\n" for name, value in report.means.items()
        )
        return "".join(lines)

    def _relevant(self, qrels: Qrels, qid: str, binarize_at: int) -> set[str]:
        return {
            pid for pid, grade in qrels.for_query(qid).items() if grade >= binarize_at
        }

    def parse_metric(self, metric: MetricSpec) -> MetricId:
        """Parse a metric id, raising EvaluationError when it is invalid."""
        if isinstance(metric, MetricId):
            return metric
        try:
            return MetricId.parse(metric)
        except ValueError as e:
            raise EvaluationError(str(e)) from e
