"""Tests for the ranking metrics."""

import math
import random

import pytest

from castkit import EvaluationError, MetricId, Qrels
from castkit.models import GainFunction
from tests import oracles


POOL = [f"p{i}" for i in range(80)]


def _qrels(**grades: dict[str, int]) -> Qrels:
    return Qrels(judgments=grades)


def _random_instance(rng: random.Random) -> tuple[list[str], dict[str, int]]:
    """Draw a run of up to 50 passages and up to 10 relevant judgments."""
    judged = rng.sample(POOL, rng.randint(1, 20))
    relevant = rng.randint(0, min(10, len(judged)))
    grades = {
        pid: rng.randint(1, 4) if position < relevant else 0
        for position, pid in enumerate(judged)
    }
    ranking = rng.sample(POOL, rng.randint(0, 50))
    return ranking, grades


class TestMetricId:
    """Test cases for metric id parsing."""

    @pytest.mark.parametrize(
        ("text", "canonical"),
        [
            ("ndcg@3", "ndcg@3"),
            ("NDCG@10", "ndcg@10"),
            ("map", "map"),
            (" mrr ", "mrr"),
        ],
    )
    def test_parse(self, text, canonical):
        """Test supported ids parse to their canonical form."""
        assert str(MetricId.parse(text)) == canonical

    @pytest.mark.parametrize("text", ["ndcg", "map@5", "p@10", "recall@x", "ndcg@0"])
    def test_invalid(self, evaluation_ops, text):
        """Test unsupported ids raise EvaluationError."""
        with pytest.raises(EvaluationError):
            evaluation_ops.parse_metric(text)


class TestMetrics:
    """Test cases for the single-query metrics."""

    def test_ndcg_hand_computed(self, evaluation_ops):
        """Test NDCG@3 of grades (0, 2, 1) against the ideal (2, 1)."""
        qrels = _qrels(q={"a": 2, "b": 1, "c": 0})
        value = evaluation_ops.ndcg_at_k(["c", "a", "b"], qrels, "q", 3)
        dcg = 2 / math.log2(3) + 1 / math.log2(4)
        idcg = 2 + 1 / math.log2(3)
        assert value == pytest.approx(dcg / idcg)

    def test_ndcg_exponential_gain(self, evaluation_ops):
        """Test the 2^grade - 1 gain."""
        qrels = _qrels(q={"a": 2, "b": 1})
        value = evaluation_ops.ndcg_at_k(
            ["b", "a"], qrels, "q", 2, GainFunction.EXPONENTIAL
        )
        assert value == pytest.approx((1 + 3 / math.log2(3)) / (3 + 1 / math.log2(3)))

    def test_ndcg_ideal_uses_unretrieved_judgments(self, evaluation_ops):
        """Test relevant passages missing from the ranking lower NDCG."""
        qrels = _qrels(q={"a": 1, "b": 1})
        assert evaluation_ops.ndcg_at_k(["a"], qrels, "q", 3) < 1.0

    def test_ndcg_perfect_and_empty(self, evaluation_ops):
        """Test the perfect ranking scores 1 and an empty one 0."""
        qrels = _qrels(q={"a": 2, "b": 1})
        assert evaluation_ops.ndcg_at_k(["a", "b"], qrels, "q", 3) == pytest.approx(1)
        assert evaluation_ops.ndcg_at_k([], qrels, "q", 3) == 0.0

    def test_average_precision(self, evaluation_ops):
        """Test AP divides by every relevant judgment, retrieved or not."""
        qrels = _qrels(q={"a": 1, "b": 1, "c": 1, "d": 1})
        value = evaluation_ops.average_precision(["a", "x", "b"], qrels, "q")
        assert value == pytest.approx((1 + 2 / 3) / 4)

    def test_average_precision_half(self, evaluation_ops):
        """Test AP of one relevant passage at rank 2."""
        qrels = _qrels(q={"a": 1})
        assert evaluation_ops.average_precision(["x", "a"], qrels, "q") == 0.5

    def test_reciprocal_rank(self, evaluation_ops):
        """Test RR of the first relevant passage and of a miss."""
        qrels = _qrels(q={"b": 1})
        assert evaluation_ops.reciprocal_rank(["a", "c", "b"], qrels, "q") == 1 / 3
        assert evaluation_ops.reciprocal_rank(["a"], qrels, "q") == 0.0

    def test_recall(self, evaluation_ops):
        """Test recall counts relevant passages in the top k."""
        qrels = _qrels(q={"a": 1, "b": 2, "c": 0})
        assert evaluation_ops.recall_at_k(["a", "x", "b"], qrels, "q", 2) == 0.5
        assert evaluation_ops.recall_at_k(["a", "x", "b"], qrels, "q", 3) == 1.0

    def test_binarize_at(self, evaluation_ops):
        """Test raising the relevance floor drops grade 1 passages."""
        qrels = _qrels(q={"a": 1, "b": 2})
        assert evaluation_ops.reciprocal_rank(["a", "b"], qrels, "q", 2) == 0.5
        assert evaluation_ops.average_precision(["a"], qrels, "q", 3) is None

    @pytest.mark.parametrize("metric", ["ndcg@3", "map", "mrr", "recall@100"])
    def test_undefined_without_relevant(self, evaluation_ops, metric):
        """Test every metric is None for a query with only grade 0."""
        qrels = _qrels(q={"a": 0})
        assert evaluation_ops.compute(metric, ["a"], qrels, "q") is None

    def test_cutoff_validation(self, evaluation_ops):
        """Test k must be positive."""
        with pytest.raises(ValueError, match="k must be >= 1"):
            evaluation_ops.ndcg_at_k(["a"], _qrels(q={"a": 1}), "q", 0)

    @pytest.mark.slow
    def test_random_instances_match_oracle(self, evaluation_ops):
        """Test all metrics against brute-force definitions."""
        rng = random.Random(11)
        for _ in range(1000):
            ranking, grades = _random_instance(rng)
            qrels = _qrels(q=grades)
            k = rng.randint(1, 50)
            ops = evaluation_ops
            pairs = [
                (
                    ops.ndcg_at_k(ranking, qrels, "q", k),
                    oracles.ndcg(ranking, grades, k),
                ),
                (
                    ops.average_precision(ranking, qrels, "q"),
                    oracles.average_precision(ranking, grades),
                ),
                (
                    ops.reciprocal_rank(ranking, qrels, "q"),
                    oracles.reciprocal_rank(ranking, grades),
                ),
                (
                    ops.recall_at_k(ranking, qrels, "q", k),
                    oracles.recall(ranking, grades, k),
                ),
            ]
            for got, want in pairs:
                if want is None:
                    assert got is None
                else:
                    assert abs(got - want) <= 1e-9
                    assert 0.0 <= got <= 1.0 + 1e-12


class TestMetricProperties:
    """Test cases for invariants of the ranking metrics."""

    def test_renaming_pids(self, evaluation_ops):
        """Test metrics are unchanged when pids are renamed in run and qrels."""
        rng = random.Random(3)
        for _ in range(200):
            ranking, grades = _random_instance(rng)
            names = list(POOL)
            rng.shuffle(names)
            rename = dict(zip(POOL, (f"x{name}" for name in names), strict=True))
            renamed = _qrels(q={rename[pid]: g for pid, g in grades.items()})
            moved = [rename[pid] for pid in ranking]
            for metric in ("ndcg@3", "ndcg@10", "map", "mrr", "recall@20"):
                before = evaluation_ops.compute(metric, ranking, _qrels(q=grades), "q")
                after = evaluation_ops.compute(metric, moved, renamed, "q")
                if before is None:
                    assert after is None
                else:
                    assert abs(after - before) <= 1e-12

    def test_promoting_better_passage(self, evaluation_ops):
        """Test swapping a higher-graded passage upward never lowers NDCG@k."""
        rng = random.Random(17)
        checked = 0
        while checked < 300:
            ranking, grades = _random_instance(rng)
            if len(ranking) < 2:
                continue
            upper, lower = sorted(rng.sample(range(len(ranking)), 2))
            if grades.get(ranking[lower], 0) <= grades.get(ranking[upper], 0):
                continue
            swapped = list(ranking)
            swapped[upper], swapped[lower] = swapped[lower], swapped[upper]
            qrels = _qrels(q=grades)
            k = rng.randint(1, 50)
            before = evaluation_ops.ndcg_at_k(ranking, qrels, "q", k)
            after = evaluation_ops.ndcg_at_k(swapped, qrels, "q", k)
            assert after >= before - 1e-12
            checked += 1

    def test_truncating_below_cutoff(self, evaluation_ops):
        """Test cutting a run below rank k keeps NDCG@k and Recall@k."""
        rng = random.Random(19)
        for _ in range(300):
            ranking, grades = _random_instance(rng)
            qrels = _qrels(q=grades)
            k = rng.randint(1, 50)
            cut = ranking[: rng.randint(k, max(k, len(ranking)))]
            assert evaluation_ops.ndcg_at_k(cut, qrels, "q", k) == (
                evaluation_ops.ndcg_at_k(ranking, qrels, "q", k)
            )
            assert evaluation_ops.recall_at_k(cut, qrels, "q", k) == (
                evaluation_ops.recall_at_k(ranking, qrels, "q", k)
            )


class TestEvaluateRankings:
    """Test cases for run-level evaluation."""

    def test_mean_over_queries(self, evaluation_ops):
        """Test the mean of recall@2 over two queries."""
        qrels = _qrels(q1={"a": 1, "b": 1}, q2={"c": 1})
        report = evaluation_ops.evaluate_rankings(
            {"q1": ["a", "x"], "q2": ["c"]}, qrels, ["recall@2"]
        )
        assert report.per_query == {"q1": {"recall@2": 0.5}, "q2": {"recall@2": 1.0}}
        assert report.means == {"recall@2": 0.75}
        assert report.evaluated_query_count == 2

    def test_missing_and_extra_queries(self, evaluation_ops):
        """Test judged queries missing from the run score 0 and extras are ignored."""
        qrels = _qrels(q1={"a": 1}, q2={"b": 1}, q3={"c": 0})
        report = evaluation_ops.evaluate_rankings(
            {"q1": ["a"], "extra": ["a"]}, qrels, ["mrr"]
        )
        assert report.per_query == {"q1": {"mrr": 1.0}, "q2": {"mrr": 0.0}}
        assert report.means == {"mrr": 0.5}
        assert report.skipped_qids == ("q3",)

    def test_no_shared_queries(self, evaluation_ops):
        """Test disjoint run and qrels raise EvaluationError."""
        with pytest.raises(EvaluationError, match="no query in common"):
            evaluation_ops.evaluate_rankings({"x": ["a"]}, _qrels(q={"a": 1}))

    def test_empty_qrels(self, evaluation_ops):
        """Test empty qrels raise EvaluationError."""
        with pytest.raises(EvaluationError, match="qrels are empty"):
            evaluation_ops.evaluate_rankings({"q": ["a"]}, Qrels())

    def test_evaluate_run_and_report(self, evaluation_ops, trec_ops):
        """Test evaluating a parsed run and rendering the report."""
        run = trec_ops.parse_run("q Q0 a 1 2 t\nq Q0 b 2 1 t\n")
        report = evaluation_ops.evaluate_run(
            run, _qrels(q={"b": 1}), ["ndcg@3", "map"]
        )
        assert report.means["map"] == 0.5
        assert evaluation_ops.emit_report(report) == (
            "metric\tqid\tvalue\n"
            "ndcg@3\tq\t0.6309\n"
            "map\tq\t0.5000\n"
            "ndcg@3\tall\t0.6309\n"
            "map\tall\t0.5000\n"
        )
