"""End-to-end conversational passage retrieval pipeline."""

from __future__ import annotations

import time
from contextlib import contextmanager
from typing import TYPE_CHECKING

from .classifiers import HeuristicClassifier, NullClassifier, OracleClassifier
from .configuration import Configuration
from .exceptions import CastkitError, PipelineError
from .models import PipelineConfig, ResolverChoice
from .operations.analysis import ErrorAnalysisOperations
from .operations.conversation import ConversationOperations
from .operations.corpus import CorpusOperations
from .operations.evaluation import EvaluationOperations
from .operations.fusion import FusionOperations
from .operations.trec import TrecOperations
from .scorers import ScoreTable, TermOverlapScorer
from .utils.base_operations import BaseOperations

if TYPE_CHECKING:
    from collections.abc import Callable, Iterator, Sequence

    from .classifiers import TermClassifier
    from .models import (
        Conversation,
        InvertedIndex,
        Ranking,
        RCLogits,
        ResolvedQuery,
        Run,
        Turn,
    )


class Pipeline(BaseOperations):
    """The Pipeline class is the main entry point of castkit.

    It owns one instance of every operations class and runs the full
    resolve, search, re-rank and emit chain for a PipelineConfig.

    Example:
        ```python
        from castkit import Configuration, Pipeline
        pipeline = Pipeline(Configuration("experiment.yaml", preset="quretecQR"))
        run = pipeline.run()
        print(pipeline.trec.emit_run(run), end="")
        ```

    """

    def __init__(self, config: PipelineConfig | Configuration | None = None) -> None:
        """Initialize a new Pipeline instance.

        Args:
            config: The pipeline settings. A Configuration is unwrapped; None
                resolves a Configuration from `CASTKIT_CONFIG` or defaults.

        """
        if config is None:
            config = Configuration()
        if isinstance(config, Configuration):
            config = config.pipeline
        super().__init__(config.workers)
        self.config = config

        workers = config.workers
        self.corpus = CorpusOperations(workers)
        self.conversation = ConversationOperations(workers)
        self.trec = TrecOperations()
        self.evaluation = EvaluationOperations()
        self.fusion = FusionOperations(workers, self.evaluation)
        self.analysis = ErrorAnalysisOperations(workers)

    def run(self) -> Run:
        """Produce the run described by the configuration.

        Every turn is resolved, searched with BM25 to `depth`, optionally
        re-ranked, and cut to `cutoff`. Queries appear in conversation then
        turn order whatever the worker count.

        Returns:
            The run, keyed by `<conversation_id>_<turn_number>`.

        Raises:
            PipelineError: If any stage fails; carries the stage and the qid.

        """
        config = self.config
        started = time.perf_counter()
        index = self.load_index()
        conversations = self.load_conversations()
        with self._stage("resolve") as counts:
            resolved = self.resolve_all(conversations, index)
            counts["queries"] = len(resolved)
        with self._stage("search") as counts:
            rankings = self.retrieve(resolved, index)
            counts["candidates"] = sum(len(r) for r in rankings.values())
        if config.rerank:
            with self._stage("rerank") as counts:
                rankings = self.rerank(resolved, rankings, index)
                counts["candidates"] = sum(len(r) for r in rankings.values())
        else:
            rankings = {
                qid: ranking[: config.cutoff] for qid, ranking in rankings.items()
            }

        run = self.trec.to_run(rankings, config.tag)
        self._logger.info(
            "pipeline produced %d queries in %.3fs",
            len(run),
            time.perf_counter() - started,
        )
        return run

    def load_index(self) -> InvertedIndex:
        """Load the index snapshot, or build the index from the corpus.

        Raises:
            PipelineError: If neither an index nor a corpus is configured.

        """
        with self._stage("index") as counts:
            if self.config.index_path is not None:
                index = self.corpus.load_index(self.config.index_path)
            elif self.config.corpus_path is not None:
                index = self.corpus.build_index(
                    self.corpus.read_corpus(self.config.corpus_path)
                )
            else:
                raise PipelineError("no corpus_path or index_path configured", "index")
            counts["passages"] = index.total_docs
        return index

    def load_conversations(self) -> list[Conversation]:
        """Read the configured conversation file.

        Raises:
            PipelineError: If no conversation file is configured.

        """
        with self._stage("conversations") as counts:
            if self.config.conversations_path is None:
                raise PipelineError("no conversations_path configured", "conversations")
            conversations = self.conversation.read_conversations(
                self.config.conversations_path
            )
            counts["conversations"] = len(conversations)
        return conversations

    def make_classifier(self, index: InvertedIndex) -> TermClassifier:
        """Return the term classifier of the configured resolver."""
        match self.config.resolver:
            case ResolverChoice.ORACLE:
                return OracleClassifier(self.config.oracle_source)
            case ResolverChoice.HEURISTIC:
                return HeuristicClassifier(index, self.config.heuristic_min_idf)
            case _:
                return NullClassifier()

    def resolve_all(
        self, conversations: Sequence[Conversation], index: InvertedIndex
    ) -> list[ResolvedQuery]:
        """Resolve every turn of every conversation.

        Returns:
            Resolved queries in conversation then turn order.

        """
        resolve = self._resolver(index)
        items = [
            (conversation, turn)
            for conversation, turn in self.conversation.iter_turns(conversations)
        ]

        def resolve_item(item: tuple[Conversation, Turn]) -> ResolvedQuery:
            conversation, turn = item
            qid = conversation.qid(turn.turn_number)
            with self._query_context("resolve", qid):
                return resolve(conversation, turn, qid)

        return self._map_ordered(resolve_item, items)

    def retrieve(
        self, resolved: Sequence[ResolvedQuery], index: InvertedIndex
    ) -> dict[str, Ranking]:
        """Search every resolved query with BM25 to the configured depth."""

        def search(query: ResolvedQuery) -> Ranking:
            with self._query_context("search", query.qid):
                return self.corpus.search(
                    index, query.terms, self.config.bm25, self.config.depth
                )

        rankings = self._map_ordered(search, resolved)
        return {
            str(query.qid): ranking
            for query, ranking in zip(resolved, rankings, strict=True)
        }

    def score_tables(
        self,
        resolved: Sequence[ResolvedQuery],
        rankings: dict[str, Ranking],
        index: InvertedIndex,
    ) -> tuple[ScoreTable[float], ScoreTable[RCLogits]]:
        """Load the configured score files, or score with term overlap.

        A stream without a score file is filled by the built-in scorer.

        """
        queries = {str(query.qid): query.terms for query in resolved}
        scorer = TermOverlapScorer(index)
        if self.config.rerank_scores_path is not None:
            rerank_scores = self.fusion.read_score_table(self.config.rerank_scores_path)
        else:
            rerank_scores = scorer.score_table(queries, rankings)
        if self.config.rc_logits_path is not None:
            rc_scores = self.fusion.read_rc_logits(self.config.rc_logits_path)
        else:
            rc_scores = scorer.logits_table(queries, rankings)
        return rerank_scores, rc_scores

    def rerank(
        self,
        resolved: Sequence[ResolvedQuery],
        rankings: dict[str, Ranking],
        index: InvertedIndex,
    ) -> dict[str, Ranking]:
        """Re-rank the BM25 candidates with the configured fusion settings."""
        rerank_scores, rc_scores = self.score_tables(resolved, rankings, index)
        try:
            return self.fusion.rerank(
                rankings,
                rerank_scores,
                rc_scores,
                self.config.fusion,
                self.config.cutoff,
                self.config.missing_score,
            )
        except CastkitError as e:
            qid = getattr(e, "qid", None)
            raise PipelineError(str(e), "rerank", qid) from e

    def _resolver(
        self, index: InvertedIndex
    ) -> Callable[[Conversation, Turn, str], ResolvedQuery]:
        choice = self.config.resolver
        if choice == ResolverChoice.REWRITE_FILE:
            if self.config.rewrites_path is None:
                raise PipelineError("resolver needs rewrites_path", "resolve")
            rewrites = self.conversation.read_rewrites(self.config.rewrites_path)
            return lambda _, turn, qid: self._substitute(turn, rewrites.get(qid), qid)
        if choice == ResolverChoice.MANUAL:
            return lambda _, turn, qid: self._substitute(turn, turn.manual_rewrite, qid)
        if choice == ResolverChoice.AUTOMATIC:
            return lambda _, turn, qid: self._substitute(turn, turn.auto_rewrite, qid)

        classifier = self.make_classifier(index)

        def resolve(conversation: Conversation, turn: Turn, qid: str) -> ResolvedQuery:
            history = self.conversation.build_history(conversation, turn.turn_number)
            return self.conversation.resolve_query(turn, history, classifier, qid)

        return resolve

    def _substitute(self, turn: Turn, rewrite: str | None, qid: str) -> ResolvedQuery:
        if rewrite is None:
            self._logger.warning(
                "no %s rewrite for %s, using the raw query", self.config.resolver, qid
            )
            rewrite = turn.raw_query
        return self.conversation.substitute_rewrite(rewrite, qid)

    @contextmanager
    def _stage(self, stage: str) -> Iterator[dict[str, int]]:
        """Time a stage, log its counts and tag failures with the stage name."""
        counts: dict[str, int] = {}
        started = time.perf_counter()
        try:
            yield counts
        except PipelineError:
            raise
        except (CastkitError, OSError, ValueError) as e:
            raise PipelineError(str(e), stage) from e
        details = " ".join(f"{name}={value}" for name, value in counts.items())
        self._logger.info(
            "stage %s done in %.3fs %s", stage, time.perf_counter() - started, details
        )

    @contextmanager
    def _query_context(self, stage: str, qid: str | None) -> Iterator[None]:
        try:
            yield
        except PipelineError:
            raise
        except (CastkitError, ValueError) as e:
            raise PipelineError(str(e), stage, qid) from e


def run_pipeline(config: PipelineConfig | Configuration) -> str:
    """Run the pipeline and return the TREC run text.

    Args:
        config: The pipeline settings.

    Returns:
        The run in canonical TREC form.

    """
    pipeline = Pipeline(config)
    return pipeline.trec.emit_run(pipeline.run())
