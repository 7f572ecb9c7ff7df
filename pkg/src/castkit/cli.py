"""Command-line interface: `castkit <subcommand> ...`."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING

from . import __version__
from .configuration import RUN_PRESETS, Configuration
from .exceptions import CastkitError
from .models import (
    AnalysisConfig,
    FusionConfig,
    GainFunction,
    InvertedIndex,
    MissingScorePolicy,
    ResolverChoice,
)
from .operations.analysis import ErrorAnalysisOperations
from .operations.corpus import CorpusOperations
from .operations.evaluation import DEFAULT_METRICS, EvaluationOperations
from .operations.fusion import FusionOperations
from .operations.trec import TrecOperations
from .pipeline import Pipeline

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from .models import AnalysisTable, Qrels

logger = logging.getLogger(__name__)

type Handler = Callable[[argparse.Namespace], int]


def _write(text: str, out: Path | None) -> None:
    """Write command output to a file (LF endings) or stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    logger.info("wrote %s", out)


def _load_index(args: argparse.Namespace, corpus: CorpusOperations) -> InvertedIndex:
    if args.index is not None:
        return corpus.load_index(args.index)
    if args.corpus is not None:
        return corpus.build_index(corpus.read_corpus(args.corpus))
    raise CastkitError("either --index or --corpus is required")


def _metric_values(
    args: argparse.Namespace, run_path: Path, qrels: Qrels, metric: str
) -> dict[str, float]:
    report = EvaluationOperations().evaluate_run(
        TrecOperations().read_run(run_path),
        qrels,
        [metric],
        GainFunction(args.gain),
        args.binarize_at,
    )
    return ErrorAnalysisOperations().values_from_report(report, metric)


# --------------------------------------------------------------------- handlers


def cmd_index(args: argparse.Namespace) -> int:
    """Build an index snapshot from a corpus file."""
    corpus = CorpusOperations()
    index = corpus.build_index(corpus.read_corpus(args.corpus, args.format))
    corpus.save_index(index, args.out)
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    """BM25 search for a `qid<TAB>text` query file."""
    pipeline = Pipeline(Configuration(workers=args.workers))
    index = _load_index(args, pipeline.corpus)
    queries = pipeline.conversation.read_queries(args.queries)
    params = pipeline.config.bm25.model_copy(
        update={k: v for k, v in (("k1", args.k1), ("b", args.b)) if v is not None}
    )
    corpus = pipeline.corpus
    rankings = {
        qid: corpus.search(index, corpus.tokenize(text), params, args.depth)
        for qid, text in queries.items()
    }
    _write(pipeline.trec.emit_run(pipeline.trec.to_run(rankings, args.tag)), args.out)
    return 0


def cmd_resolve(args: argparse.Namespace) -> int:
    """Resolve every turn of a conversation file and print `qid<TAB>query`."""
    config = Configuration(
        args.config,
        conversations_path=args.conversations,
        resolver=args.resolver,
        rewrites_path=args.rewrites,
        oracle_source=args.oracle_source,
        heuristic_min_idf=args.min_idf,
        corpus_path=args.corpus,
        index_path=args.index,
    )
    pipeline = Pipeline(config)
    if pipeline.config.resolver == ResolverChoice.HEURISTIC:
        index = pipeline.load_index()
    else:
        index = InvertedIndex()
    resolved = pipeline.resolve_all(pipeline.load_conversations(), index)
    _write(pipeline.conversation.emit_resolved(resolved), args.out)
    return 0


def cmd_rerank(args: argparse.Namespace) -> int:
    """Re-rank a run with re-ranker and reading comprehension score files."""
    trec = TrecOperations()
    fusion = FusionOperations(args.workers)
    initial = trec.rankings(trec.read_run(args.run))
    reranked = fusion.rerank(
        initial,
        fusion.read_score_table(args.rerank_scores),
        fusion.read_rc_logits(args.rc_logits),
        FusionConfig(weight=args.weight, normalize=args.normalize),
        args.cutoff,
        MissingScorePolicy(args.missing_score),
    )
    _write(trec.emit_run(trec.to_run(reranked, args.tag)), args.out)
    return 0


def cmd_tune(args: argparse.Namespace) -> int:
    """Grid-search the interpolation weight on a development run."""
    trec = TrecOperations()
    fusion = FusionOperations()
    grid = None
    if args.grid is not None:
        grid = [float(value) for value in args.grid.split(",") if value.strip()]
    result = fusion.tune_weight(
        trec.rankings(trec.read_run(args.run)),
        fusion.read_score_table(args.rerank_scores),
        fusion.read_rc_logits(args.rc_logits),
        trec.read_qrels(args.qrels),
        args.metric,
        grid,
        args.normalize,
        args.cutoff,
        MissingScorePolicy(args.missing_score),
        GainFunction(args.gain),
    )
    lines = ["weight\tscore\n"]
    lines.extend(f"{weight}\t{score:.6f}\n" for weight, score in result.curve)
    lines.append(f"best\t{result.best_weight}\t{result.best_score:.6f}\n")
    _write("".join(lines), args.out)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    """Evaluate a run against qrels."""
    trec = TrecOperations()
    evaluation = EvaluationOperations()
    report = evaluation.evaluate_run(
        trec.read_run(args.run),
        trec.read_qrels(args.qrels),
        args.metric or DEFAULT_METRICS,
        GainFunction(args.gain),
        args.binarize_at,
    )
    _write(evaluation.emit_report(report), args.out)
    return 0


def _analysis_tables(
    args: argparse.Namespace, thresholds: Sequence[float]
) -> list[AnalysisTable]:
    analysis = ErrorAnalysisOperations(args.workers)
    metric = AnalysisConfig(metric=args.metric).metric
    if args.counts is not None:
        counts = [int(value) for value in args.counts.split(",")]
        return analysis.sweep_counts(counts, metric, thresholds)
    runs = [args.original, args.resolved, args.human]
    if None in runs or args.qrels is None:
        raise CastkitError(
            "--original, --resolved, --human and --qrels are required without --counts"
        )
    qrels = TrecOperations().read_qrels(args.qrels)
    values = [_metric_values(args, path, qrels, metric) for path in runs]
    return analysis.sweep(*values, metric, thresholds, args.missing_as_zero)


def cmd_analyze(args: argparse.Namespace) -> int:
    """Error analysis at one threshold, or over a sweep with `--sweep`."""
    analysis = ErrorAnalysisOperations()
    if args.sweep is not None:
        thresholds = analysis.default_thresholds(args.sweep)
    else:
        thresholds = [args.threshold]
    tables = _analysis_tables(args, thresholds)
    _write(analysis.emit_analysis(tables, args.format), args.out)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    """Error analysis over a threshold grid (csv by default)."""
    analysis = ErrorAnalysisOperations()
    if args.thresholds is not None:
        thresholds = [float(v) for v in args.thresholds.split(",") if v.strip()]
    else:
        thresholds = analysis.default_thresholds(args.step)
    tables = _analysis_tables(args, thresholds)
    _write(analysis.emit_analysis(tables, args.format), args.out)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    """Run the full pipeline and write the TREC run."""
    fusion: dict[str, object] = {}
    if args.weight is not None:
        fusion["weight"] = args.weight
    if args.normalize:
        fusion["normalize"] = True
    bm25 = {k: v for k, v in (("k1", args.k1), ("b", args.b)) if v is not None}
    config = Configuration(
        args.config,
        preset=args.preset,
        corpus_path=args.corpus,
        index_path=args.index,
        conversations_path=args.conversations,
        resolver=args.resolver,
        rewrites_path=args.rewrites,
        oracle_source=args.oracle_source,
        heuristic_min_idf=args.min_idf,
        bm25=bm25 or None,
        depth=args.depth,
        rerank=args.rerank,
        fusion=fusion or None,
        rerank_scores_path=args.rerank_scores,
        rc_logits_path=args.rc_logits,
        missing_score=args.missing_score,
        cutoff=args.cutoff,
        tag=args.tag,
        workers=args.workers,
    )
    if args.store_config is not None:
        config.store(args.store_config)
    pipeline = Pipeline(config)
    run = pipeline.run()
    pipeline.trec.validate_run(run, pipeline.config.cutoff)
    _write(pipeline.trec.emit_run(run), args.out)
    return 0


# ----------------------------------------------------------------------- parser


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, help="output file (default: stdout)")


def _add_index_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", type=Path, help="corpus file (TSV or JSON-lines)")
    parser.add_argument("--index", type=Path, help="index snapshot from `index`")


def _add_metric_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--gain",
        choices=[g.value for g in GainFunction],
        default=GainFunction.LINEAR.value,
        help="NDCG gain function (default: linear)",
    )
    parser.add_argument(
        "--binarize-at",
        type=int,
        default=1,
        help="minimum grade counted relevant by map/mrr/recall (default: 1)",
    )


def _add_fusion_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rerank-scores", type=Path, help="qid<TAB>pid<TAB>score")
    parser.add_argument(
        "--rc-logits", type=Path, help="qid<TAB>pid<TAB>start_logit<TAB>end_logit"
    )
    parser.add_argument(
        "--normalize",
        action="store_true",
        help="min-max normalize both score streams per query",
    )
    parser.add_argument(
        "--missing-score",
        choices=[p.value for p in MissingScorePolicy],
        default=None,
        help="missing score policy (default: strict)",
    )


def _add_resolver_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--conversations", type=Path, help="conversation JSON file")
    parser.add_argument(
        "--resolver", choices=[r.value for r in ResolverChoice], default=None
    )
    parser.add_argument("--rewrites", type=Path, help="qid<TAB>rewrite file")
    parser.add_argument("--oracle-source", choices=["manual", "auto"], default=None)
    parser.add_argument(
        "--min-idf", type=float, default=None, help="heuristic resolver idf floor"
    )
    parser.add_argument("--config", type=Path, help="YAML pipeline config")


def _add_analysis_inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--original", type=Path, help="run of the original queries")
    parser.add_argument("--resolved", type=Path, help="run of the resolved queries")
    parser.add_argument("--human", type=Path, help="run of the human rewrites")
    parser.add_argument("--qrels", type=Path)
    parser.add_argument(
        "--counts",
        help="eight comma-separated pattern counts (ooo,voo,ovo,vvo,oov,vov,ovv,vvv)"
        " used instead of runs",
    )
    parser.add_argument("--metric", default="ndcg@3")
    parser.add_argument("--missing-as-zero", action="store_true")
    parser.add_argument("--workers", type=int, default=1)
    _add_metric_options(parser)
    _add_common(parser)


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog="castkit", description="Conversational passage retrieval toolkit."
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="shortcut for --log-level INFO"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    index = commands.add_parser("index", help="build an index snapshot")
    index.add_argument("--corpus", type=Path, required=True)
    index.add_argument("--format", choices=["tsv", "jsonl"])
    index.add_argument("--out", type=Path, required=True)
    index.set_defaults(handler=cmd_index)

    search = commands.add_parser("search", help="BM25 search a query file")
    _add_index_source(search)
    search.add_argument("--queries", type=Path, required=True)
    search.add_argument("--depth", type=int, default=100)
    search.add_argument("--k1", type=float)
    search.add_argument("--b", type=float)
    search.add_argument("--tag", default="bm25")
    search.add_argument("--workers", type=int, default=1)
    _add_common(search)
    search.set_defaults(handler=cmd_search)

    resolve = commands.add_parser("resolve", help="resolve conversational queries")
    _add_resolver_options(resolve)
    _add_index_source(resolve)
    _add_common(resolve)
    resolve.set_defaults(handler=cmd_resolve)

    rerank = commands.add_parser("rerank", help="fuse scores and re-rank a run")
    rerank.add_argument("--run", type=Path, required=True)
    _add_fusion_options(rerank)
    rerank.add_argument("--weight", type=float, default=0.5)
    rerank.add_argument("--cutoff", type=int, default=100)
    rerank.add_argument("--tag", default="castkit")
    rerank.add_argument("--workers", type=int, default=1)
    _add_common(rerank)
    rerank.set_defaults(
        handler=cmd_rerank, missing_score=MissingScorePolicy.STRICT.value
    )

    tune = commands.add_parser("tune", help="tune the interpolation weight")
    tune.add_argument("--run", type=Path, required=True)
    tune.add_argument("--qrels", type=Path, required=True)
    _add_fusion_options(tune)
    tune.add_argument("--metric", default="ndcg@3")
    tune.add_argument("--grid", help="comma-separated weights (default 0,0.05,..,1)")
    tune.add_argument("--cutoff", type=int, default=100)
    _add_metric_options(tune)
    _add_common(tune)
    tune.set_defaults(handler=cmd_tune, missing_score=MissingScorePolicy.STRICT.value)

    evaluate = commands.add_parser("eval", help="evaluate a run")
    evaluate.add_argument("--run", type=Path, required=True)
    evaluate.add_argument("--qrels", type=Path, required=True)
    evaluate.add_argument(
        "--metric",
        action="append",
        help=f"metric id, repeatable (default: {' '.join(DEFAULT_METRICS)})",
    )
    _add_metric_options(evaluate)
    _add_common(evaluate)
    evaluate.set_defaults(handler=cmd_eval)

    analyze = commands.add_parser("analyze", help="error analysis")
    _add_analysis_inputs(analyze)
    when = analyze.add_mutually_exclusive_group()
    when.add_argument("--threshold", type=float, default=0.0)
    when.add_argument("--sweep", type=float, metavar="STEP")
    analyze.add_argument(
        "--format", choices=["csv", "table", "matrix"], default="table"
    )
    analyze.set_defaults(handler=cmd_analyze)

    sweep = commands.add_parser("sweep", help="error analysis over thresholds")
    _add_analysis_inputs(sweep)
    sweep.add_argument("--step", type=float, default=0.02)
    sweep.add_argument("--thresholds", help="comma-separated thresholds")
    sweep.add_argument("--format", choices=["csv", "table", "matrix"], default="csv")
    sweep.set_defaults(handler=cmd_sweep)

    run = commands.add_parser("run", help="run the full pipeline")
    _add_resolver_options(run)
    _add_index_source(run)
    _add_fusion_options(run)
    run.add_argument("--preset", choices=list(RUN_PRESETS))
    run.add_argument("--depth", type=int)
    run.add_argument("--cutoff", type=int)
    run.add_argument("--k1", type=float)
    run.add_argument("--b", type=float)
    run.add_argument(
        "--rerank", action=argparse.BooleanOptionalAction, default=None
    )
    run.add_argument("--weight", type=float)
    run.add_argument("--tag")
    run.add_argument("--workers", type=int)
    run.add_argument("--store-config", type=Path, help="write the effective config")
    _add_common(run)
    run.set_defaults(handler=cmd_run)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line.

    Returns:
        0 on success, 1 on a toolkit, I/O or value error. Usage errors exit
        with 2.

    """
    parser = build_parser()
    args = parser.parse_args(argv)
    level = "INFO" if args.verbose and args.log_level == "WARNING" else args.log_level
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    handler: Handler = args.handler
    try:
        return handler(args)
    except (CastkitError, OSError, ValueError) as e:
        print(f"castkit: error: {e}", file=sys.stderr)
        return 1
