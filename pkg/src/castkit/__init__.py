"""castkit - conversational passage retrieval toolkit."""

import importlib.metadata

from .classifiers import (
    HeuristicClassifier,
    NullClassifier,
    OracleClassifier,
    TermClassifier,
)
from .configuration import Configuration
from .exceptions import (
    AnalysisError,
    CastkitError,
    ConfigurationError,
    ConversationError,
    CorpusError,
    EvaluationError,
    MissingScoreError,
    ParseError,
    PipelineError,
    RunError,
)
from .models import (
    AnalysisConfig,
    AnalysisTable,
    BM25Params,
    Conversation,
    ErrorClass,
    FusionConfig,
    HistoryContext,
    InvertedIndex,
    MetricId,
    MetricReport,
    Passage,
    PipelineConfig,
    QueryClassification,
    Qrels,
    RCLogits,
    ResolvedQuery,
    RunEntry,
    TuningResult,
    Turn,
)
from .pipeline import Pipeline, run_pipeline
from .scorers import ScoreTable, TermOverlapScorer

try:
    __version__ = importlib.metadata.version("castkit")
except importlib.metadata.PackageNotFoundError:
    __version__ = "unknown"
__all__ = [
    "AnalysisConfig",
    "AnalysisError",
    "AnalysisTable",
    "BM25Params",
    "CastkitError",
    "Configuration",
    "ConfigurationError",
    "Conversation",
    "ConversationError",
    "CorpusError",
    "ErrorClass",
    "EvaluationError",
    "FusionConfig",
    "HeuristicClassifier",
    "HistoryContext",
    "InvertedIndex",
    "MetricId",
    "MetricReport",
    "MissingScoreError",
    "NullClassifier",
    "OracleClassifier",
    "ParseError",
    "Passage",
    "Pipeline",
    "PipelineConfig",
    "PipelineError",
    "Qrels",
    "QueryClassification",
    "RCLogits",
    "ResolvedQuery",
    "RunEntry",
    "RunError",
    "ScoreTable",
    "TermClassifier",
    "TermOverlapScorer",
    "TuningResult",
    "Turn",
    "run_pipeline",
]
