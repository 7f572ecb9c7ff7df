"""Operations of the castkit toolkit."""

from .analysis import ErrorAnalysisOperations
from .conversation import ConversationOperations
from .corpus import CorpusOperations
from .evaluation import EvaluationOperations
from .fusion import FusionOperations
from .trec import TrecOperations

__all__ = [
    "ConversationOperations",
    "CorpusOperations",
    "ErrorAnalysisOperations",
    "EvaluationOperations",
    "FusionOperations",
    "TrecOperations",
]
