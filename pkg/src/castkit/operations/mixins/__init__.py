"""Mixins for shared parsing logic."""

from .conversation_transform import ConversationTransformMixin
from .corpus_transform import CorpusTransformMixin
from .scores_transform import ScoresTransformMixin
from .trec_transform import TrecTransformMixin

__all__ = [
    "ConversationTransformMixin",
    "CorpusTransformMixin",
    "ScoresTransformMixin",
    "TrecTransformMixin",
]
