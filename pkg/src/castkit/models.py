"""Pydantic models for the castkit toolkit."""

from __future__ import annotations

import math
import re
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Any, Literal, Self

from pydantic import (
    AfterValidator,
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    NonNegativeInt,
    field_validator,
    model_validator,
)

_WHITESPACE = re.compile(r"\s")


def _parse_optional_text(v: Any) -> str | None:
    """Parse optional text fields, treating null and blank strings as None.

    Returns:
        The text value or None if empty/None.

    """
    if v is None or (isinstance(v, str) and not v.strip()):
        return None
    return v


def _coerce_identifier(v: Any) -> Any:
    """Accept integer ids (CAsT conversation numbers are often integers).

    Returns:
        The value as a string when it was an integer, otherwise unchanged.

    """
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    return v


def _check_identifier(v: str) -> str:
    """Validate an identifier that ends up as a whitespace-separated field.

    Returns:
        The identifier unchanged.

    Raises:
        ValueError: If the identifier is empty or contains whitespace.

    """
    if not v:
        raise ValueError("identifier must be non-empty")
    if _WHITESPACE.search(v):
        raise ValueError(f"identifier {v!r} must not contain whitespace")
    return v


# Reusable annotated types.
type OptionalText = Annotated[str | None, BeforeValidator(_parse_optional_text)]
type Identifier = Annotated[
    str, BeforeValidator(_coerce_identifier), AfterValidator(_check_identifier)
]


class CastkitBaseModel(BaseModel):
    """Base model with common configuration for all castkit models."""

    model_config = ConfigDict(
        validate_by_name=True,
        validate_by_alias=True,
        use_enum_values=True,
        frozen=True,
        str_strip_whitespace=True,
    )


# --------------------------------------------------------------------------- corpus


class Passage(CastkitBaseModel):
    """A retrievable passage."""

    id: Identifier
    text: str


class BM25Params(CastkitBaseModel):
    """BM25 parameters; defaults are the MS MARCO-tuned values."""

    k1: float = Field(default=0.82, ge=0.0)
    b: float = Field(default=0.68, ge=0.0, le=1.0)


class InvertedIndex(CastkitBaseModel):
    """Term postings plus the document statistics BM25 needs.

    `postings` maps a term to an insertion-ordered mapping of passage id to
    term frequency.
    """

    postings: dict[str, dict[str, int]] = Field(default_factory=dict)
    doc_lengths: dict[str, NonNegativeInt] = Field(default_factory=dict)
    total_docs: NonNegativeInt = 0
    avg_doc_length: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _check_statistics(self) -> Self:
        if self.total_docs != len(self.doc_lengths):
            raise ValueError("total_docs must equal the number of documents")
        for term, posting in self.postings.items():
            for pid, tf in posting.items():
                if tf < 1:
                    raise ValueError(f"term frequency of {term!r} in {pid} is < 1")
                if pid not in self.doc_lengths:
                    raise ValueError(f"posting of {term!r} names unknown id {pid}")
        if self.total_docs:
            expected = sum(self.doc_lengths.values()) / self.total_docs
            if not math.isclose(self.avg_doc_length, expected, abs_tol=1e-9):
                raise ValueError("avg_doc_length does not match doc_lengths")
        return self

    def document_frequency(self, term: str) -> int:
        """Return the number of passages containing `term`."""
        return len(self.postings.get(term, ()))

    def term_frequency(self, term: str, pid: str) -> int:
        """Return how often `term` occurs in passage `pid` (0 when absent)."""
        return self.postings.get(term, {}).get(pid, 0)


class IndexSnapshot(CastkitBaseModel):
    """On-disk representation of an inverted index."""

    format: Literal["castkit-index"] = "castkit-index"
    version: Literal[1] = 1
    index: InvertedIndex


# --------------------------------------------------------------------- conversation


class Turn(CastkitBaseModel):
    """One user turn of a conversation."""

    turn_number: int = Field(alias="number", ge=1)
    raw_query: str = Field(alias="raw_utterance", min_length=1)
    auto_rewrite: OptionalText = Field(
        default=None, alias="automatic_rewritten_utterance"
    )
    manual_rewrite: OptionalText = Field(
        default=None, alias="manual_rewritten_utterance"
    )
    canonical_response: OptionalText = Field(
        default=None, alias="canonical_response_text"
    )


class Conversation(CastkitBaseModel):
    """A multi-turn conversation."""

    conversation_id: Identifier = Field(alias="number")
    turns: tuple[Turn, ...] = Field(default=(), alias="turn")

    @field_validator("turns")
    @classmethod
    def _check_turn_numbers(cls, turns: tuple[Turn, ...]) -> tuple[Turn, ...]:
        numbers = [turn.turn_number for turn in turns]
        if numbers != list(range(1, len(turns) + 1)):
            raise ValueError(f"turn numbers must be 1..{len(turns)}, got {numbers}")
        return turns

    def turn(self, turn_number: int) -> Turn:
        """Return the turn with the given 1-based number.

        Raises:
            IndexError: If the turn number is out of range.

        """
        if not 1 <= turn_number <= len(self.turns):
            raise IndexError(
                f"turn {turn_number} out of range 1..{len(self.turns)} "
                f"in conversation {self.conversation_id}"
            )
        return self.turns[turn_number - 1]

    def qid(self, turn_number: int) -> str:
        """Return the `<conversation_id>_<turn_number>` query id."""
        return f"{self.conversation_id}_{turn_number}"


class HistorySource(StrEnum):
    """Where a history entry came from."""

    PREVIOUS_QUERY = "previous_query"
    PREVIOUS_RESPONSE = "previous_response"


class HistoryEntry(CastkitBaseModel):
    """Tokenized text from one earlier turn."""

    source: HistorySource
    terms: tuple[str, ...]


class HistoryContext(CastkitBaseModel):
    """Conversation history visible to the term classifier."""

    entries: tuple[HistoryEntry, ...] = ()

    @property
    def terms(self) -> list[str]:
        """All history term occurrences in order."""
        return [term for entry in self.entries for term in entry.terms]


class ResolvedQuery(CastkitBaseModel):
    """The current-turn query plus the history terms appended to it."""

    qid: str | None = None
    original_text: str
    original_terms: tuple[str, ...]
    appended_terms: tuple[str, ...] = ()

    @field_validator("appended_terms")
    @classmethod
    def _check_unique(cls, terms: tuple[str, ...]) -> tuple[str, ...]:
        if len(set(terms)) != len(terms):
            raise ValueError("appended terms must be unique")
        return terms

    @property
    def text(self) -> str:
        """Render the resolved query; the original text is always a prefix."""
        if not self.appended_terms:
            return self.original_text
        return f"{self.original_text} {' '.join(self.appended_terms)}"

    @property
    def terms(self) -> list[str]:
        """Original terms followed by the appended terms."""
        return [*self.original_terms, *self.appended_terms]


# -------------------------------------------------------------------------- fusion


class RCLogits(CastkitBaseModel):
    """Start/end span logits of the reading comprehension model."""

    start_logit: float
    end_logit: float


class FusionConfig(CastkitBaseModel):
    """Interpolation settings for re-ranker / reading-comprehension fusion."""

    weight: float = Field(default=0.5, ge=0.0, le=1.0)
    normalize: bool = False


class MissingScorePolicy(StrEnum):
    """What to do when a candidate has no score in a score table."""

    STRICT = "strict"
    MIN = "min"


class TuningResult(CastkitBaseModel):
    """Outcome of a grid search over the interpolation weight."""

    metric: str
    best_weight: float
    best_score: float
    curve: tuple[tuple[float, float], ...]


# ---------------------------------------------------------------------------- trec

type Ranking = list[tuple[str, float]]


class RunEntry(CastkitBaseModel):
    """One line of a TREC run file."""

    qid: Identifier
    pid: Identifier
    rank: int = Field(ge=1)
    score: float
    tag: Identifier
    # Verbatim score text when parsed from a file, for byte-exact round trips.
    score_text: str | None = Field(default=None, repr=False)

    @property
    def rendered_score(self) -> str:
        """Score as written to a run file."""
        if self.score_text is not None:
            return self.score_text
        return f"{self.score:.6f}"


type Run = dict[str, list[RunEntry]]


class Qrels(CastkitBaseModel):
    """Graded relevance judgments; absent pairs have grade 0."""

    judgments: dict[str, dict[str, NonNegativeInt]] = Field(default_factory=dict)

    def grade(self, qid: str, pid: str) -> int:
        """Return the grade of (qid, pid), 0 if unjudged."""
        return self.judgments.get(qid, {}).get(pid, 0)

    def for_query(self, qid: str) -> dict[str, int]:
        """Return all judgments of a query."""
        return self.judgments.get(qid, {})

    def qids(self) -> list[str]:
        """Return the judged query ids in file order."""
        return list(self.judgments)

    def __len__(self) -> int:
        """Return the number of judged (qid, pid) pairs."""
        return sum(len(grades) for grades in self.judgments.values())


# ---------------------------------------------------------------------- evaluation


class MetricName(StrEnum):
    """Supported evaluation measures."""

    NDCG = "ndcg"
    MAP = "map"
    MRR = "mrr"
    RECALL = "recall"


class GainFunction(StrEnum):
    """NDCG gain function."""

    LINEAR = "linear"
    EXPONENTIAL = "exponential"


class MetricId(CastkitBaseModel):
    """A parsed metric identifier such as `ndcg@3` or `map`."""

    name: MetricName
    k: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_cutoff(self) -> Self:
        needs_cutoff = self.name in {MetricName.NDCG, MetricName.RECALL}
        if needs_cutoff and self.k is None:
            raise ValueError(f"{self.name} needs a cutoff, e.g. {self.name}@10")
        if not needs_cutoff and self.k is not None:
            raise ValueError(f"{self.name} does not take a cutoff")
        return self

    @classmethod
    def parse(cls, text: str) -> MetricId:
        """Parse `ndcg@3`, `recall@100`, `map` or `mrr` (case-insensitive).

        Returns:
            The parsed metric id.

        Raises:
            ValueError: If the text is not a supported metric id.

        """
        name, _, cutoff = text.strip().lower().partition("@")
        if name not in {member.value for member in MetricName}:
            raise ValueError(f"unknown metric {text!r}")
        if cutoff and not cutoff.isdigit():
            raise ValueError(f"bad cutoff in metric {text!r}")
        return cls(name=MetricName(name), k=int(cutoff) if cutoff else None)

    def __str__(self) -> str:
        """Return the canonical text form."""
        return f"{self.name}@{self.k}" if self.k is not None else str(self.name)


class MetricReport(CastkitBaseModel):
    """Per-query and mean metric values of one run."""

    per_query: dict[str, dict[str, float]]
    means: dict[str, float]
    evaluated_query_count: int
    skipped_qids: tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check_range(self) -> Self:
        values = [*self.means.values()]
        values += [v for metrics in self.per_query.values() for v in metrics.values()]
        if any(not 0.0 <= v <= 1.0 + 1e-12 for v in values):
            raise ValueError("metric values must lie in [0, 1]")
        return self


# ------------------------------------------------------------------ error analysis


class ErrorClass(StrEnum):
    """Failure attribution of a query."""

    RANKING_ERROR = "ranking_error"
    QUERY_RESOLUTION_ERROR = "query_resolution_error"
    NO_ERROR = "no_error"


# Pass/fail patterns over (original, resolved, human); "v" passes, "o" fails.
PATTERN_ORDER: tuple[str, ...] = (
    "ooo",
    "voo",
    "ovo",
    "vvo",
    "oov",
    "vov",
    "ovv",
    "vvv",
)
CLASS_ORDER: tuple[ErrorClass, ...] = (
    ErrorClass.RANKING_ERROR,
    ErrorClass.QUERY_RESOLUTION_ERROR,
    ErrorClass.NO_ERROR,
)


def pattern_key(pattern: tuple[bool, bool, bool]) -> str:
    """Return the `v`/`o` key of a pass pattern."""
    return "".join("v" if passed else "o" for passed in pattern)


def error_class_of(pass_resolved: bool, pass_human: bool) -> ErrorClass:
    """Attribute a query to an error class from its resolved/human pass flags."""
    if not pass_human:
        return ErrorClass.RANKING_ERROR
    if not pass_resolved:
        return ErrorClass.QUERY_RESOLUTION_ERROR
    return ErrorClass.NO_ERROR


class AnalysisConfig(CastkitBaseModel):
    """Metric and threshold of one error analysis."""

    metric: str = "ndcg@3"
    threshold: float = Field(default=0.0, ge=0.0, le=1.0)

    @field_validator("metric")
    @classmethod
    def _normalize_metric(cls, metric: str) -> str:
        return str(MetricId.parse(metric))


class QueryClassification(CastkitBaseModel):
    """Pass pattern and error class of one query."""

    qid: str = ""
    pattern: tuple[bool, bool, bool]
    error_class: ErrorClass

    @model_validator(mode="after")
    def _check_class(self) -> Self:
        _, pass_resolved, pass_human = self.pattern
        if self.error_class != error_class_of(pass_resolved, pass_human):
            raise ValueError(f"error class {self.error_class} contradicts pattern")
        return self

    @property
    def pattern_key(self) -> str:
        """The `v`/`o` key of the pattern, e.g. `ovv`."""
        return pattern_key(self.pattern)


class AnalysisTable(CastkitBaseModel):
    """Pattern counts and percentages at one threshold."""

    metric: str
    threshold: float
    total: int
    pattern_counts: dict[str, int]
    row_percentages: dict[str, float]
    class_counts: dict[str, int]
    class_percentages: dict[str, float]
    original_pass_pct: float
    classifications: tuple[QueryClassification, ...] = ()

    @model_validator(mode="after")
    def _check_counts(self) -> Self:
        if tuple(self.pattern_counts) != PATTERN_ORDER:
            raise ValueError("pattern_counts must be keyed by PATTERN_ORDER")
        if sum(self.pattern_counts.values()) != self.total:
            raise ValueError("pattern counts must sum to the total")
        if sum(self.class_counts.values()) != self.total:
            raise ValueError("class counts must sum to the total")
        return self


# ------------------------------------------------------------------------ pipeline


class ResolverChoice(StrEnum):
    """How the current-turn query is turned into the retrieval query."""

    NULL = "null"
    ORACLE = "oracle"
    HEURISTIC = "heuristic"
    REWRITE_FILE = "external-rewrite-file"
    MANUAL = "manual-rewrite"
    AUTOMATIC = "auto-rewrite"


class PipelineConfig(CastkitBaseModel):
    """Everything needed to produce one run file."""

    model_config = ConfigDict(extra="forbid")

    corpus_path: Path | None = None
    index_path: Path | None = None
    conversations_path: Path | None = None
    resolver: ResolverChoice = ResolverChoice.NULL
    rewrites_path: Path | None = None
    oracle_source: Literal["manual", "auto"] = "manual"
    heuristic_min_idf: float | None = None
    bm25: BM25Params = Field(default_factory=BM25Params)
    depth: int = Field(default=100, ge=1)
    rerank: bool = False
    fusion: FusionConfig = Field(default_factory=FusionConfig)
    rerank_scores_path: Path | None = None
    rc_logits_path: Path | None = None
    missing_score: MissingScorePolicy = MissingScorePolicy.STRICT
    cutoff: int = Field(default=100, ge=1)
    tag: Identifier = "castkit"
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_consistency(self) -> Self:
        if self.cutoff > self.depth:
            raise ValueError(
                f"cutoff ({self.cutoff}) must not exceed retrieval depth "
                f"({self.depth})"
            )
        if self.resolver == ResolverChoice.REWRITE_FILE and self.rewrites_path is None:
            raise ValueError("resolver external-rewrite-file needs rewrites_path")
        return self
