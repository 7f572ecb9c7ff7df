"""Exceptions for the castkit toolkit."""


class CastkitError(Exception):
    """Base exception for all castkit-related errors."""

    pass


class ConfigurationError(CastkitError):
    """Raised when there's an issue with configuration."""

    pass


class ParseError(CastkitError):
    """Raised when an input file contains a malformed line."""

    def __init__(self, message: str, line_number: int | None = None) -> None:
        """Initialize parse error with message and optional line number.

        Args:
            message: The error message
            line_number: The 1-based line number of the offending line if known

        """
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class RunError(CastkitError):
    """Raised when a run violates the TREC run invariants."""

    pass


class CorpusError(CastkitError):
    """Raised for corpus and index problems (duplicate ids, unknown passages)."""

    pass


class ConversationError(CastkitError):
    """Raised when a conversation or turn reference is invalid."""

    pass


class MissingScoreError(CastkitError):
    """Raised when a candidate passage has no score in a score table."""

    def __init__(self, qid: str, pid: str, table: str = "score") -> None:
        """Initialize the error with the query/passage pair that was missing.

        Args:
            qid: The query id
            pid: The passage id
            table: Name of the score table the lookup failed in

        """
        super().__init__(f"missing {table} for ({qid}, {pid})")
        self.qid = qid
        self.pid = pid


class EvaluationError(CastkitError):
    """Raised when a run cannot be evaluated against the given qrels."""

    pass


class AnalysisError(CastkitError):
    """Raised when error analysis inputs are inconsistent."""

    pass


class PipelineError(CastkitError):
    """Raised when a pipeline stage fails for a query."""

    def __init__(
        self, message: str, stage: str | None = None, qid: str | None = None
    ) -> None:
        """Initialize pipeline error with stage and query context.

        Args:
            message: The error message
            stage: The pipeline stage that failed (e.g. "resolve", "search")
            qid: The query id being processed when the failure happened

        """
        context = ", ".join(
            part
            for part in (
                f"stage={stage}" if stage else "",
                f"qid={qid}" if qid else "",
            )
            if part
        )
        super().__init__(f"[{context}] {message}" if context else message)
        self.stage = stage
        self.qid = qid
