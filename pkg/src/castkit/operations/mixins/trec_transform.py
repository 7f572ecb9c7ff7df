"""Mixin for turning TREC run and qrels lines into models."""

from __future__ import annotations

import math

from ...exceptions import ParseError
from ...models import RunEntry

RUN_FIELDS = 6
QRELS_FIELDS = 4


class TrecTransformMixin:
    """Shared logic for TREC file parsing."""

    def _transform_run_line(self, line: str, line_number: int) -> RunEntry:
        """Transform a `qid Q0 pid rank score tag` line into a RunEntry.

        Fields may be separated by any run of spaces or tabs.

        Args:
            line: The line without its terminator.
            line_number: 1-based line number for error messages.

        Returns:
            The run entry; the score text is kept verbatim.

        Raises:
            ParseError: If the line is malformed.

        """
        fields = line.split()
        if len(fields) != RUN_FIELDS:
            raise ParseError(
                f"expected {RUN_FIELDS} fields (qid Q0 pid rank score tag), "
                f"got {len(fields)}",
                line_number,
            )
        qid, literal, pid, rank_text, score_text, tag = fields
        if literal not in {"Q0", "0"}:
            raise ParseError(f"second field must be Q0, got {literal!r}", line_number)
        rank = self._parse_int(rank_text, "rank", line_number)
        if rank < 1:
            raise ParseError(f"rank must be >= 1, got {rank}", line_number)
        try:
            score = float(score_text)
        except ValueError:
            raise ParseError(f"invalid score {score_text!r}", line_number) from None
        if not math.isfinite(score):
            raise ParseError(f"score must be finite, got {score_text!r}", line_number)
        return RunEntry(
            qid=qid, pid=pid, rank=rank, score=score, tag=tag, score_text=score_text
        )

    def _transform_qrels_line(
        self, line: str, line_number: int
    ) -> tuple[str, str, int]:
        """Transform a `qid 0 pid grade` line.

        Args:
            line: The line without its terminator.
            line_number: 1-based line number for error messages.

        Returns:
            The (qid, pid, grade) triple.

        Raises:
            ParseError: If the line is malformed or the grade is negative.

        """
        fields = line.split()
        if len(fields) != QRELS_FIELDS:
            raise ParseError(
                f"expected {QRELS_FIELDS} fields (qid 0 pid grade), "
                f"got {len(fields)}",
                line_number,
            )
        qid, _, pid, grade_text = fields
        grade = self._parse_int(grade_text, "grade", line_number)
        if grade < 0:
            raise ParseError(f"grade must be >= 0, got {grade}", line_number)
        return qid, pid, grade

    def _parse_int(self, text: str, name: str, line_number: int) -> int:
        try:
            return int(text)
        except ValueError:
            raise ParseError(f"invalid {name} {text!r}", line_number) from None
