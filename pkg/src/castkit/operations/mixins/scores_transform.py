"""Mixin for turning score file lines into scores."""

from __future__ import annotations

import math

from ...exceptions import ParseError
from ...models import RCLogits


class ScoresTransformMixin:
    """Shared logic for re-ranker and reading comprehension score files."""

    def _transform_score_line(
        self, line: str, line_number: int
    ) -> tuple[str, str, float]:
        """Transform a `qid<TAB>pid<TAB>score` line.

        Returns:
            The (qid, pid, score) triple.

        Raises:
            ParseError: If the line does not have three fields or a real score.

        """
        qid, pid, score_text = self._split_fields(line, 3, line_number)
        return qid, pid, self._parse_real(score_text, line_number)

    def _transform_logits_line(
        self, line: str, line_number: int
    ) -> tuple[str, str, RCLogits]:
        """Transform a `qid<TAB>pid<TAB>start_logit<TAB>end_logit` line.

        Returns:
            The (qid, pid, logits) triple.

        Raises:
            ParseError: If the line does not have four fields or real logits.

        """
        qid, pid, start, end = self._split_fields(line, 4, line_number)
        logits = RCLogits(
            start_logit=self._parse_real(start, line_number),
            end_logit=self._parse_real(end, line_number),
        )
        return qid, pid, logits

    def _split_fields(self, line: str, count: int, line_number: int) -> list[str]:
        fields = [field.strip() for field in line.split("\t")]
        if len(fields) != count or not all(fields):
            raise ParseError(
                f"expected {count} non-empty tab-separated fields, got {len(fields)}",
                line_number,
            )
        return fields

    def _parse_real(self, text: str, line_number: int) -> float:
        try:
            value = float(text)
        except ValueError:
            raise ParseError(f"invalid score {text!r}", line_number) from None
        if not math.isfinite(value):
            raise ParseError(f"score must be finite, got {text!r}", line_number)
        return value
