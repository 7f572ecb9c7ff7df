"""Mixin for turning corpus file lines into passages."""

from __future__ import annotations

import json

from pydantic import ValidationError

from ...exceptions import ParseError
from ...models import Passage


class CorpusTransformMixin:
    """Shared logic for corpus readers."""

    def _transform_tsv_passage(self, line: str, line_number: int) -> Passage:
        """Transform an `id<TAB>text` line into a Passage.

        Args:
            line: The line without its line terminator.
            line_number: 1-based line number for error messages.

        Returns:
            The parsed passage.

        Raises:
            ParseError: If the line has no tab or an invalid id.

        """
        pid, sep, text = line.partition("\t")
        if not sep:
            raise ParseError("expected id<TAB>text", line_number)
        return self._build_passage(pid, text, line_number)

    def _transform_json_passage(self, line: str, line_number: int) -> Passage:
        """Transform a JSON-lines record with `id` and `text` into a Passage.

        Args:
            line: One JSON object.
            line_number: 1-based line number for error messages.

        Returns:
            The parsed passage.

        Raises:
            ParseError: If the line is not a JSON object with string id/text.

        """
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", line_number) from e
        if not isinstance(record, dict):
            raise ParseError("expected a JSON object", line_number)
        pid, text = record.get("id"), record.get("text")
        if not isinstance(pid, str) or not isinstance(text, str):
            raise ParseError("fields 'id' and 'text' must be strings", line_number)
        return self._build_passage(pid, text, line_number)

    def _build_passage(self, pid: str, text: str, line_number: int) -> Passage:
        try:
            return Passage(id=pid, text=text)
        except ValidationError as e:
            message = e.errors()[0]["msg"]
            raise ParseError(f"invalid passage: {message}", line_number) from e
