"""Mixin for turning CAsT-style JSON into conversation models."""

from __future__ import annotations

import json
from typing import Any

from pydantic import ValidationError

from ...exceptions import ParseError
from ...models import Conversation


class ConversationTransformMixin:
    """Shared logic for conversation readers."""

    def _transform_conversation_document(self, text: str) -> list[Conversation]:
        """Transform a JSON document or JSON-lines text into conversations.

        A document may be an array of conversations, a single conversation, or
        an object with a `conversations` array.

        Args:
            text: The file contents.

        Returns:
            The conversations in file order.

        Raises:
            ParseError: If the text is neither valid JSON nor JSON-lines.

        """
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            return self._transform_conversation_lines(text)

        if isinstance(data, dict) and "conversations" in data:
            data = data["conversations"]
        records: list[Any] = data if isinstance(data, list) else [data]
        return [
            self._transform_conversation(record, position)
            for position, record in enumerate(records, start=1)
        ]

    def _transform_conversation_lines(self, text: str) -> list[Conversation]:
        conversations: list[Conversation] = []
        for line_number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", line_number) from e
            conversations.append(self._transform_conversation(record, line_number))
        return conversations

    def _transform_conversation(self, record: Any, position: int) -> Conversation:
        """Validate one raw conversation record.

        Args:
            record: The decoded JSON object.
            position: Line number (JSON-lines) or array position (document).

        Returns:
            The validated Conversation.

        Raises:
            ParseError: If the record does not describe a valid conversation.

        """
        if not isinstance(record, dict):
            raise ParseError("expected a conversation object", position)
        try:
            return Conversation.model_validate(record)
        except ValidationError as e:
            first = e.errors()[0]
            location = ".".join(str(part) for part in first["loc"])
            raise ParseError(
                f"invalid conversation ({location}): {first['msg']}", position
            ) from e
