"""Conversation history and query resolution operations."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

from ..exceptions import ConversationError, ParseError
from ..models import (
    Conversation,
    HistoryContext,
    HistoryEntry,
    HistorySource,
    ResolvedQuery,
    Turn,
)
from ..utils.base_operations import BaseOperations
from .corpus import tokenize
from .mixins.conversation_transform import ConversationTransformMixin

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator, Sequence

    from ..classifiers import TermClassifier

# Characters that would break the one-query-per-line TSV.
_FIELD_BREAKS = str.maketrans("\t\n\r", "   ")


class ConversationOperations(BaseOperations, ConversationTransformMixin):
    """Class to handle conversations and query resolution.

    Note:
        This class is already initialized via the pipeline and usable as
        `pipeline.conversation.method`

    """

    def read_conversations(self, path: str | Path) -> list[Conversation]:
        """Read conversations from a JSON document or a JSON-lines file.

        Args:
            path: The conversation file.

        Returns:
            The conversations in file order.

        Example:
            ```python
            pipeline.conversation.read_conversations("evaluation_topics.json")
            # Returns: [Conversation(conversation_id='101', turns=(...)), ...]
            ```

        """
        text = Path(path).read_text(encoding="utf-8")
        conversations = self.parse_conversations(text)
        self._logger.info("read %d conversations from %s", len(conversations), path)
        return conversations

    def parse_conversations(self, text: str) -> list[Conversation]:
        """Parse conversation JSON text.

        Args:
            text: A JSON document or JSON-lines text.

        Returns:
            The conversations.

        Raises:
            ConversationError: If two conversations share an id.

        """
        conversations = self._transform_conversation_document(text)
        seen: set[str] = set()
        for conversation in conversations:
            if conversation.conversation_id in seen:
                raise ConversationError(
                    f"duplicate conversation id {conversation.conversation_id}"
                )
            seen.add(conversation.conversation_id)
        return conversations

    def iter_turns(
        self, conversations: Iterable[Conversation]
    ) -> Iterator[tuple[Conversation, Turn]]:
        """Yield every (conversation, turn) pair, by conversation then turn.

        Yields:
            Pairs in run-file order.

        """
        for conversation in conversations:
            for turn in conversation.turns:
                yield conversation, turn

    def build_history(
        self, conversation: Conversation, turn_number: int
    ) -> HistoryContext:
        """Build the history visible at `turn_number`.

        The history holds the raw queries of all previous turns, in order,
        followed by the canonical response of the immediately previous turn.
        Responses of earlier turns are never included.

        Args:
            conversation: The conversation.
            turn_number: The current turn (1-based).

        Returns:
            The history context; empty for the first turn.

        Raises:
            ConversationError: If the turn number is out of range.

        """
        try:
            conversation.turn(turn_number)
        except IndexError as e:
            raise ConversationError(str(e)) from e
        previous = conversation.turns[: turn_number - 1]
        entries = [
            HistoryEntry(
                source=HistorySource.PREVIOUS_QUERY, terms=tuple(tokenize(t.raw_query))
            )
            for t in previous
        ]
        if previous and previous[-1].canonical_response:
            entries.append(
                HistoryEntry(
                    source=HistorySource.PREVIOUS_RESPONSE,
                    terms=tuple(tokenize(previous[-1].canonical_response)),
                )
            )
        return HistoryContext(entries=tuple(entries))

    def classify_terms(
        self,
        history: HistoryContext,
        current_query_terms: Sequence[str],
        classifier: TermClassifier,
        turn: Turn | None = None,
    ) -> list[tuple[str, bool]]:
        """Classify every history term occurrence as relevant or not.

        Args:
            history: The history context.
            current_query_terms: Tokenized current-turn query.
            classifier: The term classifier.
            turn: The current turn, passed through to the classifier.

        Returns:
            (term, relevant) pairs in history order.

        Raises:
            ConversationError: If the classifier returns the wrong number of
                verdicts.

        """
        terms = history.terms
        verdicts = classifier.classify(history, current_query_terms, turn)
        if len(verdicts) != len(terms):
            raise ConversationError(
                f"{classifier.name} classifier returned {len(verdicts)} verdicts "
                f"for {len(terms)} history terms"
            )
        return list(zip(terms, verdicts, strict=True))

    def resolve_query(
        self,
        turn: Turn,
        history: HistoryContext,
        classifier: TermClassifier,
        qid: str | None = None,
    ) -> ResolvedQuery:
        """Append the relevant history terms to the current-turn query.

        Appended terms keep first-occurrence order and are de-duplicated among
        themselves only; they may repeat terms of the original query.

        Args:
            turn: The current turn.
            history: Its history context.
            classifier: Decides which history terms are relevant.
            qid: Optional query id carried on the result.

        Returns:
            The resolved query.

        Example:
            ```python
            resolved = ops.resolve_query(turn, history, OracleClassifier())
            resolved.text
            # Returns: 'How much is owed? social security'
            ```

        """
        terms = tokenize(turn.raw_query)
        verdicts = self.classify_terms(history, terms, classifier, turn)
        appended = dict.fromkeys(term for term, relevant in verdicts if relevant)
        return ResolvedQuery(
            qid=qid,
            original_text=turn.raw_query,
            original_terms=tuple(terms),
            appended_terms=tuple(appended),
        )

    def substitute_rewrite(self, text: str, qid: str | None = None) -> ResolvedQuery:
        """Use a complete rewrite (manual, automatic or external) as the query.

        Args:
            text: The rewritten query.
            qid: Optional query id carried on the result.

        Returns:
            A resolved query with no appended terms.

        """
        return ResolvedQuery(
            qid=qid, original_text=text, original_terms=tuple(tokenize(text))
        )

    def read_queries(self, path: str | Path) -> dict[str, str]:
        """Read a `qid<TAB>text` query file, e.g. for ad-hoc search.

        Returns:
            Query texts keyed by qid in file order.

        """
        return self.read_rewrites(path)

    def read_rewrites(self, path: str | Path) -> dict[str, str]:
        """Read a `qid<TAB>text` rewrite file.

        Args:
            path: The rewrite file.

        Returns:
            Rewrites keyed by qid; later lines win.

        Raises:
            ParseError: If a line has no tab or an empty field.

        """
        rewrites: dict[str, str] = {}
        with Path(path).open(encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                qid, sep, text = line.rstrip("\r\n").partition("\t")
                if not sep or not qid.strip() or not text.strip():
                    raise ParseError("expected qid<TAB>text", line_number)
                rewrites[qid.strip()] = text.strip()
        return rewrites

    def emit_resolved(self, resolved: Iterable[ResolvedQuery]) -> str:
        """Render resolved queries as `qid<TAB>resolved_text` lines.

        Args:
            resolved: Resolved queries carrying a qid.

        Returns:
            The TSV text with a trailing newline per line.

        Raises:
            ConversationError: If a resolved query has no qid.

        """
        lines: list[str] = []
        for query in resolved:
            if query.qid is None:
                raise ConversationError("cannot emit a resolved query without qid")
            lines.append(f"{query.qid}\t{query.text.translate(_FIELD_BREAKS)}\n")
        return "".join(lines)
