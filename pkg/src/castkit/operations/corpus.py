"""Corpus ingestion, inverted index construction and BM25 ranking."""

from __future__ import annotations

import heapq
import math
import re
from collections import Counter
from pathlib import Path
from typing import TYPE_CHECKING

from pydantic import ValidationError

from ..exceptions import CorpusError
from ..models import BM25Params, IndexSnapshot, InvertedIndex, Passage, Ranking
from ..utils.base_operations import BaseOperations
from .mixins.corpus_transform import CorpusTransformMixin

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator, Sequence

# Letters and digits of any script; underscore counts as a separator.
_TOKEN = re.compile(r"[^\W_]+")

JSON_SUFFIXES = frozenset({".jsonl", ".json", ".ndjson"})


def tokenize(text: str) -> list[str]:
    """Case-fold `text` and split it on every non-alphanumeric character.

    No stemming and no stopword removal; every module shares this tokenizer.

    Example:
        ```python
        tokenize("Can it be fixed?")
        # Returns: ['can', 'it', 'be', 'fixed']
        ```

    """
    return _TOKEN.findall(text.casefold())


def bm25_idf(document_frequency: float, total_docs: int) -> float:
    """Non-negative BM25 idf: ln((N - df + 0.5) / (df + 0.5) + 1)."""
    return math.log(
        (total_docs - document_frequency + 0.5) / (document_frequency + 0.5) + 1.0
    )


def _term_score(tf: int, idf: float, length_norm: float, k1: float) -> float:
    return idf * tf * (k1 + 1.0) / (tf + k1 * length_norm)


def _length_norm(index: InvertedIndex, pid: str, params: BM25Params) -> float:
    ratio = index.doc_lengths[pid] / index.avg_doc_length
    return 1.0 - params.b + params.b * ratio


class CorpusOperations(BaseOperations, CorpusTransformMixin):
    """Read passage corpora, build inverted indexes and rank with BM25.

    Note:
        A built index is never mutated, so searches may run concurrently.

    """

    def tokenize(self, text: str) -> list[str]:
        """Tokenize text the way the index does.

        Args:
            text: Raw text.

        Returns:
            The case-folded alphanumeric tokens.

        """
        return tokenize(text)

    def read_corpus(self, path: str | Path, fmt: str | None = None) -> list[Passage]:
        """Read a TSV or JSON-lines corpus file.

        Args:
            path: The corpus file.
            fmt: `tsv` or `jsonl`; detected from the file suffix when omitted.

        Returns:
            The passages in file order.

        """
        path = Path(path)
        if fmt is None:
            fmt = "jsonl" if path.suffix.lower() in JSON_SUFFIXES else "tsv"
        with path.open(encoding="utf-8") as handle:
            passages = list(self.parse_corpus(handle, fmt))
        self._logger.info("read %d passages from %s", len(passages), path)
        return passages

    def parse_corpus(self, lines: Iterable[str], fmt: str = "tsv") -> Iterator[Passage]:
        """Parse corpus lines lazily; blank lines are skipped.

        Args:
            lines: Lines of a corpus file.
            fmt: `tsv` (`id<TAB>text`) or `jsonl` (objects with `id` and `text`).

        Yields:
            One Passage per non-blank line.

        Raises:
            ValueError: If the format is unknown.

        """
        if fmt not in {"tsv", "jsonl"}:
            raise ValueError(f"unknown corpus format {fmt!r}")
        transform = self._transform_tsv_passage
        if fmt == "jsonl":
            transform = self._transform_json_passage
        for line_number, line in enumerate(lines, start=1):
            line = line.rstrip("\r\n")
            if line.strip():
                yield transform(line, line_number)

    def build_index(self, passages: Iterable[Passage]) -> InvertedIndex:
        """Build an inverted index over a stream of passages.

        Args:
            passages: The passages; ids must be unique.

        Returns:
            The immutable inverted index (an empty corpus gives total_docs = 0).

        Raises:
            CorpusError: If a passage id occurs twice.

        Example:
            ```python
            ops.build_index([Passage(id="d1", text="a b"), Passage(id="d2", text="a")])
            # Returns: InvertedIndex(postings={'a': {'d1': 1, 'd2': 1}, ...},
            #                        avg_doc_length=1.5, ...)
            ```

        """
        postings: dict[str, dict[str, int]] = {}
        doc_lengths: dict[str, int] = {}
        for passage in passages:
            if passage.id in doc_lengths:
                raise CorpusError(f"duplicate passage id {passage.id}")
            terms = tokenize(passage.text)
            doc_lengths[passage.id] = len(terms)
            for term, tf in Counter(terms).items():
                postings.setdefault(term, {})[passage.id] = tf

        total_docs = len(doc_lengths)
        avg_doc_length = sum(doc_lengths.values()) / total_docs if total_docs else 0.0
        self._logger.info(
            "indexed %d passages, %d terms, avg length %.2f",
            total_docs,
            len(postings),
            avg_doc_length,
        )
        return InvertedIndex(
            postings=postings,
            doc_lengths=doc_lengths,
            total_docs=total_docs,
            avg_doc_length=avg_doc_length,
        )

    def bm25_score(
        self,
        index: InvertedIndex,
        query_terms: Sequence[str],
        pid: str,
        params: BM25Params | None = None,
    ) -> float:
        """Score one passage against a query with BM25.

        Duplicated query terms count once; terms absent from the passage add 0.

        Args:
            index: The inverted index.
            query_terms: Tokenized query.
            pid: The passage to score.
            params: BM25 parameters (defaults k1=0.82, b=0.68).

        Returns:
            The BM25 score.

        Raises:
            CorpusError: If the passage id is not in the index.

        """
        if pid not in index.doc_lengths:
            raise CorpusError(f"unknown passage id {pid}")
        params = params or BM25Params()
        score = 0.0
        for term in dict.fromkeys(query_terms):
            tf = index.term_frequency(term, pid)
            if tf:
                idf = bm25_idf(index.document_frequency(term), index.total_docs)
                norm = _length_norm(index, pid, params)
                score += _term_score(tf, idf, norm, params.k1)
        return score

    def search(
        self,
        index: InvertedIndex,
        query_terms: Sequence[str],
        params: BM25Params | None = None,
        depth: int = 100,
    ) -> Ranking:
        """Rank passages for a query with BM25.

        Args:
            index: The inverted index.
            query_terms: Tokenized query.
            params: BM25 parameters (defaults k1=0.82, b=0.68).
            depth: Maximum number of results.

        Returns:
            Up to `depth` (pid, score) pairs with score > 0, by descending score
            and ascending pid on ties.

        """
        self._validate_positive(depth, "depth")
        params = params or BM25Params()
        scores: dict[str, float] = {}
        for term in dict.fromkeys(query_terms):
            posting = index.postings.get(term)
            if not posting:
                continue
            idf = bm25_idf(len(posting), index.total_docs)
            for pid, tf in posting.items():
                norm = _length_norm(index, pid, params)
                scores[pid] = scores.get(pid, 0.0) + _term_score(
                    tf, idf, norm, params.k1
                )

        candidates = ((pid, score) for pid, score in scores.items() if score > 0.0)
        return heapq.nsmallest(depth, candidates, key=lambda item: (-item[1], item[0]))

    def save_index(self, index: InvertedIndex, path: str | Path) -> None:
        """Write a self-describing JSON snapshot of the index.

        Args:
            index: The index to persist.
            path: Destination file.

        """
        snapshot = IndexSnapshot(index=index)
        Path(path).write_text(snapshot.model_dump_json(), encoding="utf-8")

    def load_index(self, path: str | Path) -> InvertedIndex:
        """Load an index snapshot written by `save_index`.

        Args:
            path: The snapshot file.

        Returns:
            The restored index; searches give identical results.

        Raises:
            CorpusError: If the file is not a valid snapshot.

        """
        try:
            snapshot = IndexSnapshot.model_validate_json(
                Path(path).read_text(encoding="utf-8")
            )
        except ValidationError as e:
            raise CorpusError(f"invalid index snapshot {path}: {e}") from e
        return snapshot.index
