"""TREC run file and qrels reading and writing."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

from ..exceptions import ParseError, RunError
from ..models import Qrels, RunEntry
from ..utils.base_operations import BaseOperations
from .mixins.trec_transform import TrecTransformMixin

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping

    from ..models import Ranking, Run


def _iter_lines(source: str | Iterable[str]) -> Iterable[str]:
    if isinstance(source, str):
        return source.splitlines()
    return source


class TrecOperations(BaseOperations, TrecTransformMixin):
    """Class to handle TREC runs and relevance judgments.

    Note:
        This class is already initialized via the pipeline and usable as
        `pipeline.trec.method`

    """

    def parse_run(self, source: str | Iterable[str]) -> Run:
        """Parse a TREC run.

        Qids keep their first-appearance order and entries keep file order.
        Lines of different queries may interleave.

        Args:
            source: The run text or an iterable of lines (LF or CRLF).

        Returns:
            Ranked entries keyed by qid.

        Raises:
            ParseError: If a line is malformed, a (qid, pid) pair repeats, ranks
                of a query are not 1..n in order or its scores increase.

        Example:
            ```python
            run = pipeline.trec.parse_run("31_1 Q0 MARCO_955948 1 11.22 quretecQR\\n")
            run["31_1"][0].rank
            # Returns: 1
            ```

        """
        run: Run = {}
        seen: set[tuple[str, str]] = set()
        for line_number, line in enumerate(_iter_lines(source), start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            entry = self._transform_run_line(line, line_number)
            entries = run.setdefault(entry.qid, [])
            if (entry.qid, entry.pid) in seen:
                raise ParseError(
                    f"duplicate entry for ({entry.qid}, {entry.pid})", line_number
                )
            if entry.rank != len(entries) + 1:
                raise ParseError(
                    f"rank {entry.rank} of query {entry.qid} breaks the sequence "
                    f"1..n (expected {len(entries) + 1})",
                    line_number,
                )
            if entries and entry.score > entries[-1].score:
                raise ParseError(
                    f"score {entry.score_text} of query {entry.qid} exceeds the "
                    "score of the previous rank",
                    line_number,
                )
            seen.add((entry.qid, entry.pid))
            entries.append(entry)
        return run

    def read_run(self, path: str | Path) -> Run:
        """Read a TREC run file.

        Returns:
            Ranked entries keyed by qid.

        """
        with Path(path).open(encoding="utf-8") as handle:
            run = self.parse_run(handle)
        self._logger.info("read run with %d queries from %s", len(run), path)
        return run

    def emit_run(self, run: Run, tag: str | None = None) -> str:
        """Render a run in canonical TREC form.

        Fields are single-space separated, every line ends with LF. Parsed
        scores are written verbatim, generated ones with 6 decimals.

        Args:
            run: Ranked entries keyed by qid, emitted in mapping order.
            tag: Run tag overriding the tag of every entry.

        Returns:
            The run text; empty for an empty run.

        """
        return "".join(
            f"{entry.qid} Q0 {entry.pid} {entry.rank} {entry.rendered_score} "
            f"{tag or entry.tag}\n"
            for entries in run.values()
            for entry in entries
        )

    def write_run(self, run: Run, path: str | Path, tag: str | None = None) -> None:
        """Write a run file with LF line endings."""
        with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
            handle.write(self.emit_run(run, tag))

    def to_run(self, rankings: Mapping[str, Ranking], tag: str) -> Run:
        """Turn ranked (pid, score) lists into run entries.

        Args:
            rankings: Ranked lists keyed by qid, best first.
            tag: The run tag.

        Returns:
            Entries ranked 1..n per qid.

        """
        return {
            qid: [
                RunEntry(qid=qid, pid=pid, rank=rank, score=score, tag=tag)
                for rank, (pid, score) in enumerate(ranking, start=1)
            ]
            for qid, ranking in rankings.items()
        }

    def validate_run(self, run: Run, max_depth: int | None = None) -> None:
        """Check the run invariants of every query.

        Args:
            run: The run to check.
            max_depth: Largest number of entries allowed per query.

        Raises:
            RunError: If any invariant is violated.

        """
        for qid, entries in run.items():
            if max_depth is not None and len(entries) > max_depth:
                raise RunError(
                    f"query {qid} has {len(entries)} entries, more than {max_depth}"
                )
            pids: set[str] = set()
            for position, entry in enumerate(entries, start=1):
                if entry.qid != qid:
                    raise RunError(f"entry of query {entry.qid} listed under {qid}")
                if entry.rank != position:
                    raise RunError(
                        f"query {qid}: rank {entry.rank} at position {position}"
                    )
                if entry.pid in pids:
                    raise RunError(f"query {qid}: duplicate passage {entry.pid}")
                if position > 1 and entry.score > entries[position - 2].score:
                    raise RunError(f"query {qid}: scores increase at rank {position}")
                pids.add(entry.pid)

    def rankings(self, run: Run) -> dict[str, Ranking]:
        """Return the (pid, score) lists of a run keyed by qid."""
        return {
            qid: [(entry.pid, entry.score) for entry in entries]
            for qid, entries in run.items()
        }

    def parse_qrels(self, source: str | Iterable[str]) -> Qrels:
        """Parse `qid 0 pid grade` relevance judgments.

        A repeated (qid, pid) pair overrides the earlier grade and logs a warning.

        Args:
            source: The qrels text or an iterable of lines.

        Returns:
            The judgments.

        Raises:
            ParseError: If a line is malformed or a grade is negative.

        """
        judgments: dict[str, dict[str, int]] = {}
        for line_number, line in enumerate(_iter_lines(source), start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            qid, pid, grade = self._transform_qrels_line(line, line_number)
            grades = judgments.setdefault(qid, {})
            if pid in grades:
                self._logger.warning(
                    "line %d: duplicate judgment for (%s, %s); grade %d replaces %d",
                    line_number,
                    qid,
                    pid,
                    grade,
                    grades[pid],
                )
            grades[pid] = grade
        return Qrels(judgments=judgments)

    def read_qrels(self, path: str | Path) -> Qrels:
        """Read a qrels file.

        Returns:
            The judgments.

        """
        with Path(path).open(encoding="utf-8") as handle:
            qrels = self.parse_qrels(handle)
        self._logger.info("read %d judgments from %s", len(qrels), path)
        return qrels
