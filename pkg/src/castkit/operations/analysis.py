"""Per-query error analysis of original, resolved and human-rewritten runs.

Each query gets a pass pattern over the three runs, written as three
characters (`v` pass, `o` fail) in the order original, resolved, human. The
class only depends on the last two:

- human fails: ranking error
- human passes, resolved fails: query resolution error
- both pass: no error
"""

from __future__ import annotations

import io
from collections.abc import Mapping
from typing import TYPE_CHECKING, Literal

import numpy as np
import pandas as pd

from ..exceptions import AnalysisError, ParseError
from ..models import (
    CLASS_ORDER,
    PATTERN_ORDER,
    AnalysisConfig,
    AnalysisTable,
    ErrorClass,
    QueryClassification,
    error_class_of,
)
from ..utils.base_operations import BaseOperations

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from ..models import MetricReport

type AnalysisFormat = Literal["csv", "table", "matrix"]

CSV_HEADER: tuple[str, ...] = (
    "threshold",
    *(f"pattern_{key}" for key in PATTERN_ORDER),
    "pct_ranking",
    "pct_qr",
    "pct_no_error",
)

_PCT_COLUMNS = dict(zip(CSV_HEADER[-3:], CLASS_ORDER, strict=True))

# Patterns of each error class, in table order.
CLASS_MEMBERS: dict[ErrorClass, tuple[str, ...]] = {
    error_class: tuple(
        key
        for key in PATTERN_ORDER
        if error_class_of(key[1] == "v", key[2] == "v") == error_class
    )
    for error_class in CLASS_ORDER
}

_PATTERN_CLASS = {
    key: str(error_class) for error_class, keys in CLASS_MEMBERS.items() for key in keys
}


def _half_up_tenths(count: int, total: int) -> int:
    """Percentage of count/total in tenths, rounded half up."""
    return (count * 2000 + total) // (2 * total)


def _absorb_residual(tenths: list[int], counts: Sequence[int], target: int) -> None:
    """Shift single tenths onto the largest counts until `tenths` sums to target."""
    residual = target - sum(tenths)
    order = sorted(
        (i for i, count in enumerate(counts) if count > 0),
        key=lambda i: (-counts[i], i),
    )
    step = 1 if residual > 0 else -1
    while residual and order:
        for i in order:
            if residual == 0:
                break
            if step < 0 and tenths[i] == 0:
                continue
            tenths[i] += step
            residual -= step


class ErrorAnalysisOperations(BaseOperations):
    """Attribute retrieval failures to ranking or query resolution.

    Note:
        This class is already initialized via the pipeline and usable as
        `pipeline.analysis.method`

    """

    def pass_predicate(self, value: float, threshold: float) -> bool:
        """Decide whether a metric value passes a threshold.

        At threshold 0 the value must be strictly positive; above 0 it must
        reach the threshold.

        Args:
            value: Metric value in [0, 1].
            threshold: Threshold in [0, 1].

        Returns:
            True if the value passes.

        Raises:
            AnalysisError: If either argument is outside [0, 1].

        """
        self._check_unit(value, "metric value")
        self._check_unit(threshold, "threshold")
        if threshold == 0.0:
            return value > 0.0
        return value >= threshold

    def classify_query(
        self,
        m_original: float,
        m_resolved: float,
        m_human: float,
        threshold: float,
        qid: str = "",
    ) -> QueryClassification:
        """Classify one query from its three metric values.

        Example:
            ```python
            ops.classify_query(0.0, 0.0, 0.8, 0.0).error_class
            # Returns: 'query_resolution_error'
            ```

        """
        pattern = (
            self.pass_predicate(m_original, threshold),
            self.pass_predicate(m_resolved, threshold),
            self.pass_predicate(m_human, threshold),
        )
        return QueryClassification(
            qid=qid, pattern=pattern, error_class=error_class_of(*pattern[1:])
        )

    def analyze(
        self,
        original: Mapping[str, float],
        resolved: Mapping[str, float],
        human: Mapping[str, float],
        config: AnalysisConfig | None = None,
        missing_as_zero: bool = False,
    ) -> AnalysisTable:
        """Classify every query and aggregate the pattern table.

        Args:
            original: Metric value per qid for the original queries.
            resolved: Metric value per qid for the resolved queries.
            human: Metric value per qid for the human rewrites.
            config: Metric name and threshold.
            missing_as_zero: Treat a qid absent from a run as value 0 instead
                of raising.

        Returns:
            Pattern counts, row and class percentages.

        Raises:
            AnalysisError: If the qid sets differ and `missing_as_zero` is off.

        """
        config = config or AnalysisConfig()
        qids = self._shared_qids(original, resolved, human, missing_as_zero)
        classifications = [
            self.classify_query(
                original.get(qid, 0.0),
                resolved.get(qid, 0.0),
                human.get(qid, 0.0),
                config.threshold,
                qid,
            )
            for qid in qids
        ]
        keys = pd.Series([c.pattern_key for c in classifications], dtype=object)
        counts = keys.value_counts().reindex(list(PATTERN_ORDER), fill_value=0)
        return self.table_from_counts(
            [int(count) for count in counts],
            config.threshold,
            config.metric,
            classifications,
        )

    def table_from_counts(
        self,
        counts: Mapping[str, int] | Sequence[int],
        threshold: float = 0.0,
        metric: str = "ndcg@3",
        classifications: Iterable[QueryClassification] = (),
    ) -> AnalysisTable:
        """Aggregate a table from the eight pattern counts.

        Percentages are rounded half up to one decimal. Rounding residue is
        then moved one tenth at a time onto the largest entries, so the class
        percentages sum to 100.0 and each class's rows sum to its percentage.

        Args:
            counts: Counts keyed by pattern, or eight counts in pattern order
                (ooo, voo, ovo, vvo, oov, vov, ovv, vvv).
            threshold: The threshold the counts were taken at.
            metric: The metric id the counts were taken with.
            classifications: Optional per-query detail kept on the table.

        Returns:
            The aggregated table.

        Raises:
            AnalysisError: If the counts are malformed.

        Example:
            ```python
            table = ops.table_from_counts([20, 0, 7, 1, 51, 2, 88, 39])
            table.class_percentages
            # Returns: {'ranking_error': 13.5, 'query_resolution_error': 25.5,
            #           'no_error': 61.0}
            ```

        """
        pattern_counts = self._pattern_counts(counts)
        series = pd.Series(pattern_counts, dtype="int64")
        total = int(series.sum())
        by_class = series.groupby(_PATTERN_CLASS).sum()
        class_counts = {
            name: int(by_class.get(name, 0)) for name in map(str, CLASS_ORDER)
        }
        original_passing = int(series[series.index.str.startswith("v")].sum())

        row_tenths = dict.fromkeys(PATTERN_ORDER, 0)
        class_tenths = dict.fromkeys(class_counts, 0)
        original_tenths = 0
        if total:
            class_values = [_half_up_tenths(c, total) for c in class_counts.values()]
            _absorb_residual(class_values, list(class_counts.values()), 1000)
            class_tenths = dict(zip(class_counts, class_values, strict=True))
            for error_class, keys in CLASS_MEMBERS.items():
                row_counts = [pattern_counts[key] for key in keys]
                rows = [_half_up_tenths(count, total) for count in row_counts]
                _absorb_residual(rows, row_counts, class_tenths[str(error_class)])
                row_tenths.update(zip(keys, rows, strict=True))
            original_tenths = _half_up_tenths(original_passing, total)

        return AnalysisTable(
            metric=metric,
            threshold=threshold,
            total=total,
            pattern_counts=pattern_counts,
            row_percentages={key: tenths / 10 for key, tenths in row_tenths.items()},
            class_counts=class_counts,
            class_percentages={
                name: tenths / 10 for name, tenths in class_tenths.items()
            },
            original_pass_pct=original_tenths / 10,
            classifications=tuple(classifications),
        )

    def sweep(
        self,
        original: Mapping[str, float],
        resolved: Mapping[str, float],
        human: Mapping[str, float],
        metric: str = "ndcg@3",
        thresholds: Sequence[float] | None = None,
        missing_as_zero: bool = False,
    ) -> list[AnalysisTable]:
        """Analyze the same per-query values at many thresholds.

        Args:
            original: Metric value per qid for the original queries.
            resolved: Metric value per qid for the resolved queries.
            human: Metric value per qid for the human rewrites.
            metric: The metric id of the values.
            thresholds: Ascending thresholds in [0, 1]; defaults to 0 followed
                by 0.02, 0.04, ..., 1.0.
            missing_as_zero: As for `analyze`.

        Returns:
            One table per threshold, in threshold order.

        Raises:
            AnalysisError: If the thresholds are empty, unsorted or out of range.

        """
        thresholds = self.validate_thresholds(
            self.default_thresholds() if thresholds is None else thresholds
        )
        # Fail on mismatched qids before fanning out.
        self._shared_qids(original, resolved, human, missing_as_zero)

        def analyze_at(threshold: float) -> AnalysisTable:
            config = AnalysisConfig(metric=metric, threshold=threshold)
            return self.analyze(original, resolved, human, config, missing_as_zero)

        tables = self._map_ordered(analyze_at, thresholds)
        self._logger.info("swept %d thresholds", len(tables))
        return tables

    def sweep_counts(
        self,
        counts: Mapping[str, int] | Sequence[int],
        metric: str = "ndcg@3",
        thresholds: Sequence[float] | None = None,
    ) -> list[AnalysisTable]:
        """Build one table per threshold from fixed pattern counts.

        Raises:
            AnalysisError: If the thresholds or the counts are malformed.

        """
        thresholds = self.validate_thresholds(
            self.default_thresholds() if thresholds is None else thresholds
        )
        return [self.table_from_counts(counts, t, metric) for t in thresholds]

    def validate_thresholds(self, thresholds: Sequence[float]) -> list[float]:
        """Check a threshold list is non-empty, in [0, 1] and sorted ascending.

        Returns:
            The thresholds as a list.

        Raises:
            AnalysisError: On the first violated condition.

        """
        values = list(thresholds)
        if not values:
            raise AnalysisError("threshold list is empty")
        for threshold in values:
            self._check_unit(threshold, "threshold")
        if any(a > b for a, b in zip(values, values[1:], strict=False)):
            raise AnalysisError("thresholds must be sorted ascending")
        return values

    def default_thresholds(self, step: float = 0.02) -> list[float]:
        """Return 0 followed by step, 2 * step, ... up to 1.

        Raises:
            AnalysisError: If step is not in (0, 1].

        """
        if not 0.0 < step <= 1.0:
            raise AnalysisError(f"sweep step must be in (0, 1], got {step}")
        points = int(np.floor(1.0 / step + 1e-9))
        return [0.0, *np.round(np.arange(1, points + 1) * step, 10).tolist()]

    def values_from_report(self, report: MetricReport, metric: str) -> dict[str, float]:
        """Extract one metric's per-query values from an evaluation report."""
        return {
            qid: values[metric]
            for qid, values in report.per_query.items()
            if metric in values
        }

    def emit_analysis(
        self, tables: Sequence[AnalysisTable], fmt: AnalysisFormat = "csv"
    ) -> str:
        """Render tables as csv, as one text block per threshold, or as a matrix.

        The csv has the columns of `CSV_HEADER`; `matrix` is a TSV with one row
        per pattern and class and one column per threshold.

        Returns:
            The rendered text.

        Raises:
            ValueError: If the format is unknown.

        """
        match fmt:
            case "csv":
                return self._emit_csv(tables)
            case "table":
                return "\n".join(self._emit_block(table) for table in tables)
            case "matrix":
                return self._emit_matrix(tables)
            case _:
                raise ValueError(f"unknown analysis format {fmt!r}")

    def parse_analysis_csv(
        self, text: str, metric: str = "ndcg@3"
    ) -> list[AnalysisTable]:
        """Rebuild tables from csv written by `emit_analysis`.

        Raises:
            ParseError: If the header, a count or a percentage is wrong.

        """
        try:
            frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
        except pd.errors.EmptyDataError as e:
            raise ParseError("unexpected analysis csv header", 1) from e
        except pd.errors.ParserError as e:
            raise ParseError(f"expected {len(CSV_HEADER)} columns: {e}", 1) from e
        if tuple(frame.columns) != CSV_HEADER:
            raise ParseError("unexpected analysis csv header", 1)
        tables: list[AnalysisTable] = []
        for line_number, fields in enumerate(frame.to_dict("records"), start=2):
            try:
                threshold = float(fields["threshold"])
                counts = [int(fields[f"pattern_{key}"]) for key in PATTERN_ORDER]
            except ValueError as e:
                raise ParseError(str(e), line_number) from e
            table = self.table_from_counts(counts, threshold, metric)
            for column, error_class in _PCT_COLUMNS.items():
                expected = f"{table.class_percentages[str(error_class)]:.1f}"
                if fields[column] != expected:
                    raise ParseError(
                        f"{column} is {fields[column]}, counts give {expected}",
                        line_number,
                    )
            tables.append(table)
        return tables

    def analysis_frame(self, tables: Sequence[AnalysisTable]) -> pd.DataFrame:
        """Collect tables into a frame with the columns of `CSV_HEADER`.

        Percentage columns hold their one-decimal text so the rounded values
        are written exactly.
        """
        frame = pd.DataFrame(
            [
                {
                    "threshold": table.threshold,
                    **{
                        f"pattern_{key}": table.pattern_counts[key]
                        for key in PATTERN_ORDER
                    },
                    **{
                        column: table.class_percentages[str(error_class)]
                        for column, error_class in _PCT_COLUMNS.items()
                    },
                }
                for table in tables
            ],
            columns=list(CSV_HEADER),
        )
        pct_columns = list(_PCT_COLUMNS)
        frame[pct_columns] = frame[pct_columns].map("{:.1f}".format)
        return frame

    def _emit_csv(self, tables: Sequence[AnalysisTable]) -> str:
        return self.analysis_frame(tables).to_csv(index=False, lineterminator="\n")

    def _emit_block(self, table: AnalysisTable) -> str:
        predicate = "> 0" if table.threshold == 0.0 else f">= {table.threshold}"
        lines = [
            f"{table.metric} {predicate}  ({table.total} queries)",
            f"{'original':<9}{'resolved':<9}{'human':<6}{'count':>7}{'%':>7}"
            f"  {'class':<24}{'class %':>7}",
        ]
        for error_class, keys in CLASS_MEMBERS.items():
            name = str(error_class)
            for position, key in enumerate(keys):
                original, resolved, human = ("v" if c == "v" else "x" for c in key)
                row = (
                    f"{original:<9}{resolved:<9}{human:<6}"
                    f"{table.pattern_counts[key]:>7}{table.row_percentages[key]:>7.1f}"
                )
                if position == 0:
                    row += f"  {name:<24}{table.class_percentages[name]:>7.1f}"
                lines.append(row)
        lines.append(f"original query passes: {table.original_pass_pct:.1f}%")
        return "\n".join(lines) + "\n"

    def _emit_matrix(self, tables: Sequence[AnalysisTable]) -> str:
        frame = self.analysis_frame(tables)
        frame["threshold"] = frame["threshold"].map(str)
        labels = {f"pattern_{key}": key for key in PATTERN_ORDER} | {
            column: f"pct_{error_class}" for column, error_class in _PCT_COLUMNS.items()
        }
        matrix = frame.set_index("threshold").T.rename(index=labels)
        return matrix.to_csv(sep="\t", index_label="pattern", lineterminator="\n")

    def _pattern_counts(
        self, counts: Mapping[str, int] | Sequence[int]
    ) -> dict[str, int]:
        if isinstance(counts, Mapping):
            unknown = set(counts) - set(PATTERN_ORDER)
            if unknown:
                raise AnalysisError(f"unknown patterns {sorted(unknown)}")
            values = [counts.get(key, 0) for key in PATTERN_ORDER]
        else:
            values = list(counts)
            if len(values) != len(PATTERN_ORDER):
                raise AnalysisError(
                    f"expected {len(PATTERN_ORDER)} pattern counts, got {len(values)}"
                )
        if any(value < 0 for value in values):
            raise AnalysisError("pattern counts must be non-negative")
        return dict(zip(PATTERN_ORDER, values, strict=True))

    def _shared_qids(
        self,
        original: Mapping[str, float],
        resolved: Mapping[str, float],
        human: Mapping[str, float],
        missing_as_zero: bool,
    ) -> list[str]:
        ordered = list(dict.fromkeys([*original, *resolved, *human]))
        if missing_as_zero:
            return ordered
        common = set(original) & set(resolved) & set(human)
        differing = sorted(set(ordered) - common)
        if differing:
            raise AnalysisError(
                "runs cover different queries; not in every run: "
                + ", ".join(differing)
            )
        return ordered

    def _check_unit(self, value: float, name: str) -> None:
        if not 0.0 <= value <= 1.0:
            raise AnalysisError(f"{name} must be in [0, 1], got {value}")
