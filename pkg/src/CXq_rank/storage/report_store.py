"""DuckDB view over the evaluation reports of many run directories."""

from __future__ import annotations

from collections.abc import Generator
from contextlib import contextmanager

import duckdb
import polars as pl

from CXq_rank.utils.logging import get_logger

logger = get_logger(__name__)


class ReportStore:
    """In-memory DuckDB holding one long ``reports`` table."""

    def __init__(self) -> None:
        self._conn: duckdb.DuckDBPyConnection | None = None

    @contextmanager
    def connect(self) -> Generator[ReportStore, None, None]:
        self._conn = duckdb.connect(":memory:")
        try:
            yield self
        finally:
            self._conn.close()
            self._conn = None

    def load(self, reports: pl.DataFrame) -> int:
        """Register rows ``run, method, metric, cutoff, value`` as the ``reports`` table."""
        assert self._conn is not None, "Not connected. Use `with store.connect():`"
        self._conn.register("reports_frame", reports)
        self._conn.execute("CREATE OR REPLACE TABLE reports AS SELECT * FROM reports_frame")
        self._conn.unregister("reports_frame")
        logger.debug("reports_loaded", rows=len(reports))
        return len(reports)

    def summary(self, metric: str, cutoff: int) -> pl.DataFrame:
        """Mean and sample standard deviation per method."""
        assert self._conn is not None, "Not connected. Use `with store.connect():`"
        return self._conn.execute(
            """
            SELECT method,
                   count(*) AS n_runs,
                   avg(value) AS mean,
                   stddev_samp(value) AS std
            FROM reports
            WHERE metric = ? AND cutoff = ?
            GROUP BY method
            ORDER BY method
            """,
            [metric, cutoff],
        ).pl()
