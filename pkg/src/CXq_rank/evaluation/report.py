"""Evaluation report model, TSV persistence and console rendering."""

from __future__ import annotations

from pathlib import Path

import polars as pl
from pydantic import BaseModel, Field
from rich.table import Table

from CXq_rank.storage.tables import read_table, write_table

REPORT_SCHEMA = {"metric": pl.Utf8, "cutoff": pl.Int64, "value": pl.Float64}
DEFAULT_CUTOFFS = (3, 5, 10)


class QueryMetrics(BaseModel):
    qid: str
    ndcg_at: dict[int, float | None]
    arp: float | None = None


class EvalReport(BaseModel):
    ndcg_at: dict[int, float] = Field(default_factory=dict)
    arp: float | None = None
    n_queries: int = 0
    n_ndcg_skipped: int = 0
    n_arp_skipped: int = 0
    gain: str = "exp2"
    per_query: list[QueryMetrics] | None = None

    def to_frame(self) -> pl.DataFrame:
        rows: list[tuple[str, int, float]] = [
            ("ndcg", k, v) for k, v in sorted(self.ndcg_at.items())
        ]
        if self.arp is not None:
            rows.append(("arp", 0, self.arp))
        rows.append(("n_queries", 0, float(self.n_queries)))
        rows.append(("n_ndcg_skipped", 0, float(self.n_ndcg_skipped)))
        rows.append(("n_arp_skipped", 0, float(self.n_arp_skipped)))
        return pl.DataFrame(
            {
                "metric": [r[0] for r in rows],
                "cutoff": [r[1] for r in rows],
                "value": [r[2] for r in rows],
            },
            schema=REPORT_SCHEMA,
        )

    @classmethod
    def from_frame(cls, df: pl.DataFrame) -> EvalReport:
        values: dict[str, float] = {}
        ndcg: dict[int, float] = {}
        for metric, cutoff, value in df.iter_rows():
            if metric == "ndcg":
                ndcg[int(cutoff)] = float(value)
            else:
                values[metric] = float(value)
        return cls(
            ndcg_at=ndcg,
            arp=values.get("arp"),
            n_queries=int(values.get("n_queries", 0)),
            n_ndcg_skipped=int(values.get("n_ndcg_skipped", 0)),
            n_arp_skipped=int(values.get("n_arp_skipped", 0)),
        )

    def write(self, path: Path, config_hash: str | None = None) -> Path:
        return write_table(self.to_frame(), path, config_hash=config_hash)

    @classmethod
    def read(cls, path: Path) -> EvalReport:
        return cls.from_frame(read_table(path, schema=REPORT_SCHEMA))

    def to_table(self, title: str = "Evaluation") -> Table:
        table = Table(title=title)
        table.add_column("Metric", style="cyan")
        table.add_column("Value", justify="right", style="green")
        for k, v in sorted(self.ndcg_at.items()):
            table.add_row(f"NDCG@{k}", f"{v:.4f}")
        table.add_row("ARP", "-" if self.arp is None else f"{self.arp:.3f}")
        table.add_row("Queries", str(self.n_queries))
        if self.n_ndcg_skipped:
            table.add_row("Skipped (no relevant)", str(self.n_ndcg_skipped))
        return table
