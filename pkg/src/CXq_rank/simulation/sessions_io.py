"""Sessions as TSV: ``session qid position doc_index click dwell synth``, one row per shown item."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import polars as pl

from CXq_rank.simulation.models import Session, SimulationError
from CXq_rank.storage.tables import read_table, write_table

SESSION_SCHEMA = {
    "session": pl.Int64,
    "qid": pl.Utf8,
    "position": pl.Int64,
    "doc_index": pl.Int64,
    "click": pl.Int64,
    "dwell": pl.Float64,
    "synth": pl.Float64,
}


def sessions_to_frame(sessions: list[Session]) -> pl.DataFrame:
    if not sessions:
        return pl.DataFrame(schema=SESSION_SCHEMA)
    sizes = [s.size for s in sessions]
    return pl.DataFrame(
        {
            "session": np.repeat([s.session_id for s in sessions], sizes),
            "qid": np.repeat([s.qid for s in sessions], sizes),
            "position": np.concatenate([np.arange(1, n + 1) for n in sizes]),
            "doc_index": np.concatenate([s.ranked_docs for s in sessions]),
            "click": np.concatenate([s.clicks for s in sessions]),
            "dwell": np.concatenate([s.dwell for s in sessions]),
            "synth": np.concatenate([s.synth for s in sessions]),
        },
        schema=SESSION_SCHEMA,
    )


def frame_to_sessions(df: pl.DataFrame) -> list[Session]:
    sessions: list[Session] = []
    for (session_id,), rows in df.sort(["session", "position"]).group_by(
        ["session"], maintain_order=True
    ):
        qids = rows["qid"].unique()
        if len(qids) != 1:
            raise SimulationError(f"session {session_id} spans several qids")
        positions = rows["position"].to_numpy()
        if not np.array_equal(positions, np.arange(1, len(rows) + 1)):
            raise SimulationError(f"session {session_id}: positions are not 1..{len(rows)}")
        sessions.append(
            Session(
                qid=str(qids[0]),
                ranked_docs=rows["doc_index"].to_numpy().astype(np.int64),
                clicks=rows["click"].to_numpy().astype(np.int64),
                dwell=rows["dwell"].to_numpy().astype(np.float64),
                synth=rows["synth"].to_numpy().astype(np.float64),
                session_id=int(session_id),
            )
        )
    return sessions


def write_sessions(sessions: list[Session], path: Path, config_hash: str | None = None) -> Path:
    return write_table(sessions_to_frame(sessions), path, config_hash=config_hash)


def read_sessions(path: Path) -> list[Session]:
    return frame_to_sessions(read_table(path, schema=SESSION_SCHEMA))
