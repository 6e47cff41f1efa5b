"""Tests for the sessions TSV."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from CXq_rank.simulation.models import Session, SimulationError
from CXq_rank.simulation.sessions_io import read_sessions, write_sessions
from CXq_rank.storage.tables import read_config_hash


def test_write_read_sessions(tmp_path: Path, sessions: list[Session]):
    path = write_sessions(sessions, tmp_path / "sessions.tsv", config_hash="abc123")

    assert read_config_hash(path) == "abc123"
    header = path.read_text().splitlines()[1]
    assert header.split("\t") == ["session", "qid", "position", "doc_index", "click", "dwell", "synth"]

    loaded = read_sessions(path)
    assert len(loaded) == len(sessions)
    for a, b in zip(sessions, loaded, strict=True):
        assert (a.qid, a.session_id) == (b.qid, b.session_id)
        np.testing.assert_array_equal(a.ranked_docs, b.ranked_docs)
        np.testing.assert_array_equal(a.clicks, b.clicks)
        np.testing.assert_allclose(a.dwell, b.dwell, rtol=1e-12)
        np.testing.assert_allclose(a.synth, b.synth, rtol=1e-12)


def test_session_rejects_dwell_without_click():
    with pytest.raises(SimulationError):
        Session(
            qid="q",
            ranked_docs=np.array([0, 1]),
            clicks=np.array([0, 1]),
            dwell=np.array([1.0, 1.0]),
            synth=np.array([1.0, 2.0]),
        )


def test_session_rejects_ragged_vectors():
    with pytest.raises(SimulationError):
        Session(
            qid="q",
            ranked_docs=np.array([0, 1]),
            clicks=np.array([0]),
            dwell=np.array([0.0, 0.0]),
            synth=np.array([0.0, 0.0]),
        )
