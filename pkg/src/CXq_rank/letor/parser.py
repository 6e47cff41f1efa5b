"""LETOR/SVMLight text format: ``<grade> qid:<id> <idx>:<val> ... # comment``.

Feature indices are 1-based on disk and 0-based in memory. Zero-valued
features are omitted on write, so text whose last feature columns are all
zero does not carry the dimensionality: pass ``max_feature_hint`` when parsing
it. Files written by :func:`write_letor` prepend a ``# feature_dim=<n>``
comment in that case; the reader treats that comment as a dimensionality hint
and ignores every other comment.
"""

from __future__ import annotations

import math
import re
from collections.abc import Iterable
from pathlib import Path

import numpy as np

from CXq_rank.letor.models import (
    MAX_GRADE,
    Dataset,
    Document,
    EmptyDatasetError,
    LetorParseError,
    LetorValidationError,
    Query,
    SplitTag,
)
from CXq_rank.utils.logging import get_logger

logger = get_logger(__name__)

_DIM_HEADER = re.compile(r"^\s*#\s*feature_dim\s*=\s*(\d+)\s*$")


def _parse_grade(token: str, line_no: int) -> int:
    try:
        grade = int(token)
    except ValueError:
        try:
            value = float(token)
        except ValueError as e:
            raise LetorParseError(line_no, f"grade {token!r} is not a number") from e
        if not value.is_integer():
            raise LetorValidationError(f"non-integer grade {token!r}", line_no) from None
        grade = int(value)
    if not 0 <= grade <= MAX_GRADE:
        raise LetorValidationError(f"grade {grade} outside [0, {MAX_GRADE}]", line_no)
    return grade


def _parse_features(tokens: list[str], line_no: int) -> dict[int, float]:
    features: dict[int, float] = {}
    last_idx = 0
    for tok in tokens:
        idx_text, sep, val_text = tok.partition(":")
        if not sep:
            raise LetorParseError(line_no, f"feature token {tok!r} lacks ':'")
        try:
            idx = int(idx_text)
            value = float(val_text)
        except ValueError as e:
            raise LetorParseError(line_no, f"bad feature token {tok!r}") from e
        if idx <= last_idx:
            raise LetorParseError(
                line_no, f"feature index {idx} not strictly increasing (previous {last_idx})"
            )
        if not math.isfinite(value):
            raise LetorValidationError(f"non-finite value for feature {idx}", line_no)
        features[idx] = value
        last_idx = idx
    return features


def parse_letor(
    stream: str | Iterable[str],
    max_feature_hint: int | None = None,
    split_tag: SplitTag = SplitTag.TRAIN,
) -> Dataset:
    """Parse a LETOR text stream into a :class:`Dataset`.

    Documents are grouped by qid in file order. A qid that reappears after a
    different qid is rejected rather than merged.
    """
    if max_feature_hint is not None and max_feature_hint < 1:
        raise LetorValidationError(f"max_feature_hint must be positive, got {max_feature_hint}")
    lines = stream.splitlines() if isinstance(stream, str) else stream

    hint = max_feature_hint or 0
    groups: dict[str, list[tuple[int, dict[int, float]]]] = {}
    current_qid: str | None = None
    max_idx = 0

    for line_no, raw in enumerate(lines, start=1):
        header = _DIM_HEADER.match(raw)
        if header:
            hint = max(hint, int(header.group(1)))
            continue
        body = raw.partition("#")[0].strip()
        if not body:
            continue

        tokens = body.split()
        if len(tokens) < 2:
            raise LetorParseError(line_no, "expected '<grade> qid:<id> ...'")
        grade = _parse_grade(tokens[0], line_no)

        qid_tok = tokens[1]
        if not qid_tok.startswith("qid:") or len(qid_tok) == 4:
            raise LetorParseError(line_no, f"expected 'qid:<id>', got {qid_tok!r}")
        qid = qid_tok[4:]

        features = _parse_features(tokens[2:], line_no)
        if features:
            max_idx = max(max_idx, max(features))

        if qid != current_qid:
            if qid in groups:
                raise LetorValidationError(f"qid {qid} reappears after another qid", line_no)
            groups[qid] = []
            current_qid = qid
        groups[qid].append((grade, features))

    if not groups:
        raise EmptyDatasetError("no documents in input")

    feature_dim = max(max_idx, hint)
    if feature_dim < 1:
        raise LetorValidationError("no feature indices and no feature_dim hint")

    queries = []
    for qid, rows in groups.items():
        docs = []
        for doc_index, (grade, features) in enumerate(rows):
            vec = np.zeros(feature_dim, dtype=np.float64)
            for idx, value in features.items():
                vec[idx - 1] = value
            docs.append(Document(features=vec, relevance=grade, doc_index=doc_index))
        queries.append(Query(qid=qid, documents=tuple(docs)))

    dataset = Dataset(queries=tuple(queries), feature_dim=feature_dim, split_tag=split_tag)
    logger.debug(
        "letor_parsed",
        queries=len(dataset),
        documents=dataset.n_documents,
        feature_dim=feature_dim,
    )
    return dataset


def _format_value(value: float) -> str:
    # repr is the shortest string that round-trips to the same float
    return repr(float(value))


def serialize_letor(dataset: Dataset, *, dim_header: bool = False) -> str:
    """Serialize a dataset, one ``\\n``-terminated line per document in qid order.

    With ``dim_header`` a ``# feature_dim=<n>`` line goes first when the
    dimensionality is not recoverable from the feature indices.
    """
    lines: list[str] = []
    max_nonzero = 0
    for query in dataset.queries:
        for doc in query.documents:
            parts = [str(doc.relevance), f"qid:{query.qid}"]
            for idx in np.flatnonzero(doc.features):
                parts.append(f"{idx + 1}:{_format_value(doc.features[idx])}")
                max_nonzero = max(max_nonzero, int(idx) + 1)
            lines.append(" ".join(parts))
    if dim_header and max_nonzero < dataset.feature_dim:
        lines.insert(0, f"# feature_dim={dataset.feature_dim}")
    return "\n".join(lines) + "\n"


def read_letor(
    path: Path,
    max_feature_hint: int | None = None,
    split_tag: SplitTag = SplitTag.TRAIN,
) -> Dataset:
    with open(path, encoding="utf-8") as f:
        return parse_letor(f, max_feature_hint=max_feature_hint, split_tag=split_tag)


def write_letor(dataset: Dataset, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_letor(dataset, dim_header=True), encoding="utf-8")
    logger.info("letor_written", path=str(path), queries=len(dataset))
    return path
