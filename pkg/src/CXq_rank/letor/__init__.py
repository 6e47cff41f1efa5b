"""LETOR/SVMLight ranking datasets: in-memory model, parsing, splitting, normalization."""

from CXq_rank.letor.models import (
    Dataset,
    Document,
    EmptyDatasetError,
    LetorError,
    LetorParseError,
    LetorValidationError,
    Query,
    SplitError,
)
from CXq_rank.letor.parser import parse_letor, read_letor, serialize_letor, write_letor
from CXq_rank.letor.splits import split_queries

__all__ = [
    "Dataset",
    "Document",
    "EmptyDatasetError",
    "LetorError",
    "LetorParseError",
    "LetorValidationError",
    "Query",
    "SplitError",
    "parse_letor",
    "read_letor",
    "serialize_letor",
    "split_queries",
    "write_letor",
]
