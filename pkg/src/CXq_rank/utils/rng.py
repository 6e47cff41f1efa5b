"""Deterministic random substreams."""

from __future__ import annotations

import hashlib

import numpy as np


def stable_key(text: str) -> int:
    """64-bit integer digest of a string, stable across processes (unlike ``hash``)."""
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little")


def derive_rng(seed: int, *keys: int | str) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``.

    String keys are digested with :func:`stable_key`, so the stream for
    ``(seed, qid, counter)`` is the same no matter which process, or in which
    order, sessions are generated.
    """
    entropy = [seed & 0xFFFFFFFFFFFFFFFF]
    for key in keys:
        entropy.append(stable_key(key) if isinstance(key, str) else int(key))
    return np.random.default_rng(np.random.SeedSequence(entropy))
