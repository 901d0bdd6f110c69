"""Lempel-Ziv Jaccard distance screening for structural drift.

Two byte streams are compared by LZ-parsing each into a set of distinct
phrases and taking the Jaccard distance of the sets: 0 means structurally
identical, 1 means nothing shared.  Exact mode works on the full phrase
sets; sketch mode keeps only the k smallest 64-bit phrase hashes
(bottom-k), trading a bounded estimation error for constant size.

This is a structural screen, not a semantic one: it flags divergence of
the serialized bytes, and thresholds are a policy decision supplied by
the caller (none is shipped).

The parsing kernel is compiled when available; set ``AIID_KERNEL=pure``
to force the fallback.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from enum import Enum

from . import _pure

if os.environ.get("AIID_KERNEL") == "pure":
    _kernel = _pure
else:
    try:
        from . import _ckernel as _kernel  # type: ignore[no-redef]
    except ImportError:
        _kernel = _pure

HASH_FNV1A64 = 1
DEFAULT_SKETCH_SIZE = 1024

SKETCH_MAGIC = b"LZJ1"


def backend_name() -> str:
    return _kernel.BACKEND


class LzjdError(ValueError):
    pass


class Mode(str, Enum):
    EXACT = "EXACT"
    SKETCH = "SKETCH"


class Outcome(str, Enum):
    WITHIN = "WITHIN"
    DRIFTED = "DRIFTED"


def lz_phrases(data: bytes) -> set[bytes]:
    """Distinct phrases of the LZ parse of ``data``; empty input gives an empty set."""
    return set(_kernel.phrases(data))


def jaccard_distance(a: set[bytes], b: set[bytes]) -> float:
    """1 - |a n b| / |a u b|.  Undefined (raises) when both sets are empty."""
    if not a and not b:
        raise LzjdError("Jaccard distance is undefined for two empty phrase sets")
    union = len(a | b)
    return 1.0 - len(a & b) / union


@dataclass(frozen=True)
class DigestSketch:
    """Bottom-k sketch: the k smallest distinct 64-bit phrase hashes, ascending."""

    k: int
    values: tuple[int, ...]
    hash_algorithm_id: int = HASH_FNV1A64

    def __post_init__(self):
        if self.k < 1:
            raise LzjdError(f"sketch size must be >= 1, got {self.k}")
        if len(self.values) > self.k:
            raise LzjdError("sketch holds more values than its size")
        if any(x >= y for x, y in zip(self.values, self.values[1:])):
            raise LzjdError("sketch values must be strictly increasing")


def sketch(data: bytes, k: int = DEFAULT_SKETCH_SIZE) -> DigestSketch:
    """Bottom-k sketch of the FNV-1a 64 phrase hashes of ``data``."""
    if k < 1:
        raise LzjdError(f"sketch size must be >= 1, got {k}")
    hashes = _kernel.phrase_hashes(data)
    return DigestSketch(k=k, values=tuple(hashes[:k]))


def sketch_distance(a: DigestSketch, b: DigestSketch) -> float:
    """Bottom-k Jaccard distance estimate between two sketches."""
    if a.k != b.k:
        raise LzjdError(f"sketch sizes differ: {a.k} vs {b.k}")
    if a.hash_algorithm_id != b.hash_algorithm_id:
        raise LzjdError(
            f"hash algorithms differ: {a.hash_algorithm_id} vs {b.hash_algorithm_id}"
        )
    set_a = set(a.values)
    set_b = set(b.values)
    if not set_a and not set_b:
        raise LzjdError("Jaccard distance is undefined for two empty sketches")
    closest = sorted(set_a | set_b)[: a.k]
    shared = sum(1 for v in closest if v in set_a and v in set_b)
    return 1.0 - shared / len(closest)


@dataclass(frozen=True)
class DriftPolicy:
    """Caller-defined drift threshold; scores above it flag divergence."""

    threshold: float
    policy_id: str = "default"

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise LzjdError(f"threshold must be in [0, 1], got {self.threshold}")


@dataclass(frozen=True)
class DriftVerdict:
    score: float
    outcome: Outcome
    mode: Mode
    anchor_ai_id: str | None = None


def screen_drift(
    anchor: bytes | DigestSketch,
    candidate: bytes,
    policy: DriftPolicy,
    anchor_ai_id: str | None = None,
) -> DriftVerdict:
    """Score a candidate stream against a registered anchor.

    Exact mode when the anchor weight stream is available, sketch mode
    when only its sketch is.  The outcome is DRIFTED iff score exceeds
    the policy threshold.
    """
    if isinstance(anchor, DigestSketch):
        score = sketch_distance(anchor, sketch(candidate, k=anchor.k))
        mode = Mode.SKETCH
    else:
        score = jaccard_distance(lz_phrases(anchor), lz_phrases(candidate))
        mode = Mode.EXACT
    outcome = Outcome.DRIFTED if score > policy.threshold else Outcome.WITHIN
    return DriftVerdict(score=score, outcome=outcome, mode=mode, anchor_ai_id=anchor_ai_id)


def dump_sketch(s: DigestSketch) -> bytes:
    """Serialize: "LZJ1" | k u32 | count u32 | values u64 each | algorithm u8."""
    parts = [SKETCH_MAGIC, struct.pack("<II", s.k, len(s.values))]
    parts.extend(struct.pack("<Q", v) for v in s.values)
    parts.append(struct.pack("<B", s.hash_algorithm_id))
    return b"".join(parts)


def load_sketch(data: bytes) -> DigestSketch:
    if data[:4] != SKETCH_MAGIC:
        raise LzjdError("bad sketch magic, expected b'LZJ1'")
    if len(data) < 13:
        raise LzjdError("truncated sketch")
    k, count = struct.unpack_from("<II", data, 4)
    expected_len = 12 + 8 * count + 1
    if len(data) != expected_len:
        raise LzjdError(f"sketch length {len(data)} != expected {expected_len}")
    values = struct.unpack_from(f"<{count}Q", data, 12) if count else ()
    (algorithm,) = struct.unpack_from("<B", data, 12 + 8 * count)
    if algorithm != HASH_FNV1A64:
        raise LzjdError(f"unknown hash algorithm id {algorithm}")
    return DigestSketch(k=k, values=tuple(values), hash_algorithm_id=algorithm)
