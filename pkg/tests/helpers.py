"""Shared test fixtures and independent oracles.

The oracles here deliberately re-implement behavior from first
principles (textbook LZ parse, field-by-field identifier enumeration,
struct-level manifest generation) so library code is checked against a
second, unrelated path.
"""

from __future__ import annotations

import random

from aiid.aiw import ELEMENT_SIZE, CanonicalTensorRecord, Dtype, WeightManifest, element_count
from aiid.identity import BASE36

DTYPES = list(Dtype)


class DRBG:
    """Deterministic byte source for reproducible proofs."""

    def __init__(self, seed):
        self._rng = random.Random(seed)

    def __call__(self, n: int) -> bytes:
        return self._rng.randbytes(n)


def random_manifest(rng: random.Random, max_records: int = 6, max_dim: int = 5,
                    max_rank: int = 3) -> WeightManifest:
    count = rng.randrange(0, max_records + 1)
    names: set[str] = set()
    while len(names) < count:
        length = rng.randrange(1, 12)
        names.add("".join(rng.choice("abcdefghijklmnopqrstuvwxyz._0123456789") for _ in range(length)))
    records = []
    for name in sorted(names, key=lambda s: s.encode("utf-8")):
        dtype = rng.choice(DTYPES)
        rank = rng.randrange(0, max_rank + 1)
        shape = tuple(rng.randrange(0, max_dim + 1) for _ in range(rank))
        data = rng.randbytes(ELEMENT_SIZE[dtype] * element_count(shape))
        records.append(CanonicalTensorRecord(name, dtype, shape, data))
    return WeightManifest(tuple(records))


def naive_lz_phrases(data: bytes) -> set[bytes]:
    """Textbook statement of the parsing rule, for oracle comparison."""
    phrases: set[bytes] = set()
    current = b""
    for i in range(len(data)):
        current += data[i : i + 1]
        if current not in phrases:
            phrases.add(current)
            current = b""
    return phrases


def naive_jaccard_distance(a: set[bytes], b: set[bytes]) -> float:
    return 1.0 - len(a & b) / len(a | b)


def fnv1a64(data: bytes) -> int:
    """Independent straight-line FNV-1a 64, for hashing oracle checks."""
    value = 0xCBF29CE484222325
    for byte in data:
        value = ((value ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return value


def fmix64(x: int) -> int:
    mask = 0xFFFFFFFFFFFFFFFF
    x ^= x >> 33
    x = (x * 0xFF51AFD7ED558CCD) & mask
    x ^= x >> 33
    x = (x * 0xC4CEB9FE1A85EC53) & mask
    x ^= x >> 33
    return x


# character classes per position of the rendered secondary identifier
_LABEL_CLASSES = {
    "letter": "ABCDEFGHIJKLMNOPQRSTUVWXYZ",
    "alnum": BASE36,
    "digit": "0123456789",
}


def label_position_classes(rendered: str) -> list[tuple[int, str]]:
    """(index, valid character class) for every substitutable position
    outside the checksum; hyphens are structure, not fields."""
    spans = [
        (0, 2, "letter"),    # country
        (3, 11, "alnum"),    # owner
        (12, 17, "alnum"),   # family+version
        (18, 26, "digit"),   # date
        (27, 31, "alnum"),   # hash tail
    ]
    positions = []
    for start, end, cls in spans:
        for i in range(start, end):
            positions.append((i, _LABEL_CLASSES[cls]))
    assert all(rendered[i] in cls for i, cls in positions)
    return positions


def enumerate_substitutions(rendered: str):
    """Yield every string formed by one in-class substitution outside the
    checksum."""
    for index, alphabet in label_position_classes(rendered):
        for char in alphabet:
            if char != rendered[index]:
                yield rendered[:index] + char + rendered[index + 1 :]


def perturb_fraction(rng: random.Random, data: bytes, fraction: float) -> bytes:
    """Overwrite the given fraction of positions with fresh random bytes."""
    out = bytearray(data)
    for i in rng.sample(range(len(out)), int(len(out) * fraction)):
        out[i] = rng.randrange(256)
    return bytes(out)
