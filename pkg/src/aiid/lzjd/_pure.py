"""Pure-Python LZ phrase extraction.

Reference implementation of the kernel interface; the compiled extension
(``_ckernel``) is selected instead when available.  Parsing builds the
phrase dictionary as a trie keyed by ``(node << 8) | byte`` so membership
tests cost one dict lookup per input byte instead of rehashing the
growing phrase.
"""

from __future__ import annotations

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

BACKEND = "pure"


def _parse_trie(data: bytes) -> tuple[list[int], list[int]]:
    """LZ-parse ``data``; returns (parent, edge_byte) arrays, root at index 0."""
    edges: dict[int, int] = {}
    parent = [0]
    edge_byte = [0]
    node = 0
    next_id = 1
    for b in data:
        key = (node << 8) | b
        nxt = edges.get(key)
        if nxt is None:
            edges[key] = next_id
            parent.append(node)
            edge_byte.append(b)
            next_id += 1
            node = 0
        else:
            node = nxt
    return parent, edge_byte


def phrases(data: bytes) -> list[bytes]:
    """All distinct phrases produced by the parse, as byte strings."""
    parent, edge_byte = _parse_trie(data)
    build: list[bytes] = [b""] * len(parent)
    for i in range(1, len(parent)):
        build[i] = build[parent[i]] + bytes((edge_byte[i],))
    return build[1:]


def _fmix64(x: int) -> int:
    """Bijective avalanche finalizer (murmur3); FNV-1a alone leaves short
    phrases clustered in narrow value bands, which skews bottom-k order
    statistics."""
    x ^= x >> 33
    x = (x * 0xFF51AFD7ED558CCD) & _MASK64
    x ^= x >> 33
    x = (x * 0xC4CEB9FE1A85EC53) & _MASK64
    x ^= x >> 33
    return x


def phrase_hashes(data: bytes) -> list[int]:
    """Sorted distinct 64-bit phrase hashes: FNV-1a, then fmix64."""
    parent, edge_byte = _parse_trie(data)
    hashes = [FNV_OFFSET] * len(parent)
    for i in range(1, len(parent)):
        hashes[i] = ((hashes[parent[i]] ^ edge_byte[i]) * FNV_PRIME) & _MASK64
    return sorted({_fmix64(h) for h in hashes[1:]})
