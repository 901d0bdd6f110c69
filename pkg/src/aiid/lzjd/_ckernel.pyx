# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled LZ phrase extraction kernel.

Same contract as ``_pure``: trie-based parse, phrases and FNV-1a 64
phrase hashes.  The trie edge map is an open-addressing hash table with
linear probing; keys are ``(node << 8) | byte`` (+1, zero meaning empty).
"""

from libc.stdlib cimport free, malloc, realloc
from libc.stdint cimport int64_t, uint8_t, uint32_t, uint64_t

BACKEND = "compiled"

cdef uint64_t FNV_OFFSET_C = 0xCBF29CE484222325u
cdef uint64_t FNV_PRIME_C = 0x100000001B3u

FNV_OFFSET = FNV_OFFSET_C
FNV_PRIME = FNV_PRIME_C


cdef struct Trie:
    # open-addressing map: key -> node id
    uint64_t *keys       # 0 = empty slot; stored key is real key + 1
    uint32_t *slot_node
    uint64_t capacity    # power of two
    uint64_t used
    # per-node data (node 0 is the root)
    uint32_t *parent
    uint8_t *edge
    uint64_t node_count
    uint64_t node_capacity


cdef int _trie_init(Trie *t, uint64_t expected_nodes) except -1:
    cdef uint64_t cap = 64
    while cap < expected_nodes * 2:
        cap <<= 1
    t.keys = <uint64_t *> malloc(cap * sizeof(uint64_t))
    t.slot_node = <uint32_t *> malloc(cap * sizeof(uint32_t))
    t.node_capacity = expected_nodes if expected_nodes > 16 else 16
    t.parent = <uint32_t *> malloc(t.node_capacity * sizeof(uint32_t))
    t.edge = <uint8_t *> malloc(t.node_capacity * sizeof(uint8_t))
    if t.keys == NULL or t.slot_node == NULL or t.parent == NULL or t.edge == NULL:
        raise MemoryError()
    cdef uint64_t i
    for i in range(cap):
        t.keys[i] = 0
    t.capacity = cap
    t.used = 0
    t.parent[0] = 0
    t.edge[0] = 0
    t.node_count = 1
    return 0


cdef void _trie_free(Trie *t):
    free(t.keys)
    free(t.slot_node)
    free(t.parent)
    free(t.edge)


cdef int _trie_grow_table(Trie *t) except -1:
    cdef uint64_t new_cap = t.capacity << 1
    cdef uint64_t *new_keys = <uint64_t *> malloc(new_cap * sizeof(uint64_t))
    cdef uint32_t *new_nodes = <uint32_t *> malloc(new_cap * sizeof(uint32_t))
    if new_keys == NULL or new_nodes == NULL:
        free(new_keys)
        free(new_nodes)
        raise MemoryError()
    cdef uint64_t i, slot, mask = new_cap - 1
    for i in range(new_cap):
        new_keys[i] = 0
    for i in range(t.capacity):
        if t.keys[i] != 0:
            slot = (t.keys[i] * 0x9E3779B97F4A7C15u) & mask
            while new_keys[slot] != 0:
                slot = (slot + 1) & mask
            new_keys[slot] = t.keys[i]
            new_nodes[slot] = t.slot_node[i]
    free(t.keys)
    free(t.slot_node)
    t.keys = new_keys
    t.slot_node = new_nodes
    t.capacity = new_cap
    return 0


cdef int _trie_grow_nodes(Trie *t) except -1:
    cdef uint64_t new_cap = t.node_capacity * 2
    t.parent = <uint32_t *> realloc(t.parent, new_cap * sizeof(uint32_t))
    t.edge = <uint8_t *> realloc(t.edge, new_cap * sizeof(uint8_t))
    if t.parent == NULL or t.edge == NULL:
        raise MemoryError()
    t.node_capacity = new_cap
    return 0


cdef int _parse(const uint8_t[::1] data, Trie *t) except -1:
    """Run the LZ parse over ``data``, filling the trie."""
    cdef uint64_t node = 0, key, slot, mask
    cdef Py_ssize_t i, n = data.shape[0]
    cdef uint8_t b
    for i in range(n):
        b = data[i]
        key = ((node << 8) | b) + 1
        mask = t.capacity - 1
        slot = (key * 0x9E3779B97F4A7C15u) & mask
        while True:
            if t.keys[slot] == 0:
                # unseen phrase: insert node, restart at root
                if t.node_count == t.node_capacity:
                    _trie_grow_nodes(t)
                t.keys[slot] = key
                t.slot_node[slot] = <uint32_t> t.node_count
                t.parent[t.node_count] = <uint32_t> node
                t.edge[t.node_count] = b
                t.node_count += 1
                t.used += 1
                if t.used * 2 > t.capacity:
                    _trie_grow_table(t)
                node = 0
                break
            if t.keys[slot] == key:
                node = t.slot_node[slot]
                break
            slot = (slot + 1) & mask
    return 0


def phrases(data: bytes) -> list:
    """All distinct phrases produced by the parse, as byte strings."""
    cdef Trie t
    cdef const uint8_t[::1] view = data
    cdef uint64_t i
    _trie_init(&t, <uint64_t> (len(data) // 2 + 16))
    try:
        if len(data) > 0:
            _parse(view, &t)
        out = [b""] * t.node_count
        for i in range(1, t.node_count):
            out[i] = out[t.parent[i]] + bytes((t.edge[i],))
        return out[1:]
    finally:
        _trie_free(&t)


cdef inline uint64_t fmix64(uint64_t x) nogil:
    # bijective avalanche finalizer (murmur3); FNV-1a alone leaves short
    # phrases clustered in narrow value bands, which skews bottom-k order
    # statistics
    x ^= x >> 33
    x *= 0xFF51AFD7ED558CCDu
    x ^= x >> 33
    x *= 0xC4CEB9FE1A85EC53u
    x ^= x >> 33
    return x


def phrase_hashes(data: bytes) -> list:
    """Sorted distinct 64-bit phrase hashes: FNV-1a, then fmix64."""
    cdef Trie t
    cdef const uint8_t[::1] view = data
    cdef uint64_t *hashes
    cdef uint64_t i
    _trie_init(&t, <uint64_t> (len(data) // 2 + 16))
    try:
        if len(data) > 0:
            _parse(view, &t)
        hashes = <uint64_t *> malloc(t.node_count * sizeof(uint64_t))
        if hashes == NULL:
            raise MemoryError()
        try:
            hashes[0] = FNV_OFFSET_C
            out = []
            for i in range(1, t.node_count):
                hashes[i] = (hashes[t.parent[i]] ^ t.edge[i]) * FNV_PRIME_C
                out.append(fmix64(hashes[i]))
            return sorted(set(out))
        finally:
            free(hashes)
    finally:
        _trie_free(&t)
