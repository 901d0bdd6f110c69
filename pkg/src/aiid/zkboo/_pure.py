"""Pure-Python three-party circuit kernel for possession proofs.

Evaluates the single-block SHA-256 circuit over XOR-shared words for
three simulated parties (proving) or recomputes two parties' views
(verifying).  Linear gates (XOR, rotations, shifts) act share-wise; AND
gates use the cross-term rule with correlated tape randomness

    z_i = x_i&y_i ^ x_i&y_{i+1} ^ x_{i+1}&y_i ^ r_i ^ r_{i+1}

and 32-bit additions are ripple-carry subcircuits built from those two
gate kinds (one AND per carry bit, carry word communicated).  Public
constants are shared as (value, 0, 0): party 0 carries them.

The compiled twin (``_ckernel``) implements the identical contract; the
two are cross-checked byte-for-byte in tests.
"""

from __future__ import annotations

import struct

from ._sha256 import IV, K, MASK32

BACKEND = "pure"

# One u32 of correlated randomness and one communicated u32 per nonlinear
# element: 600 ripple-carry additions and 128 word ANDs.
ADD_GATES = 48 * 3 + 64 * 7 + 8
AND_GATES = 64 * 2
COMM_WORDS = ADD_GATES + AND_GATES
COMM_BYTES = 4 * COMM_WORDS
INPUT_SHARE_BYTES = 32
TAPE_BYTES = INPUT_SHARE_BYTES + COMM_BYTES

_PAD_WORD_10 = 0x80000000  # 0x80 byte right after the 40-byte message
_LENGTH_WORD_15 = 320      # message length in bits


def _rotr(x: int, n: int) -> int:
    return ((x >> n) | (x << (32 - n))) & MASK32


def _unpack_tape(tape: bytes) -> tuple[int, ...]:
    if len(tape) != TAPE_BYTES:
        raise ValueError(f"tape must be {TAPE_BYTES} bytes, got {len(tape)}")
    return struct.unpack_from(f"<{COMM_WORDS}I", tape, INPUT_SHARE_BYTES)


def _message_words(ns8: bytes, share: bytes, holds_constants: bool) -> list[int]:
    """One party's 16 message-word shares: public words live with party 0."""
    w = [0] * 16
    if holds_constants:
        w[0] = int.from_bytes(ns8[0:4], "big")
        w[1] = int.from_bytes(ns8[4:8], "big")
        w[10] = _PAD_WORD_10
        w[15] = _LENGTH_WORD_15
    for i in range(8):
        w[2 + i] = int.from_bytes(share[4 * i : 4 * i + 4], "big")
    return w


class _ProverGates:
    """Three-lane gate evaluator recording each party's communicated words."""

    lanes = 3

    def __init__(self, rand: tuple[tuple[int, ...], ...]):
        self.rand = rand
        self.pos = 0
        self.comm: tuple[list[int], list[int], list[int]] = ([], [], [])

    def word_and(self, x, y):
        r = (self.rand[0][self.pos], self.rand[1][self.pos], self.rand[2][self.pos])
        self.pos += 1
        z = []
        for i in range(3):
            j = (i + 1) % 3
            z.append((x[i] & y[i]) ^ (x[i] & y[j]) ^ (x[j] & y[i]) ^ r[i] ^ r[j])
        for i in range(3):
            self.comm[i].append(z[i])
        return tuple(z)

    def word_add(self, x, y):
        r = (self.rand[0][self.pos], self.rand[1][self.pos], self.rand[2][self.pos])
        self.pos += 1
        c = [0, 0, 0]
        for t in range(31):
            for i in range(3):
                j = (i + 1) % 3
                a_i = ((x[i] ^ c[i]) >> t) & 1
                b_i = ((y[i] ^ c[i]) >> t) & 1
                a_j = ((x[j] ^ c[j]) >> t) & 1
                b_j = ((y[j] ^ c[j]) >> t) & 1
                gate = (
                    (a_i & b_i) ^ (a_i & b_j) ^ (a_j & b_i)
                    ^ ((r[i] >> t) & 1) ^ ((r[j] >> t) & 1)
                )
                c[i] |= (gate ^ ((c[i] >> t) & 1)) << (t + 1)
        for i in range(3):
            self.comm[i].append(c[i])
        return tuple((x[i] ^ y[i] ^ c[i]) for i in range(3))


class _VerifierGates:
    """Two-lane evaluator: lane 0 recomputed, lane 1 replayed from the proof."""

    lanes = 2

    def __init__(self, rand_a, rand_b, comm_b):
        self.rand_a = rand_a
        self.rand_b = rand_b
        self.comm_b = comm_b
        self.pos = 0
        self.comm_a: list[int] = []

    def word_and(self, x, y):
        r_a = self.rand_a[self.pos]
        r_b = self.rand_b[self.pos]
        z_b = self.comm_b[self.pos]
        self.pos += 1
        z_a = (x[0] & y[0]) ^ (x[0] & y[1]) ^ (x[1] & y[0]) ^ r_a ^ r_b
        self.comm_a.append(z_a)
        return (z_a, z_b)

    def word_add(self, x, y):
        r_a = self.rand_a[self.pos]
        r_b = self.rand_b[self.pos]
        c_b = self.comm_b[self.pos]
        self.pos += 1
        c_a = 0
        for t in range(31):
            a_a = ((x[0] ^ c_a) >> t) & 1
            b_a = ((y[0] ^ c_a) >> t) & 1
            a_b = ((x[1] ^ c_b) >> t) & 1
            b_b = ((y[1] ^ c_b) >> t) & 1
            gate = (
                (a_a & b_a) ^ (a_a & b_b) ^ (a_b & b_a)
                ^ ((r_a >> t) & 1) ^ ((r_b >> t) & 1)
            )
            c_a |= (gate ^ ((c_a >> t) & 1)) << (t + 1)
        self.comm_a.append(c_a)
        return (x[0] ^ y[0] ^ c_a, x[1] ^ y[1] ^ c_b)


def _circuit(g, msg_words, const_mask):
    """Run the shared-SHA-256 circuit; returns 8 output-share lane tuples."""
    n = g.lanes

    def xor(x, y):
        return tuple(x[l] ^ y[l] for l in range(n))

    def rot(x, r):
        return tuple(_rotr(x[l], r) for l in range(n))

    def shr(x, r):
        return tuple(x[l] >> r for l in range(n))

    def const_share(value):
        return tuple(value if const_mask[l] else 0 for l in range(n))

    w = [tuple(msg_words[l][i] for l in range(n)) for i in range(16)]
    for i in range(16, 64):
        x = w[i - 15]
        s0 = xor(xor(rot(x, 7), rot(x, 18)), shr(x, 3))
        y = w[i - 2]
        s1 = xor(xor(rot(y, 17), rot(y, 19)), shr(y, 10))
        t = g.word_add(w[i - 16], s0)
        t = g.word_add(t, w[i - 7])
        w.append(g.word_add(t, s1))

    init = [const_share(IV[j]) for j in range(8)]
    a, b, c, d, e, f, gg, h = init
    for i in range(64):
        big_s1 = xor(xor(rot(e, 6), rot(e, 11)), rot(e, 25))
        ch = xor(gg, g.word_and(e, xor(f, gg)))
        t1 = g.word_add(h, big_s1)
        t1 = g.word_add(t1, ch)
        t1 = g.word_add(t1, const_share(K[i]))
        t1 = g.word_add(t1, w[i])
        big_s0 = xor(xor(rot(a, 2), rot(a, 13)), rot(a, 22))
        maj = xor(a, g.word_and(xor(a, b), xor(a, c)))
        t2 = g.word_add(big_s0, maj)
        h, gg, f, e, d, c, b, a = gg, f, e, g.word_add(d, t1), c, b, a, g.word_add(t1, t2)

    return [g.word_add(init[j], v) for j, v in enumerate((a, b, c, d, e, f, gg, h))]


def _out_bytes(out, lane: int) -> bytes:
    return struct.pack(">8I", *(out[j][lane] for j in range(8)))


def prove_round(ns8, s0, s1, s2, tape0, tape1, tape2):
    """Evaluate all three parties; returns (comm words, output share) per party."""
    shares = (s0, s1, s2)
    rand = tuple(_unpack_tape(t) for t in (tape0, tape1, tape2))
    msg = [_message_words(ns8, shares[i], i == 0) for i in range(3)]
    g = _ProverGates(rand)
    out = _circuit(g, msg, (True, False, False))
    comm = tuple(struct.pack(f"<{COMM_WORDS}I", *g.comm[i]) for i in range(3))
    outs = tuple(_out_bytes(out, i) for i in range(3))
    return comm, outs


def verify_round(ns8, e, input_a, input_b, tape_a, tape_b, comm_b):
    """Recompute party ``e`` against party ``e+1``'s replayed view.

    Returns (recomputed comm words of e, output share of e, output share
    of e+1).
    """
    if len(comm_b) != COMM_BYTES:
        raise ValueError(f"communicated words must be {COMM_BYTES} bytes")
    a_abs, b_abs = e, (e + 1) % 3
    msg = [
        _message_words(ns8, input_a, a_abs == 0),
        _message_words(ns8, input_b, b_abs == 0),
    ]
    g = _VerifierGates(
        _unpack_tape(tape_a),
        _unpack_tape(tape_b),
        struct.unpack(f"<{COMM_WORDS}I", comm_b),
    )
    out = _circuit(g, msg, (a_abs == 0, b_abs == 0))
    comm_a = struct.pack(f"<{COMM_WORDS}I", *g.comm_a)
    return comm_a, _out_bytes(out, 0), _out_bytes(out, 1)
