# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled three-party circuit kernel for possession proofs.

Byte-for-byte identical contract to ``_pure``; see that module for the
protocol description.  All lane state lives in stack arrays; per-gate
layout is gate-major so the three lanes stay in one cache line.
"""

from libc.stdint cimport uint8_t, uint32_t

from ._sha256 import IV as _IV_PY, K as _K_PY

BACKEND = "compiled"

ADD_GATES = 48 * 3 + 64 * 7 + 8
AND_GATES = 64 * 2
COMM_WORDS = ADD_GATES + AND_GATES
COMM_BYTES = 4 * COMM_WORDS
INPUT_SHARE_BYTES = 32
TAPE_BYTES = INPUT_SHARE_BYTES + COMM_BYTES

cdef enum:
    N_COMM = 728  # must equal COMM_WORDS
    INPUT_BYTES_C = 32

assert N_COMM == COMM_WORDS

cdef uint32_t IV_C[8]
cdef uint32_t K_C[64]
for _i, _v in enumerate(_IV_PY):
    IV_C[_i] = _v
for _i, _v in enumerate(_K_PY):
    K_C[_i] = _v
del _i, _v

cdef uint32_t PAD_WORD_10 = 0x80000000u
cdef uint32_t LENGTH_WORD_15 = 320u


cdef inline uint32_t rotr(uint32_t x, int n) nogil:
    return (x >> n) | (x << (32 - n))


cdef inline uint32_t load_be32(const uint8_t *p) nogil:
    return (<uint32_t> p[0] << 24) | (<uint32_t> p[1] << 16) | (<uint32_t> p[2] << 8) | p[3]


cdef inline uint32_t load_le32(const uint8_t *p) nogil:
    return (<uint32_t> p[3] << 24) | (<uint32_t> p[2] << 16) | (<uint32_t> p[1] << 8) | p[0]


cdef inline void store_be32(uint8_t *p, uint32_t v) nogil:
    p[0] = <uint8_t> (v >> 24)
    p[1] = <uint8_t> (v >> 16)
    p[2] = <uint8_t> (v >> 8)
    p[3] = <uint8_t> v


cdef inline void store_le32(uint8_t *p, uint32_t v) nogil:
    p[0] = <uint8_t> v
    p[1] = <uint8_t> (v >> 8)
    p[2] = <uint8_t> (v >> 16)
    p[3] = <uint8_t> (v >> 24)


cdef inline void mpc_and3(const uint32_t *x, const uint32_t *y, uint32_t *z,
                          uint32_t r0, uint32_t r1, uint32_t r2) nogil:
    z[0] = (x[0] & y[0]) ^ (x[0] & y[1]) ^ (x[1] & y[0]) ^ r0 ^ r1
    z[1] = (x[1] & y[1]) ^ (x[1] & y[2]) ^ (x[2] & y[1]) ^ r1 ^ r2
    z[2] = (x[2] & y[2]) ^ (x[2] & y[0]) ^ (x[0] & y[2]) ^ r2 ^ r0


cdef inline void mpc_add3(const uint32_t *x, const uint32_t *y, uint32_t *z,
                          uint32_t *carry, uint32_t r0, uint32_t r1, uint32_t r2) nogil:
    cdef uint32_t c0 = 0, c1 = 0, c2 = 0
    cdef uint32_t a0, a1, a2, b0, b1, b2, g0, g1, g2
    cdef int t
    for t in range(31):
        a0 = ((x[0] ^ c0) >> t) & 1u
        b0 = ((y[0] ^ c0) >> t) & 1u
        a1 = ((x[1] ^ c1) >> t) & 1u
        b1 = ((y[1] ^ c1) >> t) & 1u
        a2 = ((x[2] ^ c2) >> t) & 1u
        b2 = ((y[2] ^ c2) >> t) & 1u
        g0 = (a0 & b0) ^ (a0 & b1) ^ (a1 & b0) ^ ((r0 >> t) & 1u) ^ ((r1 >> t) & 1u)
        g1 = (a1 & b1) ^ (a1 & b2) ^ (a2 & b1) ^ ((r1 >> t) & 1u) ^ ((r2 >> t) & 1u)
        g2 = (a2 & b2) ^ (a2 & b0) ^ (a0 & b2) ^ ((r2 >> t) & 1u) ^ ((r0 >> t) & 1u)
        c0 |= (g0 ^ ((c0 >> t) & 1u)) << (t + 1)
        c1 |= (g1 ^ ((c1 >> t) & 1u)) << (t + 1)
        c2 |= (g2 ^ ((c2 >> t) & 1u)) << (t + 1)
    carry[0] = c0
    carry[1] = c1
    carry[2] = c2
    z[0] = x[0] ^ y[0] ^ c0
    z[1] = x[1] ^ y[1] ^ c1
    z[2] = x[2] ^ y[2] ^ c2


cdef inline uint32_t mpc_and2(const uint32_t *x, const uint32_t *y,
                              uint32_t r_a, uint32_t r_b) nogil:
    return (x[0] & y[0]) ^ (x[0] & y[1]) ^ (x[1] & y[0]) ^ r_a ^ r_b


cdef inline uint32_t mpc_add2(const uint32_t *x, const uint32_t *y, uint32_t *z,
                              uint32_t c_b, uint32_t r_a, uint32_t r_b) nogil:
    cdef uint32_t c_a = 0
    cdef uint32_t a_a, a_b, b_a, b_b, gate
    cdef int t
    for t in range(31):
        a_a = ((x[0] ^ c_a) >> t) & 1u
        b_a = ((y[0] ^ c_a) >> t) & 1u
        a_b = ((x[1] ^ c_b) >> t) & 1u
        b_b = ((y[1] ^ c_b) >> t) & 1u
        gate = (a_a & b_a) ^ (a_a & b_b) ^ (a_b & b_a) ^ ((r_a >> t) & 1u) ^ ((r_b >> t) & 1u)
        c_a |= (gate ^ ((c_a >> t) & 1u)) << (t + 1)
    z[0] = x[0] ^ y[0] ^ c_a
    z[1] = x[1] ^ y[1] ^ c_b
    return c_a


cdef void _fill_msg(uint32_t *w, int lane, const uint8_t *ns8,
                    const uint8_t *share, bint holds_constants) nogil:
    # w is the flattened [16+][3] message-word array
    cdef int i
    for i in range(16):
        w[3 * i + lane] = 0
    if holds_constants:
        w[3 * 0 + lane] = load_be32(ns8)
        w[3 * 1 + lane] = load_be32(ns8 + 4)
        w[3 * 10 + lane] = PAD_WORD_10
        w[3 * 15 + lane] = LENGTH_WORD_15
    for i in range(8):
        w[3 * (2 + i) + lane] = load_be32(share + 4 * i)


def prove_round(bytes ns8, bytes s0, bytes s1, bytes s2,
                bytes tape0, bytes tape1, bytes tape2):
    """Evaluate all three parties; returns (comm words, output share) per party."""
    if len(ns8) != 8 or len(s0) != 32 or len(s1) != 32 or len(s2) != 32:
        raise ValueError("bad share or namespace length")
    for t in (tape0, tape1, tape2):
        if len(t) != TAPE_BYTES:
            raise ValueError(f"tape must be {TAPE_BYTES} bytes, got {len(t)}")

    cdef const uint8_t[::1] ns_v = ns8
    cdef const uint8_t[::1] s0_v = s0, s1_v = s1, s2_v = s2
    cdef const uint8_t[::1] t0_v = tape0, t1_v = tape1, t2_v = tape2

    cdef uint32_t rnd[3][N_COMM]
    cdef uint32_t comm[N_COMM][3]
    cdef uint32_t w[64][3]
    cdef uint32_t init[8][3]
    cdef uint32_t va[3], vb[3], vc[3], vd[3], ve[3], vf[3], vg[3], vh[3]
    cdef uint32_t s0t[3], s1t[3], tmp[3], tmp2[3], kc[3], out[8][3]
    cdef int i, l, pos = 0
    cdef const uint8_t *tp

    for l in range(3):
        if l == 0:
            tp = &t0_v[0]
        elif l == 1:
            tp = &t1_v[0]
        else:
            tp = &t2_v[0]
        for i in range(N_COMM):
            rnd[l][i] = load_le32(tp + INPUT_BYTES_C + 4 * i)

    _fill_msg(&w[0][0], 0, &ns_v[0], &s0_v[0], True)
    _fill_msg(&w[0][0], 1, &ns_v[0], &s1_v[0], False)
    _fill_msg(&w[0][0], 2, &ns_v[0], &s2_v[0], False)

    with nogil:
        # message schedule
        for i in range(16, 64):
            for l in range(3):
                s0t[l] = rotr(w[i - 15][l], 7) ^ rotr(w[i - 15][l], 18) ^ (w[i - 15][l] >> 3)
                s1t[l] = rotr(w[i - 2][l], 17) ^ rotr(w[i - 2][l], 19) ^ (w[i - 2][l] >> 10)
            mpc_add3(w[i - 16], s0t, tmp, comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
            mpc_add3(tmp, w[i - 7], tmp2, comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
            mpc_add3(tmp2, s1t, w[i], comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1

        for i in range(8):
            init[i][0] = IV_C[i]
            init[i][1] = 0
            init[i][2] = 0
        for l in range(3):
            va[l] = init[0][l]; vb[l] = init[1][l]; vc[l] = init[2][l]; vd[l] = init[3][l]
            ve[l] = init[4][l]; vf[l] = init[5][l]; vg[l] = init[6][l]; vh[l] = init[7][l]

        for i in range(64):
            for l in range(3):
                s0t[l] = rotr(ve[l], 6) ^ rotr(ve[l], 11) ^ rotr(ve[l], 25)  # big sigma 1
                tmp[l] = vf[l] ^ vg[l]
            mpc_and3(ve, tmp, tmp2, rnd[0][pos], rnd[1][pos], rnd[2][pos])
            for l in range(3):
                comm[pos][l] = tmp2[l]
                tmp2[l] ^= vg[l]  # ch
            pos += 1
            mpc_add3(vh, s0t, tmp, comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
            mpc_add3(tmp, tmp2, s1t, comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
            kc[0] = K_C[i]; kc[1] = 0; kc[2] = 0
            mpc_add3(s1t, kc, tmp, comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
            mpc_add3(tmp, w[i], s1t, comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
            # s1t now holds t1
            for l in range(3):
                s0t[l] = rotr(va[l], 2) ^ rotr(va[l], 13) ^ rotr(va[l], 22)  # big sigma 0
                tmp[l] = va[l] ^ vb[l]
                tmp2[l] = va[l] ^ vc[l]
            mpc_and3(tmp, tmp2, kc, rnd[0][pos], rnd[1][pos], rnd[2][pos])
            for l in range(3):
                comm[pos][l] = kc[l]
                kc[l] ^= va[l]  # maj
            pos += 1
            mpc_add3(s0t, kc, tmp, comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
            # tmp holds t2
            for l in range(3):
                vh[l] = vg[l]; vg[l] = vf[l]; vf[l] = ve[l]
            mpc_add3(vd, s1t, ve, comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
            for l in range(3):
                vd[l] = vc[l]; vc[l] = vb[l]; vb[l] = va[l]
            mpc_add3(s1t, tmp, va, comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1

        mpc_add3(init[0], va, out[0], comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
        mpc_add3(init[1], vb, out[1], comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
        mpc_add3(init[2], vc, out[2], comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
        mpc_add3(init[3], vd, out[3], comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
        mpc_add3(init[4], ve, out[4], comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
        mpc_add3(init[5], vf, out[5], comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
        mpc_add3(init[6], vg, out[6], comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1
        mpc_add3(init[7], vh, out[7], comm[pos], rnd[0][pos], rnd[1][pos], rnd[2][pos]); pos += 1

    comm_out = []
    outs = []
    cdef uint8_t[::1] buf
    cdef uint8_t[::1] obuf
    for l in range(3):
        comm_b = bytearray(COMM_BYTES)
        buf = comm_b
        for i in range(N_COMM):
            store_le32(&buf[4 * i], comm[i][l])
        comm_out.append(bytes(comm_b))
        out_b = bytearray(32)
        obuf = out_b
        for i in range(8):
            store_be32(&obuf[4 * i], out[i][l])
        outs.append(bytes(out_b))
    return tuple(comm_out), tuple(outs)


def verify_round(bytes ns8, int e, bytes input_a, bytes input_b,
                 bytes tape_a, bytes tape_b, bytes comm_b):
    """Recompute party ``e`` against party ``e+1``'s replayed view.

    Returns (recomputed comm words of e, output share of e, output share
    of e+1).
    """
    if len(ns8) != 8 or len(input_a) != 32 or len(input_b) != 32:
        raise ValueError("bad share or namespace length")
    if len(tape_a) != TAPE_BYTES or len(tape_b) != TAPE_BYTES:
        raise ValueError(f"tape must be {TAPE_BYTES} bytes")
    if len(comm_b) != COMM_BYTES:
        raise ValueError(f"communicated words must be {COMM_BYTES} bytes")
    if not 0 <= e <= 2:
        raise ValueError("party index out of range")

    cdef const uint8_t[::1] ns_v = ns8
    cdef const uint8_t[::1] ia_v = input_a, ib_v = input_b
    cdef const uint8_t[::1] ta_v = tape_a, tb_v = tape_b
    cdef const uint8_t[::1] cb_v = comm_b

    cdef uint32_t rnd_a[N_COMM]
    cdef uint32_t rnd_b[N_COMM]
    cdef uint32_t cbw[N_COMM]
    cdef uint32_t ca_out[N_COMM]
    cdef uint32_t w[64][3]  # third lane unused
    cdef uint32_t init[8][3]
    cdef uint32_t va[3], vb2[3], vc[3], vd[3], ve[3], vf[3], vg[3], vh[3]
    cdef uint32_t s0t[3], s1t[3], tmp[3], tmp2[3], kc[3], out[8][3]
    cdef int i, l, pos = 0
    cdef int a_abs = e, b_abs = (e + 1) % 3

    cdef const uint8_t *ta_p = &ta_v[0]
    cdef const uint8_t *tb_p = &tb_v[0]
    cdef const uint8_t *cb_p = &cb_v[0]
    for i in range(N_COMM):
        rnd_a[i] = load_le32(ta_p + INPUT_BYTES_C + 4 * i)
        rnd_b[i] = load_le32(tb_p + INPUT_BYTES_C + 4 * i)
        cbw[i] = load_le32(cb_p + 4 * i)

    _fill_msg(&w[0][0], 0, &ns_v[0], &ia_v[0], a_abs == 0)
    _fill_msg(&w[0][0], 1, &ns_v[0], &ib_v[0], b_abs == 0)

    with nogil:
        for i in range(16, 64):
            for l in range(2):
                s0t[l] = rotr(w[i - 15][l], 7) ^ rotr(w[i - 15][l], 18) ^ (w[i - 15][l] >> 3)
                s1t[l] = rotr(w[i - 2][l], 17) ^ rotr(w[i - 2][l], 19) ^ (w[i - 2][l] >> 10)
            ca_out[pos] = mpc_add2(w[i - 16], s0t, tmp, cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
            ca_out[pos] = mpc_add2(tmp, w[i - 7], tmp2, cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
            ca_out[pos] = mpc_add2(tmp2, s1t, w[i], cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1

        for i in range(8):
            init[i][0] = IV_C[i] if a_abs == 0 else 0
            init[i][1] = IV_C[i] if b_abs == 0 else 0
        for l in range(2):
            va[l] = init[0][l]; vb2[l] = init[1][l]; vc[l] = init[2][l]; vd[l] = init[3][l]
            ve[l] = init[4][l]; vf[l] = init[5][l]; vg[l] = init[6][l]; vh[l] = init[7][l]

        for i in range(64):
            for l in range(2):
                s0t[l] = rotr(ve[l], 6) ^ rotr(ve[l], 11) ^ rotr(ve[l], 25)
                tmp[l] = vf[l] ^ vg[l]
            tmp2[0] = mpc_and2(ve, tmp, rnd_a[pos], rnd_b[pos])
            tmp2[1] = cbw[pos]
            ca_out[pos] = tmp2[0]
            pos += 1
            for l in range(2):
                tmp2[l] ^= vg[l]  # ch
            ca_out[pos] = mpc_add2(vh, s0t, tmp, cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
            ca_out[pos] = mpc_add2(tmp, tmp2, s1t, cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
            kc[0] = K_C[i] if a_abs == 0 else 0
            kc[1] = K_C[i] if b_abs == 0 else 0
            ca_out[pos] = mpc_add2(s1t, kc, tmp, cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
            ca_out[pos] = mpc_add2(tmp, w[i], s1t, cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
            for l in range(2):
                s0t[l] = rotr(va[l], 2) ^ rotr(va[l], 13) ^ rotr(va[l], 22)
                tmp[l] = va[l] ^ vb2[l]
                tmp2[l] = va[l] ^ vc[l]
            kc[0] = mpc_and2(tmp, tmp2, rnd_a[pos], rnd_b[pos])
            kc[1] = cbw[pos]
            ca_out[pos] = kc[0]
            pos += 1
            for l in range(2):
                kc[l] ^= va[l]  # maj
            ca_out[pos] = mpc_add2(s0t, kc, tmp, cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
            for l in range(2):
                vh[l] = vg[l]; vg[l] = vf[l]; vf[l] = ve[l]
            ca_out[pos] = mpc_add2(vd, s1t, ve, cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
            for l in range(2):
                vd[l] = vc[l]; vc[l] = vb2[l]; vb2[l] = va[l]
            ca_out[pos] = mpc_add2(s1t, tmp, va, cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1

        ca_out[pos] = mpc_add2(init[0], va, out[0], cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
        ca_out[pos] = mpc_add2(init[1], vb2, out[1], cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
        ca_out[pos] = mpc_add2(init[2], vc, out[2], cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
        ca_out[pos] = mpc_add2(init[3], vd, out[3], cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
        ca_out[pos] = mpc_add2(init[4], ve, out[4], cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
        ca_out[pos] = mpc_add2(init[5], vf, out[5], cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
        ca_out[pos] = mpc_add2(init[6], vg, out[6], cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1
        ca_out[pos] = mpc_add2(init[7], vh, out[7], cbw[pos], rnd_a[pos], rnd_b[pos]); pos += 1

    comm_a = bytearray(COMM_BYTES)
    out_a = bytearray(32)
    out_b = bytearray(32)
    cdef uint8_t[::1] buf = comm_a
    cdef uint8_t[::1] oa = out_a
    cdef uint8_t[::1] ob = out_b
    for i in range(N_COMM):
        store_le32(&buf[4 * i], ca_out[i])
    for i in range(8):
        store_be32(&oa[4 * i], out[i][0])
        store_be32(&ob[4 * i], out[i][1])
    return bytes(comm_a), bytes(out_a), bytes(out_b)
