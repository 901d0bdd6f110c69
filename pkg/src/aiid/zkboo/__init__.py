"""Proof of possession of a registered weight commitment.

An MPC-in-the-head protocol: the prover simulates three parties jointly
computing ``SHA-256(namespace || h)`` over an XOR-sharing of the secret
commitment ``h``, commits to each party's view, and derives which two
parties to open per round from a hash of the whole transcript
(Fiat-Shamir, mixed with a verifier-supplied nonce so proofs are bound
to one checkpoint).  The verifier recomputes the two opened views gate
by gate and checks them against their commitments; the third party's
output share is forced to ``ai_id xor (opened output shares)`` and fed
back into the challenge hash, which pins the public output.  One
dishonest round survives with probability at most 2/3, so ``r`` rounds
leave soundness error (2/3)^r; the default r=69 gives 2^-40.

Views stay simulatable from any two parties, so opened data carries no
information about ``h``: two shares of a 3-way XOR sharing are uniform.

The circuit kernel is compiled when available; set ``AIID_KERNEL=pure``
to force the pure-Python fallback.
"""

from __future__ import annotations

import hashlib
import math
import os
import secrets
import struct
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from ..identity import Commitment, IssuerNamespace, PrimaryIdentifier
from . import _pure
from ._sha256 import sha256_single_block

if os.environ.get("AIID_KERNEL") == "pure":
    _kernel = _pure
else:
    try:
        from . import _ckernel as _kernel  # type: ignore[no-redef]
    except ImportError:
        _kernel = _pure

DOMAIN_TAG = b"ZKB-SHA256-V1"
PROOF_MAGIC = b"ZKP1"

COMM_BYTES = _pure.COMM_BYTES
TAPE_BYTES = _pure.TAPE_BYTES
SEED_BYTES = 16
BLIND_BYTES = 32

# smallest r with (2/3)^r <= 2^-40
DEFAULT_ROUNDS = math.ceil(40 * math.log(2) / math.log(1.5))
assert DEFAULT_ROUNDS == 69


def backend_name() -> str:
    return _kernel.BACKEND


class WitnessMismatch(Exception):
    """The witness does not open the statement; refusing to prove."""


class ProofFormatError(ValueError):
    """Proof bytes are structurally invalid."""


class RejectReason(str, Enum):
    COMMITMENT_MISMATCH = "commitment mismatch"
    GATE_INCONSISTENCY = "gate inconsistency"
    OUTPUT_MISMATCH = "output mismatch"
    CHALLENGE_MISMATCH = "challenge mismatch"
    MALFORMED = "malformed proof"
    STATEMENT_MISMATCH = "statement mismatch"


class ProofRejected(Exception):
    def __init__(self, reason: RejectReason, round_index: int = -1, detail: str = ""):
        self.reason = reason
        self.round_index = round_index
        self.detail = detail
        where = f" in round {round_index}" if round_index >= 0 else ""
        super().__init__(f"{reason.value}{where}" + (f": {detail}" if detail else ""))


@dataclass(frozen=True)
class PossessionStatement:
    """Public side of a proof: which identity, under which checkpoint nonce."""

    ai_id: PrimaryIdentifier
    namespace: IssuerNamespace
    challenge_nonce: bytes
    rounds: int = DEFAULT_ROUNDS

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("round count must be >= 1")
        if len(self.challenge_nonce) != 32:
            raise ValueError("challenge nonce must be 32 bytes")

    @property
    def public_bytes(self) -> bytes:
        return self.ai_id.digest + self.namespace.ascii_bytes + struct.pack("<H", self.rounds)


@dataclass(frozen=True)
class PossessionWitness:
    h: Commitment


@dataclass(frozen=True)
class OpenedView:
    input_share: bytes   # 32
    tape_seed: bytes     # 16
    blinding: bytes      # 32
    comm_words: bytes    # COMM_BYTES


@dataclass(frozen=True)
class ProofRound:
    commitments: tuple[bytes, bytes, bytes]
    unopened_output_share: bytes
    challenge: int
    opened: tuple[OpenedView, OpenedView]


@dataclass(frozen=True)
class PossessionProof:
    rounds: tuple[ProofRound, ...]


@dataclass(frozen=True)
class Attestation:
    """Trusted-intermediary fallback: the attestor saw ``h`` and vouches."""

    ai_id: PrimaryIdentifier
    attestor_public_key: bytes
    timestamp: int
    signature: bytes


def circuit_eval(ns: IssuerNamespace, h: Commitment) -> bytes:
    """The relation being proven: SHA-256 over the 40-byte ``ns || h`` message.

    Computed from first principles (not ``hashlib``) so it independently
    pins down what the shared circuit must produce.
    """
    return sha256_single_block(ns.ascii_bytes + h.digest)


def proof_system_anchor(rounds: int = DEFAULT_ROUNDS) -> bytes:
    """Digest of the proof-system parameters recorded with a registration."""
    return hashlib.sha256(DOMAIN_TAG + struct.pack("<H", rounds)).digest()


def expand_tape(seed: bytes) -> bytes:
    """Counter-mode SHA-256 expansion of a 16-byte seed into a party tape."""
    if len(seed) != SEED_BYTES:
        raise ValueError(f"tape seed must be {SEED_BYTES} bytes")
    blocks = []
    for counter in range((TAPE_BYTES + 31) // 32):
        blocks.append(hashlib.sha256(seed + struct.pack("<I", counter)).digest())
    return b"".join(blocks)[:TAPE_BYTES]


def _xor32(a: bytes, b: bytes, c: bytes) -> bytes:
    return (
        int.from_bytes(a, "big") ^ int.from_bytes(b, "big") ^ int.from_bytes(c, "big")
    ).to_bytes(32, "big")


def _view_bytes(seed: bytes, input_share: bytes, comm: bytes, output_share: bytes) -> bytes:
    return seed + input_share + comm + output_share


def _commit_view(view: bytes, blinding: bytes) -> bytes:
    return hashlib.sha256(view + blinding).digest()


def _challenge_trits(st: PossessionStatement, commitments: list[bytes],
                     output_shares: list[bytes]) -> list[int]:
    """Derive one trit per round from the full transcript.

    Digest first, then counter-expand; bytes equal to 255 are rejected so
    the mod-3 reduction is unbiased.
    """
    base = hashlib.sha256(
        DOMAIN_TAG
        + st.public_bytes
        + st.challenge_nonce
        + b"".join(commitments)
        + b"".join(output_shares)
    ).digest()
    trits: list[int] = []
    counter = 0
    while len(trits) < st.rounds:
        block = hashlib.sha256(base + struct.pack("<I", counter)).digest()
        counter += 1
        for byte in block:
            if byte != 255:
                trits.append(byte % 3)
                if len(trits) == st.rounds:
                    break
    return trits


def prove(st: PossessionStatement, w: PossessionWitness,
          rng: Callable[[int], bytes] | None = None) -> PossessionProof:
    """Produce a possession proof; refuses (before emitting anything) if the
    witness does not actually open the statement."""
    if circuit_eval(st.namespace, w.h) != st.ai_id.digest:
        raise WitnessMismatch(
            "commitment does not hash to the statement's AI-ID under this namespace"
        )
    rng = rng or secrets.token_bytes
    ns8 = st.namespace.ascii_bytes

    seeds: list[tuple[bytes, bytes, bytes]] = []
    blinds: list[tuple[bytes, bytes, bytes]] = []
    inputs: list[tuple[bytes, bytes, bytes]] = []
    comms: list[tuple[bytes, bytes, bytes]] = []
    outs: list[tuple[bytes, bytes, bytes]] = []
    commitments: list[bytes] = []
    for _ in range(st.rounds):
        seed3 = (rng(SEED_BYTES), rng(SEED_BYTES), rng(SEED_BYTES))
        blind3 = (rng(BLIND_BYTES), rng(BLIND_BYTES), rng(BLIND_BYTES))
        tapes = tuple(expand_tape(s) for s in seed3)
        s0 = tapes[0][:32]
        s1 = tapes[1][:32]
        s2 = _xor32(w.h.digest, s0, s1)
        comm3, out3 = _kernel.prove_round(ns8, s0, s1, s2, *tapes)
        views = [
            _view_bytes(seed3[i], (s0, s1, s2)[i], comm3[i], out3[i]) for i in range(3)
        ]
        commitments.extend(_commit_view(views[i], blind3[i]) for i in range(3))
        seeds.append(seed3)
        blinds.append(blind3)
        inputs.append((s0, s1, s2))
        comms.append(comm3)
        outs.append(out3)

    trits = _challenge_trits(st, commitments, [o for out3 in outs for o in out3])

    rounds = []
    for j, e in enumerate(trits):
        opened = tuple(
            OpenedView(
                input_share=inputs[j][p],
                tape_seed=seeds[j][p],
                blinding=blinds[j][p],
                comm_words=comms[j][p],
            )
            for p in (e, (e + 1) % 3)
        )
        rounds.append(
            ProofRound(
                commitments=tuple(commitments[3 * j : 3 * j + 3]),
                unopened_output_share=outs[j][(e + 2) % 3],
                challenge=e,
                opened=opened,
            )
        )
    return PossessionProof(rounds=tuple(rounds))


def verify(st: PossessionStatement, proof: PossessionProof) -> None:
    """Check a proof against its statement; raises ProofRejected on failure."""
    if len(proof.rounds) != st.rounds:
        raise ProofRejected(
            RejectReason.STATEMENT_MISMATCH,
            detail=f"proof has {len(proof.rounds)} rounds, statement wants {st.rounds}",
        )
    ns8 = st.namespace.ascii_bytes
    commitments: list[bytes] = []
    output_shares: list[bytes] = []

    for j, rnd in enumerate(proof.rounds):
        e = rnd.challenge
        if e not in (0, 1, 2):
            raise ProofRejected(RejectReason.MALFORMED, j, f"challenge {e} not a trit")
        a_abs, b_abs = e, (e + 1) % 3
        view_a, view_b = rnd.opened
        tape_a = expand_tape(view_a.tape_seed)
        tape_b = expand_tape(view_b.tape_seed)

        # parties 0 and 1 must draw their input share from their own tape
        for abs_idx, view, tape in ((a_abs, view_a, tape_a), (b_abs, view_b, tape_b)):
            if abs_idx in (0, 1) and view.input_share != tape[:32]:
                raise ProofRejected(
                    RejectReason.GATE_INCONSISTENCY, j,
                    f"party {abs_idx} input share not drawn from its tape",
                )

        comm_a, out_a, out_b = _kernel.verify_round(
            ns8, e, view_a.input_share, view_b.input_share, tape_a, tape_b,
            view_b.comm_words,
        )
        if comm_a != view_a.comm_words:
            raise ProofRejected(
                RejectReason.GATE_INCONSISTENCY, j,
                f"recomputed gate outputs of party {a_abs} differ",
            )
        for abs_idx, view, out in ((a_abs, view_a, out_a), (b_abs, view_b, out_b)):
            expected = _commit_view(
                _view_bytes(view.tape_seed, view.input_share, view.comm_words, out),
                view.blinding,
            )
            if expected != rnd.commitments[abs_idx]:
                raise ProofRejected(
                    RejectReason.COMMITMENT_MISMATCH, j,
                    f"view commitment of party {abs_idx} does not open",
                )

        derived_third = _xor32(st.ai_id.digest, out_a, out_b)
        if derived_third != rnd.unopened_output_share:
            raise ProofRejected(
                RejectReason.OUTPUT_MISMATCH, j,
                "output shares do not reconstruct the AI-ID",
            )

        commitments.extend(rnd.commitments)
        shares = [b""] * 3
        shares[a_abs] = out_a
        shares[b_abs] = out_b
        shares[(e + 2) % 3] = rnd.unopened_output_share
        output_shares.extend(shares)

    expected_trits = _challenge_trits(st, commitments, output_shares)
    actual = [rnd.challenge for rnd in proof.rounds]
    if expected_trits != actual:
        first = next(i for i, (x, y) in enumerate(zip(expected_trits, actual)) if x != y)
        raise ProofRejected(
            RejectReason.CHALLENGE_MISMATCH, first,
            "challenges are not the Fiat-Shamir digest of this transcript",
        )


# --- wire format -----------------------------------------------------------

def serialize_proof(proof: PossessionProof) -> bytes:
    """"ZKP1" | r u16 | per round: 3 commitments, unopened output share,
    challenge u8, then per opened party: input share, seed, blinding,
    length-prefixed communicated words."""
    parts = [PROOF_MAGIC, struct.pack("<H", len(proof.rounds))]
    for rnd in proof.rounds:
        parts.extend(rnd.commitments)
        parts.append(rnd.unopened_output_share)
        parts.append(struct.pack("<B", rnd.challenge))
        for view in rnd.opened:
            parts.append(view.input_share)
            parts.append(view.tape_seed)
            parts.append(view.blinding)
            parts.append(struct.pack("<I", len(view.comm_words)))
            parts.append(view.comm_words)
    return b"".join(parts)


def parse_proof(data: bytes) -> PossessionProof:
    view = memoryview(data)
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if len(view) - pos < n:
            raise ProofFormatError(f"truncated proof while reading {what} at offset {pos}")
        chunk = bytes(view[pos : pos + n])
        pos += n
        return chunk

    if take(4, "magic") != PROOF_MAGIC:
        raise ProofFormatError("bad proof magic, expected b'ZKP1'")
    (r,) = struct.unpack("<H", take(2, "round count"))
    rounds = []
    for j in range(r):
        commitments = tuple(take(32, f"commitment {j}") for _ in range(3))
        unopened = take(32, f"unopened output share {j}")
        challenge = take(1, f"challenge {j}")[0]
        if challenge > 2:
            raise ProofFormatError(f"challenge {challenge} in round {j} is not a trit")
        opened = []
        for p in range(2):
            input_share = take(32, f"input share {j}.{p}")
            seed = take(SEED_BYTES, f"tape seed {j}.{p}")
            blinding = take(BLIND_BYTES, f"blinding {j}.{p}")
            (comm_len,) = struct.unpack("<I", take(4, f"comm length {j}.{p}"))
            if comm_len != COMM_BYTES:
                raise ProofFormatError(
                    f"communicated-words length {comm_len} != {COMM_BYTES} in round {j}"
                )
            opened.append(
                OpenedView(input_share, seed, blinding, take(comm_len, f"comm {j}.{p}"))
            )
        rounds.append(ProofRound(commitments, unopened, challenge, tuple(opened)))
    if pos != len(view):
        raise ProofFormatError(f"{len(view) - pos} trailing bytes after proof")
    return PossessionProof(rounds=tuple(rounds))


# --- trusted attestation baseline -------------------------------------------

ATTEST_CONTEXT = b"POSSESSION-OK"


def attestation_signed_bytes(ai_id: PrimaryIdentifier, timestamp: int) -> bytes:
    return ai_id.digest + struct.pack("<Q", timestamp) + ATTEST_CONTEXT


def attest(st: PossessionStatement, w: PossessionWitness, attestor_key,
           timestamp: int | None = None) -> Attestation:
    """Direct recomputation by a trusted attestor; reveals ``h`` to it."""
    if circuit_eval(st.namespace, w.h) != st.ai_id.digest:
        raise WitnessMismatch("attestor recomputation does not match the AI-ID")
    ts = int(time.time()) if timestamp is None else timestamp
    signature = attestor_key.sign(attestation_signed_bytes(st.ai_id, ts))
    return Attestation(
        ai_id=st.ai_id,
        attestor_public_key=attestor_key.public_bytes,
        timestamp=ts,
        signature=signature,
    )


def verify_attestation(att: Attestation) -> bool:
    from ..keys import verify_signature

    return verify_signature(
        att.attestor_public_key,
        att.signature,
        attestation_signed_bytes(att.ai_id, att.timestamp),
    )
