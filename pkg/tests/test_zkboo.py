import hashlib
import math
import random

import pytest

import aiid.zkboo._pure as pure_kernel
from aiid import zkboo
from aiid.identity import Commitment, IssuerNamespace, derive_ai_id
from aiid.keys import KeyPair
from aiid.zkboo import RejectReason
from aiid.zkboo._sha256 import sha256_single_block
from helpers import DRBG

try:
    import aiid.zkboo._ckernel as compiled_kernel
except ImportError:
    compiled_kernel = None


def make_instance(seed=0, rounds=69):
    rng = random.Random(seed)
    h = Commitment(rng.randbytes(32))
    ns = IssuerNamespace("".join(rng.choice("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789") for _ in range(8)))
    ai_id = derive_ai_id(h, ns)
    statement = zkboo.PossessionStatement(
        ai_id=ai_id, namespace=ns, challenge_nonce=rng.randbytes(32), rounds=rounds
    )
    return statement, zkboo.PossessionWitness(h=h)


# --- reference hash ----------------------------------------------------------

def test_single_block_sha256_fips_vectors():
    assert sha256_single_block(b"abc").hex() == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    )
    assert sha256_single_block(b"").hex() == (
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    )
    longest = bytes(range(55))
    assert sha256_single_block(longest) == hashlib.sha256(longest).digest()
    with pytest.raises(ValueError):
        sha256_single_block(bytes(56))


def test_circuit_eval_agrees_with_namespaced_hash():
    rng = random.Random(1)
    for _ in range(1000):
        h = Commitment(rng.randbytes(32))
        ns = IssuerNamespace(
            "".join(rng.choice("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789") for _ in range(8))
        )
        assert zkboo.circuit_eval(ns, h) == derive_ai_id(h, ns).digest


def test_circuit_eval_deterministic():
    ns = IssuerNamespace("OWNER001")
    h = Commitment(hashlib.sha256(b"w").digest())
    assert zkboo.circuit_eval(ns, h) == zkboo.circuit_eval(ns, h)


# --- kernels -----------------------------------------------------------------

def xor32(*parts):
    out = bytearray(32)
    for part in parts:
        for i, byte in enumerate(part):
            out[i] ^= byte
    return bytes(out)


def test_shared_circuit_reconstructs_digest():
    rng = random.Random(2)
    ns8 = b"OWNER001"
    h = rng.randbytes(32)
    seeds = [rng.randbytes(16) for _ in range(3)]
    tapes = [zkboo.expand_tape(s) for s in seeds]
    s0, s1 = tapes[0][:32], tapes[1][:32]
    s2 = xor32(h, s0, s1)
    _, outs = pure_kernel.prove_round(ns8, s0, s1, s2, *tapes)
    assert xor32(*outs) == hashlib.sha256(ns8 + h).digest()


@pytest.mark.skipif(compiled_kernel is None, reason="compiled kernel unavailable")
def test_kernels_bit_identical():
    rng = random.Random(3)
    ns8 = b"OWNER001"
    for trial in range(3):
        h = rng.randbytes(32)
        tapes = [zkboo.expand_tape(rng.randbytes(16)) for _ in range(3)]
        s0, s1 = tapes[0][:32], tapes[1][:32]
        s2 = xor32(h, s0, s1)
        comm_p, outs_p = pure_kernel.prove_round(ns8, s0, s1, s2, *tapes)
        comm_c, outs_c = compiled_kernel.prove_round(ns8, s0, s1, s2, *tapes)
        assert comm_p == comm_c and outs_p == outs_c
        for e in range(3):
            shares = (s0, s1, s2)
            args = (
                ns8, e, shares[e], shares[(e + 1) % 3],
                tapes[e], tapes[(e + 1) % 3], comm_p[(e + 1) % 3],
            )
            assert pure_kernel.verify_round(*args) == compiled_kernel.verify_round(*args)


@pytest.mark.skipif(compiled_kernel is None, reason="compiled kernel unavailable")
def test_backends_produce_identical_proofs(monkeypatch):
    statement, witness = make_instance(seed=4, rounds=2)
    proof_compiled = zkboo.prove(statement, witness, rng=DRBG(99))
    monkeypatch.setattr(zkboo, "_kernel", pure_kernel)
    assert zkboo.backend_name() == "pure"
    proof_pure = zkboo.prove(statement, witness, rng=DRBG(99))
    assert zkboo.serialize_proof(proof_pure) == zkboo.serialize_proof(proof_compiled)
    zkboo.verify(statement, proof_pure)


def test_tape_expansion():
    seed = bytes(16)
    tape = zkboo.expand_tape(seed)
    assert len(tape) == zkboo.TAPE_BYTES
    assert tape == zkboo.expand_tape(seed)
    assert tape != zkboo.expand_tape(b"\x01" + bytes(15))
    with pytest.raises(ValueError):
        zkboo.expand_tape(bytes(15))


# --- protocol ----------------------------------------------------------------

def test_honest_proof_verifies():
    statement, witness = make_instance(seed=5)
    proof = zkboo.prove(statement, witness)
    zkboo.verify(statement, proof)  # must not raise


def test_reproving_differs_but_verifies():
    statement, witness = make_instance(seed=6)
    first = zkboo.prove(statement, witness, rng=DRBG(1))
    second = zkboo.prove(statement, witness, rng=DRBG(2))
    assert zkboo.serialize_proof(first) != zkboo.serialize_proof(second)
    zkboo.verify(statement, first)
    zkboo.verify(statement, second)


def test_wrong_witness_refused_before_proving():
    statement, _ = make_instance(seed=7)
    wrong = zkboo.PossessionWitness(h=Commitment(hashlib.sha256(b"nope").digest()))
    with pytest.raises(zkboo.WitnessMismatch):
        zkboo.prove(statement, wrong)


def test_nonce_binding():
    statement, witness = make_instance(seed=8, rounds=10)
    proof = zkboo.prove(statement, witness)
    other = zkboo.PossessionStatement(
        ai_id=statement.ai_id,
        namespace=statement.namespace,
        challenge_nonce=bytes(32),
        rounds=10,
    )
    with pytest.raises(zkboo.ProofRejected) as exc:
        zkboo.verify(other, proof)
    assert exc.value.reason is RejectReason.CHALLENGE_MISMATCH


def test_round_count_must_match_statement():
    statement, witness = make_instance(seed=9, rounds=4)
    proof = zkboo.prove(statement, witness)
    bigger = zkboo.PossessionStatement(
        ai_id=statement.ai_id,
        namespace=statement.namespace,
        challenge_nonce=statement.challenge_nonce,
        rounds=5,
    )
    with pytest.raises(zkboo.ProofRejected) as exc:
        zkboo.verify(bigger, proof)
    assert exc.value.reason is RejectReason.STATEMENT_MISMATCH


def test_statement_validation():
    statement, _ = make_instance(seed=10)
    with pytest.raises(ValueError):
        zkboo.PossessionStatement(
            ai_id=statement.ai_id, namespace=statement.namespace,
            challenge_nonce=bytes(31),
        )
    with pytest.raises(ValueError):
        zkboo.PossessionStatement(
            ai_id=statement.ai_id, namespace=statement.namespace,
            challenge_nonce=bytes(32), rounds=0,
        )


def test_default_round_count_targets_40_bits():
    assert zkboo.DEFAULT_ROUNDS == 69
    assert zkboo.DEFAULT_ROUNDS == math.ceil(40 * math.log(2) / math.log(1.5))
    assert (2 / 3) ** zkboo.DEFAULT_ROUNDS <= 2**-40
    assert (2 / 3) ** (zkboo.DEFAULT_ROUNDS - 1) > 2**-40


# --- targeted failure classes -------------------------------------------------

def corrupt(proof_bytes: bytes, offset: int, mask: int = 0xA5) -> zkboo.PossessionProof:
    mutated = bytearray(proof_bytes)
    mutated[offset] ^= mask
    return zkboo.parse_proof(bytes(mutated))


def test_reject_reasons_by_field():
    statement, witness = make_instance(seed=11, rounds=3)
    proof = zkboo.prove(statement, witness)
    blob = zkboo.serialize_proof(proof)
    header = 6
    # per-round layout: 96 commitments | 32 unopened out | 1 challenge | 2 views
    view_size = 32 + 16 + 32 + 4 + zkboo.COMM_BYTES

    # unopened commitment feeds only the challenge hash
    unopened_party = (proof.rounds[0].challenge + 2) % 3
    with pytest.raises(zkboo.ProofRejected) as exc:
        zkboo.verify(statement, corrupt(blob, header + 32 * unopened_party))
    assert exc.value.reason is RejectReason.CHALLENGE_MISMATCH

    # opened commitment fails its opening check
    opened_party = proof.rounds[0].challenge
    with pytest.raises(zkboo.ProofRejected) as exc:
        zkboo.verify(statement, corrupt(blob, header + 32 * opened_party))
    assert exc.value.reason is RejectReason.COMMITMENT_MISMATCH
    assert exc.value.round_index == 0

    # unopened output share breaks reconstruction of the public output
    with pytest.raises(zkboo.ProofRejected) as exc:
        zkboo.verify(statement, corrupt(blob, header + 96))
    assert exc.value.reason is RejectReason.OUTPUT_MISMATCH

    # first opened view's communicated words are recomputed and compared
    comm_offset = header + 96 + 32 + 1 + 32 + 16 + 32 + 4
    with pytest.raises(zkboo.ProofRejected) as exc:
        zkboo.verify(statement, corrupt(blob, comm_offset))
    assert exc.value.reason is RejectReason.GATE_INCONSISTENCY

    # blinding randomness only shows up inside the commitment
    blind_offset = header + 96 + 32 + 1 + 32 + 16
    with pytest.raises(zkboo.ProofRejected) as exc:
        zkboo.verify(statement, corrupt(blob, blind_offset))
    assert exc.value.reason is RejectReason.COMMITMENT_MISMATCH

    # second round corruption reports round index 1
    with pytest.raises(zkboo.ProofRejected) as exc:
        zkboo.verify(statement, corrupt(blob, header + (96 + 32 + 1 + 2 * view_size) + 96))
    assert exc.value.round_index == 1


def test_mutation_smoke():
    statement, witness = make_instance(seed=12, rounds=4)
    blob = zkboo.serialize_proof(zkboo.prove(statement, witness))
    rng = random.Random(13)
    for _ in range(80):
        offset = rng.randrange(len(blob))
        mask = rng.randrange(1, 256)
        mutated = bytearray(blob)
        mutated[offset] ^= mask
        with pytest.raises((zkboo.ProofRejected, zkboo.ProofFormatError)):
            zkboo.verify(statement, zkboo.parse_proof(bytes(mutated)))


# --- serialization -----------------------------------------------------------

def test_proof_serialization_round_trip():
    statement, witness = make_instance(seed=14, rounds=3)
    proof = zkboo.prove(statement, witness)
    blob = zkboo.serialize_proof(proof)
    assert blob[:4] == b"ZKP1"
    assert int.from_bytes(blob[4:6], "little") == 3
    assert zkboo.parse_proof(blob) == proof


def test_parse_proof_errors():
    statement, witness = make_instance(seed=15, rounds=2)
    blob = zkboo.serialize_proof(zkboo.prove(statement, witness))
    with pytest.raises(zkboo.ProofFormatError, match="magic"):
        zkboo.parse_proof(b"XKP1" + blob[4:])
    with pytest.raises(zkboo.ProofFormatError, match="truncated"):
        zkboo.parse_proof(blob[:-1])
    with pytest.raises(zkboo.ProofFormatError, match="trailing"):
        zkboo.parse_proof(blob + b"\x00")
    # challenge byte forced out of trit range
    mutated = bytearray(blob)
    mutated[6 + 96 + 32] = 7
    with pytest.raises(zkboo.ProofFormatError, match="trit"):
        zkboo.parse_proof(bytes(mutated))
    # communicated-words length prefix must match the circuit
    offset = 6 + 96 + 32 + 1 + 32 + 16 + 32
    mutated = bytearray(blob)
    mutated[offset] ^= 1
    with pytest.raises(zkboo.ProofFormatError, match="length"):
        zkboo.parse_proof(bytes(mutated))


# --- proof-system anchor ------------------------------------------------------

def test_anchor_binds_round_count():
    assert len(zkboo.proof_system_anchor(69)) == 32
    assert zkboo.proof_system_anchor(69) != zkboo.proof_system_anchor(68)
    assert zkboo.proof_system_anchor(69) == hashlib.sha256(
        b"ZKB-SHA256-V1" + (69).to_bytes(2, "little")
    ).digest()


# --- opened-share hiding smoke -------------------------------------------------

def test_opened_shares_look_uniform():
    scipy_stats = pytest.importorskip("scipy.stats")
    statement, witness = make_instance(seed=16, rounds=8)
    counts = [0] * 256
    for i in range(60):
        proof = zkboo.prove(statement, witness, rng=DRBG(1000 + i))
        for rnd in proof.rounds:
            for view in rnd.opened:
                for byte in view.input_share:
                    counts[byte] += 1
    result = scipy_stats.chisquare(counts)
    assert result.pvalue > 1e-6


def test_opened_data_never_contains_witness():
    statement, witness = make_instance(seed=17, rounds=6)
    blob = zkboo.serialize_proof(zkboo.prove(statement, witness))
    assert witness.h.digest not in blob


# --- attestation baseline ------------------------------------------------------

def test_attestation_round_trip():
    statement, witness = make_instance(seed=18)
    attestor = KeyPair.generate("attestor")
    attestation = zkboo.attest(statement, witness, attestor, timestamp=1_700_000_000)
    assert attestation.timestamp == 1_700_000_000
    assert zkboo.verify_attestation(attestation)


def test_attestation_refuses_wrong_witness():
    statement, _ = make_instance(seed=19)
    attestor = KeyPair.generate("attestor")
    with pytest.raises(zkboo.WitnessMismatch):
        zkboo.attest(statement, zkboo.PossessionWitness(h=Commitment(bytes(32))), attestor)


def test_attestation_tamper_detected():
    statement, witness = make_instance(seed=20)
    attestor = KeyPair.generate("attestor")
    attestation = zkboo.attest(statement, witness, attestor, timestamp=1_700_000_000)
    forged = zkboo.Attestation(
        ai_id=attestation.ai_id,
        attestor_public_key=attestation.attestor_public_key,
        timestamp=attestation.timestamp + 1,
        signature=attestation.signature,
    )
    assert not zkboo.verify_attestation(forged)
