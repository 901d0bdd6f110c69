"""Acceptance criteria, one test per criterion.

Each test prints an ``ACCEPTANCE PASS/FAIL`` line (see conftest).  Sizes,
counts, and tolerances are pinned here and must not be loosened: 1000
bit flips with zero collisions, checksum detection >= 99.5%, sketch
error <= 0.05 at k=1024, exhaustive ledger tamper detection, exact
status-transition matrix, 100% proof completeness over 100 runs, 1000
proof mutations all rejected with the (2/3)^69 <= 2^-40 analytic bound,
chi-square uniformity of opened shares at significance 0.01, and the
full register/approve/challenge/prove/drift loop.
"""

import base64
import hashlib
import random
import time

import pytest
from fastapi.testclient import TestClient

from aiid import lzjd, zkboo
from aiid.aiw import CanonicalTensorRecord, Dtype, WeightManifest, canonical_parse, canonical_serialize
from aiid.identity import (
    Commitment,
    IssuerNamespace,
    SecondaryIdError,
    build_secondary_id,
    compute_commitment,
    derive_ai_id,
    hash_tail,
    parse_secondary_id,
)
from aiid.keys import KeyPair
from aiid.ledger import (
    ALLOWED_TRANSITIONS,
    IllegalTransitionError,
    Ledger,
    Status,
    registration_signed_bytes,
    status_signed_bytes,
    verify_chain_bytes,
)
from aiid.service import ServiceConfig, create_app, drift_attestation_signed_bytes
from helpers import DRBG, enumerate_substitutions, naive_jaccard_distance, naive_lz_phrases, perturb_fraction, random_manifest


def test_identity_determinism():
    """100 random manifests, serialized and hashed twice, give identical
    AI-IDs; golden vectors pin the byte layout host-independently."""
    rng = random.Random(1001)
    ns = IssuerNamespace("OWNER001")
    for _ in range(100):
        manifest = random_manifest(rng, max_records=8)
        first = canonical_serialize(manifest)
        second = canonical_serialize(manifest)
        assert first == second
        id_a = derive_ai_id(compute_commitment(first), ns)
        id_b = derive_ai_id(compute_commitment(second), ns)
        assert id_a == id_b
        assert canonical_serialize(canonical_parse(first)) == first
    # frozen bytes: any endianness or layout dependence would break these
    assert canonical_serialize(WeightManifest(())).hex() == "41495731010000000000"
    assert (
        canonical_serialize(
            WeightManifest((CanonicalTensorRecord("b", Dtype.F32, (), bytes.fromhex("0000803f")),))
        ).hex()
        == "41495731010001000000010062020004000000000000000000803f"
    )


def test_avalanche_sensitivity():
    """1000 single-bit perturbations of a 1 MB stream: 1000 distinct
    commitments, none equal to the original."""
    rng = random.Random(1002)
    manifest = WeightManifest(
        (CanonicalTensorRecord("weights", Dtype.U8, (1 << 20,), rng.randbytes(1 << 20)),)
    )
    stream = bytearray(canonical_serialize(manifest))
    original = compute_commitment(bytes(stream)).digest
    digests = set()
    for bit in rng.sample(range(len(stream) * 8), 1000):
        stream[bit // 8] ^= 1 << (bit % 8)
        digests.add(compute_commitment(bytes(stream)).digest)
        stream[bit // 8] ^= 1 << (bit % 8)
    assert len(digests) == 1000
    assert original not in digests


def test_secondary_id_checksum_detection():
    """Exhaustive single-character substitutions over 100 built labels:
    detection rate >= 99.5% (analytic expectation 1295/1296)."""
    rng = random.Random(1003)
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    alnum = alphabet + "0123456789"
    total = detected = 0
    for _ in range(100):
        label = build_secondary_id(
            "".join(rng.choice(alphabet) for _ in range(2)),
            "".join(rng.choice(alnum) for _ in range(8)),
            "".join(rng.choice(alnum) for _ in range(3)),
            "".join(rng.choice(alnum) for _ in range(2)),
            f"20{rng.randrange(100):02d}{rng.randrange(1, 13):02d}{rng.randrange(1, 29):02d}",
            Commitment(rng.randbytes(32)),
        ).render()
        for mutated in enumerate_substitutions(label):
            total += 1
            try:
                parse_secondary_id(mutated, verify_checksum=True)
            except SecondaryIdError:
                detected += 1
    assert total >= 100 * 600
    assert detected / total >= 0.995


def test_lzjd_oracle_equivalence():
    """Exact mode equals an independent naive reimplementation on 500
    random inputs <= 4 KB, bit-exact; the bottom-k sketch stays within
    0.05 of exact on 50 one-megabyte pairs at k=1024."""
    rng = random.Random(1004)
    inputs = [rng.randbytes(rng.randrange(0, 4097)) for _ in range(500)]
    phrase_sets = []
    for data in inputs:
        library = lzjd.lz_phrases(data)
        assert library == naive_lz_phrases(data)
        phrase_sets.append(library)
    for i in range(0, 500, 2):
        a, b = phrase_sets[i], phrase_sets[i + 1]
        if not a and not b:
            continue
        assert lzjd.jaccard_distance(a, b) == naive_jaccard_distance(a, b)

    worst = 0.0
    for pair_index in range(50):
        base = rng.randbytes(1 << 20)
        if pair_index % 5 == 4:
            other = rng.randbytes(1 << 20)  # unrelated pair
        else:
            fraction = (0.005, 0.05, 0.3, 0.8)[pair_index % 5 % 4]
            other = perturb_fraction(rng, base, fraction)
        exact = lzjd.jaccard_distance(lzjd.lz_phrases(base), lzjd.lz_phrases(other))
        estimate = lzjd.sketch_distance(
            lzjd.sketch(base, k=1024), lzjd.sketch(other, k=1024)
        )
        worst = max(worst, abs(exact - estimate))
    assert worst <= 0.05, f"sketch estimate off by {worst}"


def test_drift_monotonicity():
    """Mean LZJD over 20 seeded trials is strictly ordered across
    perturbation fractions 1%, 10%, 50%, 100%."""
    fractions = (0.01, 0.10, 0.50, 1.00)
    sums = [0.0] * len(fractions)
    for trial in range(20):
        rng = random.Random(2000 + trial)
        anchor = rng.randbytes(1 << 17)
        anchor_phrases = lzjd.lz_phrases(anchor)
        for i, fraction in enumerate(fractions):
            candidate = perturb_fraction(rng, anchor, fraction)
            sums[i] += lzjd.jaccard_distance(anchor_phrases, lzjd.lz_phrases(candidate))
    means = [s / 20 for s in sums]
    assert all(a < b for a, b in zip(means, means[1:])), means


def _ten_block_fixture(tmp_path):
    dev = KeyPair.generate("developer")
    authority = KeyPair.generate("authority")
    path = tmp_path / "fixture.bin"
    ledger = Ledger(path, authority_keys=[authority.public_bytes],
                    clock=lambda: 1_700_000_000.0)
    rng = random.Random(1006)
    ids = []
    for i in range(5):
        h = Commitment(rng.randbytes(32))
        ns = IssuerNamespace("OWNER001")
        ai_id = derive_ai_id(h, ns)
        secondary = build_secondary_id("US", ns.owner_id, "FAM", f"{i:02d}", "20250101", h)
        metadata_digest = hashlib.sha256(rng.randbytes(40)).digest()
        anchor = zkboo.proof_system_anchor(69)
        signature = dev.sign(registration_signed_bytes(
            ns.owner_id, "US", "FAM", f"{i:02d}", "20250101", secondary.hash_tail,
            ai_id.digest, anchor, metadata_digest, dev.public_bytes))
        from aiid.ledger import RegistryEntry

        ledger.append_register(RegistryEntry(
            ai_id=ai_id.digest, secondary_id=secondary, namespace=ns.owner_id,
            zkp_anchor=anchor, metadata_digest=metadata_digest,
            developer_public_key=dev.public_bytes, developer_signature=signature,
            registered_at=1_700_000_000))
        ids.append(ai_id.digest)
    ts = 1_700_000_001
    for target_index, new_status in ((0, Status.P), (1, Status.F), (2, Status.P), (0, Status.X)):
        target = ids[target_index]
        sig = authority.sign(status_signed_bytes(target, new_status, ts))
        ledger.append_status(target, new_status, authority.public_bytes, sig, ts)
        ts += 1
    assert ledger.head_index == 9  # ten blocks including genesis
    return path.read_bytes()


def test_ledger_tamper_evidence(tmp_path):
    """Every single-byte mutation (all positions x all 255 wrong values)
    of a 10-block ledger file is caught by chain verification."""
    data = _ten_block_fixture(tmp_path)
    assert verify_chain_bytes(data) is None
    mutated = bytearray(data)
    for offset in range(len(data)):
        original = mutated[offset]
        for value in range(256):
            if value == original:
                continue
            mutated[offset] = value
            assert verify_chain_bytes(bytes(mutated)) is not None, (
                f"mutation at offset {offset} value {value} undetected"
            )
        mutated[offset] = original


def test_status_machine_matrix(tmp_path):
    """Exactly the transitions U->P, U->F, P->F, P->X, F->X are accepted;
    every other ordered pair is rejected."""
    allowed = {(a.value, b.value) for a, b in ALLOWED_TRANSITIONS}
    assert allowed == {("U", "P"), ("U", "F"), ("P", "F"), ("P", "X"), ("F", "X")}

    dev = KeyPair.generate("developer")
    authority = KeyPair.generate("authority")
    paths_to_state = {"U": [], "P": ["P"], "F": ["F"], "X": ["P", "X"]}
    rng = random.Random(1007)

    def fresh_entry(seed):
        h = Commitment(rng.randbytes(32))
        ns = IssuerNamespace("OWNER001")
        ai_id = derive_ai_id(h, ns)
        secondary = build_secondary_id("US", ns.owner_id, "FAM", "01", "20250101", h)
        metadata_digest = hashlib.sha256(bytes([seed])).digest()
        anchor = zkboo.proof_system_anchor(69)
        signature = dev.sign(registration_signed_bytes(
            ns.owner_id, "US", "FAM", "01", "20250101", secondary.hash_tail,
            ai_id.digest, anchor, metadata_digest, dev.public_bytes))
        from aiid.ledger import RegistryEntry

        return RegistryEntry(
            ai_id=ai_id.digest, secondary_id=secondary, namespace=ns.owner_id,
            zkp_anchor=anchor, metadata_digest=metadata_digest,
            developer_public_key=dev.public_bytes, developer_signature=signature,
            registered_at=1_700_000_000)

    seed = 0
    for start in "UPFX":
        for target in "UPFX":
            ledger = Ledger(authority_keys=[authority.public_bytes])
            entry = fresh_entry(seed)
            seed += 1
            ledger.append_register(entry)
            ts = 1_700_000_001
            for step in paths_to_state[start]:
                sig = authority.sign(status_signed_bytes(entry.ai_id, Status(step), ts))
                ledger.append_status(entry.ai_id, Status(step), authority.public_bytes, sig, ts)
                ts += 1
            sig = authority.sign(status_signed_bytes(entry.ai_id, Status(target), ts))
            expected_ok = (start, target) in allowed
            if expected_ok:
                ledger.append_status(entry.ai_id, Status(target), authority.public_bytes, sig, ts)
                assert ledger.lookup(entry.ai_id)[1].value == target
            else:
                with pytest.raises(IllegalTransitionError):
                    ledger.append_status(entry.ai_id, Status(target),
                                         authority.public_bytes, sig, ts)


def test_zkp_completeness():
    """100 honest prove/verify cycles at r=69, fresh statements, all accept."""
    rng = random.Random(1008)
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    for _ in range(100):
        h = Commitment(rng.randbytes(32))
        ns = IssuerNamespace("".join(rng.choice(alphabet) for _ in range(8)))
        statement = zkboo.PossessionStatement(
            ai_id=derive_ai_id(h, ns), namespace=ns,
            challenge_nonce=rng.randbytes(32), rounds=69,
        )
        proof = zkboo.prove(statement, zkboo.PossessionWitness(h=h))
        zkboo.verify(statement, proof)  # raises on any failure


def test_zkp_soundness_smoke_and_bound():
    """1000 single-byte proof mutations all rejected; the analytic
    per-round bound gives (2/3)^69 <= 2^-40 (integer-exact check)."""
    assert zkboo.DEFAULT_ROUNDS == 69
    assert 2**109 <= 3**69          # (2/3)^69 <= 2^-40, cleared of fractions
    assert 2**108 > 3**68           # 68 rounds would not reach the target

    rng = random.Random(1009)
    h = Commitment(rng.randbytes(32))
    ns = IssuerNamespace("OWNER001")
    statement = zkboo.PossessionStatement(
        ai_id=derive_ai_id(h, ns), namespace=ns,
        challenge_nonce=rng.randbytes(32), rounds=69,
    )
    blob = zkboo.serialize_proof(zkboo.prove(statement, zkboo.PossessionWitness(h=h)))
    zkboo.verify(statement, zkboo.parse_proof(blob))  # sanity: the base accepts
    offsets = rng.sample(range(len(blob)), 1000)
    for offset in offsets:
        mutated = bytearray(blob)
        mutated[offset] ^= rng.randrange(1, 256)
        with pytest.raises((zkboo.ProofRejected, zkboo.ProofFormatError)):
            zkboo.verify(statement, zkboo.parse_proof(bytes(mutated)))


def test_zkp_hiding_uniformity():
    """Opened input shares across 1000 proofs of one fixed witness pass a
    bytewise chi-square uniformity test at significance 0.01."""
    scipy_stats = pytest.importorskip("scipy.stats")
    rng = random.Random(1010)
    h = Commitment(rng.randbytes(32))
    ns = IssuerNamespace("OWNER001")
    statement = zkboo.PossessionStatement(
        ai_id=derive_ai_id(h, ns), namespace=ns,
        challenge_nonce=rng.randbytes(32), rounds=69,
    )
    witness = zkboo.PossessionWitness(h=h)
    counts = [0] * 256
    for i in range(1000):
        proof = zkboo.prove(statement, witness, rng=DRBG(777_000 + i))
        for rnd in proof.rounds:
            for view in rnd.opened:
                for byte in view.input_share:
                    counts[byte] += 1
    assert sum(counts) == 1000 * 69 * 2 * 32
    result = scipy_stats.chisquare(counts)
    assert result.pvalue >= 0.01, f"chi-square p={result.pvalue}"


def test_end_to_end_checkpoint_flow(tmp_path):
    """Register -> approve -> challenge -> prove -> VERIFIED; then perturb
    the weights: the new identity is UNREGISTERED, and a drift attestation
    flags the registered one."""
    dev = KeyPair.generate("developer")
    authority = KeyPair.generate("authority")
    reporter = KeyPair.generate("reporter")
    config = ServiceConfig(
        ledger_path=tmp_path / "ledger.bin",
        authority_keys=frozenset([authority.public_bytes]),
        drift_policies={"default": 0.5},
        drift_log_path=tmp_path / "drift.jsonl",
    )
    client = TestClient(create_app(config))

    rng = random.Random(1011)
    manifest = WeightManifest(
        (CanonicalTensorRecord("layer.weight", Dtype.U8, (1 << 16,), rng.randbytes(1 << 16)),)
    )
    stream = canonical_serialize(manifest)
    h = compute_commitment(stream)
    ns = IssuerNamespace("OWNER001")
    ai_id = derive_ai_id(h, ns)
    anchor = zkboo.proof_system_anchor(69)
    metadata = b'{"model": "e2e"}'
    signature = dev.sign(registration_signed_bytes(
        ns.owner_id, "US", "FAM", "01", "20250101", hash_tail(h),
        ai_id.digest, anchor, hashlib.sha256(metadata).digest(), dev.public_bytes))
    registered = client.post("/v1/entries", json={
        "namespace": ns.owner_id, "country": "US", "family": "FAM", "version": "01",
        "date": "20250101", "hash_tail": hash_tail(h), "ai_id": ai_id.hex,
        "zkp_anchor": anchor.hex(), "metadata": base64.b64encode(metadata).decode(),
        "developer_public_key": dev.public_bytes.hex(),
        "developer_signature": signature.hex(),
    })
    assert registered.status_code == 201
    assert registered.json()["status"] == "U"

    ts = int(time.time())
    client.post(f"/v1/entries/{ai_id.hex}/status", json={
        "new_status": "P", "timestamp": ts,
        "authority_public_key": authority.public_bytes.hex(),
        "authority_signature": authority.sign(
            status_signed_bytes(ai_id.digest, Status.P, ts)).hex(),
    }).raise_for_status()

    challenge = client.post("/v1/challenges", json={"ai_id": ai_id.hex}).json()
    statement = zkboo.PossessionStatement(
        ai_id=ai_id, namespace=ns,
        challenge_nonce=bytes.fromhex(challenge["nonce"]), rounds=69,
    )
    proof = zkboo.prove(statement, zkboo.PossessionWitness(h=h))
    verdict = client.post("/v1/proofs", json={
        "challenge_id": challenge["challenge_id"],
        "proof": base64.b64encode(zkboo.serialize_proof(proof)).decode(),
    }).json()
    assert verdict["outcome"] == "VERIFIED"

    # perturbed deployment: new identity is unknown to the registry
    perturbed_manifest = WeightManifest(
        (CanonicalTensorRecord(
            "layer.weight", Dtype.U8, (1 << 16,),
            perturb_fraction(rng, manifest.records[0].data, 0.3),
        ),)
    )
    perturbed_stream = canonical_serialize(perturbed_manifest)
    new_ai_id = derive_ai_id(compute_commitment(perturbed_stream), ns)
    assert new_ai_id != ai_id
    response = client.post("/v1/challenges", json={"ai_id": new_ai_id.hex})
    assert response.status_code == 404
    assert response.json()["detail"]["outcome"] == "UNREGISTERED"

    # a reporter measures real structural drift and attests to it
    score = lzjd.sketch_distance(lzjd.sketch(stream), lzjd.sketch(perturbed_stream))
    assert score > 0.5
    sketch_digest = hashlib.sha256(lzjd.dump_sketch(lzjd.sketch(perturbed_stream))).digest()
    attestation = client.post("/v1/drift-attestations", json={
        "ai_id": ai_id.hex, "score": score, "mode": "SKETCH",
        "candidate_sketch_digest": sketch_digest.hex(),
        "reporter_public_key": reporter.public_bytes.hex(),
        "reporter_signature": reporter.sign(drift_attestation_signed_bytes(
            ai_id.digest, score, "SKETCH", sketch_digest)).hex(),
    }).json()
    assert attestation["verdict"] == "DRIFTED"
    entry = client.get(f"/v1/entries/{ai_id.hex}").json()
    assert entry["drift_flagged"]
    assert entry["status"] == "P"  # flag alone does not change status
