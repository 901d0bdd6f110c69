"""HTTP registry and checkpoint service.

Endpoints (JSON bodies; 32-byte digests as lowercase hex, proofs and
opaque documents as base64)::

    POST /v1/entries                    register a model identity
    POST /v1/entries/{ai_id}/status     authority status update
    GET  /v1/entries/{ai_id}            entry + current status + drift flag
    GET  /v1/entries/{ai_id}/history    status trail
    POST /v1/challenges                 issue a checkpoint challenge
    POST /v1/proofs                     submit a possession proof
    POST /v1/drift-attestations         record a signed drift report
    GET  /v1/ledger/blocks?from=N       raw block bytes for external audit

The service never sees weights or commitments: registration carries only
the AI-ID, the developer-computed hash tail, digests, and signatures;
proofs demonstrate possession without revealing the commitment.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import secrets
import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel

from . import zkboo
from .identity import (
    IdentityError,
    IssuerNamespace,
    PrimaryIdentifier,
    complete_secondary_id,
)
from .keys import verify_signature
from .ledger import (
    DuplicateEntryError,
    IllegalTransitionError,
    InvalidSignatureError,
    Ledger,
    MalformedEntryError,
    RegistryEntry,
    Status,
    UnauthorizedSignerError,
    UnknownIdError,
    registration_signed_bytes,
)

DEFAULT_CHALLENGE_TTL = 300.0

DRIFT_MODE_CODES = {"EXACT": 1, "SKETCH": 2}


def drift_attestation_signed_bytes(
    ai_id: bytes, score: float, mode: str, candidate_sketch_digest: bytes
) -> bytes:
    """Canonical bytes a reporter signs for a drift attestation."""
    return (
        ai_id
        + struct.pack("<d", score)
        + bytes((DRIFT_MODE_CODES[mode],))
        + candidate_sketch_digest
    )


@dataclass(frozen=True)
class ServiceConfig:
    ledger_path: Path
    authority_keys: frozenset[bytes] = frozenset()
    challenge_ttl: float = DEFAULT_CHALLENGE_TTL
    drift_policies: dict[str, float] = field(default_factory=dict)
    drift_log_path: Path | None = None
    host: str = "127.0.0.1"
    port: int = 8400

    @classmethod
    def load(cls, path: str | Path | None = None, env: dict | None = None) -> "ServiceConfig":
        """Build from a JSON config file, then environment overrides.

        Environment: AIID_LEDGER, AIID_AUTHORITY_KEYS (comma-separated
        hex), AIID_CHALLENGE_TTL, AIID_DRIFT_POLICIES (JSON object),
        AIID_DRIFT_LOG, AIID_HOST, AIID_PORT.
        """
        env = os.environ if env is None else env
        raw: dict = {}
        if path is not None:
            raw = json.loads(Path(path).read_text())
        ledger_path = env.get("AIID_LEDGER") or raw.get("ledger_path")
        if not ledger_path:
            raise ValueError("config must set ledger_path (or AIID_LEDGER)")
        keys_raw = env.get("AIID_AUTHORITY_KEYS")
        if keys_raw is not None:
            keys = [k for k in keys_raw.split(",") if k]
        else:
            keys = raw.get("authority_keys", [])
        policies_raw = env.get("AIID_DRIFT_POLICIES")
        policies = json.loads(policies_raw) if policies_raw else raw.get("drift_policies", {})
        drift_log = env.get("AIID_DRIFT_LOG") or raw.get("drift_log_path")
        return cls(
            ledger_path=Path(ledger_path),
            authority_keys=frozenset(bytes.fromhex(k) for k in keys),
            challenge_ttl=float(env.get("AIID_CHALLENGE_TTL") or raw.get("challenge_ttl", DEFAULT_CHALLENGE_TTL)),
            drift_policies={k: float(v) for k, v in policies.items()},
            drift_log_path=Path(drift_log) if drift_log else None,
            host=env.get("AIID_HOST") or raw.get("host", "127.0.0.1"),
            port=int(env.get("AIID_PORT") or raw.get("port", 8400)),
        )


@dataclass
class Challenge:
    challenge_id: bytes
    ai_id: bytes
    nonce: bytes
    issued_at: float
    expires_at: float


class ChallengeStore:
    """Single-use challenges with expiry; consume is atomic."""

    def __init__(self, ttl: float, clock: Callable[[], float]):
        self._ttl = ttl
        self._clock = clock
        self._table: dict[bytes, Challenge] = {}
        self._lock = threading.Lock()

    def issue(self, ai_id: bytes) -> Challenge:
        now = self._clock()
        challenge = Challenge(
            challenge_id=secrets.token_bytes(16),
            ai_id=ai_id,
            nonce=secrets.token_bytes(32),
            issued_at=now,
            expires_at=now + self._ttl,
        )
        with self._lock:
            self._table[challenge.challenge_id] = challenge
        return challenge

    def consume(self, challenge_id: bytes) -> Challenge | None:
        with self._lock:
            return self._table.pop(challenge_id, None)


class DriftLog:
    """Signed drift attestations and per-entry flags, JSONL-persisted."""

    def __init__(self, path: Path | None):
        self._path = path
        self._records: dict[bytes, list[dict]] = {}
        self._flagged: set[bytes] = set()
        self._lock = threading.Lock()
        if path is not None and path.exists():
            for line in path.read_text().splitlines():
                if line.strip():
                    self._apply(json.loads(line))

    def _apply(self, record: dict) -> None:
        ai_id = bytes.fromhex(record["ai_id"])
        self._records.setdefault(ai_id, []).append(record)
        if record["verdict"] == "DRIFTED":
            self._flagged.add(ai_id)

    def record(self, record: dict) -> None:
        with self._lock:
            self._apply(record)
            if self._path is not None:
                with open(self._path, "a") as fh:
                    fh.write(json.dumps(record) + "\n")

    def flagged(self, ai_id: bytes) -> bool:
        return ai_id in self._flagged

    def records(self, ai_id: bytes) -> list[dict]:
        return list(self._records.get(ai_id, ()))


# --- request bodies ----------------------------------------------------------

class RegistrationRequest(BaseModel):
    namespace: str
    country: str
    family: str
    version: str
    date: str
    hash_tail: str
    ai_id: str
    zkp_anchor: str
    metadata: str = ""  # base64, opaque
    developer_public_key: str
    developer_signature: str
    risk_class: str = "default"


class StatusUpdateRequest(BaseModel):
    new_status: str
    timestamp: int
    authority_public_key: str
    authority_signature: str


class ChallengeRequest(BaseModel):
    ai_id: str


class ProofSubmission(BaseModel):
    challenge_id: str
    proof: str  # base64


class DriftAttestationRequest(BaseModel):
    ai_id: str
    score: float
    mode: str
    candidate_sketch_digest: str
    reporter_public_key: str
    reporter_signature: str


def _hex_bytes(value: str, length: int, name: str) -> bytes:
    try:
        raw = bytes.fromhex(value)
    except ValueError:
        raise HTTPException(422, f"{name} is not valid hex")
    if len(raw) != length:
        raise HTTPException(422, f"{name} must be {length} bytes, got {len(raw)}")
    return raw


def create_app(config: ServiceConfig, clock: Callable[[], float] = time.time) -> FastAPI:
    app = FastAPI(title="aiid registry", version="0.1.0")
    ledger = Ledger(config.ledger_path, authority_keys=config.authority_keys, clock=clock)
    challenges = ChallengeStore(config.challenge_ttl, clock)
    drift_log = DriftLog(config.drift_log_path)
    risk_classes: dict[bytes, str] = {}

    app.state.ledger = ledger
    app.state.config = config

    def entry_payload(entry: RegistryEntry, status: Status) -> dict:
        return {
            "ai_id": entry.ai_id.hex(),
            "secondary_id": entry.secondary_id.render(),
            "namespace": entry.namespace,
            "zkp_anchor": entry.zkp_anchor.hex(),
            "metadata_digest": entry.metadata_digest.hex(),
            "developer_public_key": entry.developer_public_key.hex(),
            "registered_at": entry.registered_at,
            "status": status.value,
            "risk_class": risk_classes.get(entry.ai_id, "default"),
            "drift_flagged": drift_log.flagged(entry.ai_id),
            "drift_attestations": drift_log.records(entry.ai_id),
        }

    @app.post("/v1/entries", status_code=201)
    def register(req: RegistrationRequest):
        ai_id = _hex_bytes(req.ai_id, 32, "ai_id")
        zkp_anchor = _hex_bytes(req.zkp_anchor, 32, "zkp_anchor")
        public_key = _hex_bytes(req.developer_public_key, 32, "developer_public_key")
        signature = _hex_bytes(req.developer_signature, 64, "developer_signature")
        try:
            namespace = IssuerNamespace(req.namespace)
            # the owner field of the label and the issuer namespace are one
            secondary = complete_secondary_id(
                req.country, namespace.owner_id, req.family, req.version,
                req.date, req.hash_tail,
            )
        except IdentityError as exc:
            raise HTTPException(422, str(exc))
        try:
            metadata = base64.b64decode(req.metadata, validate=True)
        except Exception:
            raise HTTPException(422, "metadata is not valid base64")

        signed = registration_signed_bytes(
            namespace.owner_id, secondary.country, secondary.family,
            secondary.version, secondary.date, secondary.hash_tail,
            ai_id, zkp_anchor, hashlib.sha256(metadata).digest(), public_key,
        )
        if not verify_signature(public_key, signature, signed):
            raise HTTPException(400, "developer signature does not verify")

        entry = RegistryEntry(
            ai_id=ai_id,
            secondary_id=secondary,
            namespace=namespace.owner_id,
            zkp_anchor=zkp_anchor,
            metadata_digest=hashlib.sha256(metadata).digest(),
            developer_public_key=public_key,
            developer_signature=signature,
            registered_at=int(clock()),
        )
        try:
            block = ledger.append_register(entry)
        except DuplicateEntryError as exc:
            raise HTTPException(409, str(exc))
        except (InvalidSignatureError, MalformedEntryError) as exc:
            raise HTTPException(400, str(exc))
        risk_classes[ai_id] = req.risk_class
        return {
            "ai_id": entry.ai_id.hex(),
            "secondary_id": entry.secondary_id.render(),
            "status": Status.U.value,
            "registered_at": entry.registered_at,
            "block_index": block.index,
        }

    @app.post("/v1/entries/{ai_id}/status")
    def update_status(ai_id: str, req: StatusUpdateRequest):
        ai_id_raw = _hex_bytes(ai_id, 32, "ai_id")
        try:
            new_status = Status(req.new_status)
        except ValueError:
            raise HTTPException(422, f"unknown status {req.new_status!r}")
        try:
            block = ledger.append_status(
                ai_id_raw,
                new_status,
                _hex_bytes(req.authority_public_key, 32, "authority_public_key"),
                _hex_bytes(req.authority_signature, 64, "authority_signature"),
                req.timestamp,
            )
        except UnknownIdError as exc:
            raise HTTPException(404, str(exc))
        except IllegalTransitionError as exc:
            raise HTTPException(409, str(exc))
        except UnauthorizedSignerError as exc:
            raise HTTPException(403, str(exc))
        except InvalidSignatureError as exc:
            raise HTTPException(400, str(exc))
        return {"ai_id": ai_id, "status": new_status.value, "block_index": block.index}

    @app.get("/v1/entries/{ai_id}")
    def get_entry(ai_id: str):
        try:
            entry, status = ledger.lookup(_hex_bytes(ai_id, 32, "ai_id"))
        except UnknownIdError as exc:
            raise HTTPException(404, detail={"outcome": "UNREGISTERED", "message": str(exc)})
        return entry_payload(entry, status)

    @app.get("/v1/entries/{ai_id}/history")
    def get_history(ai_id: str):
        try:
            trail = ledger.history(_hex_bytes(ai_id, 32, "ai_id"))
        except UnknownIdError as exc:
            raise HTTPException(404, detail={"outcome": "UNREGISTERED", "message": str(exc)})
        return {
            "ai_id": ai_id,
            "history": [
                {"status": status.value, "timestamp": ts, "block_index": idx}
                for status, ts, idx in trail
            ],
        }

    @app.post("/v1/challenges", status_code=201)
    def issue_challenge(req: ChallengeRequest):
        ai_id = _hex_bytes(req.ai_id, 32, "ai_id")
        try:
            ledger.lookup(ai_id)
        except UnknownIdError as exc:
            raise HTTPException(404, detail={"outcome": "UNREGISTERED", "message": str(exc)})
        challenge = challenges.issue(ai_id)
        return {
            "challenge_id": challenge.challenge_id.hex(),
            "ai_id": ai_id.hex(),
            "nonce": challenge.nonce.hex(),
            "issued_at": challenge.issued_at,
            "expires_at": challenge.expires_at,
        }

    @app.post("/v1/proofs")
    def submit_proof(req: ProofSubmission):
        challenge = challenges.consume(_hex_bytes(req.challenge_id, 16, "challenge_id"))
        if challenge is None:
            raise HTTPException(404, "unknown, expired-and-purged, or already-used challenge")
        entry, status = ledger.lookup(challenge.ai_id)

        def verdict(outcome: str, detail: str = "") -> dict:
            return {
                "challenge_id": req.challenge_id,
                "outcome": outcome,
                "status": status.value,
                "detail": detail,
            }

        if clock() > challenge.expires_at:
            return verdict("EXPIRED", "challenge expired before proof submission")
        try:
            proof_bytes = base64.b64decode(req.proof, validate=True)
        except Exception:
            raise HTTPException(400, "proof is not valid base64")
        try:
            proof = zkboo.parse_proof(proof_bytes)
        except zkboo.ProofFormatError as exc:
            raise HTTPException(400, f"malformed proof: {exc}")

        rounds = len(proof.rounds)
        if zkboo.proof_system_anchor(rounds) != entry.zkp_anchor:
            return verdict(
                "REJECTED",
                "proof parameters do not match the registered proof-system anchor",
            )
        statement = zkboo.PossessionStatement(
            ai_id=PrimaryIdentifier(entry.ai_id),
            namespace=IssuerNamespace(entry.namespace),
            challenge_nonce=challenge.nonce,
            rounds=rounds,
        )
        try:
            zkboo.verify(statement, proof)
        except zkboo.ProofRejected as exc:
            return verdict("REJECTED", str(exc))
        if status is not Status.P:
            return verdict(
                "STATUS_BLOCKED",
                f"proof verified but status is {status.value}; deployment requires P",
            )
        return verdict("VERIFIED")

    @app.post("/v1/drift-attestations", status_code=201)
    def record_drift(req: DriftAttestationRequest):
        ai_id = _hex_bytes(req.ai_id, 32, "ai_id")
        try:
            ledger.lookup(ai_id)
        except UnknownIdError as exc:
            raise HTTPException(404, detail={"outcome": "UNREGISTERED", "message": str(exc)})
        if not 0.0 <= req.score <= 1.0:
            raise HTTPException(422, f"score {req.score} out of [0, 1]")
        if req.mode not in DRIFT_MODE_CODES:
            raise HTTPException(422, f"mode must be one of {sorted(DRIFT_MODE_CODES)}")
        sketch_digest = _hex_bytes(req.candidate_sketch_digest, 32, "candidate_sketch_digest")
        public_key = _hex_bytes(req.reporter_public_key, 32, "reporter_public_key")
        signature = _hex_bytes(req.reporter_signature, 64, "reporter_signature")
        if not verify_signature(
            public_key,
            signature,
            drift_attestation_signed_bytes(ai_id, req.score, req.mode, sketch_digest),
        ):
            raise HTTPException(400, "reporter signature does not verify")

        risk_class = risk_classes.get(ai_id, "default")
        threshold = config.drift_policies.get(risk_class)
        if threshold is None:
            threshold = config.drift_policies.get("default")
        if threshold is None:
            raise HTTPException(
                409, f"no drift policy configured for risk class {risk_class!r}"
            )
        verdict = "DRIFTED" if req.score > threshold else "WITHIN"
        record = {
            "ai_id": req.ai_id,
            "score": req.score,
            "mode": req.mode,
            "candidate_sketch_digest": req.candidate_sketch_digest,
            "reporter_public_key": req.reporter_public_key,
            "reporter_signature": req.reporter_signature,
            "verdict": verdict,
            "policy_id": risk_class,
            "threshold": threshold,
            "recorded_at": int(clock()),
        }
        drift_log.record(record)
        return {
            "ai_id": req.ai_id,
            "verdict": verdict,
            "policy_id": risk_class,
            "threshold": threshold,
            "drift_flagged": drift_log.flagged(ai_id),
        }

    @app.get("/v1/ledger/blocks")
    def audit_blocks(from_index: int = Query(0, alias="from")):
        if from_index < 0:
            raise HTTPException(422, "from must be >= 0")
        raw = ledger.raw_blocks_from(from_index)
        return {
            "head": ledger.head_index,
            "blocks": [
                {"index": from_index + i, "bytes": base64.b64encode(chunk).decode()}
                for i, chunk in enumerate(raw)
            ],
        }

    return app


def run(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
