"""Operator command line.

Subcommands: keygen, fingerprint, id build, id check, register, status,
prove, drift, sketch, audit, serve.  Output is line-oriented text, or
JSON with ``--json``.

Exit codes are stable: 0 success, 1 usage, 2 input/parse failure,
3 server rejection or transport failure, 4 verification failure or
drift.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import aiw, lzjd, zkboo
from .aiw import AiwError
from .client import RegistryClient, ServerRejection, TransportFailure
from .identity import (
    ChecksumMismatch,
    Commitment,
    IdentityError,
    IssuerNamespace,
    PrimaryIdentifier,
    SecondaryIdError,
    build_secondary_id,
    compute_commitment,
    derive_ai_id,
    hash_tail,
    parse_secondary_id,
)
from .keys import KeyPair, ROLES
from .ledger import Status, registration_signed_bytes, status_signed_bytes, verify_chain_bytes
from .service import ServiceConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_SERVER = 3
EXIT_VERIFY = 4


class CliInputError(Exception):
    pass


class CliUsageError(Exception):
    pass


def _cli_config(args) -> dict:
    path = getattr(args, "config", None) or os.environ.get("AIID_CONFIG")
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CliInputError(f"no such config file: {path}")
    except ValueError as exc:
        raise CliInputError(f"{path}: {exc}")


def _resolve_service(args) -> str:
    service = args.service or os.environ.get("AIID_SERVICE") or _cli_config(args).get("service")
    if not service:
        raise CliUsageError("--service is required (or set AIID_SERVICE / config file)")
    return service


def _resolve_key_path(args) -> str:
    key = args.key or os.environ.get("AIID_KEY") or _cli_config(args).get("key")
    if not key:
        raise CliUsageError("--key is required (or set AIID_KEY / config file)")
    return key


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(args, lines: list[str], payload: dict) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2))
    else:
        for line in lines:
            print(line)


def _read_weights(path: str) -> bytes:
    try:
        return aiw.read_stream(path)
    except FileNotFoundError:
        raise CliInputError(f"no such file: {path}")
    except AiwError as exc:
        raise CliInputError(f"{path}: {exc}")


def _load_commitment(args) -> Commitment:
    if getattr(args, "weights", None):
        return compute_commitment(_read_weights(args.weights))
    path = args.commitment_file
    try:
        raw = Path(path).read_bytes()
    except FileNotFoundError:
        raise CliInputError(f"no such file: {path}")
    if len(raw) != 32:
        raise CliInputError(f"{path}: commitment file must be exactly 32 bytes")
    return Commitment(raw)


def _load_key(path: str, expected_role: str | None = None) -> KeyPair:
    try:
        pair = KeyPair.load(path)
    except FileNotFoundError:
        raise CliInputError(f"no such key file: {path}")
    except (ValueError, KeyError) as exc:
        raise CliInputError(f"{path}: {exc}")
    if expected_role and pair.role != expected_role:
        raise CliInputError(f"{path}: expected a {expected_role} key, found {pair.role}")
    return pair


# --- commands ---------------------------------------------------------------

def cmd_keygen(args) -> int:
    pair = KeyPair.generate(args.role)
    pair.save(args.out)
    _emit(args, [f"role {pair.role}", f"public-key {pair.public_bytes.hex()}", f"written {args.out}"],
          {"role": pair.role, "public_key": pair.public_bytes.hex(), "path": str(args.out)})
    return EXIT_OK


def cmd_fingerprint(args) -> int:
    stream = _read_weights(args.weights)
    commitment = compute_commitment(stream)
    namespace = IssuerNamespace(args.namespace)
    ai_id = derive_ai_id(commitment, namespace)
    _emit(
        args,
        [
            f"commitment {commitment.hex}",
            f"ai-id {ai_id.hex}",
            f"hash-tail {hash_tail(commitment)}",
        ],
        {
            "commitment": commitment.hex,
            "ai_id": ai_id.hex,
            "hash_tail": hash_tail(commitment),
            "namespace": namespace.owner_id,
        },
    )
    return EXIT_OK


def cmd_id_build(args) -> int:
    commitment = _load_commitment(args)
    try:
        secondary = build_secondary_id(
            args.country, args.owner, args.family, args.version, args.date, commitment
        )
    except IdentityError as exc:
        raise CliInputError(str(exc))
    _emit(args, [secondary.render()], {"secondary_id": secondary.render()})
    return EXIT_OK


def cmd_id_check(args) -> int:
    try:
        secondary = parse_secondary_id(args.identifier, verify_checksum=not args.structural)
    except ChecksumMismatch as exc:
        print(f"checksum mismatch: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except SecondaryIdError as exc:
        raise CliInputError(str(exc))
    _emit(
        args,
        [f"ok {secondary.render()}"],
        {
            "valid": True,
            "checksum_verified": not args.structural,
            "fields": secondary.__dict__,
        },
    )
    return EXIT_OK


def cmd_register(args) -> int:
    key = _load_key(_resolve_key_path(args), "developer")
    commitment = _load_commitment(args)
    namespace = IssuerNamespace(args.namespace)
    ai_id = derive_ai_id(commitment, namespace)
    tail = hash_tail(commitment)
    anchor = zkboo.proof_system_anchor(args.rounds)
    metadata = Path(args.metadata).read_bytes() if args.metadata else b""

    signed = registration_signed_bytes(
        namespace.owner_id, args.country, args.family, args.version, args.date,
        tail, ai_id.digest, anchor, hashlib.sha256(metadata).digest(), key.public_bytes,
    )
    import base64

    with RegistryClient(_resolve_service(args)) as client:
        response = client.register(
            namespace=namespace.owner_id,
            country=args.country,
            family=args.family,
            version=args.version,
            date=args.date,
            hash_tail=tail,
            ai_id=ai_id.hex,
            zkp_anchor=anchor.hex(),
            metadata=base64.b64encode(metadata).decode(),
            developer_public_key=key.public_bytes.hex(),
            developer_signature=key.sign(signed).hex(),
            risk_class=args.risk_class,
        )
    _emit(
        args,
        [f"secondary-id {response['secondary_id']}", f"status {response['status']}"],
        response,
    )
    return EXIT_OK


def cmd_status(args) -> int:
    key = _load_key(_resolve_key_path(args), "authority")
    try:
        ai_id = PrimaryIdentifier.from_hex(args.ai_id)
        new_status = Status(args.new_status)
    except (IdentityError, ValueError) as exc:
        raise CliInputError(str(exc))
    timestamp = int(time.time())
    signature = key.sign(status_signed_bytes(ai_id.digest, new_status, timestamp))
    with RegistryClient(_resolve_service(args)) as client:
        response = client.update_status(
            ai_id.hex, new_status.value, timestamp,
            key.public_bytes.hex(), signature.hex(),
        )
    _emit(args, [f"status {response['status']}"], response)
    return EXIT_OK


def cmd_prove(args) -> int:
    commitment = _load_commitment(args)
    try:
        ai_id = PrimaryIdentifier.from_hex(args.ai_id)
    except IdentityError as exc:
        raise CliInputError(str(exc))

    with RegistryClient(_resolve_service(args)) as client:
        try:
            entry = client.get_entry(ai_id.hex)
        except ServerRejection as exc:
            if isinstance(exc.detail, dict) and exc.detail.get("outcome") == "UNREGISTERED":
                _emit(args, ["outcome UNREGISTERED"],
                      {"outcome": "UNREGISTERED", "ai_id": ai_id.hex})
                return EXIT_VERIFY
            raise
        namespace = IssuerNamespace(entry["namespace"])
        rounds = _rounds_for_anchor(bytes.fromhex(entry["zkp_anchor"]))

        challenge = client.issue_challenge(ai_id.hex)
        statement = zkboo.PossessionStatement(
            ai_id=ai_id,
            namespace=namespace,
            challenge_nonce=bytes.fromhex(challenge["nonce"]),
            rounds=rounds,
        )
        try:
            proof = zkboo.prove(statement, zkboo.PossessionWitness(h=commitment))
        except zkboo.WitnessMismatch as exc:
            print(f"witness mismatch, not submitting: {exc}", file=sys.stderr)
            return EXIT_VERIFY
        verdict = client.submit_proof(challenge["challenge_id"], zkboo.serialize_proof(proof))

    _emit(
        args,
        [f"outcome {verdict['outcome']}", f"status {verdict['status']}"]
        + ([f"detail {verdict['detail']}"] if verdict.get("detail") else []),
        verdict,
    )
    return EXIT_OK if verdict["outcome"] == "VERIFIED" else EXIT_VERIFY


def _rounds_for_anchor(anchor: bytes, limit: int = 1024) -> int:
    for rounds in range(1, limit + 1):
        if zkboo.proof_system_anchor(rounds) == anchor:
            return rounds
    raise CliInputError("registered proof-system anchor uses unknown parameters")


def cmd_drift(args) -> int:
    candidate = _read_weights(args.candidate)
    try:
        policy = lzjd.DriftPolicy(threshold=args.tau)
    except lzjd.LzjdError as exc:
        raise CliInputError(str(exc))
    if args.anchor:
        anchor: bytes | lzjd.DigestSketch = _read_weights(args.anchor)
    else:
        try:
            anchor = lzjd.load_sketch(Path(args.anchor_sketch).read_bytes())
        except FileNotFoundError:
            raise CliInputError(f"no such file: {args.anchor_sketch}")
        except lzjd.LzjdError as exc:
            raise CliInputError(f"{args.anchor_sketch}: {exc}")
    try:
        verdict = lzjd.screen_drift(anchor, candidate, policy)
    except lzjd.LzjdError as exc:
        raise CliInputError(str(exc))
    _emit(
        args,
        [f"{verdict.score:.6f} {verdict.outcome.value}"],
        {
            "score": verdict.score,
            "outcome": verdict.outcome.value,
            "mode": verdict.mode.value,
            "threshold": args.tau,
        },
    )
    return EXIT_OK if verdict.outcome is lzjd.Outcome.WITHIN else EXIT_VERIFY


def cmd_sketch(args) -> int:
    stream = _read_weights(args.weights)
    sketch = lzjd.sketch(stream, k=args.k)
    Path(args.out).write_bytes(lzjd.dump_sketch(sketch))
    _emit(
        args,
        [f"sketch {args.out} k={sketch.k} values={len(sketch.values)}"],
        {"path": str(args.out), "k": sketch.k, "values": len(sketch.values)},
    )
    return EXIT_OK


def cmd_audit(args) -> int:
    if args.ledger:
        try:
            data = Path(args.ledger).read_bytes()
        except FileNotFoundError:
            raise CliInputError(f"no such file: {args.ledger}")
    else:
        with RegistryClient(args.service) as client:
            data = b"".join(client.ledger_blocks(0))
    bad = verify_chain_bytes(data)
    if bad is None:
        _emit(args, ["ok"], {"ok": True, "blocks": _block_count(data)})
        return EXIT_OK
    _emit(args, [f"invalid block {bad}"], {"ok": False, "first_invalid_block": bad})
    return EXIT_VERIFY


def _block_count(data: bytes) -> int:
    from .ledger import decode_blocks

    return len(decode_blocks(data))


def cmd_serve(args) -> int:
    from . import service

    if args.config:
        config = ServiceConfig.load(args.config)
    else:
        if not args.ledger:
            raise CliInputError("serve needs --config or --ledger")
        policies = {}
        for spec in args.drift_policy or ():
            name, _, value = spec.partition("=")
            if not value:
                raise CliInputError(f"--drift-policy expects CLASS=TAU, got {spec!r}")
            policies[name] = float(value)
        config = ServiceConfig(
            ledger_path=Path(args.ledger),
            authority_keys=frozenset(bytes.fromhex(k) for k in args.authority_key or ()),
            challenge_ttl=args.ttl,
            drift_policies=policies,
            drift_log_path=Path(args.drift_log) if args.drift_log else None,
            host=args.host,
            port=args.port,
        )
    service.run(config)
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="aiid", description="model identity toolchain")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def with_json(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = with_json(sub.add_parser("keygen", help="generate a role-tagged Ed25519 keypair"))
    p.add_argument("--role", required=True, choices=ROLES)
    p.add_argument("--out", required=True, help="output key file (JSON)")
    p.set_defaults(func=cmd_keygen)

    p = with_json(sub.add_parser("fingerprint", help="commitment, AI-ID and hash tail of a weight file"))
    p.add_argument("weights", help=".aiw weight stream")
    p.add_argument("--namespace", required=True, help="8-char issuer namespace")
    p.set_defaults(func=cmd_fingerprint)

    id_parser = sub.add_parser("id", help="secondary identifier tools")
    id_sub = id_parser.add_subparsers(dest="id_command", metavar="subcommand")
    p = with_json(id_sub.add_parser("build", help="build a secondary identifier"))
    p.add_argument("--country", required=True)
    p.add_argument("--owner", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--version", required=True)
    p.add_argument("--date", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--weights", help=".aiw file to fingerprint")
    group.add_argument("--commitment-file", help="32-byte commitment file")
    p.set_defaults(func=cmd_id_build)
    p = with_json(id_sub.add_parser("check", help="validate a secondary identifier"))
    p.add_argument("identifier")
    p.add_argument("--structural", action="store_true", help="skip the checksum check")
    p.set_defaults(func=cmd_id_check)

    p = with_json(sub.add_parser("register", help="register an identity with the service"))
    p.add_argument("--service", help="registry base URL (or AIID_SERVICE)")
    p.add_argument("--key", help="developer key file (or AIID_KEY)")
    p.add_argument("--config", help="JSON config with service/key (or AIID_CONFIG)")
    p.add_argument("--namespace", required=True)
    p.add_argument("--country", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--version", required=True)
    p.add_argument("--date", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--weights")
    group.add_argument("--commitment-file")
    p.add_argument("--metadata", help="opaque metadata document to bundle")
    p.add_argument("--rounds", type=int, default=zkboo.DEFAULT_ROUNDS,
                   help="proof rounds pinned in the ZKP anchor")
    p.add_argument("--risk-class", default="default")
    p.set_defaults(func=cmd_register)

    p = with_json(sub.add_parser("status", help="authority status update"))
    p.add_argument("--service", help="registry base URL (or AIID_SERVICE)")
    p.add_argument("--key", help="authority key file (or AIID_KEY)")
    p.add_argument("--config", help="JSON config with service/key (or AIID_CONFIG)")
    p.add_argument("ai_id", help="AI-ID (64 hex chars)")
    p.add_argument("new_status", choices=[s.value for s in Status])
    p.set_defaults(func=cmd_status)

    p = with_json(sub.add_parser("prove", help="checkpoint: challenge, prove, verdict"))
    p.add_argument("--service", help="registry base URL (or AIID_SERVICE)")
    p.add_argument("--config", help="JSON config with service (or AIID_CONFIG)")
    p.add_argument("ai_id")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--weights")
    group.add_argument("--commitment-file")
    p.set_defaults(func=cmd_prove)

    p = with_json(sub.add_parser("drift", help="score a candidate against an anchor"))
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--anchor", help="anchor .aiw file (exact mode)")
    group.add_argument("--anchor-sketch", help="anchor sketch file (sketch mode)")
    p.add_argument("--candidate", required=True, help="candidate .aiw file")
    p.add_argument("--tau", type=float, required=True,
                   help="drift threshold (policy-defined, no default)")
    p.set_defaults(func=cmd_drift)

    p = with_json(sub.add_parser("sketch", help="write the LZ sketch of a weight file"))
    p.add_argument("weights")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=lzjd.DEFAULT_SKETCH_SIZE)
    p.set_defaults(func=cmd_sketch)

    p = with_json(sub.add_parser("audit", help="verify a ledger chain"))
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--ledger", help="local ledger file")
    group.add_argument("--service", help="fetch blocks from a registry")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("serve", help="run the registry service")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--ledger", help="ledger file path")
    p.add_argument("--authority-key", action="append", help="authority public key (hex), repeatable")
    p.add_argument("--drift-policy", action="append", help="CLASS=TAU, repeatable")
    p.add_argument("--drift-log", help="drift attestation JSONL path")
    p.add_argument("--ttl", type=float, default=300.0, help="challenge TTL seconds")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ServerRejection,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SERVER
    except TransportFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SERVER


if __name__ == "__main__":
    sys.exit(main())
