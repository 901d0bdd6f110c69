"""Ed25519 keypairs with role tags, and their on-disk JSON format.

Roles distinguish who may do what: developers sign registration bundles,
authorities sign status updates, attestors sign possession attestations,
reporters sign drift attestations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

ROLES = ("developer", "authority", "attestor", "reporter")


class KeyError_(ValueError):
    pass


@dataclass
class KeyPair:
    role: str
    _private: Ed25519PrivateKey

    @classmethod
    def generate(cls, role: str) -> "KeyPair":
        if role not in ROLES:
            raise KeyError_(f"unknown role {role!r}, expected one of {ROLES}")
        return cls(role=role, _private=Ed25519PrivateKey.generate())

    @property
    def public_bytes(self) -> bytes:
        return self._private.public_key().public_bytes_raw()

    @property
    def secret_bytes(self) -> bytes:
        return self._private.private_bytes_raw()

    def sign(self, message: bytes) -> bytes:
        return self._private.sign(message)

    def save(self, path: str | Path) -> None:
        payload = {
            "role": self.role,
            "public_key": self.public_bytes.hex(),
            "secret_key": self.secret_bytes.hex(),
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "KeyPair":
        payload = json.loads(Path(path).read_text())
        role = payload.get("role")
        if role not in ROLES:
            raise KeyError_(f"key file {path} has unknown role {role!r}")
        private = Ed25519PrivateKey.from_private_bytes(bytes.fromhex(payload["secret_key"]))
        pair = cls(role=role, _private=private)
        stored_public = payload.get("public_key")
        if stored_public and bytes.fromhex(stored_public) != pair.public_bytes:
            raise KeyError_(f"key file {path}: public key does not match secret key")
        return pair


def verify_signature(public_key: bytes, signature: bytes, message: bytes) -> bool:
    """True iff ``signature`` is a valid Ed25519 signature over ``message``."""
    if len(public_key) != 32 or len(signature) != 64:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False
