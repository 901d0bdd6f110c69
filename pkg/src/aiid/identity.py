"""Weight commitments, namespaced AI-IDs, and human-readable labels.

The machine-facing layer is two SHA-256 stages: a commitment over the
canonical weight stream, then a namespaced identifier hashing an 8-byte
issuer prefix together with the commitment.  The commitment stays secret
(knowing it is what possession proofs demonstrate); only the AI-ID is
disclosed.

The human-facing layer is a seven-field uppercase label,
``CC-OOOOOOOO-FFFVV-YYYYMMDD-TTTT-KK``: country, owner, family+version,
date, a base-36 tail tied to the commitment, and a base-36 checksum over
everything before it.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from datetime import datetime

BASE36 = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"

_NAMESPACE_RE = re.compile(r"[A-Z0-9]{8}\Z")
_SECONDARY_RE = re.compile(
    r"(?P<country>[A-Z]{2})-"
    r"(?P<owner_id>[A-Z0-9]{8})-"
    r"(?P<family>[A-Z0-9]{3})(?P<version>[A-Z0-9]{2})-"
    r"(?P<date>[0-9]{8})-"
    r"(?P<hash_tail>[A-Z0-9]{4})-"
    r"(?P<checksum>[A-Z0-9]{2})\Z"
)

# Offsets of each field inside the rendered 34-char label, for error messages.
_FIELD_POSITIONS = {
    "country": 0,
    "owner_id": 3,
    "family": 12,
    "version": 15,
    "date": 18,
    "hash_tail": 27,
    "checksum": 32,
}


class IdentityError(ValueError):
    pass


class SecondaryIdError(IdentityError):
    """Secondary identifier rejected; ``position`` is the offending char index."""

    def __init__(self, message: str, position: int = 0):
        self.position = position
        super().__init__(f"{message} (position {position})")


class ChecksumMismatch(SecondaryIdError):
    pass


@dataclass(frozen=True)
class Commitment:
    """SHA-256 digest of a canonical weight stream (the primary hash)."""

    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 32:
            raise IdentityError(f"commitment must be 32 bytes, got {len(self.digest)}")

    @property
    def hex(self) -> str:
        return self.digest.hex()

    @classmethod
    def from_hex(cls, text: str) -> "Commitment":
        return cls(bytes.fromhex(text))


@dataclass(frozen=True)
class IssuerNamespace:
    """8-character uppercase alphanumeric issuer prefix."""

    owner_id: str

    def __post_init__(self):
        if not _NAMESPACE_RE.match(self.owner_id):
            raise IdentityError(
                f"namespace must match [A-Z0-9]{{8}}, got {self.owner_id!r}"
            )

    @property
    def ascii_bytes(self) -> bytes:
        return self.owner_id.encode("ascii")


@dataclass(frozen=True)
class PrimaryIdentifier:
    """The registered, externally disclosed identifier (AI-ID)."""

    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 32:
            raise IdentityError(f"AI-ID must be 32 bytes, got {len(self.digest)}")

    @property
    def hex(self) -> str:
        return self.digest.hex()

    @classmethod
    def from_hex(cls, text: str) -> "PrimaryIdentifier":
        if len(text) != 64 or text != text.lower():
            raise IdentityError("AI-ID text form is 64 lowercase hex characters")
        return cls(bytes.fromhex(text))


def compute_commitment(stream: bytes) -> Commitment:
    """Hash a canonical weight stream into its commitment."""
    return Commitment(hashlib.sha256(stream).digest())


def derive_ai_id(h: Commitment, ns: IssuerNamespace) -> PrimaryIdentifier:
    """AI-ID = SHA-256(namespace bytes || commitment digest), a 40-byte message."""
    return PrimaryIdentifier(hashlib.sha256(ns.ascii_bytes + h.digest).digest())


def _base36(value: int, width: int) -> str:
    digits = []
    for _ in range(width):
        value, rem = divmod(value, 36)
        digits.append(BASE36[rem])
    return "".join(reversed(digits))


def hash_tail(h: Commitment) -> str:
    """4-char base-36 tail from the last 3 bytes of the commitment."""
    return _base36(int.from_bytes(h.digest[-3:], "big") % 36**4, 4)


def _checksum(country: str, owner_id: str, family: str, version: str,
              date: str, tail: str) -> str:
    message = (country + owner_id + family + version + date + tail).encode("ascii")
    value = int.from_bytes(hashlib.sha256(message).digest()[:2], "big")
    return _base36(value % 36**2, 2)


@dataclass(frozen=True)
class SecondaryIdentifier:
    country: str
    owner_id: str
    family: str
    version: str
    date: str
    hash_tail: str
    checksum: str

    def render(self) -> str:
        return (
            f"{self.country}-{self.owner_id}-{self.family}{self.version}-"
            f"{self.date}-{self.hash_tail}-{self.checksum}"
        )

    def __str__(self) -> str:
        return self.render()


def _check_field(name: str, value: str, pattern: str) -> None:
    if not re.fullmatch(pattern, value):
        raise SecondaryIdError(
            f"field {name}={value!r} must match {pattern}", _FIELD_POSITIONS[name]
        )


def _check_date(date: str) -> None:
    try:
        datetime.strptime(date, "%Y%m%d")
    except ValueError:
        raise SecondaryIdError(
            f"date {date!r} is not a valid YYYYMMDD calendar date",
            _FIELD_POSITIONS["date"],
        )


def build_secondary_id(country: str, owner_id: str, family: str, version: str,
                       date: str, h: Commitment) -> SecondaryIdentifier:
    """Assemble the label, deriving the tail from ``h`` and the checksum."""
    _check_field("country", country, "[A-Z]{2}")
    _check_field("owner_id", owner_id, "[A-Z0-9]{8}")
    _check_field("family", family, "[A-Z0-9]{3}")
    _check_field("version", version, "[A-Z0-9]{2}")
    _check_field("date", date, "[0-9]{8}")
    _check_date(date)
    tail = hash_tail(h)
    return SecondaryIdentifier(
        country, owner_id, family, version, date, tail,
        _checksum(country, owner_id, family, version, date, tail),
    )


def complete_secondary_id(country: str, owner_id: str, family: str, version: str,
                          date: str, tail: str) -> SecondaryIdentifier:
    """Like ``build_secondary_id`` but with a caller-supplied tail.

    Used by parties that never see the commitment (the registry verifies
    field grammar and computes the checksum; the tail is the developer's
    claim).
    """
    _check_field("country", country, "[A-Z]{2}")
    _check_field("owner_id", owner_id, "[A-Z0-9]{8}")
    _check_field("family", family, "[A-Z0-9]{3}")
    _check_field("version", version, "[A-Z0-9]{2}")
    _check_field("date", date, "[0-9]{8}")
    _check_date(date)
    _check_field("hash_tail", tail, "[A-Z0-9]{4}")
    return SecondaryIdentifier(
        country, owner_id, family, version, date, tail,
        _checksum(country, owner_id, family, version, date, tail),
    )


def parse_secondary_id(text: str, verify_checksum: bool = True) -> SecondaryIdentifier:
    """Parse the hyphenated label; optionally recheck the checksum.

    Structural mode (``verify_checksum=False``) only enforces the grammar
    and the calendar date.
    """
    match = _SECONDARY_RE.match(text)
    if match is None:
        position = _mismatch_position(text)
        raise SecondaryIdError(f"malformed secondary identifier {text!r}", position)
    fields = match.groupdict()
    _check_date(fields["date"])
    parsed = SecondaryIdentifier(**fields)
    if verify_checksum:
        expected = _checksum(
            parsed.country, parsed.owner_id, parsed.family, parsed.version,
            parsed.date, parsed.hash_tail,
        )
        if parsed.checksum != expected:
            raise ChecksumMismatch(
                f"checksum {parsed.checksum} does not match recomputed {expected}",
                _FIELD_POSITIONS["checksum"],
            )
    return parsed


def _mismatch_position(text: str) -> int:
    """First index where ``text`` stops matching the label template."""
    template = "AA-AAAAAAAA-AAAAA-00000000-AAAA-AA"
    for i, char in enumerate(text):
        if i >= len(template):
            return i
        expected = template[i]
        if expected == "-" and char != "-":
            return i
        if expected == "A" and not (char.isascii() and (char.isdigit() or char.isupper())):
            return i
        if expected == "0" and not (char.isascii() and char.isdigit()):
            return i
        # country letters only
        if i < 2 and not (char.isascii() and char.isupper()):
            return i
    return len(text)
