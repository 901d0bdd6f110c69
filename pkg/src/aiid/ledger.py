"""Append-only, hash-chained registry of model identities.

A single-writer block log: every accepted event (a registration or a
status update) seals one block whose hash covers the previous block's
hash, so any byte of history is pinned by the chain head.  Blocks are
never rewritten; status corrections append new events.

Registration lifecycle: entries start Undecided, must Pass before
deployment checks succeed, may Fail, and end Retired::

    U -> P, U -> F, P -> F, P -> X, F -> X      (X is terminal)

Block file layout (little-endian): ``index u64 | prev_hash 32B |
timestamp u64 | event_count u32 | events | block_hash 32B`` where
``block_hash`` is SHA-256 over everything before it.  Events carry a
kind tag (1=register, 2=status update) and fixed-order fields; the only
variable-length field (the secondary-identifier text) is u16
length-prefixed.
"""

from __future__ import annotations

import hashlib
import struct
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

from .identity import SecondaryIdentifier, complete_secondary_id
from .keys import verify_signature

GENESIS_PREV_HASH = bytes(32)

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")

EVENT_REGISTER = 1
EVENT_STATUS_UPDATE = 2


class Status(str, Enum):
    U = "U"  # undecided
    P = "P"  # pass
    F = "F"  # fail
    X = "X"  # retired


ALLOWED_TRANSITIONS = frozenset(
    {
        (Status.U, Status.P),
        (Status.U, Status.F),
        (Status.P, Status.F),
        (Status.P, Status.X),
        (Status.F, Status.X),
    }
)


class LedgerError(Exception):
    pass


class DuplicateEntryError(LedgerError):
    pass


class UnknownIdError(LedgerError):
    pass


class IllegalTransitionError(LedgerError):
    pass


class UnauthorizedSignerError(LedgerError):
    pass


class InvalidSignatureError(LedgerError):
    pass


class MalformedEntryError(LedgerError):
    pass


class LedgerIntegrityError(LedgerError):
    """The persisted chain fails verification."""

    def __init__(self, block_index: int):
        self.block_index = block_index
        super().__init__(f"ledger chain invalid at block {block_index}")


def registration_signed_bytes(
    namespace: str,
    country: str,
    family: str,
    version: str,
    date: str,
    hash_tail: str,
    ai_id: bytes,
    zkp_anchor: bytes,
    metadata_digest: bytes,
    developer_public_key: bytes,
) -> bytes:
    """Canonical bytes a developer signs when registering.

    Covers the metadata digest rather than the raw document so the
    on-chain entry can be re-verified without the off-chain bundle.  The
    service-assigned registration time and the derived checksum are
    excluded: the developer cannot know either when signing.
    """
    text = (namespace + country + family + version + date + hash_tail).encode("ascii")
    return text + ai_id + zkp_anchor + metadata_digest + developer_public_key


def status_signed_bytes(ai_id: bytes, new_status: Status, timestamp: int) -> bytes:
    return ai_id + new_status.value.encode("ascii") + _U64.pack(timestamp)


@dataclass(frozen=True)
class RegistryEntry:
    ai_id: bytes
    secondary_id: SecondaryIdentifier
    namespace: str
    zkp_anchor: bytes
    metadata_digest: bytes
    developer_public_key: bytes
    developer_signature: bytes
    registered_at: int

    def validate(self) -> None:
        for name, value, size in (
            ("ai_id", self.ai_id, 32),
            ("zkp_anchor", self.zkp_anchor, 32),
            ("metadata_digest", self.metadata_digest, 32),
            ("developer_public_key", self.developer_public_key, 32),
            ("developer_signature", self.developer_signature, 64),
        ):
            if len(value) != size:
                raise MalformedEntryError(f"{name} must be {size} bytes, got {len(value)}")
        # re-derives the checksum, so a corrupted secondary id is caught here
        complete_secondary_id(
            self.secondary_id.country,
            self.secondary_id.owner_id,
            self.secondary_id.family,
            self.secondary_id.version,
            self.secondary_id.date,
            self.secondary_id.hash_tail,
        )
        if not verify_signature(
            self.developer_public_key, self.developer_signature, self.signed_bytes()
        ):
            raise InvalidSignatureError("developer signature does not verify")

    def signed_bytes(self) -> bytes:
        return registration_signed_bytes(
            self.namespace,
            self.secondary_id.country,
            self.secondary_id.family,
            self.secondary_id.version,
            self.secondary_id.date,
            self.secondary_id.hash_tail,
            self.ai_id,
            self.zkp_anchor,
            self.metadata_digest,
            self.developer_public_key,
        )

    def encode(self) -> bytes:
        text = self.secondary_id.render().encode("ascii")
        return b"".join(
            (
                self.ai_id,
                _U16.pack(len(text)),
                text,
                self.namespace.encode("ascii"),
                self.zkp_anchor,
                self.metadata_digest,
                self.developer_public_key,
                _U64.pack(self.registered_at),
                self.developer_signature,
            )
        )


@dataclass(frozen=True)
class RegisterEvent:
    timestamp: int
    entry: RegistryEntry

    def encode(self) -> bytes:
        return bytes((EVENT_REGISTER,)) + _U64.pack(self.timestamp) + self.entry.encode()


@dataclass(frozen=True)
class StatusUpdateEvent:
    timestamp: int
    ai_id: bytes
    new_status: Status
    authority_public_key: bytes
    authority_signature: bytes

    def encode(self) -> bytes:
        return b"".join(
            (
                bytes((EVENT_STATUS_UPDATE,)),
                _U64.pack(self.timestamp),
                self.ai_id,
                self.new_status.value.encode("ascii"),
                self.authority_public_key,
                self.authority_signature,
            )
        )


LedgerEvent = RegisterEvent | StatusUpdateEvent


@dataclass(frozen=True)
class LedgerBlock:
    index: int
    prev_block_hash: bytes
    timestamp: int
    events: tuple[LedgerEvent, ...]
    block_hash: bytes

    def body_bytes(self) -> bytes:
        return b"".join(
            (
                _U64.pack(self.index),
                self.prev_block_hash,
                _U64.pack(self.timestamp),
                _U32.pack(len(self.events)),
                b"".join(event.encode() for event in self.events),
            )
        )

    def encode(self) -> bytes:
        return self.body_bytes() + self.block_hash

    @classmethod
    def seal(cls, index: int, prev_block_hash: bytes, timestamp: int,
             events: Iterable[LedgerEvent]) -> "LedgerBlock":
        block = cls(index, prev_block_hash, timestamp, tuple(events), b"")
        return cls(index, prev_block_hash, timestamp, block.events,
                   hashlib.sha256(block.body_bytes()).digest())


class _Decoder:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if len(self.data) - self.pos < n:
            raise MalformedEntryError(
                f"truncated ledger data at offset {self.pos} (wanted {n} bytes)"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u16(self) -> int:
        return _U16.unpack(self.take(2))[0]

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]


def _decode_entry(dec: _Decoder) -> RegistryEntry:
    ai_id = dec.take(32)
    text = dec.take(dec.u16()).decode("ascii")
    namespace = dec.take(8).decode("ascii")
    zkp_anchor = dec.take(32)
    metadata_digest = dec.take(32)
    developer_public_key = dec.take(32)
    registered_at = dec.u64()
    developer_signature = dec.take(64)
    from .identity import parse_secondary_id

    secondary = parse_secondary_id(text, verify_checksum=False)
    return RegistryEntry(
        ai_id=ai_id,
        secondary_id=secondary,
        namespace=namespace,
        zkp_anchor=zkp_anchor,
        metadata_digest=metadata_digest,
        developer_public_key=developer_public_key,
        developer_signature=developer_signature,
        registered_at=registered_at,
    )


def _decode_event(dec: _Decoder) -> LedgerEvent:
    kind = dec.take(1)[0]
    timestamp = dec.u64()
    if kind == EVENT_REGISTER:
        return RegisterEvent(timestamp, _decode_entry(dec))
    if kind == EVENT_STATUS_UPDATE:
        ai_id = dec.take(32)
        status = Status(dec.take(1).decode("ascii"))
        public_key = dec.take(32)
        signature = dec.take(64)
        return StatusUpdateEvent(timestamp, ai_id, status, public_key, signature)
    raise MalformedEntryError(f"unknown event kind {kind}")


def _decode_block(dec: _Decoder) -> LedgerBlock:
    start = dec.pos
    index = dec.u64()
    prev_hash = dec.take(32)
    timestamp = dec.u64()
    count = dec.u32()
    events = tuple(_decode_event(dec) for _ in range(count))
    body = dec.data[start : dec.pos]
    stored_hash = dec.take(32)
    block = LedgerBlock(index, prev_hash, timestamp, events, stored_hash)
    if block.body_bytes() != body:
        # decoding must be the exact inverse of encoding
        raise MalformedEntryError(f"block at offset {start} does not re-encode")
    return block


def decode_blocks(data: bytes) -> list[LedgerBlock]:
    dec = _Decoder(data)
    blocks = []
    while dec.pos < len(data):
        blocks.append(_decode_block(dec))
    return blocks


def verify_chain_bytes(data: bytes) -> int | None:
    """Recompute every block hash and link; None if intact, else the first
    invalid block index."""
    dec = _Decoder(data)
    prev_hash = GENESIS_PREV_HASH
    index = 0
    while dec.pos < len(data):
        try:
            block = _decode_block(dec)
        except (MalformedEntryError, ValueError):
            return index
        if (
            block.index != index
            or block.prev_block_hash != prev_hash
            or hashlib.sha256(block.body_bytes()).digest() != block.block_hash
        ):
            return index
        prev_hash = block.block_hash
        index += 1
    return None


class Ledger:
    """Single-writer ledger; appends are serialized, sealed blocks immutable."""

    def __init__(
        self,
        path: str | Path | None = None,
        authority_keys: Iterable[bytes] = (),
        clock: Callable[[], float] = time.time,
    ):
        self._path = Path(path) if path is not None else None
        self._authority_keys = frozenset(authority_keys)
        self._clock = clock
        self._write_lock = threading.Lock()
        self._blocks: list[LedgerBlock] = []
        self._raw: list[bytes] = []
        self._entries: dict[bytes, RegistryEntry] = {}
        self._trails: dict[bytes, list[tuple[Status, int, int]]] = {}

        existing = b""
        if self._path is not None and self._path.exists():
            existing = self._path.read_bytes()
        if existing:
            self._replay(existing)
        else:
            genesis = LedgerBlock.seal(0, GENESIS_PREV_HASH, int(self._clock()), ())
            self._append_block(genesis)

    # -- state ----------------------------------------------------------

    @property
    def head_index(self) -> int:
        return self._blocks[-1].index

    @property
    def blocks(self) -> tuple[LedgerBlock, ...]:
        return tuple(self._blocks)

    def raw_blocks_from(self, index: int) -> list[bytes]:
        if index < 0:
            raise ValueError("block index must be >= 0")
        return list(self._raw[index:])

    def lookup(self, ai_id: bytes) -> tuple[RegistryEntry, Status]:
        entry = self._entries.get(ai_id)
        if entry is None:
            raise UnknownIdError(f"unknown AI-ID {ai_id.hex()}")
        return entry, self._trails[ai_id][-1][0]

    def history(self, ai_id: bytes) -> list[tuple[Status, int, int]]:
        if ai_id not in self._trails:
            raise UnknownIdError(f"unknown AI-ID {ai_id.hex()}")
        return list(self._trails[ai_id])

    def registered_ids(self) -> list[bytes]:
        return list(self._entries)

    # -- appends ----------------------------------------------------------

    def append_register(self, entry: RegistryEntry) -> LedgerBlock:
        with self._write_lock:
            entry.validate()
            if entry.ai_id in self._entries:
                raise DuplicateEntryError(f"AI-ID {entry.ai_id.hex()} already registered")
            event = RegisterEvent(timestamp=entry.registered_at, entry=entry)
            return self._seal([event])

    def append_status(
        self,
        ai_id: bytes,
        new_status: Status,
        authority_public_key: bytes,
        authority_signature: bytes,
        timestamp: int,
    ) -> LedgerBlock:
        with self._write_lock:
            if ai_id not in self._entries:
                raise UnknownIdError(f"unknown AI-ID {ai_id.hex()}")
            current = self._trails[ai_id][-1][0]
            if (current, new_status) not in ALLOWED_TRANSITIONS:
                raise IllegalTransitionError(
                    f"illegal status transition {current.value} -> {new_status.value}"
                )
            if authority_public_key not in self._authority_keys:
                raise UnauthorizedSignerError("signer is not a configured authority")
            if not verify_signature(
                authority_public_key,
                authority_signature,
                status_signed_bytes(ai_id, new_status, timestamp),
            ):
                raise InvalidSignatureError("authority signature does not verify")
            event = StatusUpdateEvent(
                timestamp=timestamp,
                ai_id=ai_id,
                new_status=new_status,
                authority_public_key=authority_public_key,
                authority_signature=authority_signature,
            )
            return self._seal([event])

    def verify_chain(self) -> int | None:
        if self._path is not None and self._path.exists():
            data = self._path.read_bytes()
        else:
            data = b"".join(self._raw)
        return verify_chain_bytes(data)

    # -- internals --------------------------------------------------------

    def _seal(self, events: list[LedgerEvent]) -> LedgerBlock:
        block = LedgerBlock.seal(
            index=len(self._blocks),
            prev_block_hash=self._blocks[-1].block_hash if self._blocks else GENESIS_PREV_HASH,
            timestamp=int(self._clock()),
            events=events,
        )
        self._append_block(block)
        return block

    def _append_block(self, block: LedgerBlock) -> None:
        raw = block.encode()
        if self._path is not None:
            with open(self._path, "ab") as fh:
                fh.write(raw)
        self._blocks.append(block)
        self._raw.append(raw)
        self._apply(block)

    def _apply(self, block: LedgerBlock) -> None:
        for event in block.events:
            if isinstance(event, RegisterEvent):
                entry = event.entry
                self._entries[entry.ai_id] = entry
                self._trails[entry.ai_id] = [(Status.U, event.timestamp, block.index)]
            else:
                self._trails[event.ai_id].append(
                    (event.new_status, event.timestamp, block.index)
                )

    def _replay(self, data: bytes) -> None:
        bad = verify_chain_bytes(data)
        if bad is not None:
            raise LedgerIntegrityError(bad)
        for block in decode_blocks(data):
            self._blocks.append(block)
            self._raw.append(block.encode())
            for event in block.events:
                if isinstance(event, RegisterEvent):
                    event.entry.validate()
                elif not verify_signature(
                    event.authority_public_key,
                    event.authority_signature,
                    status_signed_bytes(event.ai_id, event.new_status, event.timestamp),
                ):
                    raise InvalidSignatureError(
                        f"status signature in block {block.index} does not verify"
                    )
            self._apply(block)
