"""AIW1: deterministic, bit-exact binary encoding of model weights.

Identity is anchored to weight bytes, so the encoding admits exactly one
byte stream per manifest: little-endian throughout, length-prefixed,
records sorted by name.  Layout::

    "AIW1" | version u16 | record_count u32 |
    per record: name_len u16 | name | dtype u8 | rank u8 |
                dims u64 each | data_len u64 | data

Float payloads are carried verbatim: NaN payloads and signed zeros are
preserved, never normalized.  Files use the ``.aiw`` extension.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

MAGIC = b"AIW1"
FORMAT_VERSION = 1
MAX_RANK = 255
MAX_NAME_BYTES = 65535

_HEADER = struct.Struct("<HI")  # version, record count
_U16 = struct.Struct("<H")
_U64 = struct.Struct("<Q")


class Dtype(IntEnum):
    F16 = 1
    F32 = 2
    F64 = 3
    I8 = 4
    I32 = 5
    I64 = 6
    U8 = 7
    BF16 = 8


ELEMENT_SIZE = {
    Dtype.F16: 2,
    Dtype.F32: 4,
    Dtype.F64: 8,
    Dtype.I8: 1,
    Dtype.I32: 4,
    Dtype.I64: 8,
    Dtype.U8: 1,
    Dtype.BF16: 2,
}


class AiwError(ValueError):
    """Base error for AIW1 encoding and decoding."""


class AiwEncodeError(AiwError):
    pass


class AiwDecodeError(AiwError):
    """Decoding failure; ``offset`` points at the offending byte."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


def element_count(shape: tuple[int, ...]) -> int:
    """Number of elements for a shape; the empty shape is a scalar (1)."""
    n = 1
    for dim in shape:
        n *= dim
    return n


@dataclass(frozen=True)
class CanonicalTensorRecord:
    """One tensor: name, dtype, shape, and raw little-endian row-major data."""

    name: str
    dtype: Dtype
    shape: tuple[int, ...]
    data: bytes

    def validate(self) -> None:
        name_bytes = self.name_bytes
        if not 1 <= len(name_bytes) <= MAX_NAME_BYTES:
            raise AiwEncodeError(
                f"tensor name must encode to 1..{MAX_NAME_BYTES} UTF-8 bytes, "
                f"got {len(name_bytes)}"
            )
        if self.dtype not in ELEMENT_SIZE:
            raise AiwEncodeError(f"unsupported dtype code {self.dtype!r}")
        if len(self.shape) > MAX_RANK:
            raise AiwEncodeError(f"rank {len(self.shape)} exceeds maximum {MAX_RANK}")
        for dim in self.shape:
            if dim < 0 or dim > 0xFFFFFFFFFFFFFFFF:
                raise AiwEncodeError(f"dimension {dim} out of u64 range")
        expected = ELEMENT_SIZE[self.dtype] * element_count(self.shape)
        if len(self.data) != expected:
            raise AiwEncodeError(
                f"tensor {self.name!r}: data length {len(self.data)} does not match "
                f"dtype/shape (expected {expected})"
            )

    @property
    def name_bytes(self) -> bytes:
        return self.name.encode("utf-8")


@dataclass(frozen=True)
class WeightManifest:
    """An ordered collection of tensor records; names strictly increasing."""

    records: tuple[CanonicalTensorRecord, ...]
    format_version: int = FORMAT_VERSION

    def validate(self) -> None:
        if self.format_version != FORMAT_VERSION:
            raise AiwEncodeError(f"unsupported format version {self.format_version}")
        prev: bytes | None = None
        for record in self.records:
            record.validate()
            name = record.name_bytes
            if prev is not None and name <= prev:
                raise AiwEncodeError(
                    f"record names must be strictly increasing bytewise: "
                    f"{prev!r} then {name!r}"
                )
            prev = name


def canonical_serialize(manifest: WeightManifest) -> bytes:
    """Encode a manifest to its unique AIW1 byte stream.

    Pure function of the manifest; two calls yield identical bytes.
    """
    manifest.validate()
    parts = [MAGIC, _HEADER.pack(manifest.format_version, len(manifest.records))]
    for record in manifest.records:
        name = record.name_bytes
        parts.append(_U16.pack(len(name)))
        parts.append(name)
        parts.append(bytes((int(record.dtype), len(record.shape))))
        for dim in record.shape:
            parts.append(_U64.pack(dim))
        parts.append(_U64.pack(len(record.data)))
        parts.append(record.data)
    return b"".join(parts)


def canonical_parse(data: bytes) -> WeightManifest:
    """Decode an AIW1 stream; rejects anything ``canonical_serialize`` cannot emit."""
    view = memoryview(data)
    pos = 0

    def take(n: int, what: str) -> memoryview:
        nonlocal pos
        if len(view) - pos < n:
            raise AiwDecodeError(f"truncated stream while reading {what}", pos)
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    if bytes(take(4, "magic")) != MAGIC:
        raise AiwDecodeError("bad magic, expected b'AIW1'", 0)
    version, count = _HEADER.unpack(take(_HEADER.size, "header"))
    if version != FORMAT_VERSION:
        raise AiwDecodeError(f"unsupported format version {version}", 4)

    records = []
    prev_name: bytes | None = None
    for _ in range(count):
        name_offset = pos
        (name_len,) = _U16.unpack(take(2, "name length"))
        if name_len == 0:
            raise AiwDecodeError("empty tensor name", name_offset)
        name_bytes = bytes(take(name_len, "name"))
        try:
            name = name_bytes.decode("utf-8")
        except UnicodeDecodeError:
            raise AiwDecodeError("tensor name is not valid UTF-8", name_offset + 2)
        if prev_name is not None and name_bytes <= prev_name:
            raise AiwDecodeError(
                f"record names out of order: {prev_name!r} then {name_bytes!r}",
                name_offset,
            )
        prev_name = name_bytes

        dtype_offset = pos
        dtype_code = take(1, "dtype")[0]
        try:
            dtype = Dtype(dtype_code)
        except ValueError:
            raise AiwDecodeError(f"unknown dtype code {dtype_code}", dtype_offset)
        rank = take(1, "rank")[0]
        shape = tuple(
            _U64.unpack(take(8, f"dimension {i}"))[0] for i in range(rank)
        )

        data_len_offset = pos
        (data_len,) = _U64.unpack(take(8, "data length"))
        expected = ELEMENT_SIZE[dtype] * element_count(shape)
        if data_len != expected:
            raise AiwDecodeError(
                f"tensor {name!r}: data length {data_len} does not match "
                f"dtype/shape (expected {expected})",
                data_len_offset,
            )
        payload = bytes(take(data_len, "tensor data"))
        records.append(CanonicalTensorRecord(name, dtype, shape, payload))

    if pos != len(view):
        raise AiwDecodeError(f"{len(view) - pos} trailing bytes after last record", pos)
    return WeightManifest(tuple(records), format_version=version)


def read_stream(path) -> bytes:
    """Load and validate an ``.aiw`` file, returning its raw bytes."""
    with open(path, "rb") as fh:
        data = fh.read()
    canonical_parse(data)
    return data
