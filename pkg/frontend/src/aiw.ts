// AIW1 writer: the canonical byte encoding the identity pipeline hashes.
// Layout: "AIW1" | version u16 LE | record count u32 LE | per record
// (sorted by name bytes): name_len u16 | name | dtype u8 | rank u8 |
// dims u64 LE | data_len u64 LE | data.

export const AIW_MAGIC = new Uint8Array([0x41, 0x49, 0x57, 0x31]);
export const FORMAT_VERSION = 1;
export const MAX_RANK = 255;
export const MAX_NAME_BYTES = 65535;

// dtype codes of the AIW1 format
export enum AiwDtype {
    F16 = 1,
    F32 = 2,
    F64 = 3,
    I8 = 4,
    I32 = 5,
    I64 = 6,
    U8 = 7,
    BF16 = 8,
}

export const ELEMENT_SIZE: Record<AiwDtype, number> = {
    [AiwDtype.F16]: 2,
    [AiwDtype.F32]: 4,
    [AiwDtype.F64]: 8,
    [AiwDtype.I8]: 1,
    [AiwDtype.I32]: 4,
    [AiwDtype.I64]: 8,
    [AiwDtype.U8]: 1,
    [AiwDtype.BF16]: 2,
};

export interface AiwRecord {
    name: string;
    dtype: AiwDtype;
    shape: number[];
    data: Uint8Array; // little-endian elements, row-major
}

export class AiwEncodeError extends Error {}

export function elementCount(shape: number[]): number {
    return shape.reduce((a, b) => a * b, 1);
}

function compareBytes(a: Uint8Array, b: Uint8Array): number {
    const n = Math.min(a.length, b.length);
    for (let i = 0; i < n; i++) {
        if (a[i] !== b[i]) return a[i] - b[i];
    }
    return a.length - b.length;
}

function validateRecord(record: AiwRecord, nameBytes: Uint8Array): void {
    if (nameBytes.length < 1 || nameBytes.length > MAX_NAME_BYTES) {
        throw new AiwEncodeError(`tensor name must encode to 1..${MAX_NAME_BYTES} UTF-8 bytes`);
    }
    if (!(record.dtype in ELEMENT_SIZE)) {
        throw new AiwEncodeError(`unsupported dtype code ${record.dtype}`);
    }
    if (record.shape.length > MAX_RANK) {
        throw new AiwEncodeError(`rank ${record.shape.length} exceeds ${MAX_RANK}`);
    }
    for (const dim of record.shape) {
        if (!Number.isSafeInteger(dim) || dim < 0) {
            throw new AiwEncodeError(`bad dimension ${dim} in tensor ${record.name}`);
        }
    }
    const expected = ELEMENT_SIZE[record.dtype] * elementCount(record.shape);
    if (record.data.length !== expected) {
        throw new AiwEncodeError(
            `tensor ${record.name}: data length ${record.data.length} != expected ${expected}`,
        );
    }
}

/** Encode records into the unique AIW1 stream; input order is irrelevant. */
export function buildAiw(records: AiwRecord[]): Uint8Array {
    const encoder = new TextEncoder();
    const named = records.map((record) => ({
        record,
        nameBytes: encoder.encode(record.name),
    }));
    named.sort((a, b) => compareBytes(a.nameBytes, b.nameBytes));
    for (let i = 1; i < named.length; i++) {
        if (compareBytes(named[i - 1].nameBytes, named[i].nameBytes) === 0) {
            throw new AiwEncodeError(`duplicate tensor name ${named[i].record.name}`);
        }
    }

    let size = 10;
    for (const { record, nameBytes } of named) {
        validateRecord(record, nameBytes);
        size += 2 + nameBytes.length + 1 + 1 + 8 * record.shape.length + 8 + record.data.length;
    }

    const out = new Uint8Array(size);
    const view = new DataView(out.buffer);
    out.set(AIW_MAGIC, 0);
    view.setUint16(4, FORMAT_VERSION, true);
    view.setUint32(6, named.length, true);
    let pos = 10;
    for (const { record, nameBytes } of named) {
        view.setUint16(pos, nameBytes.length, true);
        pos += 2;
        out.set(nameBytes, pos);
        pos += nameBytes.length;
        out[pos++] = record.dtype;
        out[pos++] = record.shape.length;
        for (const dim of record.shape) {
            view.setBigUint64(pos, BigInt(dim), true);
            pos += 8;
        }
        view.setBigUint64(pos, BigInt(record.data.length), true);
        pos += 8;
        out.set(record.data, pos);
        pos += record.data.length;
    }
    return out;
}
