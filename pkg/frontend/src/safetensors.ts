// Minimal safetensors reader: u64 LE header length, JSON header mapping
// tensor names to {dtype, shape, data_offsets}, then the data section.
// Tensors are stored little-endian, contiguous, row-major -- already the
// AIW1 element layout.

export interface SafetensorsTensor {
    name: string;
    dtype: string;
    shape: number[];
    data: Uint8Array;
}

export class ContainerError extends Error {}

interface HeaderEntry {
    dtype: string;
    shape: number[];
    data_offsets: [number, number];
}

export function parseSafetensors(bytes: Uint8Array): SafetensorsTensor[] {
    if (bytes.length < 8) {
        throw new ContainerError("file too short for a safetensors header");
    }
    const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
    const headerSize = view.getBigUint64(0, true);
    if (headerSize > BigInt(bytes.length - 8)) {
        throw new ContainerError(`header size ${headerSize} exceeds file size`);
    }
    const headerBytes = bytes.subarray(8, 8 + Number(headerSize));
    let header: Record<string, unknown>;
    try {
        header = JSON.parse(new TextDecoder("utf-8", { fatal: true }).decode(headerBytes));
    } catch (error) {
        throw new ContainerError(`invalid safetensors header JSON: ${error}`);
    }
    const dataStart = 8 + Number(headerSize);
    const dataLength = bytes.length - dataStart;

    const tensors: SafetensorsTensor[] = [];
    for (const [name, value] of Object.entries(header)) {
        if (name === "__metadata__") continue;
        const entry = value as HeaderEntry;
        if (
            typeof entry?.dtype !== "string" ||
            !Array.isArray(entry.shape) ||
            !Array.isArray(entry.data_offsets) ||
            entry.data_offsets.length !== 2
        ) {
            throw new ContainerError(`malformed header entry for tensor ${name}`);
        }
        const [start, end] = entry.data_offsets;
        if (start < 0 || end < start || end > dataLength) {
            throw new ContainerError(`tensor ${name}: data offsets [${start}, ${end}) out of range`);
        }
        tensors.push({
            name,
            dtype: entry.dtype,
            shape: entry.shape.map(Number),
            data: bytes.subarray(dataStart + start, dataStart + end),
        });
    }
    return tensors;
}

/** Test helper: build a safetensors buffer, preserving the given tensor order. */
export function buildSafetensors(
    tensors: Array<Omit<SafetensorsTensor, "data"> & { data: Uint8Array }>,
    metadata?: Record<string, string>,
): Uint8Array {
    const header: Record<string, unknown> = {};
    if (metadata) header["__metadata__"] = metadata;
    let offset = 0;
    for (const tensor of tensors) {
        header[tensor.name] = {
            dtype: tensor.dtype,
            shape: tensor.shape,
            data_offsets: [offset, offset + tensor.data.length],
        };
        offset += tensor.data.length;
    }
    const headerBytes = new TextEncoder().encode(JSON.stringify(header));
    const out = new Uint8Array(8 + headerBytes.length + offset);
    new DataView(out.buffer).setBigUint64(0, BigInt(headerBytes.length), true);
    out.set(headerBytes, 8);
    let pos = 8 + headerBytes.length;
    for (const tensor of tensors) {
        out.set(tensor.data, pos);
        pos += tensor.data.length;
    }
    return out;
}
