import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";

import { AiwDtype, AiwRecord, buildAiw } from "./aiw.js";
import { ContainerError, parseSafetensors } from "./safetensors.js";

// safetensors dtype strings that map onto the canonical format
export const DTYPE_MAP: Record<string, AiwDtype> = {
    F16: AiwDtype.F16,
    F32: AiwDtype.F32,
    F64: AiwDtype.F64,
    I8: AiwDtype.I8,
    I32: AiwDtype.I32,
    I64: AiwDtype.I64,
    U8: AiwDtype.U8,
    BF16: AiwDtype.BF16,
};

export interface SkippedTensor {
    name: string;
    dtype: string;
    reason: string;
}

export interface ExportReport {
    tensor_count: number;
    total_bytes: number;
    dtype_histogram: Record<string, number>;
    skipped: SkippedTensor[];
    h_w: string;
}

export class UnsupportedDtypeError extends Error {
    constructor(public tensors: SkippedTensor[]) {
        super(
            "unsupported dtypes: " +
                tensors.map((t) => `${t.name} (${t.dtype})`).join(", ") +
                "; re-run with --skip-unsupported to drop them",
        );
    }
}

export interface ExportOptions {
    skipUnsupported?: boolean;
}

/** Convert checkpoint bytes into the canonical stream plus its report. */
export function convertCheckpoint(
    input: Uint8Array,
    options: ExportOptions = {},
): { aiw: Uint8Array; report: ExportReport } {
    const tensors = parseSafetensors(input);
    const records: AiwRecord[] = [];
    const skipped: SkippedTensor[] = [];
    const histogram: Record<string, number> = {};

    for (const tensor of tensors) {
        const dtype = DTYPE_MAP[tensor.dtype];
        if (dtype === undefined) {
            skipped.push({
                name: tensor.name,
                dtype: tensor.dtype,
                reason: "dtype not representable in AIW1",
            });
            continue;
        }
        histogram[tensor.dtype] = (histogram[tensor.dtype] ?? 0) + 1;
        records.push({
            name: tensor.name,
            dtype,
            shape: tensor.shape,
            data: tensor.data,
        });
    }

    if (skipped.length > 0 && !options.skipUnsupported) {
        throw new UnsupportedDtypeError(skipped);
    }

    const aiw = buildAiw(records);
    const report: ExportReport = {
        tensor_count: records.length,
        total_bytes: aiw.length,
        dtype_histogram: histogram,
        skipped,
        h_w: createHash("sha256").update(aiw).digest("hex"),
    };
    return { aiw, report };
}

/** File-to-file export; returns the report the CLI prints as JSON. */
export function exportCheckpoint(
    inputPath: string,
    outputPath: string,
    options: ExportOptions = {},
): ExportReport {
    let input: Uint8Array;
    try {
        input = readFileSync(inputPath);
    } catch (error) {
        throw new ContainerError(`cannot read ${inputPath}: ${error}`);
    }
    const { aiw, report } = convertCheckpoint(input, options);
    writeFileSync(outputPath, aiw);
    return report;
}
