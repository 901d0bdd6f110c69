#!/usr/bin/env node
// export <input> <output> [--skip-unsupported]

import { exportCheckpoint, UnsupportedDtypeError } from "./export.js";
import { ContainerError } from "./safetensors.js";
import { AiwEncodeError } from "./aiw.js";

export function main(argv: string[]): number {
    const args = argv.filter((a) => a !== "--skip-unsupported");
    const skipUnsupported = args.length !== argv.length;
    if (args[0] === "export") args.shift(); // optional subcommand form
    if (args.length !== 2) {
        console.error("usage: aiw-export <input.safetensors> <output.aiw> [--skip-unsupported]");
        return 1;
    }
    try {
        const report = exportCheckpoint(args[0], args[1], { skipUnsupported });
        console.log(JSON.stringify(report, null, 2));
        return 0;
    } catch (error) {
        if (
            error instanceof UnsupportedDtypeError ||
            error instanceof ContainerError ||
            error instanceof AiwEncodeError
        ) {
            console.error(`error: ${error.message}`);
            return 2;
        }
        throw error;
    }
}

process.exit(main(process.argv.slice(2)));
