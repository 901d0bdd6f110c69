export { AiwDtype, AiwEncodeError, AiwRecord, buildAiw, elementCount } from "./aiw.js";
export { ContainerError, buildSafetensors, parseSafetensors, SafetensorsTensor } from "./safetensors.js";
export {
    convertCheckpoint,
    DTYPE_MAP,
    ExportOptions,
    ExportReport,
    exportCheckpoint,
    SkippedTensor,
    UnsupportedDtypeError,
} from "./export.js";
