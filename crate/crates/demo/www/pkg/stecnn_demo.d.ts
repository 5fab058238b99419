/* tslint:disable */
/* eslint-disable */

export class Lab {
    free(): void;
    [Symbol.dispose](): void;
    epochs(): number;
    label(i: number): number;
    constructor(seed: number);
    predict(i: number): Float64Array;
    /**
     * `[acc_1, g_mean]` on the held-out windows.
     */
    score(): Float64Array;
    setWidthScale(scale: number): void;
    train(epochs: number): number;
    windowCount(): number;
    window(i: number): Float64Array;
}

/**
 * Metrics JSON for two lists of class indices.
 */
export function metrics(labels: string, predictions: string): string;

/**
 * `[max_error, scales, input.., of_shifted.., shifted..]`.
 */
export function shiftDemo(seed: number, shift: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_lab_free: (a: number, b: number) => void;
    readonly lab_epochs: (a: number) => number;
    readonly lab_label: (a: number, b: number) => [number, number, number];
    readonly lab_new: (a: number) => [number, number, number];
    readonly lab_predict: (a: number, b: number) => [number, number, number, number];
    readonly lab_score: (a: number) => [number, number, number, number];
    readonly lab_setWidthScale: (a: number, b: number) => [number, number];
    readonly lab_train: (a: number, b: number) => [number, number, number];
    readonly lab_window: (a: number, b: number) => [number, number, number, number];
    readonly lab_windowCount: (a: number) => number;
    readonly metrics: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly shiftDemo: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
