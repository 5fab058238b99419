/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_lab_free: (a: number, b: number) => void;
export const lab_epochs: (a: number) => number;
export const lab_label: (a: number, b: number) => [number, number, number];
export const lab_new: (a: number) => [number, number, number];
export const lab_predict: (a: number, b: number) => [number, number, number, number];
export const lab_score: (a: number) => [number, number, number, number];
export const lab_setWidthScale: (a: number, b: number) => [number, number];
export const lab_train: (a: number, b: number) => [number, number, number];
export const lab_window: (a: number, b: number) => [number, number, number, number];
export const lab_windowCount: (a: number) => number;
export const metrics: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const shiftDemo: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
