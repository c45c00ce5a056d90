/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const cluster_circle: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const correspondence_curve: (a: number, b: number, c: number) => [number, number];
export const hawkes_fit: (a: number, b: number, c: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
