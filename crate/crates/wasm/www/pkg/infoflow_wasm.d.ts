/* tslint:disable */
/* eslint-disable */

/**
 * Points in `groups` angular bunches on the unit circle, clustered at
 * cosine threshold `lambda`. `spread` is the half-width of each bunch in
 * radians.
 */
export function cluster_circle(groups: number, per_group: number, spread: number, lambda: number, seed: number): string;

/**
 * Two platforms of random 16-d texts where a share `overlap` of the
 * smaller platform's texts reappear, perturbed, on the larger one.
 * Fractions are reported for thresholds 0.50 through 0.99.
 */
export function correspondence_curve(overlap: number, noise: number, seed: number): string;

/**
 * Simulates two platforms where platform 0 excites platform 1 with
 * `weight`, then fits the model back.
 */
export function hawkes_fit(weight: number, days: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly cluster_circle: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly correspondence_curve: (a: number, b: number, c: number) => [number, number];
    readonly hawkes_fit: (a: number, b: number, c: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
