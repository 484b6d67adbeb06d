/* tslint:disable */
/* eslint-disable */

/**
 * Run SOAK on two synthetic subsets where subset B has a label-flip
 * fraction `flip` and a feature offset `shift`. Returns JSON with the
 * comparison rows, the error table and two SVG figures.
 */
export function soak_demo(n_per_subset: number, flip: number, shift: number, folds: number, learner: string, seed: bigint): string;

/**
 * SVG grid of rows coloured by role (test, train, unused) for test subset
 * `subset`, test fold `fold` (both 0-based) and the named policy.
 */
export function split_picture(n_rows: number, n_subsets: number, folds: number, seed: bigint, subset: number, fold: number, policy: string): string;

/**
 * Student-t cumulative distribution function.
 */
export function t_cdf(x: number, df: number): number;

/**
 * Paired t-test on comma- or whitespace-separated differences.
 */
export function t_test(diffs: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly soak_demo: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number, number];
    readonly split_picture: (a: number, b: number, c: number, d: bigint, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly t_cdf: (a: number, b: number) => number;
    readonly t_test: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
