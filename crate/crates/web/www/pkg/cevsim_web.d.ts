/* tslint:disable */
/* eslint-disable */

/**
 * Strong errors at levels `coarse_min..=coarse_max` against the same
 * scheme at `ref_level`. Returns rows of `(dt, error, ci_low, ci_high)`
 * followed by the fitted order.
 */
export function convergence(scheme: string, k3: number, q: number, theta: number, coarse_min: number, coarse_max: number, ref_level: number, m_batches: number, l_paths: number, seed: bigint): Float64Array;

/**
 * Sample paths on a `2^level` grid, concatenated: `n_paths` blocks of
 * `2^level + 1` node values. Path `i` is driven by the same Brownian
 * increments for every scheme, so switching schemes keeps the noise fixed.
 */
export function simulate_paths(scheme: string, k3: number, q: number, theta: number, level: number, n_paths: number, seed: bigint): Float64Array;

/**
 * One line per applicability condition, `name: pass|FAIL|n/a`, then the
 * verdict.
 */
export function validity(scheme: string, k3: number, q: number, theta: number, level: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly convergence: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: bigint) => [number, number, number, number];
    readonly simulate_paths: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: bigint) => [number, number, number, number];
    readonly validity: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
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
