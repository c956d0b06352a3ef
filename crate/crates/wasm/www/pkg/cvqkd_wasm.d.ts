/* tslint:disable */
/* eslint-disable */

/**
 * Composable rate against `log10 M` for a fixed `R_PE`; NaN where the block is too short.
 */
export function composable_curve(r_pe: number, cardinality: number, r: number, p: number, eps: number, log_m_min: number, log_m_max: number, points: number): Float64Array;

/**
 * Fidelity of the two binary signal states on `points` values of `ν_th` in `[0, nu_th_max]`.
 */
export function fidelity_curve(alpha: number, nu_th_max: number, points: number): Float64Array;

/**
 * Asymptotic rate over `points` attenuations in `[db_min, db_max]`, as
 * consecutive `(dB, I, χ, R)` quadruples.
 */
export function rate_curve(n: number, alpha: number, nu_th: number, epsilon: number, xi: number, db_min: number, db_max: number, points: number, cutoff: number, nodes: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly composable_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number];
    readonly fidelity_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly rate_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
