/* tslint:disable */
/* eslint-disable */

/**
 * Equivariant density `h_ω^eps` of path `draw`, sampled at `points`
 * equispaced points of `[0, 1)`.
 */
export function density(amplitude: number, p: number, eps: number, draw: number, points: number): Float64Array;

/**
 * `∂_eps ∫ cos 2πx dh_ω^eps` on path `draw`, as
 * `[series, finite difference, tail bound, terms used]`.
 */
export function response(amplitude: number, p: number, draw: number): Float64Array;

/**
 * Green–Kubo variance of `cos 2πx` over `samples` paths, as `[Σ², stderr]`.
 */
export function variance(amplitude: number, p: number, eps: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly density: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly response: (a: number, b: number, c: number) => [number, number, number, number];
    readonly variance: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
