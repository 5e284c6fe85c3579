/* tslint:disable */
/* eslint-disable */

/**
 * Normalized histogram of Beta(α, α) draws on [0, 1].
 */
export function beta_histogram(alpha: number, bins: number, draws: number, seed: bigint): Float64Array;

export function blob_points(n: number, k: number, spread: number, seed: bigint): Float64Array;

/**
 * Histogram of the first coordinate of Dir(α, α, α) draws.
 */
export function dirichlet_histogram(alpha: number, bins: number, draws: number, seed: bigint): Float64Array;

/**
 * `[mixup noise, icm noise, cluster purity]` under uniform complementary labels.
 */
export function noise_explorer(n: number, k: number, spread: number, clusters: number, alpha: number, seed: bigint): Float64Array;

/**
 * Empirical transition matrix from `per_class` sampled labels per class.
 */
export function sampled_transition(k: number, rho: number, per_class: number, seed: bigint): Float64Array;

/**
 * Row-major K×K transition matrix; ρ = 1 gives the uniform matrix.
 */
export function transition_matrix(k: number, rho: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly beta_histogram: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly blob_points: (a: number, b: number, c: number, d: bigint) => [number, number];
    readonly dirichlet_histogram: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly noise_explorer: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
    readonly sampled_transition: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly transition_matrix: (a: number, b: number) => [number, number, number, number];
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
