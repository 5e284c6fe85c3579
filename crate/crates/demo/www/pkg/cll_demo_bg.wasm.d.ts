/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const beta_histogram: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const blob_points: (a: number, b: number, c: number, d: bigint) => [number, number];
export const dirichlet_histogram: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const noise_explorer: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
export const sampled_transition: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const transition_matrix: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
