/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_dropper: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_dropper_genotype: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_frame: (a: number) => [number, number];
export const demo_height: (a: number) => number;
export const demo_new: (a: number, b: number, c: bigint) => [number, number, number];
export const demo_restart: (a: number, b: bigint) => void;
export const demo_set_gamma_mut: (a: number, b: number) => [number, number];
export const demo_set_gamma_pen: (a: number, b: number) => [number, number];
export const demo_stats: (a: number) => [number, number];
export const demo_step: (a: number, b: number) => [number, number];
export const demo_width: (a: number) => number;
export const growth_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const kernel_profile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const ring_vs_cast: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
