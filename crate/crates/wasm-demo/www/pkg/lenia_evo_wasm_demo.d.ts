/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Pattern-file JSON of the patch around `(x, y)`.
     */
    dropper(x: number, y: number, radius: number): string;
    /**
     * Averaged genotype of the dropper patch, or an empty array when the
     * patch holds no fully expressed genome.
     */
    dropper_genotype(x: number, y: number, radius: number): Float32Array;
    /**
     * RGBA bytes, row-major, for `ImageData`.
     */
    frame(): Uint8Array;
    height(): number;
    constructor(width: number, height: number, seed: bigint);
    restart(seed: bigint): void;
    set_gamma_mut(v: number): void;
    set_gamma_pen(v: number): void;
    stats(): string;
    step(n: number): void;
    width(): number;
}

export function growth_curve(genes: Float32Array, k: number, samples: number): Float64Array;

export function kernel_profile(genes: Float32Array, k: number, samples: number): Float64Array;

export function ring_vs_cast(genes: Float32Array, k: number, radius: number, n_ring: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_dropper: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_dropper_genotype: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_frame: (a: number) => [number, number];
    readonly demo_height: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: bigint) => [number, number, number];
    readonly demo_restart: (a: number, b: bigint) => void;
    readonly demo_set_gamma_mut: (a: number, b: number) => [number, number];
    readonly demo_set_gamma_pen: (a: number, b: number) => [number, number];
    readonly demo_stats: (a: number) => [number, number];
    readonly demo_step: (a: number, b: number) => [number, number];
    readonly demo_width: (a: number) => number;
    readonly growth_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly kernel_profile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly ring_vs_cast: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
