/* tslint:disable */
/* eslint-disable */

/**
 * Global path plus the two corridors around it: `whole` may cross unknown
 * cells, `safe` stays in known-free space.
 */
export function corridors(map: string, sx: number, sy: number, gx: number, gy: number): string;

/**
 * Flies one simulated episode (`world` is `forest` or `corner`) and returns
 * the obstacles, the executed path (metres, top view) and the metrics.
 */
export function fly(world: string, seed: number, v_max: number, safe_trajectory: boolean): string;

/**
 * Jump point search through free and unknown cells (occupied cells are
 * inflated by the vehicle size); optionally shortened by line of sight.
 */
export function plan_path(map: string, sx: number, sy: number, gx: number, gy: number, line_of_sight: boolean): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly corridors: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly fly: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly plan_path: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
