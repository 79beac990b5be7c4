/* tslint:disable */
/* eslint-disable */

/**
 * Seals `message` under `policy`, issues a key for `attrs` and tries to
 * open it: `{ciphertext_bytes, leaves, opened, plaintext?, reason?}`.
 */
export function abe_round_trip(policy: string, attrs: string, message: string): string;

/**
 * Encrypts each line of `values` under one field key in both modes:
 * `{rows: [{value, det, rnd, det_group}], det_distinct, rnd_distinct}`.
 * Equal values share a DET ciphertext and a `det_group`; RND never repeats.
 */
export function det_vs_rnd(values: string): string;

/**
 * `{policy, attributes, satisfied, used}`: canonical policy text, whether
 * the comma-separated attributes satisfy it, and the leaf attributes a
 * decryptor would use.
 */
export function explore_policy(policy: string, attrs: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly abe_round_trip: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly det_vs_rnd: (a: number, b: number) => [number, number];
    readonly explore_policy: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_exn_store: (a: number) => void;
    readonly __externref_table_alloc: () => number;
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
