/* tslint:disable */
/* eslint-disable */

/**
 * Uzawa reconstruction of the default phantom, advanced a few steps at a time.
 */
export class Reconstruction {
    free(): void;
    [Symbol.dispose](): void;
    data_error(): number;
    iteration(): number;
    kronecker_error(): number;
    constructor(pixels_per_side: number, fc_hz: number, auto: boolean, slow_times: number);
    rank(): number;
    /**
     * Reflectivity magnitudes of the current iterate, row-major.
     */
    reflectivity(): Float64Array;
    side(): number;
    /**
     * Runs `count` iterations and returns the relative data residual.
     */
    step(count: number): number;
    trace(): number;
    /**
     * Reflectivity magnitudes of the phantom, row-major.
     */
    truth(): Float64Array;
}

/**
 * Transmitter elevation above the ground plane, in degrees, seen from the
 * center of an 11×11 scene.
 */
export function elevation_angle_deg(tx_x: number, tx_y: number, tx_z: number): number;

/**
 * Smallest resolvable pixel spacing, in meters.
 */
export function resolution_bound_m(fc_hz: number, elevation_deg: number): number;

/**
 * Stationary points of θ for the same quad, as `[s, θ, θ̈]` triples.
 */
export function stationary_points(k: number, kp: number, l: number, lp: number): Float64Array;

/**
 * Phase function θ(s) for pixel quad (k, k', l, l') on the 11×11 scene,
 * sampled at `samples` slow times. Returned interleaved as `[s0, θ0, s1, θ1, ...]`.
 */
export function theta_curve(k: number, kp: number, l: number, lp: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_reconstruction_free: (a: number, b: number) => void;
    readonly elevation_angle_deg: (a: number, b: number, c: number) => [number, number, number];
    readonly reconstruction_data_error: (a: number) => number;
    readonly reconstruction_iteration: (a: number) => number;
    readonly reconstruction_kronecker_error: (a: number) => number;
    readonly reconstruction_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly reconstruction_rank: (a: number) => number;
    readonly reconstruction_reflectivity: (a: number) => [number, number, number, number];
    readonly reconstruction_side: (a: number) => number;
    readonly reconstruction_step: (a: number, b: number) => [number, number, number];
    readonly reconstruction_trace: (a: number) => number;
    readonly reconstruction_truth: (a: number) => [number, number];
    readonly resolution_bound_m: (a: number, b: number) => [number, number, number];
    readonly stationary_points: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly theta_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
