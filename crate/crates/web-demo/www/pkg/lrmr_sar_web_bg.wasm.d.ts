/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_reconstruction_free: (a: number, b: number) => void;
export const elevation_angle_deg: (a: number, b: number, c: number) => [number, number, number];
export const reconstruction_data_error: (a: number) => number;
export const reconstruction_iteration: (a: number) => number;
export const reconstruction_kronecker_error: (a: number) => number;
export const reconstruction_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const reconstruction_rank: (a: number) => number;
export const reconstruction_reflectivity: (a: number) => [number, number, number, number];
export const reconstruction_side: (a: number) => number;
export const reconstruction_step: (a: number, b: number) => [number, number, number];
export const reconstruction_trace: (a: number) => number;
export const reconstruction_truth: (a: number) => [number, number];
export const resolution_bound_m: (a: number, b: number) => [number, number, number];
export const stationary_points: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const theta_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
