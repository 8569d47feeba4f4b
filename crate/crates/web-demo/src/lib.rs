//! WebAssembly bindings for the browser demo: resolution bound, phase
//! function explorer, and a stepwise reconstruction on a small scene.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use lrmr_sar::analysis::{resolution_bound, IndexQuad, PhaseGeometry};
use lrmr_sar::forward::{
    assemble_forward, simulate_measurement, AmplitudeMode, CorrelationMode, ForwardModel,
    ForwardOperator, PowerIteration, Representation, SamplingGrid, Spectrum, TransmitterPhase,
};
use lrmr_sar::linalg::C64;
use lrmr_sar::metrics::relative_error;
use lrmr_sar::scene::{
    default_phantom, elevation_angle, kronecker_scene, KroneckerMatrix, SceneGrid, Trajectory,
    TransmitterModel, Vec3,
};
use lrmr_sar::solver::{extract_reflectivity, uzawa_step, SolverState, StepRule};
use wasm_bindgen::prelude::*;

const PIXEL_SPACING: f64 = 10.0;
const BANDWIDTH_HZ: f64 = 8e6;
const NUM_FREQUENCIES: usize = 8;
const LAMBDA: f64 = 20.0;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Two quarter-circle receivers at 7 km radius and 5 km altitude, offset by
/// 45°, with a fixed transmitter at (12, 12, 5) km.
fn reference_model(
    pixels_per_side: usize,
    fc_hz: f64,
    mode: CorrelationMode,
    slow_times: usize,
) -> Result<ForwardModel, String> {
    let arc = Trajectory::circular(7000.0, 5000.0, [0.0, FRAC_PI_2], 0.0).map_err(err)?;
    Ok(ForwardModel {
        scene: SceneGrid::centered(pixels_per_side, PIXEL_SPACING).map_err(err)?,
        receivers: [arc.clone(), arc.shifted(FRAC_PI_4).map_err(err)?],
        transmitter: TransmitterModel::new(Vec3::new(12e3, 12e3, 5e3)).map_err(err)?,
        sampling: SamplingGrid::new(
            2.0 * PI * fc_hz,
            2.0 * PI * BANDWIDTH_HZ,
            NUM_FREQUENCIES,
            [0.0, FRAC_PI_2],
            slow_times,
        )
        .map_err(err)?,
        mode,
        amplitude: AmplitudeMode::Unit,
        spectrum: Spectrum::Flat,
    })
}

/// Transmitter elevation above the ground plane, in degrees, seen from the
/// center of an 11×11 scene.
#[wasm_bindgen]
pub fn elevation_angle_deg(tx_x: f64, tx_y: f64, tx_z: f64) -> Result<f64, String> {
    let grid = SceneGrid::centered(11, PIXEL_SPACING).map_err(err)?;
    let tx = TransmitterModel::new(Vec3::new(tx_x, tx_y, tx_z)).map_err(err)?;
    Ok(elevation_angle(&tx, &grid).map_err(err)?.to_degrees())
}

/// Smallest resolvable pixel spacing, in meters.
#[wasm_bindgen]
pub fn resolution_bound_m(fc_hz: f64, elevation_deg: f64) -> Result<f64, String> {
    resolution_bound(2.0 * PI * fc_hz, elevation_deg.to_radians()).map_err(err)
}

fn phase_geometry() -> Result<PhaseGeometry, String> {
    let model = reference_model(11, 2e9, CorrelationMode::Cross, 2)?;
    PhaseGeometry::from_model(&model).map_err(err)
}

fn quad(k: usize, kp: usize, l: usize, lp: usize) -> Result<IndexQuad, String> {
    if [k, kp, l, lp].iter().any(|&i| i >= 121) {
        return Err("pixel indices must be below 121".into());
    }
    Ok(IndexQuad::new(k, kp, l, lp))
}

/// Phase function θ(s) for pixel quad (k, k', l, l') on the 11×11 scene,
/// sampled at `samples` slow times. Returned interleaved as `[s0, θ0, s1, θ1, ...]`.
#[wasm_bindgen]
pub fn theta_curve(
    k: usize,
    kp: usize,
    l: usize,
    lp: usize,
    samples: usize,
) -> Result<Vec<f64>, String> {
    if samples < 2 {
        return Err("need at least two samples".into());
    }
    let g = phase_geometry()?;
    let q = quad(k, kp, l, lp)?;
    let [a, b] = g.interval();
    let mut out = Vec::with_capacity(2 * samples);
    for i in 0..samples {
        let s = a + (b - a) * i as f64 / (samples - 1) as f64;
        out.push(s);
        out.push(g.theta(s, &q).map_err(err)?);
    }
    Ok(out)
}

/// Stationary points of θ for the same quad, as `[s, θ, θ̈]` triples.
#[wasm_bindgen]
pub fn stationary_points(k: usize, kp: usize, l: usize, lp: usize) -> Result<Vec<f64>, String> {
    let g = phase_geometry()?;
    let q = quad(k, kp, l, lp)?;
    Ok(g.stationary_points(&q)
        .map_err(err)?
        .iter()
        .flat_map(|p| [p.s, p.theta, p.theta_ddot])
        .collect())
}

/// Uzawa reconstruction of the default phantom, advanced a few steps at a time.
#[wasm_bindgen]
pub struct Reconstruction {
    op: ForwardOperator,
    data: Vec<C64>,
    truth: KroneckerMatrix,
    state: SolverState,
    beta: f64,
    data_error: f64,
}

#[wasm_bindgen]
impl Reconstruction {
    #[wasm_bindgen(constructor)]
    pub fn new(
        pixels_per_side: usize,
        fc_hz: f64,
        auto: bool,
        slow_times: usize,
    ) -> Result<Reconstruction, String> {
        if !(5..=9).contains(&pixels_per_side) {
            return Err("scene side must be between 5 and 9 pixels".into());
        }
        let mode = if auto {
            CorrelationMode::Auto
        } else {
            CorrelationMode::Cross
        };
        let model = reference_model(pixels_per_side, fc_hz, mode, slow_times)?;
        let img = default_phantom(&model.scene).map_err(err)?;
        let data = simulate_measurement(&img, &model, TransmitterPhase::FarField)
            .map_err(err)?
            .values;
        let op = assemble_forward(&model, Representation::MatrixFree, 0).map_err(err)?;
        let sigma = op
            .largest_singular_value(PowerIteration::default())
            .map_err(err)?
            .sigma;
        let beta = StepRule::default().beta(sigma).map_err(err)?;
        let state = SolverState::new(&op);
        Ok(Reconstruction {
            op,
            data,
            truth: kronecker_scene(&img),
            state,
            beta,
            data_error: 1.0,
        })
    }

    /// Runs `count` iterations and returns the relative data residual.
    pub fn step(&mut self, count: usize) -> Result<f64, String> {
        for _ in 0..count {
            let info = uzawa_step(&mut self.state, &self.op, &self.data, self.beta, LAMBDA)
                .map_err(err)?;
            self.data_error = info.data_error.unwrap_or(0.0);
        }
        Ok(self.data_error)
    }

    pub fn iteration(&self) -> usize {
        self.state.iteration
    }

    pub fn data_error(&self) -> f64 {
        self.data_error
    }

    pub fn trace(&self) -> f64 {
        self.state.iterate.trace()
    }

    pub fn rank(&self) -> usize {
        self.state.iterate.rank(1e-3)
    }

    pub fn kronecker_error(&self) -> f64 {
        relative_error(
            self.state.iterate.to_matrix().as_slice(),
            self.truth.as_vec(),
        )
        .unwrap_or(f64::NAN)
    }

    pub fn side(&self) -> usize {
        self.truth.grid().pixels_per_side()
    }

    /// Reflectivity magnitudes of the current iterate, row-major.
    pub fn reflectivity(&self) -> Result<Vec<f64>, String> {
        let k = self
            .state
            .iterate
            .to_kronecker(self.truth.grid())
            .map_err(err)?;
        Ok(extract_reflectivity(&k)
            .map_err(err)?
            .values()
            .iter()
            .map(|z| z.norm())
            .collect())
    }

    /// Reflectivity magnitudes of the phantom, row-major.
    pub fn truth(&self) -> Vec<f64> {
        self.truth
            .entries()
            .diagonal()
            .iter()
            .map(|z| z.re.max(0.0).sqrt())
            .collect()
    }
}
