use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{classify_quad, IndexQuad, PhaseGeometry, QuadClass, StationaryPoint};
use crate::error::{Error, Result};
use crate::forward::{AmplitudeMode, CorrelationMode, ForwardModel, SamplingGrid, Spectrum};
use crate::linalg::C64;
use crate::par;
use crate::scene::Vec3;
use crate::SPEED_OF_LIGHT;

/// Stationary points with `|θ̈|` below this (m per squared aperture unit)
/// are flagged degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

// Frequency integrals for a non-flat spectrum use this many trapezoid nodes.
const SPECTRUM_NODES: usize = 2049;
// Slow-time samples per parallel work item in the brute-force sum.
const SLOW_TIME_CHUNK: usize = 1024;

/// Everything needed to evaluate `Σ F(ω,s,x̄_k) F*(ω,s,x̄_l)` for one quad.
#[derive(Debug, Clone)]
pub struct KernelContext {
    geometry: PhaseGeometry,
    model: ForwardModel,
    tx_range: f64,
    center: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelRegime {
    /// θ ≡ 0: constant-phase closed form.
    ClosedForm,
    /// Leading stationary-phase term; boundary contributions dropped.
    StationaryPhase,
}

impl KernelRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelRegime::ClosedForm => "closed_form",
            KernelRegime::StationaryPhase => "stationary_phase",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticKernel {
    pub value: C64,
    pub regime: KernelRegime,
    pub stationary_points: Vec<StationaryPoint>,
    /// Some stationary point has `|θ̈| ≤ DEGENERACY_TOLERANCE`.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub quad: IndexQuad,
    pub class: QuadClass,
    pub brute_force: C64,
    pub asymptotic: C64,
    pub stationary_points: Vec<StationaryPoint>,
    pub regime: KernelRegime,
    pub degenerate: bool,
}

impl KernelEstimate {
    pub fn compute(ctx: &KernelContext, quad: &IndexQuad) -> Result<Self> {
        let brute_force = kernel_bruteforce(ctx, quad)?;
        let asym = kernel_asymptotic(ctx, quad)?;
        Ok(Self {
            quad: *quad,
            class: ctx.classify(quad),
            brute_force,
            asymptotic: asym.value,
            stationary_points: asym.stationary_points,
            regime: asym.regime,
            degenerate: asym.degenerate,
        })
    }

    /// `|brute − asymptotic| / |brute|`, `None` when the brute-force value is 0.
    pub fn relative_error(&self) -> Option<f64> {
        let d = self.brute_force.norm();
        (d > 0.0).then(|| (self.brute_force - self.asymptotic).norm() / d)
    }
}

impl KernelContext {
    /// Receivers are scaled about the origin by `receiver_scale`, which
    /// pushes them into the far field without touching the scene.
    pub fn from_model(model: &ForwardModel, receiver_scale: f64) -> Result<Self> {
        let mut model = model.clone();
        if receiver_scale != 1.0 {
            model.receivers = [
                model.receivers[0].scaled(receiver_scale)?,
                model.receivers[1].scaled(receiver_scale)?,
            ];
        }
        let geometry = PhaseGeometry::from_model(&model)?;
        Ok(Self {
            geometry,
            tx_range: model.transmitter.range(),
            center: model.scene.center(),
            model,
        })
    }

    pub fn with_center_frequency(&self, omega_c: f64) -> Result<Self> {
        let mut out = self.clone();
        out.model.sampling = self.model.sampling.with_center_frequency(omega_c)?;
        Ok(out)
    }

    pub fn with_resolution(&self, num_frequencies: usize, num_slow_times: usize) -> Result<Self> {
        let mut out = self.clone();
        out.model.sampling = self
            .model
            .sampling
            .resampled(num_frequencies, num_slow_times)?;
        Ok(out)
    }

    pub fn geometry(&self) -> &PhaseGeometry {
        &self.geometry
    }

    pub fn sampling(&self) -> &SamplingGrid {
        &self.model.sampling
    }

    pub fn mode(&self) -> CorrelationMode {
        self.model.mode
    }

    pub fn num_pixels(&self) -> usize {
        self.model.scene.num_pixels()
    }

    pub fn classify(&self, q: &IndexQuad) -> QuadClass {
        classify_quad(q, self.model.mode)
    }

    fn geometric(&self) -> bool {
        matches!(self.model.amplitude, AmplitudeMode::GeometricSpreading)
    }

    // Product of the four amplitude factors at slow time s.
    fn amplitude_at(&self, s: f64, q: &IndexQuad, pix: &[Vec3]) -> f64 {
        if !self.geometric() {
            return 1.0;
        }
        let g1 = self.model.receiver(0).position_unchecked(s);
        let g2 = self.model.receiver(1).position_unchecked(s);
        let prod = (pix[q.k] - g1).norm()
            * (pix[q.kp] - g2).norm()
            * (pix[q.l] - g1).norm()
            * (pix[q.lp] - g2).norm();
        1.0 / ((4.0 * PI).powi(4) * self.tx_range.powi(4) * prod)
    }

    /// `∫ |J(ω_c + ω')|⁴ e^{−iω'θ/c₀} dω'` over the band.
    fn band_integral(&self, theta: f64) -> C64 {
        let b = self.model.sampling.bandwidth();
        let wc = self.model.sampling.center_frequency();
        match &self.model.spectrum {
            Spectrum::Flat => {
                let x = b * theta / (2.0 * SPEED_OF_LIGHT);
                let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
                C64::new(b * sinc, 0.0)
            }
            spec => {
                let n = SPECTRUM_NODES;
                let h = b / (n - 1) as f64;
                (0..n)
                    .map(|i| {
                        let w = -0.5 * b + h * i as f64;
                        let wt = if i == 0 || i == n - 1 { 0.5 * h } else { h };
                        let j4 = spec.value(wc + w).norm_sqr().powi(2);
                        C64::from_polar(wt * j4, -w * theta / SPEED_OF_LIGHT)
                    })
                    .sum()
            }
        }
    }
}

/// `Γ · C_J · Δs`, the kernel value on quads where θ vanishes identically.
/// `Γ = 1/((4π)⁴|y|⁴ L²_{g1} L²_{g2})` with `L_{gi}` the receiver range to
/// the scene center at mid-aperture; `Γ = 1` for unit amplitudes.
pub fn closed_form_constant(ctx: &KernelContext) -> f64 {
    let [a, b] = ctx.geometry.interval();
    let gamma = if ctx.geometric() {
        let mid = 0.5 * (a + b);
        let l1 = (ctx.model.receiver(0).position_unchecked(mid) - ctx.center).norm();
        let l2 = (ctx.model.receiver(1).position_unchecked(mid) - ctx.center).norm();
        1.0 / ((4.0 * PI).powi(4) * ctx.tx_range.powi(4) * l1 * l1 * l2 * l2)
    } else {
        1.0
    };
    gamma * ctx.band_integral(0.0).re * (b - a)
}

/// Trapezoid-weighted double sum over the sampling grid of
/// `F(ω,s,x̄_k) F*(ω,s,x̄_l)`, with far-field transmitter phase.
pub fn kernel_bruteforce(ctx: &KernelContext, q: &IndexQuad) -> Result<C64> {
    ctx.geometry.check(q)?;
    let sampling = &ctx.model.sampling;
    let omegas = sampling.frequencies();
    let slow = sampling.slow_times();
    let (wm, wp) = sampling.quadrature_weights();
    let jw: Vec<f64> = omegas
        .iter()
        .zip(&wm)
        .map(|(&w, &wt)| wt * ctx.model.spectrum.value(w).norm_sqr().powi(2))
        .collect();
    let step = if omegas.len() > 1 {
        omegas[1] - omegas[0]
    } else {
        0.0
    };
    let pix = ctx.model.scene.pixel_centers();
    let chunks = slow.len().div_ceil(SLOW_TIME_CHUNK);
    let partial: Vec<C64> = par::map_collect(chunks, |c| {
        let lo = c * SLOW_TIME_CHUNK;
        let hi = (lo + SLOW_TIME_CHUNK).min(slow.len());
        let mut acc = C64::new(0.0, 0.0);
        for p in lo..hi {
            let s = slow[p];
            let theta = ctx
                .geometry
                .theta_derivatives(s, q)
                .map(|t| t.0)
                .unwrap_or(0.0);
            let k = theta / SPEED_OF_LIGHT;
            // e^{−iω_mθ/c} by recurrence along the uniform frequency grid.
            let ratio = C64::from_polar(1.0, -step * k);
            let mut z = C64::from_polar(1.0, -omegas[0] * k);
            let mut inner = C64::new(0.0, 0.0);
            for &w in &jw {
                inner += z * w;
                z *= ratio;
            }
            acc += inner * (wp[p] * ctx.amplitude_at(s, q, &pix));
        }
        acc
    });
    Ok(partial.into_iter().sum())
}

/// Leading-order value as `ω_c → ∞`. Closed form when θ vanishes
/// identically for the quad's class; otherwise
/// `Σ_{s₀} A(s₀) W(s₀) √(2πc₀/(ω_c|θ̈|)) e^{−iω_cθ(s₀)/c₀ − iπ/4·sgn θ̈}`.
/// Degenerate stationary points are flagged and left out of the sum.
pub fn kernel_asymptotic(ctx: &KernelContext, q: &IndexQuad) -> Result<AsymptoticKernel> {
    match ctx.classify(q) {
        QuadClass::I1 | QuadClass::I3 => {
            ctx.geometry.check(q)?;
            return Ok(AsymptoticKernel {
                value: C64::new(closed_form_constant(ctx), 0.0),
                regime: KernelRegime::ClosedForm,
                stationary_points: Vec::new(),
                degenerate: false,
            });
        }
        QuadClass::I2 | QuadClass::I2Tilde => {}
    }
    let wc = ctx.model.sampling.center_frequency();
    let pix = ctx.model.scene.pixel_centers();
    let points = ctx.geometry.stationary_points(q)?;
    let mut value = C64::new(0.0, 0.0);
    let mut degenerate = false;
    for sp in &points {
        if sp.theta_ddot.abs() <= DEGENERACY_TOLERANCE {
            degenerate = true;
            continue;
        }
        let mag = (2.0 * PI * SPEED_OF_LIGHT / (wc * sp.theta_ddot.abs())).sqrt();
        let phase = -wc * sp.theta / SPEED_OF_LIGHT - 0.25 * PI * sp.theta_ddot.signum();
        value += ctx.band_integral(sp.theta)
            * C64::from_polar(mag * ctx.amplitude_at(sp.s, q, &pix), phase);
    }
    Ok(AsymptoticKernel {
        value,
        regime: KernelRegime::StationaryPhase,
        stationary_points: points,
        degenerate,
    })
}

/// Seeded quad sample: even positions are I1 quads `(k, k', k, k')`,
/// odd positions are uniform quads outside I1.
pub fn sample_quads(num_pixels: usize, count: usize, seed: u64) -> Result<Vec<IndexQuad>> {
    if num_pixels < 2 {
        return Err(Error::InvalidConfig(
            "quad sampling needs at least two pixels".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let q = if i % 2 == 0 {
            let (k, kp) = (
                rng.random_range(0..num_pixels),
                rng.random_range(0..num_pixels),
            );
            IndexQuad::new(k, kp, k, kp)
        } else {
            loop {
                let q = IndexQuad::new(
                    rng.random_range(0..num_pixels),
                    rng.random_range(0..num_pixels),
                    rng.random_range(0..num_pixels),
                    rng.random_range(0..num_pixels),
                );
                if !(q.k == q.l && q.kp == q.lp) {
                    break q;
                }
            }
        };
        out.push(q);
    }
    Ok(out)
}
