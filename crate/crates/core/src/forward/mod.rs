//! Received-signal simulation, correlation, and the lifted forward operator.
//!
//! Data samples are stacked slow-time major: the sample at frequency index
//! `m` and slow-time index `p` lives at row `m + M·p`.

mod operator;

pub use operator::{
    assemble_forward, memory_budget_from_env, ForwardOperator, PowerIteration, Representation,
    SpectralNorm, DEFAULT_MEMORY_BUDGET_BYTES, MEMORY_BUDGET_ENV,
};

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::scene::{ReflectivityImage, SceneGrid, Trajectory, TransmitterModel, Vec3};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    center_frequency: f64,
    bandwidth: f64,
    num_frequencies: usize,
    aperture_interval: [f64; 2],
    num_slow_times: usize,
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

impl SamplingGrid {
    /// Frequencies in rad/s.
    pub fn new(
        center_frequency: f64,
        bandwidth: f64,
        num_frequencies: usize,
        aperture_interval: [f64; 2],
        num_slow_times: usize,
    ) -> Result<Self> {
        if num_frequencies == 0 || num_slow_times == 0 {
            return Err(Error::InvalidConfig(
                "need at least one frequency and one slow-time sample".into(),
            ));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        if !(center_frequency > bandwidth / 2.0 && center_frequency.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "center frequency {center_frequency} rad/s must exceed half the bandwidth {bandwidth} rad/s"
            )));
        }
        let [a, b] = aperture_interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidConfig(format!(
                "aperture interval must satisfy s_a < s_b, got [{a}, {b}]"
            )));
        }
        Ok(Self {
            center_frequency,
            bandwidth,
            num_frequencies,
            aperture_interval,
            num_slow_times,
        })
    }

    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn num_frequencies(&self) -> usize {
        self.num_frequencies
    }

    pub fn num_slow_times(&self) -> usize {
        self.num_slow_times
    }

    pub fn aperture_interval(&self) -> [f64; 2] {
        self.aperture_interval
    }

    pub fn num_samples(&self) -> usize {
        self.num_frequencies * self.num_slow_times
    }

    /// ωₘ spanning `[ω_c − B/2, ω_c + B/2]` inclusive.
    pub fn frequencies(&self) -> Vec<f64> {
        let half = self.bandwidth / 2.0;
        uniform(
            self.center_frequency - half,
            self.center_frequency + half,
            self.num_frequencies,
        )
    }

    /// s_p spanning the aperture interval inclusive.
    pub fn slow_times(&self) -> Vec<f64> {
        uniform(
            self.aperture_interval[0],
            self.aperture_interval[1],
            self.num_slow_times,
        )
    }

    pub fn row(&self, m: usize, p: usize) -> usize {
        m + self.num_frequencies * p
    }

    pub fn row_indices(&self, row: usize) -> (usize, usize) {
        (row % self.num_frequencies, row / self.num_frequencies)
    }

    /// Trapezoid weights `(frequency, slow-time)` whose products approximate
    /// the integral over `Ω × S`. A single sample gets the full interval width.
    pub fn quadrature_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let [a, b] = self.aperture_interval;
        (
            trapezoid(self.num_frequencies, self.bandwidth),
            trapezoid(self.num_slow_times, b - a),
        )
    }

    /// The same grid with a different centre frequency.
    pub fn with_center_frequency(&self, center_frequency: f64) -> Result<Self> {
        Self::new(
            center_frequency,
            self.bandwidth,
            self.num_frequencies,
            self.aperture_interval,
            self.num_slow_times,
        )
    }

    /// The same grid with different sample counts.
    pub fn resampled(&self, num_frequencies: usize, num_slow_times: usize) -> Result<Self> {
        Self::new(
            self.center_frequency,
            self.bandwidth,
            num_frequencies,
            self.aperture_interval,
            num_slow_times,
        )
    }
}

fn trapezoid(n: usize, length: f64) -> Vec<f64> {
    if n == 1 {
        return vec![length];
    }
    let h = length / (n - 1) as f64;
    let mut w = vec![h; n];
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMode {
    /// Two receivers on distinct trajectories.
    Cross,
    /// Collocated receivers (γ₂ = γ₁); the phaseless case.
    Auto,
}

impl CorrelationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorrelationMode::Cross => "cross",
            CorrelationMode::Auto => "auto",
        }
    }
}

impl fmt::Display for CorrelationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CorrelationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross" => Ok(CorrelationMode::Cross),
            "auto" => Ok(CorrelationMode::Auto),
            other => Err(Error::Parse(format!(
                "unknown correlation mode `{other}` (cross|auto)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeMode {
    #[default]
    Unit,
    GeometricSpreading,
}

/// Transmitter leg of the path length used when simulating received signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransmitterPhase {
    /// `|y − x|`
    Exact,
    #[default]
    /// `|y| − ŷ·x`
    FarField,
}

pub type SpectrumFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Waveform factor J(ω), independent of position.
#[derive(Clone, Default)]
pub enum Spectrum {
    #[default]
    Flat,
    Custom(SpectrumFn),
}

impl Spectrum {
    pub fn value(&self, omega: f64) -> C64 {
        match self {
            Spectrum::Flat => C64::new(1.0, 0.0),
            Spectrum::Custom(f) => f(omega),
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, Spectrum::Flat)
    }
}

impl fmt::Debug for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spectrum::Flat => f.write_str("Flat"),
            Spectrum::Custom(_) => f.write_str("Custom(<fn>)"),
        }
    }
}

/// Everything the correlated forward model depends on.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    pub scene: SceneGrid,
    pub receivers: [Trajectory; 2],
    pub transmitter: TransmitterModel,
    pub sampling: SamplingGrid,
    pub mode: CorrelationMode,
    pub amplitude: AmplitudeMode,
    pub spectrum: Spectrum,
}

impl ForwardModel {
    /// Trajectory of receiver `i ∈ {0, 1}`. In auto mode both receivers
    /// follow the first trajectory.
    pub fn receiver(&self, i: usize) -> &Trajectory {
        match (self.mode, i) {
            (CorrelationMode::Auto, _) | (_, 0) => &self.receivers[0],
            _ => &self.receivers[1],
        }
    }

    pub fn with_mode(&self, mode: CorrelationMode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    pub fn with_sampling(&self, sampling: SamplingGrid) -> Self {
        Self {
            sampling,
            ..self.clone()
        }
    }

    pub fn with_amplitude(&self, amplitude: AmplitudeMode) -> Self {
        Self {
            amplitude,
            ..self.clone()
        }
    }

    /// Checks that the aperture interval lies inside both trajectory domains.
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.sampling.aperture_interval();
        for i in 0..2 {
            let traj = self.receiver(i);
            if !traj.contains(a) || !traj.contains(b) {
                let [ta, tb] = traj.interval();
                return Err(Error::InvalidConfig(format!(
                    "aperture [{a}, {b}] exceeds receiver {} trajectory domain [{ta}, {tb}]",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Two-leg path length `|y − x| + |x − γ(s)|` in meters.
pub fn bistatic_phase(traj: &Trajectory, s: f64, x: &Vec3, tx: &TransmitterModel) -> Result<f64> {
    let g = traj.position(s)?;
    Ok((tx.location() - x).norm() + (x - g).norm())
}

/// fᵢ(ωₘ, s_p) for receiver `i ∈ {0, 1}` as an `M × P` matrix.
pub fn received_signal(
    img: &ReflectivityImage,
    model: &ForwardModel,
    receiver: usize,
    tx_phase: TransmitterPhase,
) -> Result<CMatrix> {
    if img.grid().num_pixels() != model.scene.num_pixels() {
        return Err(Error::Dimension {
            context: "received_signal scene size",
            expected: model.scene.num_pixels(),
            found: img.grid().num_pixels(),
        });
    }
    model.validate()?;
    let traj = model.receiver(receiver);
    let y = model.transmitter.location();
    let y_hat = model.transmitter.direction();
    let y_range = model.transmitter.range();
    let omegas = model.sampling.frequencies();
    let slow = model.sampling.slow_times();
    let pixels = model.scene.pixel_centers();
    let support: Vec<(usize, C64)> = img
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() > 0.0)
        .map(|(k, v)| (k, *v))
        .collect();

    let mut out = DMatrix::zeros(omegas.len(), slow.len());
    for (p, &s) in slow.iter().enumerate() {
        let g = traj.position(s)?;
        for &(k, rho) in &support {
            let x = &pixels[k];
            let rx_leg = (x - g).norm();
            let (tx_leg, tx_amp) = match tx_phase {
                TransmitterPhase::Exact => ((y - x).norm(), (y - x).norm()),
                TransmitterPhase::FarField => (y_range - y_hat.dot(x), y_range),
            };
            let path = tx_leg + rx_leg;
            for (m, &w) in omegas.iter().enumerate() {
                let amp = match model.amplitude {
                    AmplitudeMode::Unit => C64::new(1.0, 0.0),
                    AmplitudeMode::GeometricSpreading => {
                        model.spectrum.value(w) / ((4.0 * PI).powi(2) * rx_leg * tx_amp)
                    }
                };
                out[(m, p)] += C64::from_polar(1.0, -w * path / SPEED_OF_LIGHT) * amp * rho;
            }
        }
    }
    Ok(out)
}

/// Correlated data `d = f₁ · conj(f₂)` stacked slow-time major.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub values: Vec<C64>,
    pub sampling: SamplingGrid,
    pub mode: CorrelationMode,
}

impl Measurement {
    pub fn new(values: Vec<C64>, sampling: SamplingGrid, mode: CorrelationMode) -> Result<Self> {
        if values.len() != sampling.num_samples() {
            return Err(Error::Dimension {
                context: "measurement length",
                expected: sampling.num_samples(),
                found: values.len(),
            });
        }
        Ok(Self {
            values,
            sampling,
            mode,
        })
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.values)
    }
}

/// Elementwise `f₁ · conj(f₂)`. Auto mode requires `f₂ = f₁` and returns the
/// exactly real `|f₁|²`.
pub fn correlate(
    f1: &CMatrix,
    f2: &CMatrix,
    sampling: &SamplingGrid,
    mode: CorrelationMode,
) -> Result<Measurement> {
    let (m, p) = (sampling.num_frequencies(), sampling.num_slow_times());
    for f in [f1, f2] {
        if f.nrows() != m {
            return Err(Error::Dimension {
                context: "correlate (frequency samples)",
                expected: m,
                found: f.nrows(),
            });
        }
        if f.ncols() != p {
            return Err(Error::Dimension {
                context: "correlate (slow-time samples)",
                expected: p,
                found: f.ncols(),
            });
        }
    }
    if mode == CorrelationMode::Auto && f1 != f2 {
        return Err(Error::InvalidConfig(
            "auto-correlation requires identical receiver signals".into(),
        ));
    }
    // Column-major M×P storage is already the slow-time-major stacking.
    let values = match mode {
        CorrelationMode::Cross => f1
            .iter()
            .zip(f2.iter())
            .map(|(a, b)| a * b.conj())
            .collect(),
        CorrelationMode::Auto => f1.iter().map(|a| C64::new(a.norm_sqr(), 0.0)).collect(),
    };
    Measurement::new(values, sampling.clone(), mode)
}

/// Simulates both receivers and correlates them.
pub fn simulate_measurement(
    img: &ReflectivityImage,
    model: &ForwardModel,
    tx_phase: TransmitterPhase,
) -> Result<Measurement> {
    let f1 = received_signal(img, model, 0, tx_phase)?;
    match model.mode {
        CorrelationMode::Cross => {
            let f2 = received_signal(img, model, 1, tx_phase)?;
            correlate(&f1, &f2, &model.sampling, CorrelationMode::Cross)
        }
        CorrelationMode::Auto => correlate(&f1, &f1, &model.sampling, CorrelationMode::Auto),
    }
}

/// Adds seeded circularly-symmetric complex Gaussian noise with per-sample
/// standard deviation `sigma`.
pub fn add_noise(meas: &mut Measurement, sigma: f64, seed: u64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise sigma must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma / std::f64::consts::SQRT_2)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    for v in &mut meas.values {
        *v += C64::new(normal.sample(&mut rng), normal.sample(&mut rng));
    }
    Ok(())
}

/// Entry `[F_{mp}]_{kk'}` of the correlated kernel, evaluated directly.
///
/// Phase `φ₁₂ = |xₖ − γ₁(s)| − |xₖ' − γ₂(s)| − ŷ·(xₖ − xₖ')`, amplitude
/// `J(ω)J*(ω) / ((4π)² |xₖ − γ₁||xₖ' − γ₂||y|²)` in geometric mode.
pub fn correlated_kernel_entry(
    model: &ForwardModel,
    m: usize,
    p: usize,
    k: usize,
    kp: usize,
) -> Result<C64> {
    let omegas = model.sampling.frequencies();
    let slow = model.sampling.slow_times();
    let (&w, &s) = match (omegas.get(m), slow.get(p)) {
        (Some(w), Some(s)) => (w, s),
        _ => {
            return Err(Error::Dimension {
                context: "correlated_kernel_entry sample index",
                expected: model.sampling.num_samples(),
                found: m + model.sampling.num_frequencies() * p,
            })
        }
    };
    let npix = model.scene.num_pixels();
    if k >= npix || kp >= npix {
        return Err(Error::Dimension {
            context: "correlated_kernel_entry pixel index",
            expected: npix,
            found: k.max(kp),
        });
    }
    let xk = model.scene.pixel_center(k);
    let xkp = model.scene.pixel_center(kp);
    let r1 = (xk - model.receiver(0).position(s)?).norm();
    let r2 = (xkp - model.receiver(1).position(s)?).norm();
    let phase = r1 - r2 - model.transmitter.direction().dot(&(xk - xkp));
    let amp = match model.amplitude {
        AmplitudeMode::Unit => C64::new(1.0, 0.0),
        AmplitudeMode::GeometricSpreading => {
            let j = model.spectrum.value(w);
            j * j.conj() / ((4.0 * PI).powi(2) * r1 * r2 * model.transmitter.range().powi(2))
        }
    };
    Ok(C64::from_polar(1.0, -w * phase / SPEED_OF_LIGHT) * amp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{default_phantom, kronecker_scene};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn reference_model(n: usize, dx: f64, m: usize, p: usize, fc_hz: f64) -> ForwardModel {
        let arc = Trajectory::circular(7000.0, 5000.0, [0.0, FRAC_PI_2], 0.0).unwrap();
        ForwardModel {
            scene: SceneGrid::centered(n, dx).unwrap(),
            receivers: [arc.clone(), arc.shifted(FRAC_PI_4).unwrap()],
            transmitter: TransmitterModel::new(Vec3::new(12e3, 12e3, 5e3)).unwrap(),
            sampling: SamplingGrid::new(2.0 * PI * fc_hz, 2.0 * PI * 8e6, m, [0.0, FRAC_PI_2], p)
                .unwrap(),
            mode: CorrelationMode::Cross,
            amplitude: AmplitudeMode::Unit,
            spectrum: Spectrum::Flat,
        }
    }

    fn single(grid: &SceneGrid, k: usize, v: C64) -> ReflectivityImage {
        let mut vals = vec![C64::new(0.0, 0.0); grid.num_pixels()];
        vals[k] = v;
        ReflectivityImage::new(grid.clone(), vals).unwrap()
    }

    #[test]
    fn sampling_grid_spans_band_and_aperture() {
        let g = SamplingGrid::new(100.0, 10.0, 5, [0.0, 2.0], 3).unwrap();
        assert_eq!(g.frequencies(), vec![95.0, 97.5, 100.0, 102.5, 105.0]);
        assert_eq!(g.slow_times(), vec![0.0, 1.0, 2.0]);
        assert_eq!(g.row(2, 1), 7);
        assert_eq!(g.row_indices(7), (2, 1));
        let one = SamplingGrid::new(100.0, 10.0, 1, [0.0, 2.0], 1).unwrap();
        assert_eq!(one.frequencies(), vec![100.0]);
        assert_eq!(one.slow_times(), vec![1.0]);
        assert!(SamplingGrid::new(4.0, 10.0, 2, [0.0, 1.0], 2).is_err());
        assert!(SamplingGrid::new(100.0, 0.0, 2, [0.0, 1.0], 2).is_err());
        assert!(SamplingGrid::new(100.0, 1.0, 0, [0.0, 1.0], 2).is_err());
    }

    #[test]
    fn trapezoid_weights_sum_to_interval() {
        let g = SamplingGrid::new(100.0, 10.0, 7, [0.5, 2.0], 4).unwrap();
        let (wf, ws) = g.quadrature_weights();
        assert!((wf.iter().sum::<f64>() - 10.0).abs() < 1e-12);
        assert!((ws.iter().sum::<f64>() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn bistatic_phase_direct_norms() {
        let arc = Trajectory::circular(7000.0, 5000.0, [0.0, FRAC_PI_2], 0.0).unwrap();
        let tx = TransmitterModel::new(Vec3::new(12e3, 12e3, 5e3)).unwrap();
        let got = bistatic_phase(&arc, 0.0, &Vec3::zeros(), &tx).unwrap();
        let want = (12e3f64 * 12e3 * 2.0 + 25e6).sqrt() + (49e6f64 + 25e6).sqrt();
        assert!((got - want).abs() < 1e-9);
        let g = arc.position(0.4).unwrap();
        let at_rx = bistatic_phase(&arc, 0.4, &g, &tx).unwrap();
        assert!((at_rx - (tx.location() - g).norm()).abs() < 1e-9);
    }

    #[test]
    fn bistatic_phase_matches_hand_coded_norm() {
        let arc = Trajectory::circular(7000.0, 5000.0, [0.0, FRAC_PI_2], 0.3).unwrap();
        let tx = TransmitterModel::new(Vec3::new(12e3, 12e3, 5e3)).unwrap();
        let norm = |a: [f64; 3]| (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        for i in 0..20 {
            let s = 0.07 * i as f64;
            let x = Vec3::new(13.0 * i as f64 - 50.0, 40.0 - 7.0 * i as f64, 0.0);
            let (c, sn) = (s + 0.3).sin_cos();
            let g = [7000.0 * sn, 7000.0 * c, 5000.0];
            let want = norm([12e3 - x.x, 12e3 - x.y, 5e3 - x.z])
                + norm([x.x - g[0], x.y - g[1], x.z - g[2]]);
            assert!((bistatic_phase(&arc, s, &x, &tx).unwrap() - want).abs() < 1e-8);
        }
    }

    #[test]
    fn received_signal_zero_unit_and_superposition() {
        let model = reference_model(5, 10.0, 3, 4, 760e6);
        let zero = ReflectivityImage::zeros(model.scene.clone());
        let f = received_signal(&zero, &model, 0, TransmitterPhase::Exact).unwrap();
        assert!(f.iter().all(|z| *z == C64::new(0.0, 0.0)));

        let a = single(&model.scene, 3, C64::new(1.0, 0.0));
        let fa = received_signal(&a, &model, 1, TransmitterPhase::Exact).unwrap();
        assert!(fa.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));

        let b = single(&model.scene, 17, C64::new(0.3, -0.2));
        let fb = received_signal(&b, &model, 1, TransmitterPhase::Exact).unwrap();
        let mut both = a.values().to_vec();
        both[17] = C64::new(0.3, -0.2);
        let ab = ReflectivityImage::new(model.scene.clone(), both).unwrap();
        let fab = received_signal(&ab, &model, 1, TransmitterPhase::Exact).unwrap();
        assert!((fab - fa - fb).norm() < 1e-12);
    }

    #[test]
    fn correlate_checks_shapes_and_modes() {
        let model = reference_model(5, 10.0, 3, 4, 760e6);
        let img = default_phantom(&model.scene).unwrap();
        let f1 = received_signal(&img, &model, 0, TransmitterPhase::Exact).unwrap();
        let f2 = received_signal(&img, &model, 1, TransmitterPhase::Exact).unwrap();

        let auto = correlate(&f1, &f1, &model.sampling, CorrelationMode::Auto).unwrap();
        assert!(auto.values.iter().all(|v| v.im == 0.0 && v.re >= 0.0));

        let cross = correlate(&f1, &f2, &model.sampling, CorrelationMode::Cross).unwrap();
        for p in 0..4 {
            for m in 0..3 {
                let want = f1[(m, p)] * f2[(m, p)].conj();
                assert_eq!(cross.values[model.sampling.row(m, p)], want);
            }
        }

        let conj = f1.map(|z| z.conj());
        let sq = correlate(&f1, &conj, &model.sampling, CorrelationMode::Cross).unwrap();
        for (v, z) in sq.values.iter().zip(f1.iter()) {
            assert!((v - z * z).norm() < 1e-12 * z.norm_sqr().max(1.0));
        }

        let short = CMatrix::zeros(2, 4);
        assert!(matches!(
            correlate(&f1, &short, &model.sampling, CorrelationMode::Cross),
            Err(Error::Dimension { .. })
        ));
        assert!(correlate(&f1, &f2, &model.sampling, CorrelationMode::Auto).is_err());
    }

    #[test]
    fn kernel_entry_unit_modulus_and_collocated_symmetry() {
        let mut model = reference_model(5, 10.0, 3, 4, 2e9);
        for (m, p, k, kp) in [(0, 0, 0, 24), (2, 3, 7, 7), (1, 2, 12, 3)] {
            let e = correlated_kernel_entry(&model, m, p, k, kp).unwrap();
            assert!((e.norm() - 1.0).abs() < 1e-12);
        }
        model.mode = CorrelationMode::Auto;
        let diag = correlated_kernel_entry(&model, 1, 1, 6, 6).unwrap();
        assert!((diag - C64::new(1.0, 0.0)).norm() < 1e-12);
        let a = correlated_kernel_entry(&model, 2, 1, 3, 19).unwrap();
        let b = correlated_kernel_entry(&model, 2, 1, 19, 3).unwrap();
        assert!((a - b.conj()).norm() < 1e-12);
        model.amplitude = AmplitudeMode::GeometricSpreading;
        let g = correlated_kernel_entry(&model, 0, 0, 4, 4).unwrap();
        assert!(g.im.abs() < 1e-30 && g.re > 0.0);
    }

    #[test]
    fn kernel_entry_rejects_bad_indices() {
        let model = reference_model(3, 1.0, 2, 2, 760e6);
        assert!(correlated_kernel_entry(&model, 2, 0, 0, 0).is_err());
        assert!(correlated_kernel_entry(&model, 0, 0, 9, 0).is_err());
    }

    #[test]
    fn far_field_simulation_matches_lifted_kernel() {
        let model = reference_model(5, 10.0, 2, 3, 760e6);
        let img = default_phantom(&model.scene).unwrap();
        let meas = simulate_measurement(&img, &model, TransmitterPhase::FarField).unwrap();
        let rho = kronecker_scene(&img);
        let n = model.scene.num_pixels();
        for p in 0..3 {
            for m in 0..2 {
                let mut want = C64::new(0.0, 0.0);
                for kp in 0..n {
                    for k in 0..n {
                        want += correlated_kernel_entry(&model, m, p, k, kp).unwrap()
                            * rho.entries()[(k, kp)];
                    }
                }
                let got = meas.values[model.sampling.row(m, p)];
                assert!((got - want).norm() <= 1e-9 * want.norm(), "{got} vs {want}");
            }
        }
    }

    #[test]
    fn noise_hook_is_seeded() {
        let model = reference_model(3, 1.0, 2, 2, 760e6);
        let base = Measurement::new(
            vec![C64::new(1.0, 0.0); 4],
            model.sampling.clone(),
            CorrelationMode::Cross,
        )
        .unwrap();
        let mut a = base.clone();
        let mut b = base.clone();
        add_noise(&mut a, 0.1, 9).unwrap();
        add_noise(&mut b, 0.1, 9).unwrap();
        assert_eq!(a.values, b.values);
        assert_ne!(a.values, base.values);
        let mut c = base.clone();
        add_noise(&mut c, 0.0, 9).unwrap();
        assert_eq!(c.values, base.values);
    }
}
