//! The discrete lifted operator `F : vec(ρ) ↦ d̄`.
//!
//! Every entry factors as `F[r, k + N·k'] = u[r, k] · conj(v[r, k'])`, so the
//! matrix-free form stores only the two `rows × N` factors and applies `F` to
//! a Kronecker matrix with dense products instead of an `rows × N²` matrix.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{AmplitudeMode, ForwardModel};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::par;
use crate::SPEED_OF_LIGHT;

pub const DEFAULT_MEMORY_BUDGET_BYTES: u64 = 2 << 30;
pub const MEMORY_BUDGET_ENV: &str = "SAR_LRMR_MEM_BUDGET_BYTES";

/// Budget for explicit assembly, from the environment when set.
pub fn memory_budget_from_env() -> u64 {
    match std::env::var(MEMORY_BUDGET_ENV) {
        Ok(raw) => raw.trim().parse().unwrap_or_else(|_| {
            log::warn!("ignoring unparsable {MEMORY_BUDGET_ENV}={raw:?}");
            DEFAULT_MEMORY_BUDGET_BYTES
        }),
        Err(_) => DEFAULT_MEMORY_BUDGET_BYTES,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Explicit,
    MatrixFree,
}

#[derive(Debug, Clone)]
enum Repr {
    /// `rows × N²`, column order matching the column-stacked vectorization.
    Explicit(CMatrix),
    /// Row-major `rows × N` factors.
    Factored { u: Vec<C64>, v: Vec<C64> },
}

#[derive(Debug, Clone)]
pub struct ForwardOperator {
    repr: Repr,
    rows: usize,
    npix: usize,
    scale: C64,
}

/// Settings for the power iteration behind [`ForwardOperator::largest_singular_value`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 1000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralNorm {
    pub sigma: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn assemble_forward(
    model: &ForwardModel,
    representation: Representation,
    memory_budget: u64,
) -> Result<ForwardOperator> {
    model.validate()?;
    let (u, v) = factors(model);
    let rows = model.sampling.num_samples();
    let npix = model.scene.num_pixels();
    let op = ForwardOperator::from_factors(u, v, rows, npix)?;
    match representation {
        Representation::MatrixFree => Ok(op),
        Representation::Explicit => {
            let required = (rows as u64)
                .saturating_mul((npix * npix) as u64)
                .saturating_mul(std::mem::size_of::<C64>() as u64);
            if required > memory_budget {
                return Err(Error::MemoryBudget {
                    required,
                    budget: memory_budget,
                });
            }
            ForwardOperator::from_explicit(op.to_explicit(), npix)
        }
    }
}

fn factors(model: &ForwardModel) -> (Vec<C64>, Vec<C64>) {
    let omegas = model.sampling.frequencies();
    let slow = model.sampling.slow_times();
    let pixels = model.scene.pixel_centers();
    let y_hat = model.transmitter.direction();
    let y_range = model.transmitter.range();
    let npix = pixels.len();
    let m_count = omegas.len();
    let (g1, g2) = (model.receiver(0), model.receiver(1));

    let blocks = par::map_collect(slow.len(), |p| {
        let s = slow[p];
        let (a, b) = (g1.position_unchecked(s), g2.position_unchecked(s));
        let mut ub = vec![ZERO; m_count * npix];
        let mut vb = vec![ZERO; m_count * npix];
        for (k, x) in pixels.iter().enumerate() {
            let d1 = (x - a).norm();
            let d2 = (x - b).norm();
            let t = y_hat.dot(x);
            for (m, &w) in omegas.iter().enumerate() {
                let (a1, a2) = match model.amplitude {
                    AmplitudeMode::Unit => (C64::new(1.0, 0.0), C64::new(1.0, 0.0)),
                    AmplitudeMode::GeometricSpreading => {
                        let j = model.spectrum.value(w);
                        (j / (4.0 * PI * d1 * y_range), j / (4.0 * PI * d2 * y_range))
                    }
                };
                ub[m * npix + k] = C64::from_polar(1.0, -w * (d1 - t) / SPEED_OF_LIGHT) * a1;
                vb[m * npix + k] = C64::from_polar(1.0, -w * (d2 - t) / SPEED_OF_LIGHT) * a2;
            }
        }
        (ub, vb)
    });
    let mut u = Vec::with_capacity(slow.len() * m_count * npix);
    let mut v = Vec::with_capacity(u.capacity());
    for (ub, vb) in blocks {
        u.extend(ub);
        v.extend(vb);
    }
    (u, v)
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

impl ForwardOperator {
    pub fn from_explicit(matrix: CMatrix, npix: usize) -> Result<Self> {
        check_len("explicit operator columns", npix * npix, matrix.ncols())?;
        Ok(Self {
            rows: matrix.nrows(),
            npix,
            repr: Repr::Explicit(matrix),
            scale: C64::new(1.0, 0.0),
        })
    }

    /// Builds the matrix-free form from row-major `rows × npix` factors.
    pub fn from_factors(u: Vec<C64>, v: Vec<C64>, rows: usize, npix: usize) -> Result<Self> {
        check_len("operator factor u", rows * npix, u.len())?;
        check_len("operator factor v", rows * npix, v.len())?;
        Ok(Self {
            repr: Repr::Factored { u, v },
            rows,
            npix,
            scale: C64::new(1.0, 0.0),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn npix(&self) -> usize {
        self.npix
    }

    pub fn cols(&self) -> usize {
        self.npix * self.npix
    }

    pub fn scale(&self) -> C64 {
        self.scale
    }

    pub fn representation(&self) -> Representation {
        match self.repr {
            Repr::Explicit(_) => Representation::Explicit,
            Repr::Factored { .. } => Representation::MatrixFree,
        }
    }

    /// `c · F`
    pub fn scaled(&self, c: C64) -> Self {
        Self {
            scale: self.scale * c,
            ..self.clone()
        }
    }

    /// Dense `rows × N²` matrix including the scale factor.
    pub fn to_explicit(&self) -> CMatrix {
        match &self.repr {
            Repr::Explicit(a) => a * self.scale,
            Repr::Factored { u, v } => {
                let n = self.npix;
                CMatrix::from_fn(self.rows, n * n, |r, col| {
                    let (k, kp) = (col % n, col / n);
                    u[r * n + k] * v[r * n + kp].conj() * self.scale
                })
            }
        }
    }

    /// `F vec(ρ)`
    pub fn apply_forward(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len("apply_forward input", self.cols(), x.len())?;
        let mut out = match &self.repr {
            Repr::Explicit(a) => (a * DVector::from_column_slice(x)).as_slice().to_vec(),
            Repr::Factored { u, v } => {
                let n = self.npix;
                // T = U·ρ, then row r is Σ_k' T[r,k'] conj(v[r,k']).
                let mut t = vec![ZERO; self.rows * n];
                linalg::zgemm(
                    self.rows,
                    n,
                    n,
                    u,
                    (n as isize, 1),
                    x,
                    (1, n as isize),
                    &mut t,
                    (n as isize, 1),
                );
                par::map_collect(self.rows, |r| {
                    let tr = &t[r * n..(r + 1) * n];
                    let vr = &v[r * n..(r + 1) * n];
                    tr.iter().zip(vr).map(|(a, b)| a * b.conj()).sum()
                })
            }
        };
        if self.scale != C64::new(1.0, 0.0) {
            out.iter_mut().for_each(|z| *z *= self.scale);
        }
        Ok(out)
    }

    /// `Fᴴ ξ` reshaped to an `N × N` matrix.
    pub fn apply_adjoint_matrix(&self, y: &[C64]) -> Result<CMatrix> {
        check_len("apply_adjoint input", self.rows, y.len())?;
        let n = self.npix;
        let mut g = match &self.repr {
            Repr::Explicit(a) => {
                let col = a.ad_mul(&DVector::from_column_slice(y));
                CMatrix::from_column_slice(n, n, col.as_slice())
            }
            Repr::Factored { u, v } => {
                // G = Uᴴ diag(ξ) V = conj(Uᵀ · conj(diag(ξ) V))
                let mut w = v.clone();
                par::for_each_chunk(&mut w, n, |r, row| {
                    row.iter_mut().for_each(|z| *z = (*z * y[r]).conj())
                });
                let mut g = vec![ZERO; n * n];
                linalg::zgemm(
                    n,
                    self.rows,
                    n,
                    u,
                    (1, n as isize),
                    &w,
                    (n as isize, 1),
                    &mut g,
                    (1, n as isize),
                );
                g.iter_mut().for_each(|z| *z = z.conj());
                CMatrix::from_vec(n, n, g)
            }
        };
        if self.scale != C64::new(1.0, 0.0) {
            g *= self.scale.conj();
        }
        Ok(g)
    }

    /// `Fᴴ ξ` in column-stacked vector form.
    pub fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        Ok(self.apply_adjoint_matrix(y)?.as_slice().to_vec())
    }

    /// `F vec(Σ_j w_j q_j q_jᴴ)` for the columns `q_j` of `vectors`, without
    /// forming the `N × N` matrix when the operator is matrix-free.
    pub fn apply_low_rank(&self, weights: &[f64], vectors: &CMatrix) -> Result<Vec<C64>> {
        check_len("apply_low_rank vector length", self.npix, vectors.nrows())?;
        check_len(
            "apply_low_rank weight count",
            vectors.ncols(),
            weights.len(),
        )?;
        let keep: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] != 0.0).collect();
        if keep.is_empty() {
            return Ok(vec![ZERO; self.rows]);
        }
        match &self.repr {
            Repr::Explicit(_) => {
                let w: Vec<f64> = keep.iter().map(|&j| weights[j]).collect();
                let q = vectors.select_columns(&keep);
                self.apply_forward(linalg::weighted_outer(&w, &q).as_slice())
            }
            Repr::Factored { u, v } => {
                let n = self.npix;
                let r = keep.len();
                let q = vectors.select_columns(&keep);
                let mut uq = vec![ZERO; self.rows * r];
                let mut vq = vec![ZERO; self.rows * r];
                let qs = (1, n as isize);
                linalg::zgemm(
                    self.rows,
                    n,
                    r,
                    u,
                    (n as isize, 1),
                    q.as_slice(),
                    qs,
                    &mut uq,
                    (r as isize, 1),
                );
                linalg::zgemm(
                    self.rows,
                    n,
                    r,
                    v,
                    (n as isize, 1),
                    q.as_slice(),
                    qs,
                    &mut vq,
                    (r as isize, 1),
                );
                let w: Vec<f64> = keep.iter().map(|&j| weights[j]).collect();
                let scale = self.scale;
                Ok(par::map_collect(self.rows, |row| {
                    let a = &uq[row * r..(row + 1) * r];
                    let b = &vq[row * r..(row + 1) * r];
                    let s: C64 = (0..r).map(|j| a[j] * b[j].conj() * w[j]).sum();
                    s * scale
                }))
            }
        }
    }

    /// σ_max(F) by power iteration on FᴴF from a seeded random start.
    pub fn largest_singular_value(&self, opts: PowerIteration) -> Result<SpectralNorm> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut x: Vec<C64> = (0..self.cols())
            .map(|_| {
                C64::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            })
            .collect();
        let nx = linalg::norm2(&x);
        x.iter_mut().for_each(|z| *z /= nx);
        let mut sigma = 0.0;
        for it in 1..=opts.max_iterations.max(1) {
            let y = self.apply_forward(&x)?;
            let z = self.apply_adjoint(&y)?;
            let nz = linalg::norm2(&z);
            if nz == 0.0 {
                return Ok(SpectralNorm {
                    sigma: 0.0,
                    iterations: it,
                    converged: true,
                });
            }
            let next = nz.sqrt();
            let done = (next - sigma).abs() <= opts.tolerance * next;
            sigma = next;
            x = z.into_iter().map(|c| c / nz).collect();
            if done {
                return Ok(SpectralNorm {
                    sigma,
                    iterations: it,
                    converged: true,
                });
            }
        }
        log::warn!(
            "power iteration stopped after {} iterations without reaching tolerance {:e}; using sigma = {sigma:.6e}",
            opts.max_iterations,
            opts.tolerance
        );
        Ok(SpectralNorm {
            sigma,
            iterations: opts.max_iterations,
            converged: false,
        })
    }

    /// Rescales so that σ_max = 1, returning the new operator and the factor
    /// `1/σ` that must also be applied to measured data.
    pub fn normalized(&self, opts: PowerIteration) -> Result<(Self, f64)> {
        let s = self.largest_singular_value(opts)?.sigma;
        if s == 0.0 {
            return Err(Error::Numerical(
                "cannot normalize the zero operator".into(),
            ));
        }
        Ok((self.scaled(C64::new(1.0 / s, 0.0)), 1.0 / s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{correlated_kernel_entry, CorrelationMode, SamplingGrid, Spectrum};
    use crate::scene::{SceneGrid, Trajectory, TransmitterModel, Vec3};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn toy(amplitude: AmplitudeMode, mode: CorrelationMode) -> ForwardModel {
        let arc = Trajectory::circular(7000.0, 5000.0, [0.0, FRAC_PI_2], 0.0).unwrap();
        ForwardModel {
            scene: SceneGrid::centered(3, 10.0).unwrap(),
            receivers: [arc.clone(), arc.shifted(FRAC_PI_4).unwrap()],
            transmitter: TransmitterModel::new(Vec3::new(12e3, 12e3, 5e3)).unwrap(),
            sampling: SamplingGrid::new(2.0 * PI * 760e6, 2.0 * PI * 8e6, 2, [0.0, FRAC_PI_2], 2)
                .unwrap(),
            mode,
            amplitude,
            spectrum: Spectrum::Flat,
        }
    }

    #[test]
    fn explicit_entries_match_kernel_entry() {
        for amp in [AmplitudeMode::Unit, AmplitudeMode::GeometricSpreading] {
            let model = toy(amp, CorrelationMode::Cross);
            let f = assemble_forward(
                &model,
                Representation::Explicit,
                DEFAULT_MEMORY_BUDGET_BYTES,
            )
            .unwrap();
            let a = f.to_explicit();
            assert_eq!((a.nrows(), a.ncols()), (4, 81));
            for row in 0..4 {
                let (m, p) = model.sampling.row_indices(row);
                for col in 0..81 {
                    let want = correlated_kernel_entry(&model, m, p, col % 9, col / 9).unwrap();
                    // Phases reach ~1e5 rad, so rounding in the split path
                    // lengths shows up around 1e-11.
                    assert!((a[(row, col)] - want).norm() <= 1e-9 * want.norm());
                }
            }
        }
    }

    #[test]
    fn explicit_respects_memory_budget() {
        let model = toy(AmplitudeMode::Unit, CorrelationMode::Cross);
        let err = assemble_forward(&model, Representation::Explicit, 100).unwrap_err();
        assert!(matches!(
            err,
            Error::MemoryBudget {
                required: 5184,
                budget: 100
            }
        ));
        assert!(err.to_string().contains("matrix-free"));
    }

    #[test]
    fn zero_input_gives_zero_data() {
        let model = toy(AmplitudeMode::Unit, CorrelationMode::Cross);
        let f = assemble_forward(&model, Representation::MatrixFree, 0).unwrap();
        assert!(f
            .apply_forward(&[ZERO; 81])
            .unwrap()
            .iter()
            .all(|z| *z == ZERO));
        assert!(f.apply_forward(&[ZERO; 80]).is_err());
        assert!(f.apply_adjoint(&[ZERO; 5]).is_err());
    }

    #[test]
    fn single_entry_operator_has_unit_norm() {
        let mut a = CMatrix::zeros(1, 1);
        a[(0, 0)] = C64::new(1.0, 0.0);
        let f = ForwardOperator::from_explicit(a, 1).unwrap();
        let s = f.largest_singular_value(PowerIteration::default()).unwrap();
        assert!(s.converged);
        assert!((s.sigma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn low_rank_apply_matches_dense() {
        let model = toy(AmplitudeMode::Unit, CorrelationMode::Cross);
        let f = assemble_forward(&model, Representation::MatrixFree, 0).unwrap();
        let q = CMatrix::from_fn(9, 3, |r, c| {
            C64::new((r + c) as f64 * 0.1, (r as f64 - c as f64) * 0.05)
        });
        let w = [2.0, 0.0, 0.5];
        let dense = f
            .apply_forward(linalg::weighted_outer(&w, &q).as_slice())
            .unwrap();
        let low = f.apply_low_rank(&w, &q).unwrap();
        for (a, b) in dense.iter().zip(&low) {
            assert!((a - b).norm() < 1e-12);
        }
        let zero = f.apply_low_rank(&[0.0, 0.0, 0.0], &q).unwrap();
        assert!(zero.iter().all(|z| *z == ZERO));
    }
}
