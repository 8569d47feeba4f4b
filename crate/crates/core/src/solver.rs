//! Trace-regularized recovery of the Kronecker scene by Uzawa iteration.
//!
//! Each step thresholds the Hermitian part of `Fᴴξ` against `λI` (a
//! projection onto the PSD cone) and then moves the dual variable along the
//! data residual:
//!
//! ```text
//! ρᵏ   = P₊(Herm(Fᴴξᵏ) − λI)
//! ξᵏ⁺¹ = ξᵏ + β (d̄ − F vec ρᵏ)
//! ```

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{ForwardOperator, PowerIteration};
use crate::linalg::{self, hermitian_eigen, hermitize, CMatrix, C64};
use crate::metrics::rank_from_eigenvalues;
use crate::scene::{KroneckerMatrix, ReflectivityImage, SceneGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepRule {
    /// `β = factor · min(1/σ, 2/σ²)`; satisfies both stability readings.
    Safe {
        factor: f64,
    },
    /// `β = factor / σ`
    InverseSigma {
        factor: f64,
    },
    /// `β = factor / σ²`
    InverseSigmaSquared {
        factor: f64,
    },
    Fixed {
        beta: f64,
    },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Safe { factor: 0.9 }
    }
}

impl StepRule {
    pub fn needs_sigma(&self) -> bool {
        !matches!(self, StepRule::Fixed { .. })
    }

    /// Step size for an operator with spectral norm `sigma`.
    pub fn beta(&self, sigma: f64) -> Result<f64> {
        let beta = match *self {
            StepRule::Safe { factor } => factor * (1.0 / sigma).min(2.0 / (sigma * sigma)),
            StepRule::InverseSigma { factor } => factor / sigma,
            StepRule::InverseSigmaSquared { factor } => factor / (sigma * sigma),
            StepRule::Fixed { beta } => beta,
        };
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step rule {self:?} gives beta = {beta} for sigma = {sigma}"
            )));
        }
        Ok(beta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub step_rule: StepRule,
    pub max_iterations: usize,
    /// Stop once E_d falls to this value; `0` runs all iterations.
    pub data_tolerance: f64,
    /// Eigenvalues above `rank_threshold · λ₁` count towards the rank.
    pub rank_threshold: f64,
    pub log_stride: usize,
    /// Abort if E_d grows by more than `divergence_factor` within
    /// `divergence_window` iterations.
    pub divergence_window: usize,
    pub divergence_factor: f64,
    pub power_iteration: PowerIteration,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 20.0,
            step_rule: StepRule::default(),
            max_iterations: 5000,
            data_tolerance: 0.0,
            rank_threshold: 1e-3,
            log_stride: 10,
            divergence_window: 100,
            divergence_factor: 10.0,
            power_iteration: PowerIteration::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.data_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("data_tolerance must be >= 0".into()));
        }
        if !(self.rank_threshold > 0.0 && self.rank_threshold < 1.0) {
            return Err(Error::InvalidConfig(
                "rank_threshold must lie in (0, 1)".into(),
            ));
        }
        if self.log_stride == 0 || self.divergence_window == 0 {
            return Err(Error::InvalidConfig(
                "log_stride and divergence_window must be >= 1".into(),
            ));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::InvalidConfig(
                "divergence_factor must exceed 1".into(),
            ));
        }
        let factor = match self.step_rule {
            StepRule::Safe { factor }
            | StepRule::InverseSigma { factor }
            | StepRule::InverseSigmaSquared { factor } => factor,
            StepRule::Fixed { beta } => beta,
        };
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step rule {:?} must be positive",
                self.step_rule
            )));
        }
        Ok(())
    }
}

/// Hermitian PSD matrix kept as `Σ_j λ_j q_j q_jᴴ` with `λ_j > 0`,
/// eigenvalues descending.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    pub values: Vec<f64>,
    /// `N × r`, one eigenvector per column.
    pub vectors: CMatrix,
}

impl PsdFactor {
    pub fn zero(n: usize) -> Self {
        Self {
            values: Vec::new(),
            vectors: CMatrix::zeros(n, 0),
        }
    }

    pub fn side(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn trace(&self) -> f64 {
        // fold from +0.0 so an empty factor reports 0, not -0.
        self.values.iter().fold(0.0, |a, b| a + b)
    }

    pub fn rank(&self, threshold: f64) -> usize {
        rank_from_eigenvalues(&self.values, threshold)
    }

    pub fn to_matrix(&self) -> CMatrix {
        linalg::weighted_outer(&self.values, &self.vectors)
    }

    pub fn to_kronecker(&self, grid: &SceneGrid) -> Result<KroneckerMatrix> {
        KroneckerMatrix::new(grid.clone(), self.to_matrix())
    }
}

/// Frobenius-nearest PSD matrix to the Hermitian part of `h`, in factored form.
pub fn psd_project_factored(h: &CMatrix) -> Result<PsdFactor> {
    let eig = hermitian_eigen(&hermitize(h))?;
    let keep = eig.values.iter().take_while(|&&v| v > 0.0).count();
    Ok(PsdFactor {
        values: eig.values[..keep].to_vec(),
        vectors: eig.vectors.columns(0, keep).into_owned(),
    })
}

/// Frobenius-nearest PSD matrix to the Hermitian part of `h`.
pub fn psd_project(h: &CMatrix) -> Result<CMatrix> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension {
            context: "psd_project (square input)",
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    Ok(psd_project_factored(h)?.to_matrix())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub trace: f64,
    pub rank: usize,
    /// `None` when the data vector is zero.
    pub data_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolverState {
    /// ρᵏ from the latest step.
    pub iterate: PsdFactor,
    /// ξ for the next step.
    pub dual: Vec<C64>,
    /// Number of completed steps.
    pub iteration: usize,
    pub history: Vec<IterationRecord>,
}

impl SolverState {
    pub fn new(op: &ForwardOperator) -> Self {
        Self {
            iterate: PsdFactor::zero(op.npix()),
            dual: vec![linalg::ZERO; op.rows()],
            iteration: 0,
            history: Vec::new(),
        }
    }
}

/// Diagnostics of a single step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub residual_norm: f64,
    pub data_error: Option<f64>,
}

/// One Uzawa update: computes ρᵏ from ξᵏ, then advances the dual.
pub fn uzawa_step(
    state: &mut SolverState,
    op: &ForwardOperator,
    data: &[C64],
    beta: f64,
    lambda: f64,
) -> Result<StepInfo> {
    if data.len() != op.rows() || state.dual.len() != op.rows() {
        return Err(Error::Dimension {
            context: "uzawa_step data length",
            expected: op.rows(),
            found: if data.len() != op.rows() {
                data.len()
            } else {
                state.dual.len()
            },
        });
    }
    let mut h = op.apply_adjoint_matrix(&state.dual)?;
    for i in 0..h.nrows() {
        h[(i, i)] -= C64::new(lambda, 0.0);
    }
    let rho = psd_project_factored(&h)?;
    let pred = op.apply_low_rank(&rho.values, &rho.vectors)?;
    let residual: Vec<C64> = data.iter().zip(&pred).map(|(d, p)| d - p).collect();
    for (xi, r) in state.dual.iter_mut().zip(&residual) {
        *xi += r * beta;
    }
    let residual_norm = linalg::norm2(&residual);
    let dn = linalg::norm2(data);
    state.iterate = rho;
    state.iteration += 1;
    Ok(StepInfo {
        residual_norm,
        data_error: (dn > 0.0).then(|| residual_norm / dn),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    DataTolerance,
    ZeroData,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub iterate: PsdFactor,
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub beta: f64,
    /// Spectral norm estimate used for the step size, if one was needed.
    pub sigma: Option<f64>,
    pub stop: StopReason,
}

/// Runs the Uzawa iteration from ξ⁰ = 0.
///
/// History rows are logged every `log_stride` steps plus the final one; row
/// `k` describes ρᵏ (iteration numbers start at 1).
pub fn solve(op: &ForwardOperator, data: &[C64], config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    if data.len() != op.rows() {
        return Err(Error::Dimension {
            context: "solve data length",
            expected: op.rows(),
            found: data.len(),
        });
    }
    let sigma = if config.step_rule.needs_sigma() {
        let est = op.largest_singular_value(config.power_iteration)?;
        log::info!(
            "operator spectral norm {:.6e} ({} power iterations)",
            est.sigma,
            est.iterations
        );
        if est.sigma == 0.0 {
            return Err(Error::Numerical(
                "forward operator is identically zero".into(),
            ));
        }
        Some(est.sigma)
    } else {
        None
    };
    let beta = config.step_rule.beta(sigma.unwrap_or(1.0))?;
    let mut state = SolverState::new(op);

    if linalg::norm2(data) == 0.0 {
        state.history.push(IterationRecord {
            iteration: 0,
            trace: 0.0,
            rank: 0,
            data_error: None,
        });
        return Ok(SolveOutcome {
            iterate: state.iterate,
            history: state.history,
            iterations: 0,
            beta,
            sigma,
            stop: StopReason::ZeroData,
        });
    }

    let mut window: VecDeque<f64> = VecDeque::with_capacity(config.divergence_window + 1);
    let mut stop = StopReason::MaxIterations;
    while state.iteration < config.max_iterations {
        let info = uzawa_step(&mut state, op, data, beta, config.lambda)?;
        let k = state.iteration;
        let e_d = info.data_error.unwrap_or(0.0);
        if !e_d.is_finite() {
            return Err(Error::Numerical(format!(
                "E_d became non-finite at iteration {k}"
            )));
        }
        window.push_back(e_d);
        if window.len() > config.divergence_window + 1 {
            window.pop_front();
        }
        if window.len() == config.divergence_window + 1 {
            let start = window[0];
            if start > 0.0 && e_d > config.divergence_factor * start {
                return Err(Error::Divergence {
                    iteration: k,
                    window: config.divergence_window,
                    window_start: start,
                    current: e_d,
                });
            }
        }
        let converged = config.data_tolerance > 0.0 && e_d <= config.data_tolerance;
        let last = converged || k == config.max_iterations;
        if k.is_multiple_of(config.log_stride) || k == 1 || last {
            let record = IterationRecord {
                iteration: k,
                trace: state.iterate.trace(),
                rank: state.iterate.rank(config.rank_threshold),
                data_error: info.data_error,
            };
            log::debug!(
                "iter {k}: trace {:.6} rank {} E_d {:.4e}",
                record.trace,
                record.rank,
                e_d
            );
            state.history.push(record);
        }
        if converged {
            stop = StopReason::DataTolerance;
            break;
        }
    }
    Ok(SolveOutcome {
        iterate: state.iterate,
        history: state.history,
        iterations: state.iteration,
        beta,
        sigma,
        stop,
    })
}

/// Leading-eigenpair reflectivity `√λ₁ · v₁`, rotated so its largest-magnitude
/// entry (lowest index on ties) is real and positive.
pub fn extract_reflectivity(rho: &KroneckerMatrix) -> Result<ReflectivityImage> {
    let eig = hermitian_eigen(&hermitize(rho.entries()))?;
    let lambda1 = eig.values.first().copied().unwrap_or(0.0);
    if !(lambda1 > 0.0) {
        log::warn!("leading eigenvalue {lambda1:.3e} <= 0; returning an empty scene");
        return Ok(ReflectivityImage::zeros(rho.grid().clone()));
    }
    let v: Vec<C64> = eig.vectors.column(0).iter().copied().collect();
    ReflectivityImage::new(rho.grid().clone(), phase_normalize(&v, lambda1.sqrt()))
}

/// Scales `v` by `scale` and removes its global phase.
pub(crate) fn phase_normalize(v: &[C64], scale: f64) -> Vec<C64> {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = i;
        }
    }
    let pivot = v.get(best).copied().unwrap_or(linalg::ZERO);
    let rot = if pivot.norm() > 0.0 {
        pivot.conj() / pivot.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    v.iter().map(|z| z * rot * scale).collect()
}
