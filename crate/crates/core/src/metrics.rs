//! Relative error metrics, numerical rank, and the exact-recovery criterion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{CorrelationMode, ForwardOperator};
use crate::linalg::{self, hermitian_eigen, hermitize, CMatrix, C64};

/// Relative threshold shared by the three errors and the trace deviation.
pub const SUCCESS_THRESHOLD: f64 = 5e-4;

/// Count of eigenvalues above `threshold · λ_max`; zero when `λ_max ≤ 0`.
pub fn rank_from_eigenvalues(values: &[f64], threshold: f64) -> usize {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return 0;
    }
    values.iter().filter(|&&v| v > threshold * top).count()
}

pub fn numerical_rank(rho: &CMatrix, threshold: f64) -> Result<usize> {
    let eig = hermitian_eigen(&hermitize(rho))?;
    Ok(rank_from_eigenvalues(&eig.values, threshold))
}

/// `‖reference − estimate‖ / ‖reference‖`, `None` for a zero reference.
pub fn relative_error(estimate: &[C64], reference: &[C64]) -> Option<f64> {
    let denom = linalg::norm2(reference);
    if denom == 0.0 {
        return None;
    }
    let num: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| (r - e).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Some(num / denom)
}

/// `estimate · e^{iφ}` with φ minimizing the distance to `reference`.
pub fn align_global_phase(estimate: &[C64], reference: &[C64]) -> Vec<C64> {
    let overlap = linalg::inner(estimate, reference);
    let rot = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    estimate.iter().map(|z| z * rot).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "E_d")]
    pub data_error: Option<f64>,
    #[serde(rename = "E_rho")]
    pub kronecker_error: Option<f64>,
    #[serde(rename = "E_rho_tilde")]
    pub reflectivity_error: Option<f64>,
    pub trace: f64,
    pub reference_trace: f64,
    pub numerical_rank: usize,
    pub success: bool,
}

impl MetricsReport {
    /// Exact-recovery criterion: every error and the relative trace deviation
    /// below [`SUCCESS_THRESHOLD`], and rank exactly one. Missing metrics fail.
    pub fn meets_success(&self) -> bool {
        let below = |e: Option<f64>| matches!(e, Some(v) if v < SUCCESS_THRESHOLD);
        let trace_ok = self.reference_trace > 0.0
            && ((self.trace - self.reference_trace) / self.reference_trace).abs()
                < SUCCESS_THRESHOLD;
        below(self.data_error)
            && below(self.kronecker_error)
            && below(self.reflectivity_error)
            && trace_ok
            && self.numerical_rank == 1
    }
}

/// Inputs to [`error_metrics`].
pub struct MetricsInput<'a> {
    pub estimate: &'a CMatrix,
    pub reference: &'a CMatrix,
    pub reflectivity_estimate: &'a [C64],
    pub reflectivity_reference: &'a [C64],
    pub operator: &'a ForwardOperator,
    pub data: &'a [C64],
    pub rank_threshold: f64,
}

pub fn error_metrics(input: &MetricsInput<'_>) -> Result<MetricsReport> {
    let n = input.reference.nrows();
    if input.estimate.shape() != input.reference.shape() {
        return Err(Error::Dimension {
            context: "error_metrics Kronecker matrices",
            expected: n,
            found: input.estimate.nrows(),
        });
    }
    if input.reflectivity_estimate.len() != input.reflectivity_reference.len() {
        return Err(Error::Dimension {
            context: "error_metrics reflectivities",
            expected: input.reflectivity_reference.len(),
            found: input.reflectivity_estimate.len(),
        });
    }
    let pred = input.operator.apply_forward(input.estimate.as_slice())?;
    let data_error = relative_error(&pred, input.data);
    let kronecker_error = relative_error(input.estimate.as_slice(), input.reference.as_slice());
    let aligned = align_global_phase(input.reflectivity_estimate, input.reflectivity_reference);
    let reflectivity_error = relative_error(&aligned, input.reflectivity_reference);
    let trace = input.estimate.diagonal().iter().map(|z| z.re).sum();
    let reference_trace = input.reference.diagonal().iter().map(|z| z.re).sum();
    let mut report = MetricsReport {
        data_error,
        kronecker_error,
        reflectivity_error,
        trace,
        reference_trace,
        numerical_rank: numerical_rank(input.estimate, input.rank_threshold)?,
        success: false,
    };
    report.success = report.meets_success();
    Ok(report)
}

/// One row of the reconstruction results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub center_frequency_hz: f64,
    pub mode: String,
    pub trace: f64,
    pub rank: usize,
    #[serde(rename = "E_d")]
    pub data_error: Option<f64>,
    #[serde(rename = "E_rho")]
    pub kronecker_error: Option<f64>,
    #[serde(rename = "E_rho_tilde")]
    pub reflectivity_error: Option<f64>,
    pub success: bool,
}

impl ResultsRow {
    pub fn new(center_frequency_hz: f64, mode: CorrelationMode, report: &MetricsReport) -> Self {
        Self {
            center_frequency_hz,
            mode: mode.as_str().to_string(),
            trace: report.trace,
            rank: report.numerical_rank,
            data_error: report.data_error,
            kronecker_error: report.kronecker_error,
            reflectivity_error: report.reflectivity_error,
            success: report.success,
        }
    }
}
