use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::ForwardOperator;
use crate::linalg::{self, CMatrix, C64};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RicProbeKind {
    /// `Σ_j z_j z_jᴴ`: Hermitian PSD, rank r, trace-heavy.
    Psd,
    /// `Σ_j (z_j z_jᴴ − w_j w_jᴴ)` with `‖w_j‖ = ‖z_j‖`: zero trace.
    TraceFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicProbeReport {
    pub kind: RicProbeKind,
    pub rank: usize,
    pub num_samples: usize,
    pub seed: u64,
    /// `‖F vec ρ‖₂ / ‖ρ‖_F` per sample.
    pub raw_ratios: Vec<f64>,
    pub median_raw: f64,
    pub mean_raw: f64,
    /// `raw_ratios / median_raw`.
    pub ratios: Vec<f64>,
    /// `max |ratio − 1|`.
    pub delta_estimate: f64,
    pub mean_ratio: f64,
}

fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

// One probe: weights ±1 on the columns of `vectors`.
fn draw_probe(
    npix: usize,
    rank: usize,
    kind: RicProbeKind,
    seed: u64,
    index: u64,
) -> (Vec<f64>, CMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let cols = match kind {
        RicProbeKind::Psd => rank,
        RicProbeKind::TraceFree => 2 * rank,
    };
    let mut vectors = CMatrix::from_fn(npix, cols, |_, _| complex_normal(&mut rng));
    let mut weights = vec![1.0; cols];
    if kind == RicProbeKind::TraceFree {
        for j in 0..rank {
            let target = vectors.column(j).norm();
            let have = vectors.column(rank + j).norm();
            vectors.column_mut(rank + j).scale_mut(target / have);
            weights[rank + j] = -1.0;
        }
    }
    (weights, vectors)
}

// ‖Σ_j w_j v_j v_jᴴ‖_F from the Gram matrix.
fn low_rank_frobenius(weights: &[f64], vectors: &CMatrix) -> f64 {
    let gram = vectors.adjoint() * vectors;
    let mut sum = 0.0;
    for i in 0..weights.len() {
        for j in 0..weights.len() {
            sum += weights[i] * weights[j] * gram[(i, j)].norm_sqr();
        }
    }
    sum.max(0.0).sqrt()
}

/// Draws `num_samples` random rank-`rank` probes and reports how far
/// `‖F vec ρ‖₂ / ‖ρ‖_F` strays from its median. Sample `i` uses stream `i`
/// of a ChaCha8 generator seeded with `seed`, so results do not depend on
/// the thread count.
pub fn empirical_ric(
    op: &ForwardOperator,
    rank: usize,
    num_samples: usize,
    seed: u64,
    kind: RicProbeKind,
) -> Result<RicProbeReport> {
    if rank == 0 || rank > op.npix() {
        return Err(Error::OutOfRange {
            what: "probe rank",
            value: rank as f64,
            min: 1.0,
            max: op.npix() as f64,
        });
    }
    if num_samples == 0 {
        return Err(Error::InvalidConfig(
            "RIC probing needs at least one sample".into(),
        ));
    }
    let raw: Vec<Result<f64>> = par::map_collect(num_samples, |i| {
        let (weights, vectors) = draw_probe(op.npix(), rank, kind, seed, i as u64);
        let image = op.apply_low_rank(&weights, &vectors)?;
        let norm = low_rank_frobenius(&weights, &vectors);
        if !(norm > 0.0) {
            return Err(Error::Numerical(format!(
                "probe {i} has zero Frobenius norm"
            )));
        }
        Ok(linalg::norm2(&image) / norm)
    });
    let raw_ratios = raw.into_iter().collect::<Result<Vec<f64>>>()?;
    let mut sorted = raw_ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median_raw = median(&sorted);
    if !(median_raw > 0.0) {
        return Err(Error::Numerical("median probe ratio is zero".into()));
    }
    let mean_raw = raw_ratios.iter().sum::<f64>() / num_samples as f64;
    let ratios: Vec<f64> = raw_ratios.iter().map(|r| r / median_raw).collect();
    let delta_estimate = ratios.iter().fold(0.0f64, |m, r| m.max((r - 1.0).abs()));
    Ok(RicProbeReport {
        kind,
        rank,
        num_samples,
        seed,
        median_raw,
        mean_raw,
        mean_ratio: mean_raw / median_raw,
        delta_estimate,
        ratios,
        raw_ratios,
    })
}

/// Mean PSD ratio over the median trace-free ratio. Near 1 when the trace
/// carries no extra energy and near `√(1 + r)` when it is fully visible.
pub fn trace_inflation(psd: &RicProbeReport, trace_free: &RicProbeReport) -> f64 {
    psd.mean_raw / trace_free.median_raw
}
