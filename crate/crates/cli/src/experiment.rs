//! Pipelines behind the CLI subcommands. Every file written here embeds the
//! config hash and contains nothing that varies between identical runs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use lrmr_sar::analysis::{
    check_resolution_condition, empirical_ric, sample_quads, trace_inflation, KernelContext,
    KernelEstimate, ResolutionReport, RicProbeKind, RicProbeReport,
};
use lrmr_sar::forward::{
    add_noise, assemble_forward, memory_budget_from_env, CorrelationMode, ForwardModel, Measurement,
};
use lrmr_sar::io::{self, ContentHash};
use lrmr_sar::metrics::{error_metrics, MetricsInput, MetricsReport, ResultsRow};
use lrmr_sar::scene::{elevation_angle, kronecker_scene, ReflectivityImage};
use lrmr_sar::solver::{extract_reflectivity, solve, StopReason};
use lrmr_sar::{Error, Result};
use serde::Serialize;

use crate::config::ScenarioConfig;

/// Table cells in run order: center frequency (Hz) and mode.
pub const TABLE2_CELLS: [(f64, CorrelationMode); 4] = [
    (760e6, CorrelationMode::Cross),
    (760e6, CorrelationMode::Auto),
    (2e9, CorrelationMode::Cross),
    (2e9, CorrelationMode::Auto),
];

/// A validated config with everything derived from it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub hash: ContentHash,
    pub model: ForwardModel,
    pub phantom: ReflectivityImage,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            hash: config.hash(),
            model: config.forward_model()?,
            phantom: config.phantom()?,
            config,
        })
    }
}

#[derive(Debug, Serialize)]
struct Provenance {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    threads: usize,
}

impl Provenance {
    fn new(hash: &ContentHash) -> Self {
        Self {
            tool: "lrmr-sar",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: hash.hex(),
            threads: lrmr_sar::current_num_threads(),
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Simulated (and optionally noisy) correlated data for the scenario.
pub fn simulate(sc: &Scenario) -> Result<Measurement> {
    let mut meas = lrmr_sar::forward::simulate_measurement(
        &sc.phantom,
        &sc.model,
        sc.config.transmitter_phase,
    )?;
    add_noise(&mut meas, sc.config.noise_std, sc.config.seed)?;
    Ok(meas)
}

/// Writes `data.csv` and `phantom.csv`.
pub fn run_simulation(sc: &Scenario, dir: &Path) -> Result<Measurement> {
    let meas = simulate(sc)?;
    let mut w = create(dir, "data.csv")?;
    io::write_measurement_csv(&mut w, &meas, &sc.hash)?;
    w.flush()?;
    let mut w = create(dir, "phantom.csv")?;
    io::write_complex_csv(&mut w, sc.phantom.values(), &sc.hash)?;
    w.flush()?;
    info!("wrote {} samples to {}", meas.values.len(), dir.display());
    Ok(meas)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub stop: StopReason,
    pub beta: f64,
    pub sigma: Option<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionSummary {
    pub center_frequency_hz: f64,
    pub mode: CorrelationMode,
    pub metrics: MetricsReport,
    pub solver: SolverSummary,
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    provenance: Provenance,
    #[serde(flatten)]
    summary: &'a ReconstructionSummary,
}

/// Simulate, reconstruct and score one scenario. Writes `data.csv`,
/// `history.csv`, `kronecker.bin`, `kronecker.pgm`, `reflectivity.csv`,
/// `reflectivity.pgm` and `metrics.json` into `dir`.
pub fn run_reconstruction(sc: &Scenario, dir: &Path) -> Result<ReconstructionSummary> {
    let cfg = &sc.config;
    let meas = simulate(sc)?;
    if cfg.output.write_data {
        let mut w = create(dir, "data.csv")?;
        io::write_measurement_csv(&mut w, &meas, &sc.hash)?;
        w.flush()?;
    }
    let op = assemble_forward(&sc.model, cfg.representation(), memory_budget_from_env())?;
    let solver_cfg = cfg.solver_config()?;
    info!(
        "reconstructing: {} mode, fc = {} Hz, {} x {} operator",
        cfg.mode,
        cfg.waveform.center_frequency_hz,
        op.rows(),
        op.cols()
    );
    let outcome = solve(&op, &meas.values, &solver_cfg)?;
    let grid = sc.model.scene.clone();
    let rho = outcome.iterate.to_kronecker(&grid)?;
    let estimate = extract_reflectivity(&rho)?;
    let truth = kronecker_scene(&sc.phantom);
    let metrics = error_metrics(&MetricsInput {
        estimate: rho.entries(),
        reference: truth.entries(),
        reflectivity_estimate: estimate.values(),
        reflectivity_reference: sc.phantom.values(),
        operator: &op,
        data: &meas.values,
        rank_threshold: solver_cfg.rank_threshold,
    })?;

    let mut w = create(dir, "history.csv")?;
    io::write_history_csv(&mut w, &outcome.history, &sc.hash)?;
    w.flush()?;
    let mut w = create(dir, "kronecker.bin")?;
    io::write_matrix_binary(&mut w, rho.entries(), &sc.hash)?;
    w.flush()?;
    let mut w = create(dir, "reflectivity.csv")?;
    io::write_complex_csv(&mut w, estimate.values(), &sc.hash)?;
    w.flush()?;
    if cfg.output.write_images {
        let n = grid.num_pixels();
        let mut w = create(dir, "kronecker.pgm")?;
        // Row-major image of the column-major matrix; ρ is Hermitian so
        // magnitudes agree either way.
        io::write_magnitude_pgm(&mut w, rho.as_vec(), n, &sc.hash)?;
        w.flush()?;
        let mut w = create(dir, "reflectivity.pgm")?;
        io::write_magnitude_pgm(&mut w, estimate.values(), grid.pixels_per_side(), &sc.hash)?;
        w.flush()?;
    }
    let summary = ReconstructionSummary {
        center_frequency_hz: cfg.waveform.center_frequency_hz,
        mode: cfg.mode,
        metrics,
        solver: SolverSummary {
            iterations: outcome.iterations,
            stop: outcome.stop,
            beta: outcome.beta,
            sigma: outcome.sigma,
            lambda: solver_cfg.lambda,
        },
    };
    write_json(
        dir,
        "metrics.json",
        &MetricsFile {
            provenance: Provenance::new(&sc.hash),
            summary: &summary,
        },
    )?;
    info!(
        "done after {} iterations: E_d = {:?}, E_rho = {:?}, rank {}, success = {}",
        summary.solver.iterations,
        metrics.data_error,
        metrics.kronecker_error,
        metrics.numerical_rank,
        metrics.success
    );
    Ok(summary)
}

/// Subdirectory name for one table cell, e.g. `cross_760mhz`.
pub fn cell_dir_name(fc_hz: f64, mode: CorrelationMode) -> String {
    format!("{}_{}mhz", mode, (fc_hz / 1e6).round() as u64)
}

/// Runs the four table cells on top of `base` and writes `table2.csv`.
pub fn reproduce_table2(base: &ScenarioConfig, dir: &Path) -> Result<Vec<ResultsRow>> {
    let mut rows = Vec::new();
    for (fc, mode) in TABLE2_CELLS {
        let cfg = base.clone().with_center_frequency_hz(fc).with_mode(mode);
        let sc = Scenario::new(cfg)?;
        let sub = dir.join(cell_dir_name(fc, mode));
        let summary = run_reconstruction(&sc, &sub)?;
        rows.push(ResultsRow::new(fc, mode, &summary.metrics));
    }
    let mut w = create(dir, "table2.csv")?;
    io::write_results_csv(&mut w, &rows, &base.hash())?;
    w.flush()?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub elevation_angle_deg: f64,
    pub reports: Vec<ResolutionReport>,
}

/// Resolution condition at the configured and the extra frequencies;
/// writes `resolution.json`.
pub fn run_bound(sc: &Scenario, dir: &Path) -> Result<BoundReport> {
    let cfg = &sc.config;
    let mut freqs = vec![cfg.waveform.center_frequency_hz];
    for &f in &cfg.analysis.bound_frequencies_hz {
        if !freqs.contains(&f) {
            freqs.push(f);
        }
    }
    let reports = freqs
        .iter()
        .map(|&f| {
            check_resolution_condition(
                &sc.model.scene,
                &sc.model.transmitter,
                2.0 * std::f64::consts::PI * f,
                cfg.analysis.resolution_margin,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let report = BoundReport {
        elevation_angle_deg: elevation_angle(&sc.model.transmitter, &sc.model.scene)?.to_degrees(),
        reports,
    };
    #[derive(Serialize)]
    struct File<'a> {
        provenance: Provenance,
        #[serde(flatten)]
        report: &'a BoundReport,
    }
    write_json(
        dir,
        "resolution.json",
        &File {
            provenance: Provenance::new(&sc.hash),
            report: &report,
        },
    )?;
    Ok(report)
}

/// Kernel context used by `analyze kernels`: configured amplitude model,
/// receiver scale and sampling density.
pub fn kernel_context(sc: &Scenario) -> Result<KernelContext> {
    let a = &sc.config.analysis;
    let model = sc.model.with_amplitude(a.kernel_amplitude);
    KernelContext::from_model(&model, a.kernel_receiver_scale)?
        .with_resolution(a.kernel_num_frequencies, a.kernel_num_slow_times)
}

#[derive(Debug, Serialize)]
struct KernelRow {
    k: usize,
    kp: usize,
    l: usize,
    lp: usize,
    class: &'static str,
    regime: &'static str,
    brute_re: f64,
    brute_im: f64,
    asymptotic_re: f64,
    asymptotic_im: f64,
    rel_error: Option<f64>,
    stationary_points: usize,
    degenerate: bool,
}

/// Brute-force vs. asymptotic kernel over a seeded quad sample; writes
/// `kernels.csv`.
pub fn run_kernels(sc: &Scenario, dir: &Path, quads: usize) -> Result<Vec<KernelEstimate>> {
    let ctx = kernel_context(sc)?;
    let sample = sample_quads(ctx.num_pixels(), quads, sc.config.seed)?;
    let mut out = Vec::with_capacity(sample.len());
    for (i, q) in sample.iter().enumerate() {
        out.push(KernelEstimate::compute(&ctx, q)?);
        if (i + 1) % 50 == 0 {
            info!("kernel estimates: {}/{}", i + 1, sample.len());
        }
    }
    let mut w = create(dir, "kernels.csv")?;
    writeln!(w, "# config_sha256={}", sc.hash)?;
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(&mut w);
    for e in &out {
        csv.serialize(KernelRow {
            k: e.quad.k,
            kp: e.quad.kp,
            l: e.quad.l,
            lp: e.quad.lp,
            class: e.class.as_str(),
            regime: e.regime.as_str(),
            brute_re: e.brute_force.re,
            brute_im: e.brute_force.im,
            asymptotic_re: e.asymptotic.re,
            asymptotic_im: e.asymptotic.im,
            rel_error: e.relative_error(),
            stationary_points: e.stationary_points.len(),
            degenerate: e.degenerate,
        })
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    csv.flush()?;
    drop(csv);
    w.flush()?;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct RicEntry {
    pub rank: usize,
    pub psd: RicProbeReport,
    pub trace_free: RicProbeReport,
    /// Mean PSD ratio over median trace-free ratio.
    pub trace_inflation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RicReport {
    pub center_frequency_hz: f64,
    pub mode: CorrelationMode,
    pub probes: Vec<RicEntry>,
}

/// Restricted-isometry probes for each rank; writes `ric.json`.
pub fn run_ric(sc: &Scenario, dir: &Path, ranks: &[usize], samples: usize) -> Result<RicReport> {
    let op = assemble_forward(
        &sc.model,
        sc.config.representation(),
        memory_budget_from_env(),
    )?;
    let seed = sc.config.seed;
    let probes = ranks
        .iter()
        .map(|&r| {
            let psd = empirical_ric(&op, r, samples, seed, RicProbeKind::Psd)?;
            let trace_free = empirical_ric(&op, r, samples, seed, RicProbeKind::TraceFree)?;
            Ok(RicEntry {
                rank: r,
                trace_inflation: trace_inflation(&psd, &trace_free),
                psd,
                trace_free,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = RicReport {
        center_frequency_hz: sc.config.waveform.center_frequency_hz,
        mode: sc.config.mode,
        probes,
    };
    #[derive(Serialize)]
    struct File<'a> {
        provenance: Provenance,
        #[serde(flatten)]
        report: &'a RicReport,
    }
    write_json(
        dir,
        "ric.json",
        &File {
            provenance: Provenance::new(&sc.hash),
            report: &report,
        },
    )?;
    Ok(report)
}

/// `dir` if given, else the config's output directory.
pub fn output_dir(cfg: &ScenarioConfig, dir: Option<&Path>) -> PathBuf {
    dir.map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output.directory.clone())
}
