//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. The table runs take several minutes each.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use lrmr_sar::analysis::{
    closed_form_constant, empirical_ric, resolution_bound, sample_quads, trace_inflation,
    KernelContext, KernelEstimate, QuadClass, RicProbeKind,
};
use lrmr_sar::forward::{assemble_forward, AmplitudeMode, CorrelationMode, Representation};
use lrmr_sar::io::read_results_csv;
use lrmr_sar::linalg::{self, CMatrix, C64};
use lrmr_sar::metrics::ResultsRow;
use lrmr_sar::solver::{psd_project, uzawa_step, SolverState};
use lrmr_sar_cli::config::ScenarioConfig;
use lrmr_sar_cli::experiment::{cell_dir_name, kernel_context, Scenario, TABLE2_CELLS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

const REFERENCE_TRACE: f64 = 7.68;

fn run_table(dir: &Path) -> Result<Vec<ResultsRow>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lrmr-sar"))
        .args(["--seed", "7", "--output-dir"])
        .arg(dir)
        .arg("reproduce-table2")
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "reproduce-table2 failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let f = fs::File::open(dir.join("table2.csv")).map_err(|e| e.to_string())?;
    read_results_csv(f).map_err(|e| e.to_string())
}

fn rows_for(rows: &[ResultsRow], mode: &str) -> Vec<ResultsRow> {
    rows.iter().filter(|r| r.mode == mode).cloned().collect()
}

fn c1_cross_recovery(rows: &[ResultsRow]) -> Check {
    let cross = rows_for(rows, "cross");
    if cross.len() != 2 {
        return Err(format!("expected 2 cross rows, got {}", cross.len()));
    }
    let mut notes = Vec::new();
    let mut ok = true;
    for r in &cross {
        let trace_dev = (r.trace - REFERENCE_TRACE).abs() / REFERENCE_TRACE;
        let errs = [r.data_error, r.kronecker_error, r.reflectivity_error];
        let good = r.rank == 1
            && trace_dev <= 5e-3
            && errs.iter().all(|e| matches!(e, Some(v) if *v < 5e-4));
        ok &= good;
        notes.push(format!(
            "{:.0} MHz: rank {}, trace {:.4}, E_d {:.2e}, E_rho {:.2e}, E_rho~ {:.2e}",
            r.center_frequency_hz / 1e6,
            r.rank,
            r.trace,
            errs[0].unwrap_or(f64::NAN),
            errs[1].unwrap_or(f64::NAN),
            errs[2].unwrap_or(f64::NAN)
        ));
    }
    let msg = notes.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c2_auto_failure(rows: &[ResultsRow]) -> Check {
    let auto = rows_for(rows, "auto");
    if auto.len() != 2 {
        return Err(format!("expected 2 auto rows, got {}", auto.len()));
    }
    let mut notes = Vec::new();
    let mut ok = true;
    for r in &auto {
        let e = r.kronecker_error.unwrap_or(f64::NAN);
        ok &= !r.success && r.rank > 1 && e > 0.1;
        notes.push(format!(
            "{:.0} MHz: success {}, rank {}, E_rho {:.4}",
            r.center_frequency_hz / 1e6,
            r.success,
            r.rank,
            e
        ));
    }
    let msg = notes.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c3_resolution_bound() -> Check {
    let alpha = 16.4832_f64.to_radians();
    let mut notes = Vec::new();
    let mut ok = true;
    for (fc, expect) in [(760e6, 1.53), (2e9, 0.58)] {
        let b = resolution_bound(2.0 * PI * fc, alpha).map_err(|e| e.to_string())?;
        let rel = (b - expect).abs() / expect;
        ok &= rel <= 0.01;
        notes.push(format!(
            "{:.0} MHz: {b:.4} m vs {expect} m ({:.2}%)",
            fc / 1e6,
            100.0 * rel
        ));
    }
    let msg = notes.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c4_kernel_diagonal(sc: &Scenario) -> Check {
    let ctx = kernel_context(sc).map_err(|e| e.to_string())?;
    let scale = sc.config.analysis.kernel_receiver_scale;
    let center = sc.model.scene.center();
    let mut min_range = f64::INFINITY;
    for rx in &sc.model.receivers {
        let rx = rx.scaled(scale).map_err(|e| e.to_string())?;
        let [a, b] = rx.interval();
        for i in 0..=16 {
            let p = rx
                .position(a + (b - a) * i as f64 / 16.0)
                .map_err(|e| e.to_string())?;
            min_range = min_range.min((p - center).norm());
        }
    }
    let extent = sc.model.scene.extent();
    if min_range < 100.0 * extent {
        return Err(format!(
            "receiver range {min_range:.0} m is under 100x scene size {extent} m"
        ));
    }
    let quads = sample_quads(ctx.num_pixels(), 400, sc.config.seed).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for q in quads.iter().filter(|q| ctx.classify(q) == QuadClass::I1) {
        let e = KernelEstimate::compute(&ctx, q).map_err(|e| e.to_string())?;
        worst = worst.max(e.relative_error().unwrap_or(f64::INFINITY));
        n += 1;
    }
    let msg = format!(
        "{n} I1 quads, range {:.0} km (scene {extent} m), worst relative error {:.3}%",
        min_range / 1e3,
        100.0 * worst
    );
    if n >= 200 && worst <= 0.02 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c4_kernel_scaling(sc: &Scenario) -> Check {
    let a = &sc.config.analysis;
    let model = sc.model.with_amplitude(AmplitudeMode::GeometricSpreading);
    let base = KernelContext::from_model(&model, 1.0).map_err(|e| e.to_string())?;
    let p = a.kernel_num_slow_times;
    let lo = base
        .with_resolution(a.kernel_num_frequencies, p)
        .map_err(|e| e.to_string())?;
    // Four times the carrier needs four times the slow-time density to
    // resolve the faster phase.
    let hi = base
        .with_center_frequency(4.0 * base.sampling().center_frequency())
        .and_then(|c| c.with_resolution(a.kernel_num_frequencies, 4 * p))
        .map_err(|e| e.to_string())?;
    let (clo, chi) = (closed_form_constant(&lo), closed_form_constant(&hi));
    let quads: Vec<_> = sample_quads(base.num_pixels(), 100, sc.config.seed)
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter(|q| base.classify(q) == QuadClass::I2)
        .collect();
    let (mut blo, mut bhi, mut alo, mut ahi) = (0.0, 0.0, 0.0, 0.0);
    for q in &quads {
        let el = KernelEstimate::compute(&lo, q).map_err(|e| e.to_string())?;
        let eh = KernelEstimate::compute(&hi, q).map_err(|e| e.to_string())?;
        blo += (el.brute_force.norm() / clo).powi(2);
        bhi += (eh.brute_force.norm() / chi).powi(2);
        alo += (el.asymptotic.norm() / clo).powi(2);
        ahi += (eh.asymptotic.norm() / chi).powi(2);
    }
    let brute = (bhi / blo).sqrt();
    let asym = (ahi / alo).sqrt();
    let msg = format!(
        "{} I2 quads, RMS |I2|/I1 ratio at 4x carrier: brute force {brute:.4}, asymptotic {asym:.4} (target 0.5 +/- 25%)",
        quads.len()
    );
    if quads.len() >= 50 && (0.375..=0.625).contains(&brute) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

fn c5_projection() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut idem, mut cert): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let h = random_hermitian(&mut rng, 8);
        let x = psd_project(&h).map_err(|e| e.to_string())?;
        let xx = psd_project(&x).map_err(|e| e.to_string())?;
        idem = idem.max((&xx - &x).norm() / x.norm().max(1.0));
        // Nearest-point certificate: X ⪰ 0, H − X ⪯ 0 and ⟨H − X, X⟩ = 0.
        let r = &h - &x;
        let min_x = *linalg::hermitian_eigen(&x)
            .map_err(|e| e.to_string())?
            .values
            .last()
            .unwrap();
        let max_r = linalg::hermitian_eigen(&r)
            .map_err(|e| e.to_string())?
            .values[0];
        let inner = r
            .iter()
            .zip(x.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm();
        let scale = h.norm();
        cert = cert
            .max((-min_x).max(0.0) / scale)
            .max(max_r.max(0.0) / scale)
            .max(inner / (scale * scale));
    }
    let msg = format!("100 matrices: idempotence {idem:.2e}, optimality certificate {cert:.2e}");
    if idem <= 1e-10 && cert <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c5_adjoint(sc: &Scenario) -> Check {
    let op =
        assemble_forward(&sc.model, Representation::MatrixFree, 0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x: Vec<C64> = (0..op.cols())
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let y: Vec<C64> = (0..op.rows())
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let fx = op.apply_forward(&x).map_err(|e| e.to_string())?;
        let fy = op.apply_adjoint(&y).map_err(|e| e.to_string())?;
        let lhs = linalg::inner(&y, &fx);
        let rhs = linalg::inner(&fy, &x);
        let scale = linalg::norm2(&y) * linalg::norm2(&fx) + linalg::norm2(&fy) * linalg::norm2(&x);
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    let msg = format!(
        "{}x{} operator, 100 probes, worst relative defect {worst:.2e}",
        op.rows(),
        op.cols()
    );
    if worst <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c5_zero_start(sc: &Scenario) -> Check {
    let op =
        assemble_forward(&sc.model, Representation::MatrixFree, 0).map_err(|e| e.to_string())?;
    let data = lrmr_sar_cli::experiment::simulate(sc).map_err(|e| e.to_string())?;
    let mut state = SolverState::new(&op);
    uzawa_step(&mut state, &op, &data.values, 1e-5, sc.config.solver.lambda)
        .map_err(|e| e.to_string())?;
    let rho = state.iterate.to_matrix();
    let nonzero = rho.iter().filter(|z| **z != linalg::ZERO).count();
    let msg = format!("rho0 has {nonzero} nonzero entries");
    if nonzero == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

struct HistoryRow {
    iteration: usize,
    trace: f64,
    rank: usize,
    data_error: f64,
}

fn read_history(path: &Path) -> Result<Vec<HistoryRow>, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let p = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| format!("{}: {e}", path.display()))
        };
        out.push(HistoryRow {
            iteration: p(0)? as usize,
            trace: p(1)?,
            rank: p(2)? as usize,
            data_error: p(3)?,
        });
    }
    Ok(out)
}

fn c6_convergence(dir: &Path) -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for (fc, mode) in TABLE2_CELLS
        .iter()
        .filter(|(_, m)| *m == CorrelationMode::Cross)
    {
        let h = read_history(&dir.join(cell_dir_name(*fc, *mode)).join("history.csv"))?;
        let mut worst_rise: f64 = 1.0;
        for (i, a) in h.iter().enumerate() {
            for b in h[i + 1..]
                .iter()
                .take_while(|b| b.iteration - a.iteration <= 100)
            {
                worst_rise = worst_rise.max(b.data_error / a.data_error);
            }
        }
        let trace_ok = h.windows(2).all(|w| w[1].trace >= w[0].trace);
        // The first iterates are zero until Fᴴξ clears λ; from the first
        // nonzero iterate on the rank must stay at one.
        let first = h.iter().position(|r| r.rank > 0);
        let onset = first.map(|i| h[i].iteration);
        let rank_ok = first.is_some_and(|i| {
            h[..i].iter().all(|r| r.rank == 0) && h[i..].iter().all(|r| r.rank == 1)
        });
        ok &= worst_rise <= 1.01 && trace_ok && rank_ok;
        notes.push(format!(
            "{:.0} MHz: max 100-iteration E_d rise {:.4}, trace non-decreasing {trace_ok}, rank 1 from iteration {} on {rank_ok}",
            fc / 1e6,
            worst_rise,
            onset.map_or("never".into(), |i| i.to_string())
        ));
    }
    let msg = notes.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c7_ric(cfg: &ScenarioConfig) -> Check {
    let samples = cfg.analysis.ric_samples.max(200);
    let op_for = |fc: f64, mode: CorrelationMode| -> Result<_, String> {
        let sc = Scenario::new(cfg.clone().with_center_frequency_hz(fc).with_mode(mode))
            .map_err(|e| e.to_string())?;
        assemble_forward(&sc.model, Representation::MatrixFree, 0).map_err(|e| e.to_string())
    };
    let probe = |fc: f64, mode: CorrelationMode, kind: RicProbeKind| {
        empirical_ric(&op_for(fc, mode)?, 1, samples, cfg.seed, kind).map_err(|e| e.to_string())
    };
    let d_lo = probe(760e6, CorrelationMode::Cross, RicProbeKind::Psd)?.delta_estimate;
    let d_hi = probe(2e9, CorrelationMode::Cross, RicProbeKind::Psd)?.delta_estimate;
    let inflation = |mode| -> Result<f64, String> {
        let psd = probe(2e9, mode, RicProbeKind::Psd)?;
        let tf = probe(2e9, mode, RicProbeKind::TraceFree)?;
        Ok(trace_inflation(&psd, &tf))
    };
    let cross = inflation(CorrelationMode::Cross)?;
    let auto = inflation(CorrelationMode::Auto)?;
    let envelope = 2f64.sqrt();
    let ok = d_hi < d_lo && (auto - envelope).abs() / envelope <= 0.1 && cross < auto;
    let msg = format!(
        "delta_1 {d_lo:.4} (760 MHz) vs {d_hi:.4} (2 GHz); trace inflation auto {auto:.3} (sqrt 2 = {envelope:.3}), cross {cross:.3}"
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn c8_determinism(first: &Path, second: &Path) -> Check {
    let a = files_under(first);
    let b = files_under(second);
    if a != b {
        return Err("runs produced different file sets".into());
    }
    let csvs = a
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .count();
    let differing: Vec<_> = a
        .iter()
        .filter(|p| fs::read(first.join(p)).ok() != fs::read(second.join(p)).ok())
        .map(|p| p.display().to_string())
        .collect();
    let msg = format!(
        "{} files ({csvs} CSV) compared, {} differ {:?}",
        a.len(),
        differing.len(),
        differing
    );
    if differing.is_empty() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn report(results: &mut Vec<bool>, name: &str, started: Instant, check: Check) {
    let secs = started.elapsed().as_secs_f64();
    match check {
        Ok(m) => {
            println!("PASS {name}: {m} [{secs:.1} s]");
            results.push(true);
        }
        Err(m) => {
            println!("FAIL {name}: {m} [{secs:.1} s]");
            results.push(false);
        }
    }
}

fn main() -> ExitCode {
    let mut cfg = ScenarioConfig::reference();
    cfg.seed = 7;
    let sc = Scenario::new(cfg.clone()).expect("reference scenario builds");
    let tmp = tempfile::tempdir().expect("temp dir");
    let (run1, run2) = (tmp.path().join("run1"), tmp.path().join("run2"));
    let mut results = Vec::new();

    let t = Instant::now();
    let table = run_table(&run1);
    let (c1, c2) = match &table {
        Ok(rows) => (c1_cross_recovery(rows), c2_auto_failure(rows)),
        Err(e) => (Err(e.clone()), Err(e.clone())),
    };
    report(&mut results, "1 cross-correlation recovery", t, c1);
    report(&mut results, "2 auto-correlation failure", t, c2);
    let t = Instant::now();
    report(&mut results, "3 resolution bound", t, c3_resolution_bound());
    let t = Instant::now();
    report(
        &mut results,
        "4a I1 closed form",
        t,
        c4_kernel_diagonal(&sc),
    );
    let t = Instant::now();
    report(
        &mut results,
        "4b I2 carrier scaling",
        t,
        c4_kernel_scaling(&sc),
    );
    let t = Instant::now();
    report(&mut results, "5a PSD projection", t, c5_projection());
    let t = Instant::now();
    report(&mut results, "5b adjoint identity", t, c5_adjoint(&sc));
    let t = Instant::now();
    report(&mut results, "5c zero start", t, c5_zero_start(&sc));
    let t = Instant::now();
    let c6 = match &table {
        Ok(_) => c6_convergence(&run1),
        Err(e) => Err(e.clone()),
    };
    report(&mut results, "6 convergence behaviour", t, c6);
    let t = Instant::now();
    report(&mut results, "7 empirical RIC trend", t, c7_ric(&cfg));
    let t = Instant::now();
    let c8 = run_table(&run2).and_then(|_| c8_determinism(&run1, &run2));
    report(&mut results, "8 determinism", t, c8);

    let passed = results.iter().filter(|r| **r).count();
    println!("{passed}/{} acceptance checks passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
