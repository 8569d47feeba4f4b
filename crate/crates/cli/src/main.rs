use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use lrmr_sar::forward::CorrelationMode;
use lrmr_sar_cli::config::ScenarioConfig;
use lrmr_sar_cli::experiment::{self, Scenario};

/// Passive SAR low-rank recovery experiments.
#[derive(Debug, Parser)]
#[command(name = "lrmr-sar", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Scenario JSON; the bundled reference scenario when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides `output.directory`.
    #[arg(long, global = true, value_name = "PATH")]
    output_dir: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Overrides the correlation mode.
    #[arg(long, global = true, value_name = "cross|auto")]
    mode: Option<CorrelationMode>,

    /// Overrides the center frequency, in Hz.
    #[arg(long, global = true, value_name = "HZ")]
    fc: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate correlated data and write it as CSV.
    Simulate,
    /// Simulate, reconstruct and report metrics.
    Reconstruct {
        /// Exit with status 1 unless the exact-recovery criterion is met.
        #[arg(long)]
        expect_success: bool,
    },
    /// Theory checks.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Run the four frequency/mode cells and write `table2.csv`.
    #[command(name = "reproduce-table2")]
    ReproduceTable2,
    /// Print the effective config as JSON.
    ShowConfig,
}

#[derive(Debug, Subcommand)]
enum Analyze {
    /// Resolution bound and condition check.
    Bound,
    /// Brute-force vs. asymptotic kernel values for sampled index quads.
    Kernels {
        /// Number of quads (half of them diagonal); default from config.
        #[arg(long)]
        quads: Option<usize>,
    },
    /// Empirical restricted-isometry probes.
    Ric {
        /// Probe rank; repeatable. Default from config.
        #[arg(long = "rank")]
        ranks: Vec<usize>,
        /// Probes per rank; default from config.
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn load_config(g: &GlobalArgs) -> lrmr_sar::Result<ScenarioConfig> {
    let mut cfg = match &g.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::reference(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = g.mode {
        cfg = cfg.with_mode(mode);
    }
    if let Some(fc) = g.fc {
        cfg = cfg.with_center_frequency_hz(fc);
    }
    if let Some(dir) = &g.output_dir {
        cfg.output.directory = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> lrmr_sar::Result<ExitCode> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| lrmr_sar::Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(&cli.global)?;
    let dir = cfg.output.directory.clone();
    match cli.command {
        Command::ShowConfig => {
            println!("{}", serde_json::to_string_pretty(&cfg)?);
        }
        Command::Simulate => {
            experiment::run_simulation(&Scenario::new(cfg)?, &dir)?;
        }
        Command::Reconstruct { expect_success } => {
            let summary = experiment::run_reconstruction(&Scenario::new(cfg)?, &dir)?;
            println!("{}", serde_json::to_string_pretty(&summary.metrics)?);
            if expect_success && !summary.metrics.success {
                error!("exact-recovery criterion not met");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Analyze(Analyze::Bound) => {
            let report = experiment::run_bound(&Scenario::new(cfg)?, &dir)?;
            for r in &report.reports {
                println!(
                    "fc = {:.4e} Hz: bound {:.4} m, spacing/bound {:.2} ({})",
                    r.center_frequency_hz,
                    r.bound_m,
                    r.ratio,
                    if r.pass { "pass" } else { "fail" }
                );
            }
        }
        Command::Analyze(Analyze::Kernels { quads }) => {
            let n = quads.unwrap_or(cfg.analysis.num_quads);
            let est = experiment::run_kernels(&Scenario::new(cfg)?, &dir, n)?;
            println!(
                "{} kernel estimates written to {}",
                est.len(),
                dir.join("kernels.csv").display()
            );
        }
        Command::Analyze(Analyze::Ric { ranks, samples }) => {
            let ranks = if ranks.is_empty() {
                cfg.analysis.ric_ranks.clone()
            } else {
                ranks
            };
            let samples = samples.unwrap_or(cfg.analysis.ric_samples);
            let report = experiment::run_ric(&Scenario::new(cfg)?, &dir, &ranks, samples)?;
            for p in &report.probes {
                println!(
                    "rank {}: delta {:.4}, trace inflation {:.4}",
                    p.rank, p.psd.delta_estimate, p.trace_inflation
                );
            }
        }
        Command::ReproduceTable2 => {
            let rows = experiment::reproduce_table2(&cfg, &dir)?;
            println!("f_c_hz,mode,trace,rank,E_d,E_rho,E_rho_tilde,success");
            for r in rows {
                let f = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4e}"));
                println!(
                    "{:.3e},{},{:.4},{},{},{},{},{}",
                    r.center_frequency_hz,
                    r.mode,
                    r.trace,
                    r.rank,
                    f(r.data_error),
                    f(r.kronecker_error),
                    f(r.reflectivity_error),
                    r.success
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
