use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use covertree::harness::{
    emit_json, file_seeds, fit_mixture, fit_tail, merge, report_shift, report_stability, simulate, write_plot,
    Envelope, Mixing, RunConfig, SampleKind,
};
use covertree::verify::{run_suite, Suite};
use covertree::{Error, Result};

#[derive(Parser)]
#[command(name = "covertree", version, about = "Cover times of random walks on binary trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML or JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file (JSON reports go to stdout without it).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw sample rows into a CSV file, keeping rows already present.
    Simulate {
        kind: SampleKind,
        /// Tree depth (BRW depth for brw_xprime).
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        ell: Option<u32>,
        #[arg(long)]
        z: Option<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        /// First replica index.
        #[arg(long)]
        start: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        excursion_cap: Option<u64>,
        /// Comma-separated y grid for gamma_tilde.
        #[arg(long, value_delimiter = ',')]
        ys: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Run check suites (all of them by default).
    Verify {
        suites: Vec<Suite>,
        /// Excursion depths for the moment suite, as `lo..hi`.
        #[arg(long)]
        j: Option<String>,
        /// Single excursions for the moment suite.
        #[arg(long)]
        excursions: Option<f64>,
        /// Largest BRW depth of the identity suite.
        #[arg(long)]
        k: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    #[command(subcommand)]
    Fit(Fit),
    #[command(subcommand)]
    Report(Report),
    /// Combine sample files with disjoint keys.
    Merge {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum Fit {
    /// Tail fit `P(Y > z) ≈ α z e^{−c z}` of a cover, tstar or `value` file.
    Tail {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Gumbel mixture fit against a brw_xprime file.
    Mixture {
        input: PathBuf,
        #[arg(long)]
        xprime: PathBuf,
        /// `xprime` or `shifted`; defaults by the input kind.
        #[arg(long)]
        mixing: Option<Mixing>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum Report {
    /// Consecutive KS distances between depths.
    Stability {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Cover minus a standard normal against t*.
    Shift {
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        tstar: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Tidy `y, ecdf, mixture_cdf` CSV for plotting.
    Plot {
        input: PathBuf,
        #[arg(long)]
        xprime: PathBuf,
        #[arg(long)]
        mixing: Option<Mixing>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
        cfg.verify.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
        cfg.verify.workers = w;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    Ok(cfg)
}

fn parse_range(s: &str) -> Result<(u32, u32)> {
    let bad = || Error::Config(format!("expected lo..hi, got {s:?}"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let hi = hi.trim_start_matches('=');
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    seed: u64,
    suites: Vec<covertree::verify::SuiteReport>,
}

/// Writes `report` and turns its verdict into an exit status.
fn finish<T: Serialize>(report: &T, passed: bool, out: Option<&std::path::Path>) -> Result<u8> {
    emit_json(report, out)?;
    Ok(if passed { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Simulate { kind, n, ell, z, replicas, start, delta, excursion_cap, ys, common } => {
            let mut cfg = load(&common)?;
            cfg.kind = Some(kind);
            cfg.n = n.or(cfg.n);
            cfg.ell = ell.or(cfg.ell);
            cfg.z = z.or(cfg.z);
            cfg.replicas = replicas.unwrap_or(cfg.replicas);
            cfg.start = start.unwrap_or(cfg.start);
            cfg.delta = delta.unwrap_or(cfg.delta);
            cfg.excursion_cap = excursion_cap.unwrap_or(cfg.excursion_cap);
            if let Some(ys) = ys {
                cfg.ys = ys;
            }
            let summary = simulate(kind, &cfg)?;
            finish(&summary, true, None)
        }
        Command::Verify { suites, j, excursions, k, common } => {
            let cfg = load(&common)?;
            let mut v = cfg.verify;
            if let Some(j) = j {
                (v.moments.j_min, v.moments.j_max) = parse_range(&j)?;
            }
            if let Some(e) = excursions {
                v.moments.excursions = e as u64;
            }
            if let Some(k) = k {
                v.identities.max_k = k;
            }
            let suites = if suites.is_empty() { Suite::ALL.to_vec() } else { suites };
            let reports = suites.iter().map(|&s| run_suite(s, &v)).collect::<Result<Vec<_>>>()?;
            let passed = reports.iter().all(|r| r.passed);
            finish(&VerifyReport { passed, seed: v.seed, suites: reports }, passed, common.out.as_deref())
        }
        Command::Fit(Fit::Tail { input, common }) => {
            let cfg = load(&common)?;
            let r = fit_tail(&input, &cfg)?;
            let env = Envelope {
                test: "tail",
                statistic: r.fit.c,
                p_value: None,
                passed: r.passed,
                config: &cfg.thresholds,
                seeds: file_seeds(&[&input]),
                detail: &r,
            };
            finish(&env, r.passed, common.out.as_deref())
        }
        Command::Fit(Fit::Mixture { input, xprime, mixing, common }) => {
            let cfg = load(&common)?;
            let r = fit_mixture(&input, &xprime, mixing, &cfg)?;
            let env = Envelope {
                test: "mixture",
                statistic: r.fit.ks,
                p_value: None,
                passed: r.passed,
                config: &cfg.thresholds,
                seeds: file_seeds(&[&input, &xprime]),
                detail: &r,
            };
            finish(&env, r.passed, common.out.as_deref())
        }
        Command::Report(Report::Stability { inputs, common }) => {
            let cfg = load(&common)?;
            let r = report_stability(&inputs, &cfg)?;
            let worst = r.rows.iter().max_by(|a, b| a.statistic.total_cmp(&b.statistic));
            let env = Envelope {
                test: "stability",
                statistic: worst.map_or(0.0, |w| w.statistic),
                p_value: worst.map(|w| w.p_value),
                passed: r.passed,
                config: &cfg.thresholds,
                seeds: file_seeds(&inputs.iter().map(|p| p.as_path()).collect::<Vec<_>>()),
                detail: &r,
            };
            finish(&env, r.passed, common.out.as_deref())
        }
        Command::Report(Report::Shift { cover, tstar, common }) => {
            let cfg = load(&common)?;
            let r = report_shift(&cover, &tstar, &cfg)?;
            let env = Envelope {
                test: "shift",
                statistic: r.report.statistic,
                p_value: Some(r.report.p_value),
                passed: r.passed,
                config: &cfg.thresholds,
                seeds: file_seeds(&[&cover, &tstar]),
                detail: &r,
            };
            finish(&env, r.passed, common.out.as_deref())
        }
        Command::Report(Report::Plot { input, xprime, mixing, points, out }) => {
            let fit = write_plot(&input, &xprime, mixing, points, &out)?;
            finish(&fit, true, None)
        }
        Command::Merge { inputs, out } => {
            let rows = merge(&inputs, &out)?;
            finish(&serde_json::json!({ "out": out, "rows": rows }), true, None)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("covertree: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
