//! `smoothfix` command-line front end.
//!
//! Exit codes: 0 on success, 1 for invalid arguments or configuration,
//! 2 when a computation fails.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{self, AlphaOptions, ReportOptions};
use crate::branching::{self, DEFAULT_NODE_CAP};
use crate::config::load_model;
use crate::density::{self, DensityEstimate, KdeOptions};
use crate::error::{Error, Result};
use crate::fourier::{self, ScanTarget};
use crate::io::{self, Manifest};
use crate::model::WeightModel;
use crate::popdyn::{self, GenerationSummary, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "smoothfix", version, about = "Sampling and Fourier diagnostics for complex smoothing equations")]
struct Cli {
    /// Upper bound on worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moment function, exponent α and assumption report.
    Analyze(AnalyzeArgs),
    /// Population-dynamics sample of the fixed point.
    Sample(SampleArgs),
    /// Means of the martingales W_n and Z_n over independent trajectories.
    Martingale(MartingaleArgs),
    /// Empirical characteristic function (or its derivatives) on a polar grid.
    Ecf(EcfArgs),
    /// Kernel density estimate of a pool.
    Density(DensityArgs),
    /// Sample and estimate densities for the reference examples.
    Figures(FiguresArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// ε in the log_+^{2+ε} moment condition.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Relative change threshold of the finiteness heuristic.
    #[arg(long, default_value_t = 0.05)]
    stabilization: f64,
    #[arg(long, default_value_t = 10.0)]
    s_max: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pool_size: usize,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "pool.csv")]
    out: PathBuf,
    /// Order p of the tracked moment mean |X|^p.
    #[arg(long, default_value_t = 1.0)]
    moment_p: f64,
}

#[derive(Debug, Args)]
struct MartingaleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "traj.csv")]
    out: PathBuf,
    /// Exponent used for W_n; defaults to the root of m(s) = 1.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
}

#[derive(Debug, Args)]
struct EcfArgs {
    #[arg(long)]
    pool: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,50")]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    angles: usize,
    /// 0: φ̂, 1: ∂_ξ̄ φ̂, 2: ∂²_ξ̄ φ̂.
    #[arg(long, default_value_t = 0)]
    order: u8,
    #[arg(long, default_value = "scan.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DensityArgs {
    #[arg(long)]
    pool: PathBuf,
    /// Nodes per axis.
    #[arg(long, default_value_t = density::DEFAULT_NODES)]
    grid: usize,
    /// Bandwidths `hx,hy`; Silverman-type default otherwise.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    bandwidth: Option<Vec<f64>>,
    #[arg(long, default_value = "density.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FiguresArgs {
    /// Desk scale (n = 10^4, K = 50) instead of the full protocol.
    #[arg(long)]
    desk: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "figures")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = density::DEFAULT_NODES)]
    grid: usize,
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::invalid("seed", "seed required (pass --seed N)"))
}

fn finish(mut manifest: Manifest, primary: &Path) -> Result<()> {
    let path = io::sidecar(primary, "manifest.json");
    manifest.output(primary);
    io::write_json(&path, &manifest)
}

fn analyze(args: &AnalyzeArgs, argv: &[String]) -> Result<()> {
    let seed = require_seed(args.seed)?;
    let model = load_model(&args.model)?;
    let opts = ReportOptions {
        samples: args.samples,
        seed,
        epsilon: args.epsilon,
        stabilization: args.stabilization,
        s_max: args.s_max,
        tol: args.tol,
        ..Default::default()
    };
    let report = analysis::check_assumptions(&model, &opts)?;
    io::write_json(&args.out, &report)?;
    finish(Manifest::new("analyze", argv, Some(seed), Some(model.fingerprint())), &args.out)
}

fn sample(args: &SampleArgs, argv: &[String]) -> Result<()> {
    let seed = require_seed(args.seed)?;
    let model = load_model(&args.model)?;
    let opts = RunOptions { moment_p: args.moment_p, ..Default::default() };
    let run = popdyn::run(&model, args.pool_size, args.iterations, seed, &opts)?;
    io::write_pool_csv(&args.out, run.pool.samples())?;
    let summary = io::sidecar(&args.out, "summary.json");
    io::write_json(&summary, &run.summaries)?;
    let mut manifest = Manifest::new("sample", argv, Some(seed), Some(model.fingerprint()));
    manifest.output(&summary);
    finish(manifest, &args.out)
}

fn martingale(args: &MartingaleArgs, argv: &[String]) -> Result<()> {
    let seed = require_seed(args.seed)?;
    let model = load_model(&args.model)?;
    let alpha = match args.alpha {
        Some(a) => a,
        None => {
            analysis::find_alpha(&model, &AlphaOptions::default())?
                .ok_or_else(|| Error::invalid("alpha", "m(s) = 1 has no root on (0, 10]; pass --alpha"))?
                .alpha
        }
    };
    let means = branching::estimate_martingale_mean(&model, alpha, args.depth, args.reps, seed, args.node_cap)?;
    io::write_martingale_csv(&args.out, &means)?;
    let mut manifest = Manifest::new("martingale", argv, Some(seed), Some(model.fingerprint()));
    manifest.note = Some(format!("alpha = {alpha:?}"));
    finish(manifest, &args.out)
}

fn ecf(args: &EcfArgs, argv: &[String]) -> Result<()> {
    let pool = io::read_pool_csv(&args.pool)?;
    let target = ScanTarget::from_order(args.order)?;
    let mut manifest = Manifest::new("ecf", argv, None, None);
    let scan = if args.order > 0 && args.radii.last() >= Some(&(10.0 * args.radii[0])) {
        match fourier::derivative_decay_scan(pool.samples(), &args.radii, args.angles, args.order) {
            Ok(fit) => {
                let path = io::sidecar(&args.out, "fit.json");
                io::write_json(
                    &path,
                    &serde_json::json!({
                        "order": args.order,
                        "slope": fit.slope,
                        "intercept": fit.intercept,
                        "used_radii": fit.used_radii,
                        "noise_floor": fit.noise_floor,
                        "max_abs": fit.scan.max_abs,
                    }),
                )?;
                manifest.output(&path);
                fit.scan
            }
            Err(Error::InsufficientSignal { usable }) => {
                manifest.note = Some(format!("no decay fit: only {usable} radii above the noise floor"));
                fourier::scan(pool.samples(), &args.radii, args.angles, target)?
            }
            Err(e) => return Err(e),
        }
    } else {
        fourier::scan(pool.samples(), &args.radii, args.angles, target)?
    };
    io::write_scan_csv(&args.out, &scan)?;
    finish(manifest, &args.out)
}

fn density_cmd(args: &DensityArgs, argv: &[String]) -> Result<()> {
    let pool = io::read_pool_csv(&args.pool)?;
    let opts = KdeOptions {
        bandwidth: args.bandwidth.as_ref().map(|h| (h[0], h[1])),
        nodes: Some(args.grid),
        ..Default::default()
    };
    let est = density::kde2d(pool.samples(), &opts)?;
    io::write_density_csv(&args.out, &est)?;
    let mut manifest = Manifest::new("density", argv, None, None);
    if let DensityEstimate::Line { component, .. } = &est {
        manifest.note = Some(format!("degenerate pool: 1D estimate of the {component:?} component"));
    }
    finish(manifest, &args.out)
}

/// One reference example: a weight model and its full-scale protocol.
pub struct FigureCase {
    pub name: &'static str,
    pub model: WeightModel,
    pub pool_size: usize,
    pub iterations: usize,
}

/// Biggins λ = 2.15·e^{2πi/23} and λ = e^{iπ/4} (n = 10^6), cyclic urns
/// b ∈ {7, 8, 9, 12} (n = 10^5); 100 steps each. Desk scale: n = 10^4, 50 steps.
pub fn figure_cases(desk: bool) -> Result<Vec<FigureCase>> {
    let (big, urn, steps) = if desk { (10_000, 10_000, 50) } else { (1_000_000, 100_000, 100) };
    let mut cases = vec![
        FigureCase {
            name: "biggins_lambda_2.15_e2pii_23",
            model: WeightModel::biggins(Complex64::from_polar(2.15, 2.0 * PI / 23.0))?,
            pool_size: big,
            iterations: steps,
        },
        FigureCase {
            name: "biggins_lambda_e_pii_4",
            model: WeightModel::biggins(Complex64::from_polar(1.0, PI / 4.0))?,
            pool_size: big,
            iterations: steps,
        },
    ];
    for (name, b) in [("polya_b7", 7), ("polya_b8", 8), ("polya_b9", 9), ("polya_b12", 12)] {
        cases.push(FigureCase { name, model: WeightModel::polya(b)?, pool_size: urn, iterations: steps });
    }
    Ok(cases)
}

#[derive(Serialize)]
struct FigureRecord {
    name: &'static str,
    model: String,
    pool_size: usize,
    iterations: usize,
    density: String,
    summary: String,
    final_generation: GenerationSummary,
}

fn figures(args: &FiguresArgs, argv: &[String]) -> Result<()> {
    let seed = require_seed(args.seed)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let mut records = Vec::new();
    for case in figure_cases(args.desk)? {
        let run = popdyn::run(&case.model, case.pool_size, case.iterations, seed, &RunOptions::default())?;
        let est = density::kde2d(run.pool.samples(), &KdeOptions { nodes: Some(args.grid), ..Default::default() })?;
        let density_path = args.out_dir.join(format!("{}.density.csv", case.name));
        let summary_path = args.out_dir.join(format!("{}.summary.json", case.name));
        io::write_density_csv(&density_path, &est)?;
        io::write_json(&summary_path, &run.summaries)?;
        records.push(FigureRecord {
            name: case.name,
            model: case.model.fingerprint(),
            pool_size: case.pool_size,
            iterations: case.iterations,
            density: density_path.display().to_string(),
            summary: summary_path.display().to_string(),
            final_generation: run.summaries.last().cloned().expect("at least one generation"),
        });
    }
    let index = args.out_dir.join("figures.json");
    io::write_json(&index, &records)?;
    let mut manifest = Manifest::new("figures", argv, Some(seed), None);
    for r in &records {
        manifest.output(Path::new(&r.density));
    }
    finish(manifest, &index)
}

fn dispatch(cli: &Cli, argv: &[String]) -> Result<()> {
    match &cli.command {
        Command::Analyze(a) => analyze(a, argv),
        Command::Sample(a) => sample(a, argv),
        Command::Martingale(a) => martingale(a, argv),
        Command::Ecf(a) => ecf(a, argv),
        Command::Density(a) => density_cmd(a, argv),
        Command::Figures(a) => figures(a, argv),
    }
}

/// Parses `args` (including the program name), runs the subcommand and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let threads = cli.threads.unwrap_or(0);
    let result = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| dispatch(&cli, &argv)),
        Err(e) => Err(Error::invalid("threads", e.to_string())),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("smoothfix: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
