//! `feedwalk`: batch driver for feed-forward quantum walk simulations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use feedwalk_cli::config::{Initial, Model, RunConfig};
use feedwalk_cli::error::{io_err, CliError};
use feedwalk_cli::run::run_evolution;
use feedwalk_cli::sweep::{run_sweep, write_sweep_csv};
use feedwalk_cli::validate::run_pme_validation;
use feedwalk_core::analysis::{fit_q_gaussian, residual_spectrum, running_average};
use feedwalk_core::snapshot::read_distribution;

#[derive(Parser)]
#[command(
    name = "feedwalk",
    version,
    about = "Feed-forward quantum walk simulations, sweeps, fits and PDE validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the unitary walk (feed-forward or homogeneous coin).
    Walk(WalkArgs),
    /// Evolve the associated Markov model.
    Markov(EvolutionArgs),
    /// Evolve a self-similar profile under one of the PDE solvers.
    Pme(PmeArgs),
    /// Fit a q-Gaussian to a stored distribution.
    Fit(FitArgs),
    /// Power spectrum of the residual against a fixed-q fit.
    Spectrum(SpectrumArgs),
    /// Initial-state sweep over the (beta, gamma) family.
    Sweep(SweepArgs),
    /// Self-similarity and approximation checks of the PDE solvers.
    ValidatePme(ValidatePmeArgs),
}

#[derive(Args)]
struct EvolutionArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of steps to evolve.
    #[arg(long)]
    steps: Option<u64>,
    /// Initial state: default, single-site, beta-gamma:<b>,<g> or file:<path>.
    #[arg(long, value_parser = Initial::parse_flag)]
    initial: Option<Initial>,
    /// Edge-trimming threshold.
    #[arg(long)]
    eps_trunc: Option<f64>,
    /// Log-spaced measurements per decade of t.
    #[arg(long)]
    checkpoints_per_decade: Option<u32>,
    /// Running-average window (odd) used before width fits.
    #[arg(long)]
    smooth_window: Option<usize>,
    /// q of the width fits at checkpoints (model default when omitted).
    #[arg(long)]
    q_fixed: Option<f64>,
    /// Interval between resumable checkpoints (0 disables).
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Write the full distribution at every scheduled measurement.
    #[arg(long)]
    snapshots: bool,
    /// Resume from a checkpoint file written by an earlier run.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WalkArgs {
    #[command(flatten)]
    evolution: EvolutionArgs,
    /// Coin: feed-forward (default) or homogeneous.
    #[arg(long, value_enum, default_value = "feed-forward")]
    coin: WalkCoin,
    /// Coin angle in radians (homogeneous coin only).
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum WalkCoin {
    FeedForward,
    Homogeneous,
}

#[derive(Args)]
struct PmeArgs {
    #[command(flatten)]
    evolution: EvolutionArgs,
    /// Equation to step: pme or nlpde.
    #[arg(long, value_enum, default_value = "pme")]
    equation: PmeEquation,
    /// Porosity exponent m in [1, 3).
    #[arg(long)]
    m: Option<f64>,
    /// Initial self-similar width.
    #[arg(long)]
    sigma0: Option<f64>,
    /// Grid spacing.
    #[arg(long)]
    dx: Option<f64>,
    /// Decades of internal time to cover.
    #[arg(long)]
    decades: Option<f64>,
    /// Safety factor below the explicit stability limit.
    #[arg(long)]
    stability_factor: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum PmeEquation {
    Pme,
    Nlpde,
}

#[derive(Args)]
struct FitArgs {
    /// Distribution snapshot to fit.
    #[arg(long, short)]
    input: PathBuf,
    /// Fix q instead of fitting it.
    #[arg(long)]
    q: Option<f64>,
    /// Running-average window applied before the fit (odd; 1 = none).
    #[arg(long, default_value_t = 1)]
    smooth_window: usize,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Distribution snapshot to analyze.
    #[arg(long, short)]
    input: PathBuf,
    /// q of the reference fit.
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    /// Running-average window used for the reference fit (odd; 1 = none).
    #[arg(long, default_value_t = 11)]
    smooth_window: usize,
    /// Directory for spectrum.csv (printed summary only when omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid points per axis.
    #[arg(long, default_value_t = 15)]
    resolution: usize,
    /// Earlier snapshot time.
    #[arg(long, default_value_t = 100_000)]
    t_a: u64,
    /// Later snapshot time (the run length).
    #[arg(long, default_value_t = 1_000_000)]
    t_b: u64,
    /// Edge-trimming threshold.
    #[arg(long, default_value_t = 1e-30)]
    eps_trunc: f64,
    /// Running-average window before the joint fits.
    #[arg(long, default_value_t = 11)]
    smooth_window: usize,
    /// Output directory for sweep.csv.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidatePmeArgs {
    /// Porosity exponent m in [1, 3).
    #[arg(long, default_value_t = 2.0)]
    m: f64,
    /// Decades of internal time to cover.
    #[arg(long, default_value_t = 1.0)]
    decades: f64,
    /// Output directory for report.csv.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_worker_pool();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.to_string() }
            });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}

/// Worker pool size for sweeps, from FEEDWALK_THREADS when set.
fn init_worker_pool() {
    if let Ok(n) = std::env::var("FEEDWALK_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Walk(args) => {
            let model = match args.coin {
                WalkCoin::FeedForward => Model::FeedForward,
                WalkCoin::Homogeneous => Model::Homogeneous,
            };
            let mut cfg = resolve_config(&args.evolution, model)?;
            if let Some(theta) = args.theta {
                cfg.theta = theta;
            }
            run_evolution(&cfg, args.evolution.resume.as_deref())?;
            println!("run complete: {}", cfg.out_dir.display());
            Ok(())
        }
        Command::Markov(args) => {
            let cfg = resolve_config(&args, Model::Markov)?;
            run_evolution(&cfg, args.resume.as_deref())?;
            println!("run complete: {}", cfg.out_dir.display());
            Ok(())
        }
        Command::Pme(args) => {
            let model = match args.equation {
                PmeEquation::Pme => Model::Pme,
                PmeEquation::Nlpde => Model::Nlpde,
            };
            let mut cfg = resolve_config(&args.evolution, model)?;
            if let Some(m) = args.m {
                cfg.m = m;
            }
            if let Some(sigma0) = args.sigma0 {
                cfg.sigma0 = sigma0;
            }
            if let Some(dx) = args.dx {
                cfg.dx = dx;
            }
            if let Some(decades) = args.decades {
                cfg.decades = decades;
            }
            if let Some(sf) = args.stability_factor {
                cfg.stability_factor = sf;
            }
            run_evolution(&cfg, None)?;
            println!("run complete: {}", cfg.out_dir.display());
            Ok(())
        }
        Command::Fit(args) => {
            let text = std::fs::read_to_string(&args.input).map_err(io_err(&args.input))?;
            let (dist, t) = read_distribution::<f64>(&text)?;
            let smoothed = running_average(&dist, args.smooth_window)?;
            let fit = fit_q_gaussian(&smoothed, args.q)?;
            if let Some(t) = t {
                println!("t = {t}");
            }
            println!("q = {}", fit.q);
            println!("sigma_q = {}", fit.sigma_q);
            println!("amplitude = {}", fit.amplitude);
            println!("center = {}", fit.center);
            println!("residual_rms = {}", fit.residual_rms);
            println!("q_fixed = {}", fit.q_fixed);
            Ok(())
        }
        Command::Spectrum(args) => {
            let text = std::fs::read_to_string(&args.input).map_err(io_err(&args.input))?;
            let (dist, _) = read_distribution::<f64>(&text)?;
            let smoothed = running_average(&dist, args.smooth_window)?;
            let fit = fit_q_gaussian(&smoothed, Some(args.q))?;
            let spectrum = residual_spectrum(&dist, &fit)?;
            println!("q = {}", fit.q);
            println!("sigma_q = {}", fit.sigma_q);
            println!("center = {}", fit.center);
            println!("slope_loglog = {}", spectrum.slope_loglog);
            println!("slope_stderr = {}", spectrum.slope_stderr);
            if let Some(dir) = args.out {
                std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
                let mut text = String::from("frequency,power\n");
                for (f, p) in spectrum.frequencies.iter().zip(&spectrum.power) {
                    text.push_str(&format!("{f},{p}\n"));
                }
                let path = dir.join("spectrum.csv");
                std::fs::write(&path, text).map_err(io_err(path))?;
            }
            Ok(())
        }
        Command::Sweep(args) => {
            let threads = std::env::var("FEEDWALK_THREADS")
                .ok()
                .and_then(|s| s.parse().ok());
            let result = run_sweep(
                args.resolution,
                args.t_a,
                args.t_b,
                args.eps_trunc,
                args.smooth_window,
                threads,
            )?;
            write_sweep_csv(&result, &args.out)?;
            let fitted = result.points.iter().filter(|p| p.fit_ok).count();
            let localized = result.points.iter().filter(|p| p.localized).count();
            println!(
                "sweep complete: {} points, {fitted} fitted, {localized} localized, median q = {}",
                result.points.len(),
                result
                    .median_q()
                    .map(|q| q.to_string())
                    .unwrap_or_else(|| "n/a".into())
            );
            Ok(())
        }
        Command::ValidatePme(args) => {
            let report = run_pme_validation(args.m, args.decades, args.out.as_deref())?;
            println!(
                "exponent = {} (expected {}, stderr {})",
                report.exponent, report.expected_exponent, report.exponent_stderr
            );
            if let Some(l1) = report.l1_max_rel {
                println!("l1_max_rel = {l1}");
            }
            Ok(())
        }
    }
}

fn resolve_config(args: &EvolutionArgs, model: Model) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.model = model;
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    if let Some(initial) = &args.initial {
        cfg.initial = initial.clone();
    }
    if let Some(eps) = args.eps_trunc {
        cfg.epsilon_trunc = eps;
    }
    if let Some(cpd) = args.checkpoints_per_decade {
        cfg.checkpoints_per_decade = cpd;
    }
    if let Some(w) = args.smooth_window {
        cfg.smooth_window = w;
    }
    if let Some(q) = args.q_fixed {
        cfg.q_fixed = Some(q);
    }
    if let Some(every) = args.checkpoint_every {
        cfg.checkpoint_every = every;
    }
    if args.snapshots {
        cfg.snapshot_checkpoints = true;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}
