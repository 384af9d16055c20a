//! Evolution driver: stepping, log-spaced measurement, checkpointing and
//! resumable restarts for the lattice and grid models.

use std::path::Path;

use feedwalk_core::analysis::{fit_q_gaussian, fit_q_gaussian_xy, running_average};
use feedwalk_core::markov::{markov_distribution, markov_step};
use feedwalk_core::pme::BarenblattProfile;
use feedwalk_core::snapshot;
use feedwalk_core::walk::{feed_forward_step, homogeneous_step, probability_distribution};
use feedwalk_core::{CoinAngle64, Distribution64, MarkovState64, PmeGrid64, ScalingSeries64, WalkerState64};

use crate::config::{Initial, Model, RunConfig};
use crate::error::{io_err, CliError, Result};
use crate::output::{parse_checkpoint, write_manifest, Manifest, ManifestLedger, ManifestRun, RunWriter};
use crate::schedule::log_spaced_checkpoints;

/// One measured row of a lattice evolution.
#[derive(Debug, Clone)]
pub struct CheckpointRow {
    pub t: u64,
    pub sigma_q: f64,
    pub sigma_method: &'static str,
    pub q_used: f64,
    pub window_lo: i64,
    pub window_hi: i64,
    pub total_p: f64,
    pub truncated_mass: f64,
}

/// One measured row of a grid evolution.
#[derive(Debug, Clone)]
pub struct GridRow {
    pub time: f64,
    pub sigma_q: f64,
    pub sigma_method: &'static str,
    pub q_used: f64,
    pub mass: f64,
    pub mass_drift: f64,
    pub edge_lo: f64,
    pub edge_hi: f64,
}

#[derive(Debug)]
pub struct LatticeArtifacts {
    pub rows: Vec<CheckpointRow>,
    pub final_raw: Distribution64,
    pub final_smooth: Distribution64,
}

impl LatticeArtifacts {
    /// Width series from the fitted rows only.
    pub fn series(&self) -> ScalingSeries64 {
        let q = self.rows.first().map(|r| r.q_used).unwrap_or(1.0);
        let mut series = ScalingSeries64::new(q);
        for row in &self.rows {
            if row.sigma_q > 0.0 {
                series.push(row.t, row.sigma_q).ok();
            }
        }
        series
    }
}

#[derive(Debug)]
pub struct GridArtifacts {
    pub rows: Vec<GridRow>,
    pub final_grid: PmeGrid64,
    pub time_origin: f64,
}

#[derive(Debug)]
pub enum RunOutcome {
    Lattice(LatticeArtifacts),
    Grid(GridArtifacts),
}

/// An engine is one lattice model plus its state, stepped one unit of t at a
/// time.
trait Engine: Sized {
    fn t(&self) -> u64;
    fn step(&self) -> feedwalk_core::Result<Self>;
    fn distribution(&self) -> Distribution64;
    fn window(&self) -> (i64, i64);
    fn truncated_mass(&self) -> f64;
    fn snapshot_text(&self) -> String;
}

struct FeedForwardEngine(WalkerState64);

impl Engine for FeedForwardEngine {
    fn t(&self) -> u64 {
        self.0.step_count()
    }
    fn step(&self) -> feedwalk_core::Result<Self> {
        feed_forward_step(&self.0).map(Self)
    }
    fn distribution(&self) -> Distribution64 {
        probability_distribution(&self.0)
    }
    fn window(&self) -> (i64, i64) {
        self.0.window()
    }
    fn truncated_mass(&self) -> f64 {
        self.0.truncated_mass()
    }
    fn snapshot_text(&self) -> String {
        snapshot::write_walker(&self.0)
    }
}

struct HomogeneousEngine(WalkerState64, CoinAngle64);

impl Engine for HomogeneousEngine {
    fn t(&self) -> u64 {
        self.0.step_count()
    }
    fn step(&self) -> feedwalk_core::Result<Self> {
        homogeneous_step(&self.0, self.1).map(|s| Self(s, self.1))
    }
    fn distribution(&self) -> Distribution64 {
        probability_distribution(&self.0)
    }
    fn window(&self) -> (i64, i64) {
        self.0.window()
    }
    fn truncated_mass(&self) -> f64 {
        self.0.truncated_mass()
    }
    fn snapshot_text(&self) -> String {
        snapshot::write_walker(&self.0)
    }
}

struct MarkovEngine(MarkovState64);

impl Engine for MarkovEngine {
    fn t(&self) -> u64 {
        self.0.step_count()
    }
    fn step(&self) -> feedwalk_core::Result<Self> {
        markov_step(&self.0).map(Self)
    }
    fn distribution(&self) -> Distribution64 {
        markov_distribution(&self.0)
    }
    fn window(&self) -> (i64, i64) {
        self.0.window()
    }
    fn truncated_mass(&self) -> f64 {
        self.0.truncated_mass()
    }
    fn snapshot_text(&self) -> String {
        snapshot::write_markov(&self.0)
    }
}

/// Moment-based width estimate consistent with the q-Gaussian convention:
/// `Var = sigma^2 / (5 - 3q)`.
pub fn moment_sigma(dist: &Distribution64, q: f64) -> f64 {
    ((5.0 - 3.0 * q).max(2.0) * dist.variance()).sqrt()
}

/// Width measurement at one checkpoint: a fixed-q fit of the smoothed
/// distribution, falling back to moments when the fit is unavailable.
pub fn measure_sigma(
    raw: &Distribution64,
    q_opt: Option<f64>,
    smooth_window: usize,
) -> feedwalk_core::Result<(f64, &'static str, f64)> {
    match q_opt {
        Some(q) => {
            let smooth = running_average(raw, smooth_window)?;
            match fit_q_gaussian(&smooth, Some(q)) {
                Ok(fit) => Ok((fit.sigma_q, "fit", q)),
                Err(_) => Ok((moment_sigma(raw, q), "moment", q)),
            }
        }
        None => Ok((raw.sigma_gaussian(), "moment", 1.0)),
    }
}

fn initial_walker(cfg: &RunConfig) -> Result<WalkerState64> {
    let state = match &cfg.initial {
        Initial::Default => WalkerState64::two_site_default(),
        Initial::SingleSite => WalkerState64::single_site(0),
        Initial::BetaGamma { beta, gamma } => WalkerState64::from_coin_angles(*beta, *gamma)?,
        Initial::File { path } => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            let stored = snapshot::read_walker(&text)?;
            // A file used as the initial condition starts a fresh clock
            // (continuing a run is what --resume is for).
            WalkerState64::restore(
                stored.window().0,
                stored.amps().to_vec(),
                0,
                stored.truncated_mass(),
                stored.epsilon_trunc(),
            )?
        }
    };
    Ok(state.with_epsilon_trunc(cfg.epsilon_trunc)?)
}

fn initial_markov(cfg: &RunConfig) -> Result<MarkovState64> {
    let state = match &cfg.initial {
        Initial::Default => MarkovState64::two_site_default(),
        Initial::SingleSite => MarkovState64::single_site(0),
        Initial::BetaGamma { .. } => {
            return Err(CliError::Config(
                "beta-gamma initial states apply to the unitary walk only".into(),
            ))
        }
        Initial::File { path } => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            let stored = snapshot::read_markov(&text)?;
            MarkovState64::restore(
                stored.window().0,
                stored.occupations().to_vec(),
                0,
                stored.truncated_mass(),
                stored.epsilon_trunc(),
            )?
        }
    };
    Ok(state.with_epsilon_trunc(cfg.epsilon_trunc)?)
}

/// Runs one evolution to `cfg.steps`, writing the series table, snapshots,
/// resumable checkpoints and a manifest into `cfg.out_dir`.
pub fn run_evolution(cfg: &RunConfig, resume: Option<&Path>) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut writer = RunWriter::create(&cfg.out_dir)?;
    let outcome = run_evolution_inner(cfg, resume, &mut writer);
    let resumed_from = resume.map(|p| p.display().to_string());
    match &outcome {
        Ok(result) => {
            writer.finish()?;
            let ledger = match result {
                RunOutcome::Lattice(a) => a.rows.last().map(|row| ManifestLedger {
                    final_t: row.t as f64,
                    total: row.total_p,
                    truncated_mass: row.truncated_mass,
                    conservation_error: (row.total_p + row.truncated_mass - 1.0).abs(),
                    window_lo: row.window_lo as f64,
                    window_hi: row.window_hi as f64,
                }),
                RunOutcome::Grid(a) => a.rows.last().map(|row| ManifestLedger {
                    final_t: row.time,
                    total: row.mass,
                    truncated_mass: 0.0,
                    conservation_error: row.mass_drift.abs(),
                    window_lo: row.edge_lo,
                    window_hi: row.edge_hi,
                }),
            };
            write_manifest(
                &cfg.out_dir,
                &Manifest {
                    run: ManifestRun {
                        tool: "feedwalk",
                        version: crate::output::tool_version(),
                        command: cfg.model.tag(),
                        status: "complete",
                        error: None,
                        resumed_from,
                    },
                    config: cfg,
                    ledger,
                },
            )?;
        }
        Err(e) => {
            // Best-effort partial manifest so aborted runs stay auditable.
            let _ = write_manifest(
                &cfg.out_dir,
                &Manifest {
                    run: ManifestRun {
                        tool: "feedwalk",
                        version: crate::output::tool_version(),
                        command: cfg.model.tag(),
                        status: "aborted",
                        error: Some(e.to_string()),
                        resumed_from,
                    },
                    config: cfg,
                    ledger: None,
                },
            );
        }
    }
    outcome
}

fn run_evolution_inner(
    cfg: &RunConfig,
    resume: Option<&Path>,
    writer: &mut RunWriter,
) -> Result<RunOutcome> {
    match cfg.model {
        Model::FeedForward => {
            let engine = match resume {
                Some(path) => FeedForwardEngine(load_walker_checkpoint(cfg, path)?),
                None => FeedForwardEngine(initial_walker(cfg)?),
            };
            drive_lattice(engine, cfg, writer).map(RunOutcome::Lattice)
        }
        Model::Homogeneous => {
            let coin = CoinAngle64::new(cfg.theta)?;
            let engine = match resume {
                Some(path) => HomogeneousEngine(load_walker_checkpoint(cfg, path)?, coin),
                None => HomogeneousEngine(initial_walker(cfg)?, coin),
            };
            drive_lattice(engine, cfg, writer).map(RunOutcome::Lattice)
        }
        Model::Markov => {
            let engine = match resume {
                Some(path) => MarkovEngine(load_markov_checkpoint(cfg, path)?),
                None => MarkovEngine(initial_markov(cfg)?),
            };
            drive_lattice(engine, cfg, writer).map(RunOutcome::Lattice)
        }
        Model::Pme | Model::Nlpde => {
            if resume.is_some() {
                return Err(CliError::Checkpoint(
                    "grid runs do not support resuming".into(),
                ));
            }
            drive_grid(cfg, writer).map(RunOutcome::Grid)
        }
    }
}

fn load_walker_checkpoint(cfg: &RunConfig, path: &Path) -> Result<WalkerState64> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let (model, _, state_text) = parse_checkpoint(&text)?;
    if model != cfg.model.tag() {
        return Err(CliError::Checkpoint(format!(
            "checkpoint holds a `{model}` state but the run is `{}`; refusing to resume",
            cfg.model.tag()
        )));
    }
    Ok(snapshot::read_walker(state_text)?)
}

fn load_markov_checkpoint(cfg: &RunConfig, path: &Path) -> Result<MarkovState64> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let (model, _, state_text) = parse_checkpoint(&text)?;
    if model != cfg.model.tag() {
        return Err(CliError::Checkpoint(format!(
            "checkpoint holds a `{model}` state but the run is `{}`; refusing to resume",
            cfg.model.tag()
        )));
    }
    Ok(snapshot::read_markov(state_text)?)
}

fn drive_lattice<E: Engine>(
    mut engine: E,
    cfg: &RunConfig,
    writer: &mut RunWriter,
) -> Result<LatticeArtifacts> {
    if engine.t() > cfg.steps {
        return Err(CliError::Checkpoint(format!(
            "checkpoint is already at t = {}, beyond the requested {} steps",
            engine.t(),
            cfg.steps
        )));
    }
    let schedule = log_spaced_checkpoints(cfg.steps, cfg.checkpoints_per_decade);
    let q_opt = cfg.effective_q();
    let mut idx = schedule.partition_point(|&t| t <= engine.t());
    let mut rows = Vec::new();
    while engine.t() < cfg.steps {
        engine = engine.step()?;
        let t = engine.t();
        if idx < schedule.len() && schedule[idx] == t {
            idx += 1;
            let raw = engine.distribution();
            let (sigma_q, sigma_method, q_used) = measure_sigma(&raw, q_opt, cfg.smooth_window)?;
            let (window_lo, window_hi) = engine.window();
            let row = CheckpointRow {
                t,
                sigma_q,
                sigma_method,
                q_used,
                window_lo,
                window_hi,
                total_p: raw.total(),
                truncated_mass: engine.truncated_mass(),
            };
            writer.push_lattice_row(&row)?;
            if cfg.snapshot_checkpoints {
                writer.write_distribution(&format!("dist_t{t}.csv"), &raw, Some(t))?;
            }
            rows.push(row);
        }
        if cfg.checkpoint_every > 0 && t.is_multiple_of(cfg.checkpoint_every) && t < cfg.steps {
            writer.write_checkpoint(t, cfg.model.tag(), &engine.snapshot_text())?;
        }
    }
    let final_raw = engine.distribution();
    writer.write_distribution(&format!("dist_t{}.csv", cfg.steps), &final_raw, Some(cfg.steps))?;
    writer.write_text("state_final.txt", &engine.snapshot_text())?;
    let final_smooth = running_average(&final_raw, cfg.smooth_window)?;
    Ok(LatticeArtifacts {
        rows,
        final_raw,
        final_smooth,
    })
}

/// Initial grid for a PDE run: the self-similar profile of width `sigma0`
/// (a plain Gaussian for m = 1), with its internal clock set to the
/// matching time origin.
fn initial_grid(cfg: &RunConfig) -> Result<(PmeGrid64, f64)> {
    let m = cfg.m;
    let q = 2.0 - m;
    let final_sigma = cfg.sigma0 * 10f64.powf(cfg.decades / (m + 1.0));
    let support = if m > 1.0 {
        final_sigma / (1.0 - q).sqrt()
    } else {
        // Gaussian initial data: take four nominal widths as "support".
        4.0 * final_sigma
    };
    let half_domain = 4.0 * support.max(cfg.sigma0);
    let n_cells = (2.0 * half_domain / cfg.dx).ceil() as usize;
    let (mut grid, t0) = if m > 1.0 {
        let profile = BarenblattProfile::new(q, cfg.sigma0, 0.0)?;
        let t0 = profile.time_origin();
        let grid = profile.sample_grid(-half_domain, half_domain, n_cells, 1.0)?;
        (grid, t0)
    } else {
        let mut grid = PmeGrid64::new(-half_domain, half_domain, n_cells, Some(1.0), 1.0)?;
        let s2 = cfg.sigma0 * cfg.sigma0;
        grid.fill(|x| (-x * x / s2).exp())?;
        grid.normalize_mass(1.0)?;
        (grid, s2 / 4.0)
    };
    grid = grid.with_stability_factor(cfg.stability_factor)?;
    let t0 = match cfg.model {
        // The nonlinear density equation matches the quarter-coefficient
        // m = 2 equation, i.e. the unit-coefficient one at a quarter of the
        // clock rate.
        Model::Nlpde => 4.0 * t0,
        _ => t0,
    };
    grid.set_time(t0);
    Ok((grid, t0))
}

fn grid_step(cfg: &RunConfig, grid: &PmeGrid64) -> feedwalk_core::Result<PmeGrid64> {
    match cfg.model {
        Model::Nlpde => grid.nlpde_step(),
        _ => grid.pme_step(),
    }
}

fn measure_grid(cfg: &RunConfig, grid: &PmeGrid64) -> GridRow {
    let q = 2.0 - cfg.m;
    let (xs, ys) = grid.xy();
    let (sigma_q, sigma_method, q_used) = if cfg.m > 1.0 {
        match fit_q_gaussian_xy(&xs, &ys, Some(q)) {
            Ok(fit) => (fit.sigma_q, "fit", q),
            Err(_) => (((5.0 - 3.0 * q).max(2.0) * grid.variance()).sqrt(), "moment", q),
        }
    } else {
        ((2.0 * grid.variance()).sqrt(), "moment", 1.0)
    };
    let (edge_lo, edge_hi) = grid.support_edges(1e-12).unwrap_or((f64::NAN, f64::NAN));
    GridRow {
        time: grid.time(),
        sigma_q,
        sigma_method,
        q_used,
        mass: grid.mass(),
        mass_drift: grid.mass_drift(),
        edge_lo,
        edge_hi,
    }
}

fn drive_grid(cfg: &RunConfig, writer: &mut RunWriter) -> Result<GridArtifacts> {
    let (mut grid, t0) = initial_grid(cfg)?;
    let dt_max = match cfg.model {
        Model::Nlpde => grid.stable_dt_nlpde()?,
        _ => grid.stable_dt_pme()?,
    };
    grid.set_dt(dt_max * 0.9)?;

    let t_end = t0 * 10f64.powf(cfg.decades);
    let n_marks = (cfg.decades * f64::from(cfg.checkpoints_per_decade)).ceil() as u32;
    let marks: Vec<f64> = (0..=n_marks)
        .map(|k| t0 * 10f64.powf(f64::from(k) / f64::from(cfg.checkpoints_per_decade)))
        .map(|t| t.min(t_end))
        .collect();

    let mut rows = Vec::new();
    let row = measure_grid(cfg, &grid);
    writer.push_grid_row(&row)?;
    rows.push(row);
    for &mark in marks.iter().skip(1) {
        while grid.time() < mark {
            grid = grid_step(cfg, &grid)?;
        }
        let row = measure_grid(cfg, &grid);
        writer.push_grid_row(&row)?;
        rows.push(row);
    }
    writer.write_text("grid_final.txt", &snapshot::write_grid(&grid))?;
    Ok(GridArtifacts {
        rows,
        final_grid: grid,
        time_origin: t0,
    })
}
