//! Self-similarity validation of the PDE solvers.
//!
//! For a requested porosity exponent the self-similar profile is evolved
//! over a span of decades and the fitted width regressed against time; the
//! recovered exponent must match `1/(m+1)`. For m = 2 a second run compares
//! the nonlinear density equation against the quarter-coefficient m = 2
//! solution started from a small-amplitude profile.

use std::fmt::Write as _;
use std::path::Path;

use feedwalk_core::analysis::{fit_q_gaussian_xy, loglog_regression};
use feedwalk_core::pme::BarenblattProfile;
use feedwalk_core::{PmeGrid64, Real};

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct ValidationRow {
    pub time: f64,
    pub sigma: f64,
    pub mass: f64,
    /// Relative L1 distance to the quarter-coefficient companion (m = 2 only).
    pub l1_rel: Option<f64>,
}

#[derive(Debug)]
pub struct PmeValidationReport {
    pub m: f64,
    pub rows: Vec<ValidationRow>,
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub expected_exponent: f64,
    /// Largest relative L1 distance seen along the companion run.
    pub l1_max_rel: Option<f64>,
}

impl PmeValidationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,sigma,mass,l1_rel\n");
        for row in &self.rows {
            let l1 = row.l1_rel.map(|v| v.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{}", row.time, row.sigma, row.mass, l1).unwrap();
        }
        out
    }
}

const SIGMA0: f64 = 40.0;
/// Initial peak density of the m = 2 comparison run (rho stays well below 1).
const COMPARISON_PEAK: f64 = 0.01;

fn checkpoint_marks(t0: f64, decades: f64, per_decade: u32) -> Vec<f64> {
    let n = (decades * f64::from(per_decade)).ceil() as u32;
    let t_end = t0 * 10f64.powf(decades);
    (0..=n)
        .map(|k| (t0 * 10f64.powf(f64::from(k) / f64::from(per_decade))).min(t_end))
        .collect()
}

/// Width of the evolving solution, fitted at fixed q = 2 - m (moments in the
/// Gaussian case m = 1).
fn width_of(grid: &PmeGrid64, m: f64) -> f64 {
    if m > 1.0 {
        let (xs, ys) = grid.xy();
        match fit_q_gaussian_xy(&xs, &ys, Some(2.0 - m)) {
            Ok(fit) => fit.sigma_q,
            Err(_) => ((5.0 - 3.0 * (2.0 - m)).max(2.0) * grid.variance()).sqrt(),
        }
    } else {
        (2.0 * grid.variance()).sqrt()
    }
}

fn exponent_run(m: f64, decades: f64) -> Result<(Vec<ValidationRow>, f64, f64)> {
    let final_sigma = SIGMA0 * 10f64.powf(decades / (m + 1.0));
    let q = 2.0 - m;
    let support = if m > 1.0 {
        final_sigma / (1.0 - q).sqrt()
    } else {
        4.0 * final_sigma
    };
    let half_domain = 4.0 * support;
    let n_cells = (2.0 * half_domain).ceil() as usize;
    let (mut grid, t0) = if m > 1.0 {
        let profile = BarenblattProfile::new(q, SIGMA0, 0.0)?;
        let grid = profile.sample_grid(-half_domain, half_domain, n_cells, 1.0)?;
        (grid, profile.time_origin().as_f64())
    } else {
        let mut grid = PmeGrid64::new(-half_domain, half_domain, n_cells, Some(1.0), 1.0)?;
        grid.fill(|x| (-x * x / (SIGMA0 * SIGMA0)).exp())?;
        grid.normalize_mass(1.0)?;
        (grid, SIGMA0 * SIGMA0 / 4.0)
    };
    grid.set_time(t0);
    grid.set_dt(grid.stable_dt_pme()? * 0.9)?;

    let mut rows = Vec::new();
    for (k, &mark) in checkpoint_marks(t0, decades, 8).iter().enumerate() {
        if k > 0 {
            while grid.time() < mark {
                grid = grid.pme_step()?;
            }
        }
        rows.push(ValidationRow {
            time: grid.time(),
            sigma: width_of(&grid, m),
            mass: grid.mass(),
            l1_rel: None,
        });
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.time, r.sigma)).collect();
    let (slope, stderr) = loglog_regression(&pts)?;
    Ok((rows, slope, stderr))
}

/// Relative L1 distance between two densities on matching grids.
fn l1_distance(a: &PmeGrid64, b: &PmeGrid64) -> f64 {
    let mut acc = 0.0;
    for (&x, &y) in a.rho().iter().zip(b.rho()) {
        acc += (x - y).abs();
    }
    acc * a.dx() / a.mass().max(f64::MIN_POSITIVE)
}

/// Co-evolves the nonlinear density equation (clock t) with the
/// unit-coefficient m = 2 equation at a quarter of the clock rate, which is
/// exactly the quarter-coefficient equation on the nonlinear clock.
pub fn comparison_run(
    peak: f64,
    decades: f64,
    per_decade: u32,
) -> Result<Vec<(f64, f64, f64)>> {
    // q = 0 profile with the requested peak: peak = 3 / (4 sigma).
    let sigma0 = 3.0 / (4.0 * peak);
    let final_sigma = sigma0 * 10f64.powf(decades / 3.0);
    let half_domain = 4.0 * final_sigma;
    let n_cells = (2.0 * half_domain).ceil() as usize;
    let profile = BarenblattProfile::new(0.0, sigma0, 0.0)?;
    let mut nonlinear = profile.sample_grid(-half_domain, half_domain, n_cells, 1.0)?;
    let t0 = 4.0 * profile.time_origin().as_f64();
    nonlinear.set_time(t0);
    let dt = (nonlinear.stable_dt_nlpde()?).min(4.0 * nonlinear.stable_dt_pme()?) * 0.9;
    nonlinear.set_dt(dt)?;
    let mut companion = nonlinear.clone();
    companion.set_time(t0 / 4.0);
    companion.set_dt(dt / 4.0)?;

    let mut rows = Vec::new();
    for (k, &mark) in checkpoint_marks(t0, decades, per_decade).iter().enumerate() {
        if k > 0 {
            while nonlinear.time() < mark {
                // The companion clock runs at a quarter rate: unit-coefficient
                // m = 2 at time t/4 is the quarter-coefficient solution at t.
                nonlinear = nonlinear.nlpde_step()?;
                companion = companion.pme_step()?;
            }
        }
        rows.push((
            nonlinear.time(),
            l1_distance(&nonlinear, &companion),
            nonlinear.max_density(),
        ));
    }
    Ok(rows)
}

/// Full validation pass for one porosity exponent, optionally writing
/// `report.csv` into `out_dir`.
pub fn run_pme_validation(m: f64, decades: f64, out_dir: Option<&Path>) -> Result<PmeValidationReport> {
    if !(1.0..3.0).contains(&m) {
        return Err(CliError::Config(format!("m must lie in [1, 3), got {m}")));
    }
    if !(decades > 0.0) {
        return Err(CliError::Config("decades must be positive".into()));
    }
    let (mut rows, exponent, exponent_stderr) = exponent_run(m, decades)?;
    let mut l1_max_rel = None;
    if (m - 2.0).abs() < 1e-12 {
        let comparison = comparison_run(COMPARISON_PEAK, decades, 8)?;
        // Attach L1 distances to the matching checkpoint indices.
        for (row, (_, l1, _)) in rows.iter_mut().zip(&comparison) {
            row.l1_rel = Some(*l1);
        }
        l1_max_rel = comparison
            .iter()
            .map(|&(_, l1, _)| l1)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    }
    let report = PmeValidationReport {
        m,
        rows,
        exponent,
        exponent_stderr,
        expected_exponent: 1.0 / (m + 1.0),
        l1_max_rel,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(crate::error::io_err(dir))?;
        let path = dir.join("report.csv");
        std::fs::write(&path, report.to_csv()).map_err(crate::error::io_err(path))?;
    }
    Ok(report)
}
