//! Initial-state sweep over the real two-site family.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use feedwalk_core::analysis::{estimate_q_two_times, running_average};
use feedwalk_core::walk::{feed_forward_step, probability_distribution};
use feedwalk_core::{Distribution64, WalkerState64};

use crate::error::{CliError, Result};

/// Width growth exponent below which a point counts as localized.
const LOCALIZED_EXPONENT: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub beta: f64,
    pub gamma: f64,
    pub localized: bool,
    pub fit_ok: bool,
    pub q: Option<f64>,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub resolution: usize,
    pub t_a: u64,
    pub t_b: u64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Median fitted q over the non-localized, successfully fitted points.
    pub fn median_q(&self) -> Option<f64> {
        let mut qs: Vec<f64> = self.points.iter().filter_map(|p| p.q).collect();
        if qs.is_empty() {
            return None;
        }
        qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some(qs[qs.len() / 2])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,gamma,localized,fit_ok,q,sigma_t_a,sigma_t_b,error\n");
        for p in &self.points {
            let q = p.q.map(|q| q.to_string()).unwrap_or_default();
            let error = p.error.as_deref().unwrap_or("");
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.beta, p.gamma, p.localized, p.fit_ok, q, p.sigma_a, p.sigma_b, error
            )
            .unwrap();
        }
        out
    }
}

fn sweep_point(
    beta: f64,
    gamma: f64,
    t_a: u64,
    t_b: u64,
    epsilon_trunc: f64,
    smooth_window: usize,
) -> SweepPoint {
    let mut point = SweepPoint {
        beta,
        gamma,
        localized: false,
        fit_ok: false,
        q: None,
        sigma_a: 0.0,
        sigma_b: 0.0,
        error: None,
    };
    let run = || -> feedwalk_core::Result<(Distribution64, Distribution64)> {
        let mut state = WalkerState64::from_coin_angles(beta, gamma)?
            .with_epsilon_trunc(epsilon_trunc)?;
        let mut dist_a = None;
        for t in 1..=t_b {
            state = feed_forward_step(&state)?;
            if t == t_a {
                dist_a = Some(probability_distribution(&state));
            }
        }
        Ok((dist_a.expect("t_a below t_b"), probability_distribution(&state)))
    };
    let (dist_a, dist_b) = match run() {
        Ok(pair) => pair,
        Err(e) => {
            point.error = Some(e.to_string());
            return point;
        }
    };
    point.sigma_a = dist_a.sigma_gaussian();
    point.sigma_b = dist_b.sigma_gaussian();
    let growth = if point.sigma_a > 0.0 && point.sigma_b > 0.0 {
        (point.sigma_b / point.sigma_a).ln() / (t_b as f64 / t_a as f64).ln()
    } else {
        0.0
    };
    if growth < LOCALIZED_EXPONENT {
        point.localized = true;
        return point;
    }
    let fit = running_average(&dist_a, smooth_window)
        .and_then(|smooth_a| {
            let smooth_b = running_average(&dist_b, smooth_window)?;
            estimate_q_two_times(&smooth_a, t_a, &smooth_b, t_b)
        });
    match fit {
        Ok(q) => {
            point.fit_ok = true;
            point.q = Some(q);
        }
        Err(e) => {
            point.error = Some(e.to_string());
        }
    }
    point
}

/// Runs the feed-forward walk for every `(beta, gamma)` on the uniform
/// `resolution x resolution` grid over `[0, 1]^2`, estimating the shared q
/// from the snapshots at `t_a` and `t_b`. Localized points are flagged and
/// per-point failures recorded in place. Points run in parallel on the
/// worker pool (`threads`, or the default pool size).
pub fn run_sweep(
    resolution: usize,
    t_a: u64,
    t_b: u64,
    epsilon_trunc: f64,
    smooth_window: usize,
    threads: Option<usize>,
) -> Result<SweepResult> {
    if resolution < 2 {
        return Err(CliError::Config("sweep resolution must be at least 2".into()));
    }
    if t_b <= t_a {
        return Err(CliError::Config(format!(
            "sweep needs t_a < t_b, got {t_a} and {t_b}"
        )));
    }
    let coords: Vec<(f64, f64)> = (0..resolution)
        .flat_map(|i| (0..resolution).map(move |j| (i, j)))
        .map(|(i, j)| {
            let denom = (resolution - 1) as f64;
            (i as f64 / denom, j as f64 / denom)
        })
        .collect();
    let work = |coords: &[(f64, f64)]| -> Vec<SweepPoint> {
        coords
            .par_iter()
            .map(|&(beta, gamma)| sweep_point(beta, gamma, t_a, t_b, epsilon_trunc, smooth_window))
            .collect()
    };
    let points = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
            pool.install(|| work(&coords))
        }
        None => work(&coords),
    };
    Ok(SweepResult {
        resolution,
        t_a,
        t_b,
        points,
    })
}

pub fn write_sweep_csv(result: &SweepResult, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(crate::error::io_err(out_dir))?;
    let path = out_dir.join("sweep.csv");
    std::fs::write(&path, result.to_csv()).map_err(crate::error::io_err(path))
}
