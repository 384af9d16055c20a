//! Acceptance suite: one test per headline claim, each printing a single
//! pass/fail line (visible with `--nocapture`).
//!
//! The two million-step reference evolutions are shared between criteria
//! through lazily computed fixtures, so the suite runs them once each.

use std::sync::LazyLock;

use num_complex::Complex;
use tempfile::TempDir;

use feedwalk_cli::config::{Initial, Model, RunConfig};
use feedwalk_cli::run::{run_evolution, LatticeArtifacts, RunOutcome};
use feedwalk_cli::sweep::run_sweep;
use feedwalk_cli::validate::run_pme_validation;
use feedwalk_core::analysis::{
    estimate_exponent, fit_q_gaussian, fit_q_gaussian_xy, loglog_regression, q_exp_neg,
    residual_spectrum, running_average,
};
use feedwalk_core::markov::{markov_step, MarkovState, OccPair};
use feedwalk_core::walk::{decompose_step, feed_forward_step, AmpPair, RateValue, WalkerState};
use feedwalk_core::{Distribution64, WalkerState64};

fn criterion(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {id:02} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id:02} {name} failed: {detail}");
}

struct EvolvedRun {
    _dir: TempDir,
    artifacts: LatticeArtifacts,
}

fn evolve(model: Model, steps: u64, epsilon_trunc: f64) -> EvolvedRun {
    let dir = TempDir::new().expect("tempdir");
    let cfg = RunConfig {
        model,
        steps,
        epsilon_trunc,
        initial: Initial::Default,
        out_dir: dir.path().to_path_buf(),
        checkpoint_every: 0,
        ..RunConfig::default()
    };
    match run_evolution(&cfg, None).expect("evolution") {
        RunOutcome::Lattice(artifacts) => EvolvedRun {
            _dir: dir,
            artifacts,
        },
        RunOutcome::Grid(_) => unreachable!("lattice model"),
    }
}

static FF_RUN: LazyLock<EvolvedRun> = LazyLock::new(|| evolve(Model::FeedForward, 1_000_000, 1e-30));
static FF_RUN_LOOSE: LazyLock<EvolvedRun> =
    LazyLock::new(|| evolve(Model::FeedForward, 1_000_000, 1e-24));
static MK_RUN: LazyLock<EvolvedRun> = LazyLock::new(|| evolve(Model::Markov, 1_000_000, 1e-30));
static MK_RUN_LOOSE: LazyLock<EvolvedRun> =
    LazyLock::new(|| evolve(Model::Markov, 1_000_000, 1e-24));

#[test]
fn acceptance_01_feed_forward_scaling() {
    let series = FF_RUN.artifacts.series();
    let (slope, stderr) = estimate_exponent(&series, 10_000, 1_000_000).unwrap();
    criterion(
        1,
        "feed-forward width exponent",
        (slope - 0.40).abs() <= 0.05,
        &format!("exponent {slope:.4} +- {stderr:.4}, target 0.40 +- 0.05"),
    );
}

#[test]
fn acceptance_02_feed_forward_shape() {
    let fit = fit_q_gaussian(&FF_RUN.artifacts.final_smooth, None).unwrap();
    criterion(
        2,
        "free-q fit of the feed-forward distribution",
        (0.35..=0.65).contains(&fit.q),
        &format!("q = {:.4}, target [0.35, 0.65]", fit.q),
    );
}

#[test]
fn acceptance_03_markov_scaling() {
    let series = MK_RUN.artifacts.series();
    let (slope, stderr) = estimate_exponent(&series, 10_000, 1_000_000).unwrap();
    criterion(
        3,
        "markov width exponent",
        (slope - 0.33).abs() <= 0.03,
        &format!("exponent {slope:.4} +- {stderr:.4}, target 0.33 +- 0.03"),
    );
}

#[test]
fn acceptance_04_markov_width_desk_scale() {
    // Scaling-law prediction from the long-time reference width 283 at 1e7.
    let row = MK_RUN.artifacts.rows.last().unwrap();
    let predicted = 283.0 * (1e6f64 / 1e7).powf(0.33);
    let rel = (row.sigma_q - predicted).abs() / predicted;
    criterion(
        4,
        "markov width at t = 1e6 vs scaled reference",
        rel <= 0.10,
        &format!("sigma = {:.2}, prediction {predicted:.2} +- 10%", row.sigma_q),
    );
}

#[test]
#[ignore = "long mode: ~1e7-step markov evolution"]
fn acceptance_04_long_markov_width_at_1e7() {
    let run = evolve(Model::Markov, 10_000_000, 1e-30);
    let row = run.artifacts.rows.last().unwrap();
    let free = fit_q_gaussian(&run.artifacts.final_smooth, None).unwrap();
    criterion(
        4,
        "markov width at t = 1e7 (long mode)",
        (row.sigma_q - 283.0).abs() <= 15.0 && free.q.abs() < 0.15,
        &format!(
            "sigma = {:.2} (target 283 +- 15), free-q fit {:.3} (target ~0)",
            row.sigma_q, free.q
        ),
    );
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        (z ^ (z >> 31)) as f64 / u64::MAX as f64 * 2.0 - 1.0
    }
}

#[test]
fn acceptance_05_decomposition_identity() {
    let mut rng = SplitMix64(0xfeed);
    let mut amps: Vec<AmpPair<f64>> = (0..16)
        .map(|_| {
            AmpPair::new(
                Complex::new(rng.next_f64(), rng.next_f64()),
                Complex::new(rng.next_f64(), rng.next_f64()),
            )
        })
        .collect();
    let norm: f64 = amps.iter().map(|p| p.probability()).sum::<f64>().sqrt();
    for p in &mut amps {
        p.a /= norm;
        p.b /= norm;
    }
    let mut state = WalkerState::from_pairs(-8, amps).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let dec = decompose_step(&state);
        let next = feed_forward_step(&state).unwrap();
        let (lo, hi) = state.window();
        for (i, j) in (lo..=hi).enumerate() {
            let da = (dec.markov_a[i] + dec.interference_a[i] - next.amp(j - 1).a.norm_sqr()).abs();
            let db = (dec.markov_b[i] + dec.interference_b[i] - next.amp(j + 1).b.norm_sqr()).abs();
            worst = worst.max(da).max(db);
        }
        state = next;
    }
    criterion(
        5,
        "markov + interference reconstructs unitary probabilities",
        worst < 1e-12,
        &format!("worst per-site error {worst:.2e} over 1000 steps"),
    );
}

#[test]
fn acceptance_06_single_site_oscillation() {
    let mut history = vec![WalkerState64::single_site(0)];
    for _ in 0..100 {
        history.push(feed_forward_step(history.last().unwrap()).unwrap());
    }
    let mut pass = true;
    for t in 0..99 {
        let earlier = &history[t];
        let later = &history[t + 2];
        pass &= earlier.window() == later.window();
        let (lo, hi) = earlier.window();
        for j in lo..=hi {
            pass &= later.amp(j).a == -earlier.amp(j).a && later.amp(j).b == -earlier.amp(j).b;
        }
    }
    criterion(
        6,
        "single-site state oscillates with period two",
        pass,
        "state(t+2) == -state(t) exactly for 100 steps",
    );
}

#[test]
fn acceptance_07a_conservation_ledger() {
    let mut pass = true;
    let mut detail = String::new();
    let mut worst = 0.0f64;
    for (name, run) in [("feed-forward", &*FF_RUN), ("markov", &*MK_RUN)] {
        for row in &run.artifacts.rows {
            let err = (row.total_p + row.truncated_mass - 1.0).abs();
            worst = worst.max(err);
            if err > 1e-9 {
                pass = false;
                detail = format!("{name} ledger error {err:.2e} at t = {}", row.t);
            }
        }
    }
    if detail.is_empty() {
        detail = format!("sum P + truncated_mass = 1 at every checkpoint, worst error {worst:.2e}");
    }
    criterion(7, "conservation ledger", pass, &detail);
}

/// Width insensitivity to the trimming threshold.
///
/// The Markov engine passes with orders of magnitude to spare: its dynamics
/// damps the O(sqrt(eps)) perturbations that edge trimming introduces. The
/// feed-forward engine does not: its coin feeds the neighboring moduli back
/// into the unitary, which amplifies those perturbations until the two runs
/// become independent realizations of the same envelope (their final
/// distributions differ by order one in L1). Single-run widths then differ
/// at the percent level no matter how the width is read off, so the 0.1%
/// bound is not attainable for the unitary engine; the comparison is kept
/// here as stated and records the measured shift.
#[test]
fn acceptance_07b_truncation_insensitivity() {
    let mut pass = true;
    let mut shifts = Vec::new();
    let pairs = [
        ("feed-forward", &*FF_RUN, &*FF_RUN_LOOSE),
        ("markov", &*MK_RUN, &*MK_RUN_LOOSE),
    ];
    for (name, tight, loose) in pairs {
        let a = tight.artifacts.rows.last().unwrap().sigma_q;
        let b = loose.artifacts.rows.last().unwrap().sigma_q;
        let shift = (a - b).abs() / a;
        shifts.push(format!("{name} {shift:.2e}"));
        pass &= shift < 1e-3;
    }
    criterion(
        7,
        "width insensitivity to eps_trunc in {1e-30, 1e-24}",
        pass,
        &format!("relative sigma_q shifts at t = 1e6: {}", shifts.join(", ")),
    );
}

#[test]
fn acceptance_08_homogeneous_ballistic() {
    let dir = TempDir::new().unwrap();
    let cfg = RunConfig {
        model: Model::Homogeneous,
        steps: 10_000,
        initial: Initial::SingleSite,
        out_dir: dir.path().to_path_buf(),
        checkpoint_every: 0,
        ..RunConfig::default()
    };
    let RunOutcome::Lattice(artifacts) = run_evolution(&cfg, None).unwrap() else {
        unreachable!()
    };
    let series = artifacts.series();
    let (slope, stderr) = estimate_exponent(&series, 100, 10_000).unwrap();
    criterion(
        8,
        "homogeneous walk is ballistic",
        (slope - 1.0).abs() <= 0.02,
        &format!("exponent {slope:.4} +- {stderr:.4}, target 1.00 +- 0.02"),
    );
}

#[test]
fn acceptance_09_pme_self_similarity() {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [1.5, 2.0] {
        let report = run_pme_validation(m, 1.0, None).unwrap();
        let rel = (report.exponent - report.expected_exponent).abs() / report.expected_exponent;
        parts.push(format!("m={m}: {:.4} (rel err {rel:.2e})", report.exponent));
        pass &= rel <= 0.02;
    }
    let heat = run_pme_validation(1.0, 1.0, None).unwrap();
    parts.push(format!("m=1: {:.4}", heat.exponent));
    pass &= (heat.exponent - 0.5).abs() <= 0.01;
    criterion(
        9,
        "self-similar width exponents of the PDE solvers",
        pass,
        &parts.join("; "),
    );
}

#[test]
fn acceptance_10_nlpde_matches_quarter_coefficient_pme() {
    let report = run_pme_validation(2.0, 1.0, None).unwrap();
    let l1 = report.l1_max_rel.unwrap();
    criterion(
        10,
        "nonlinear density equation vs quarter-coefficient m=2",
        l1 < 0.02,
        &format!("max relative L1 {l1:.2e} over one decade, target < 2e-2"),
    );
}

#[test]
fn acceptance_11_initial_state_sweep() {
    let result = run_sweep(15, 100_000, 1_000_000, 1e-30, 11, None).unwrap();
    let localized = result.points.iter().filter(|p| p.localized).count();
    let localized_fitted = result
        .points
        .iter()
        .filter(|p| p.localized && p.q.is_some())
        .count();
    let median = result.median_q();
    let pass = matches!(median, Some(q) if (0.4..=0.6).contains(&q))
        && localized > 0
        && localized_fitted == 0;
    criterion(
        11,
        "225-point initial-state sweep",
        pass,
        &format!(
            "median q = {:?}, {localized} localized points flagged (none fitted)",
            median
        ),
    );
}

#[test]
fn acceptance_12_residual_spectrum_is_white() {
    let fit = fit_q_gaussian(&FF_RUN.artifacts.final_smooth, Some(0.5)).unwrap();
    let spectrum = residual_spectrum(&FF_RUN.artifacts.final_raw, &fit).unwrap();
    criterion(
        12,
        "residual power spectrum is white",
        spectrum.slope_loglog.abs() <= 0.2,
        &format!(
            "log-log slope {:.4} +- {:.4}, target 0 +- 0.2",
            spectrum.slope_loglog, spectrum.slope_stderr
        ),
    );
}

#[test]
fn acceptance_13_property_suites() {
    let mut pass = true;
    let mut failures = Vec::new();

    // Fitter idempotence plus scale and translation covariance.
    let xs: Vec<f64> = (-300..=300).map(|j| j as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| 1.5e-3 * q_exp_neg(0.5, (x / 120.0).powi(2)))
        .collect();
    let base = fit_q_gaussian_xy(&xs, &ys, None).unwrap();
    let resampled: Vec<f64> = xs.iter().map(|&x| base.model_at(x)).collect();
    let again = fit_q_gaussian_xy(&xs, &resampled, None).unwrap();
    if (again.q - base.q).abs() > 0.01 || (again.sigma_q - base.sigma_q).abs() / base.sigma_q > 5e-3
    {
        pass = false;
        failures.push("fit idempotence");
    }
    let scaled: Vec<f64> = ys.iter().map(|y| y * 4.0).collect();
    let fit_scaled = fit_q_gaussian_xy(&xs, &scaled, Some(0.5)).unwrap();
    let fit_base = fit_q_gaussian_xy(&xs, &ys, Some(0.5)).unwrap();
    if (fit_scaled.amplitude / fit_base.amplitude - 4.0).abs() > 1e-3
        || (fit_scaled.sigma_q - fit_base.sigma_q).abs() / fit_base.sigma_q > 1e-3
    {
        pass = false;
        failures.push("scale covariance");
    }
    let shifted_xs: Vec<f64> = xs.iter().map(|x| x + 25.0).collect();
    let fit_shifted = fit_q_gaussian_xy(&shifted_xs, &ys, Some(0.5)).unwrap();
    if (fit_shifted.center - (fit_base.center + 25.0)).abs() > 1e-3 {
        pass = false;
        failures.push("translation covariance");
    }

    // Exact power-law exponent recovery.
    let pts: Vec<(f64, f64)> = (0..10)
        .map(|k| {
            let t = 10f64.powf(2.0 + 0.3 * k as f64);
            (t, 3.0 * t.powf(0.4))
        })
        .collect();
    let (slope, stderr) = loglog_regression(&pts).unwrap();
    if (slope - 0.4).abs() > 1e-12 || stderr > 1e-10 {
        pass = false;
        failures.push("power-law exactness");
    }

    // Coin-matrix unitarity on a deterministic sample of rates.
    let mut rng = SplitMix64(0xc01);
    for _ in 0..500 {
        let r = rng.next_f64().abs();
        let phi = rng.next_f64() * std::f64::consts::PI;
        let rate = RateValue::new(Complex::from_polar(r, phi));
        let g = rate.g();
        let s = rate.flip_amplitude();
        let off = (g * Complex::new(s, 0.0) - Complex::new(s, 0.0) * g).norm();
        let diag = (g.norm_sqr() + s * s - 1.0).abs();
        if off > 1e-14 || diag > 1e-14 {
            pass = false;
            failures.push("coin unitarity");
            break;
        }
    }

    // Markov range preservation on a deterministic sample.
    let mut rng = SplitMix64(0xbee);
    'outer: for _ in 0..50 {
        let mut vals: Vec<f64> = (0..12).map(|_| rng.next_f64().abs()).collect();
        let total: f64 = vals.iter().sum();
        for v in &mut vals {
            *v /= total;
        }
        let occ: Vec<OccPair<f64>> = vals.chunks(2).map(|c| OccPair::new(c[0], c[1])).collect();
        let state = MarkovState::from_pairs(0, occ.clone()).unwrap();
        let next = markov_step(&state).unwrap();
        for (i, pair) in occ.iter().enumerate() {
            let j = i as i64;
            let lo = pair.l.min(pair.r) - 1e-15;
            let hi = pair.l.max(pair.r) + 1e-15;
            if !(lo..=hi).contains(&next.occ(j - 1).l) || !(lo..=hi).contains(&next.occ(j + 1).r) {
                pass = false;
                failures.push("markov range");
                break 'outer;
            }
        }
    }

    // Determinism across a checkpoint resume, byte for byte.
    let dir_a = TempDir::new().unwrap();
    let dir_b = TempDir::new().unwrap();
    let cfg_a = RunConfig {
        model: Model::FeedForward,
        steps: 2000,
        checkpoint_every: 1000,
        out_dir: dir_a.path().to_path_buf(),
        ..RunConfig::default()
    };
    run_evolution(&cfg_a, None).unwrap();
    let cfg_b = RunConfig {
        out_dir: dir_b.path().to_path_buf(),
        ..cfg_a.clone()
    };
    run_evolution(&cfg_b, Some(&dir_a.path().join("checkpoint_t1000.txt"))).unwrap();
    let final_a = std::fs::read(dir_a.path().join("dist_t2000.csv")).unwrap();
    let final_b = std::fs::read(dir_b.path().join("dist_t2000.csv")).unwrap();
    let state_a = std::fs::read(dir_a.path().join("state_final.txt")).unwrap();
    let state_b = std::fs::read(dir_b.path().join("state_final.txt")).unwrap();
    if final_a != final_b || state_a != state_b {
        pass = false;
        failures.push("resume determinism");
    }

    criterion(
        13,
        "always-on property suites",
        pass,
        &if failures.is_empty() {
            "fitter covariances, power-law exactness, coin unitarity, markov range, resume determinism".to_string()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    );
}

/// The distributions feeding criteria 2 and 12 must in fact come from the
/// same evolution artifacts the series came from.
#[test]
fn fixture_consistency() {
    let raw: &Distribution64 = &FF_RUN.artifacts.final_raw;
    let smooth = running_average(raw, 11).unwrap();
    assert_eq!(smooth.window(), FF_RUN.artifacts.final_smooth.window());
    assert!((smooth.total() - FF_RUN.artifacts.final_smooth.total()).abs() < 1e-12);
}
