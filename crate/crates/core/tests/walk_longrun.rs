//! Desk-scale evolution checks that need more than a handful of steps:
//! distribution shape, smoothing insensitivity and the two-snapshot q
//! estimates for both engines.

use feedwalk_core::analysis::{estimate_q_two_times, fit_q_gaussian, running_average, Distribution};
use feedwalk_core::markov::{markov_distribution, markov_step, MarkovState};
use feedwalk_core::walk::{feed_forward_step, probability_distribution, WalkerState};

fn evolve_walker(steps: u64) -> Vec<(u64, Distribution<f64>)> {
    let mut state = WalkerState::<f64>::two_site_default();
    let mut snaps = Vec::new();
    for t in 1..=steps {
        state = feed_forward_step(&state).unwrap();
        if t == steps / 10 || t == steps {
            snaps.push((t, probability_distribution(&state)));
        }
    }
    snaps
}

fn second_difference_rms(dist: &Distribution<f64>) -> f64 {
    let m = dist.masses();
    let mut acc = 0.0;
    for w in m.windows(3) {
        let d = w[0] - 2.0 * w[1] + w[2];
        acc += d * d;
    }
    (acc / (m.len() - 2) as f64).sqrt()
}

#[test]
fn feed_forward_distribution_is_a_spiky_compact_bell() {
    let snaps = evolve_walker(100_000);
    let (t, dist) = &snaps[1];
    assert_eq!(*t, 100_000);

    // Compact support: the active window is far narrower than the light cone.
    let width = dist.window_len() as u64;
    assert!(width < *t / 50, "window {width} vs light cone {}", 2 * t);

    // Smoothing knocks the site-scale spikes down by at least 3x.
    let smooth11 = running_average(dist, 11).unwrap();
    let raw_spikes = second_difference_rms(dist);
    let smooth_spikes = second_difference_rms(&smooth11);
    assert!(
        raw_spikes > 3.0 * smooth_spikes,
        "spike reduction only {:.2}x",
        raw_spikes / smooth_spikes
    );

    // The smoothed profile is a non-Gaussian compact bell: a free-q fit
    // lands well below the Gaussian limit with a single dominant peak.
    let fit = fit_q_gaussian(&smooth11, None).unwrap();
    assert!(
        fit.q > 0.0 && fit.q < 0.8,
        "free-q fit of the bell gave q = {}",
        fit.q
    );

    // The fitted width barely moves between smoothing windows 11 and 21.
    let smooth21 = running_average(dist, 21).unwrap();
    let sigma11 = fit_q_gaussian(&smooth11, Some(0.5)).unwrap().sigma_q;
    let sigma21 = fit_q_gaussian(&smooth21, Some(0.5)).unwrap().sigma_q;
    let shift = (sigma11 - sigma21).abs() / sigma21;
    assert!(shift < 0.01, "smoothing-window sensitivity {shift:.4}");
}

#[test]
fn two_time_estimates_recover_the_model_exponents() {
    // Feed-forward engine: snapshots at 1e5 and 1e6 under the self-similar
    // width constraint give a q near one half.
    let snaps = evolve_walker(1_000_000);
    let (t_a, dist_a) = &snaps[0];
    let (t_b, dist_b) = &snaps[1];
    let smooth_a = running_average(dist_a, 11).unwrap();
    let smooth_b = running_average(dist_b, 11).unwrap();
    let q_ff = estimate_q_two_times(&smooth_a, *t_a, &smooth_b, *t_b).unwrap();
    assert!(
        (0.3..=0.7).contains(&q_ff),
        "feed-forward two-time q = {q_ff}"
    );

    // Markov engine: the same estimator lands near zero.
    let mut state = MarkovState::<f64>::two_site_default();
    let mut snaps = Vec::new();
    for t in 1..=1_000_000u64 {
        state = markov_step(&state).unwrap();
        if t == 100_000 || t == 1_000_000 {
            snaps.push((t, markov_distribution(&state)));
        }
    }
    let smooth_a = running_average(&snaps[0].1, 11).unwrap();
    let smooth_b = running_average(&snaps[1].1, 11).unwrap();
    let q_mk = estimate_q_two_times(&smooth_a, snaps[0].0, &smooth_b, snaps[1].0).unwrap();
    assert!((-0.05..=0.05).contains(&q_mk), "markov two-time q = {q_mk}");

    // And its single-snapshot free-q fit agrees.
    let free = fit_q_gaussian(&smooth_b, None).unwrap();
    assert!(free.q.abs() < 0.15, "markov free-q fit q = {}", free.q);

    println!("two-time estimates: feed-forward {q_ff:.4}, markov {q_mk:.4}, markov free fit {:.4}", free.q);
}
