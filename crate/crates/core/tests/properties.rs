//! Cross-module property tests: unitarity, decomposition identities,
//! Markov consistency and snapshot round trips on randomized inputs.

use num_complex::Complex;
use proptest::prelude::*;

use feedwalk_core::analysis::{fit_q_gaussian_xy, q_exp_neg};
use feedwalk_core::markov::{markov_step, MarkovState, OccPair};
use feedwalk_core::snapshot;
use feedwalk_core::walk::{
    decompose_step, feed_forward_step, rate_function, AmpPair, RateValue, WalkerState,
};

/// Deterministic pseudo-random stream for building walk states.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn next_f64(&mut self) -> f64 {
        // Uniform in [-1, 1).
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}

fn random_walker(seed: u64, width: usize) -> WalkerState<f64> {
    let mut rng = SplitMix64(seed);
    let mut amps: Vec<AmpPair<f64>> = (0..width)
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
    WalkerState::from_pairs(-(width as i64) / 2, amps).expect("normalized")
}

#[test]
fn decomposition_reconstructs_unitary_probabilities_for_1000_steps() {
    let mut state = random_walker(0x5eed, 16);
    for _ in 0..1000 {
        let dec = decompose_step(&state);
        let next = feed_forward_step(&state).unwrap();
        let (lo, hi) = state.window();
        for (i, j) in (lo..=hi).enumerate() {
            let pa = dec.markov_a[i] + dec.interference_a[i];
            let pb = dec.markov_b[i] + dec.interference_b[i];
            let ua = next.amp(j - 1).a.norm_sqr();
            let ub = next.amp(j + 1).b.norm_sqr();
            assert!(
                (pa - ua).abs() < 1e-12 && (pb - ub).abs() < 1e-12,
                "decomposition mismatch at t = {}, site {j}: {} vs {}",
                state.step_count(),
                pa,
                ua
            );
        }
        state = next;
    }
}

#[test]
fn unitarity_over_long_random_evolution() {
    let mut state = random_walker(0xabcd, 32);
    for _ in 0..5000 {
        let before = state.total_probability();
        state = feed_forward_step(&state).unwrap();
        assert!((state.total_probability() - before).abs() < 1e-12);
    }
    assert!((state.total_probability() - 1.0).abs() < 1e-10);
}

#[test]
fn single_site_states_oscillate_with_period_two() {
    // From any single-site state, t + 2 equals minus the state at t, exactly.
    let mut rng = SplitMix64(7);
    for _ in 0..5 {
        let a = Complex::new(rng.next_f64(), rng.next_f64());
        let b = Complex::new(rng.next_f64(), rng.next_f64());
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let mut history = vec![WalkerState::from_pairs(
            3,
            vec![AmpPair::new(a / norm, b / norm)],
        )
        .unwrap()];
        for t in 0..102 {
            let next = feed_forward_step(history.last().unwrap()).unwrap();
            history.push(next);
            if t >= 1 {
                let earlier = &history[t - 1];
                let later = &history[t + 1];
                assert_eq!(earlier.window(), later.window(), "window differs at t = {t}");
                let (lo, hi) = earlier.window();
                for j in lo..=hi {
                    assert_eq!(later.amp(j).a, -earlier.amp(j).a, "a at t = {t}");
                    assert_eq!(later.amp(j).b, -earlier.amp(j).b, "b at t = {t}");
                }
            }
        }
    }
}

#[test]
fn markov_step_matches_decomposition_markov_part_on_random_states() {
    let mut rng = SplitMix64(0x1234);
    for _ in 0..20 {
        // Real non-negative amplitudes so |a|^2, |b|^2 define occupations.
        let width = 12;
        let mut values: Vec<f64> = (0..2 * width).map(|_| rng.next_f64().abs()).collect();
        let total: f64 = values.iter().sum();
        for v in &mut values {
            *v /= total;
        }
        let amps: Vec<AmpPair<f64>> = values
            .chunks(2)
            .map(|c| {
                AmpPair::new(
                    Complex::new(c[0].sqrt(), 0.0),
                    Complex::new(c[1].sqrt(), 0.0),
                )
            })
            .collect();
        let walker = WalkerState::from_pairs(-3, amps).unwrap();
        let dec = decompose_step(&walker);
        let markov = MarkovState::from_walker(&walker);
        let next = markov_step(&markov).unwrap();
        let (lo, hi) = walker.window();
        for (i, j) in (lo..=hi).enumerate() {
            assert!((next.occ(j - 1).l - dec.markov_a[i]).abs() < 1e-12);
            assert!((next.occ(j + 1).r - dec.markov_b[i]).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn coin_matrix_is_unitary_for_any_rate(r in 0.0f64..=1.0, phi in 0.0f64..std::f64::consts::TAU) {
        let g = Complex::from_polar(r, phi);
        let rate = RateValue::new(g);
        let g = rate.g();
        let s = rate.flip_amplitude();
        // M = [[g, -s], [s, conj(g)]]; M M^dagger must be the identity.
        let row00 = g * g.conj() + Complex::new(s * s, 0.0);
        let row01 = g * Complex::new(s, 0.0) - Complex::new(s, 0.0) * g;
        let row10 = Complex::new(s, 0.0) * g.conj() - g.conj() * Complex::new(s, 0.0);
        let row11 = Complex::new(s * s, 0.0) + g.conj() * g;
        prop_assert!((row00 - Complex::new(1.0, 0.0)).norm() < 1e-14);
        prop_assert!(row01.norm() < 1e-14);
        prop_assert!(row10.norm() < 1e-14);
        prop_assert!((row11 - Complex::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn rate_norm_is_clamped(asq in 0.0f64..=1.5, bsq in 0.0f64..=1.5) {
        let g = Complex::new(asq.sqrt(), bsq.sqrt());
        let rate = RateValue::new(g);
        prop_assert!(rate.norm_sqr() <= 1.0);
        prop_assert!(rate.flip_amplitude().is_finite());
        prop_assert!((rate.g().norm_sqr() - rate.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn markov_values_stay_in_source_range(raw in proptest::collection::vec(0.0f64..1.0, 8..20)) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let occ: Vec<OccPair<f64>> = raw
            .chunks(2)
            .filter(|c| c.len() == 2)
            .map(|c| OccPair::new(c[0] / total, c[1] / total))
            .collect();
        let state = MarkovState::from_pairs(0, occ.clone());
        prop_assume!(state.is_ok());
        let state = state.unwrap();
        let next = markov_step(&state).unwrap();
        for (i, pair) in occ.iter().enumerate() {
            let j = i as i64;
            let lo = pair.l.min(pair.r) - 1e-15;
            let hi = pair.l.max(pair.r) + 1e-15;
            let new_l = next.occ(j - 1).l;
            let new_r = next.occ(j + 1).r;
            prop_assert!(new_l >= lo && new_l <= hi);
            prop_assert!(new_r >= lo && new_r <= hi);
        }
        prop_assert!((next.total_mass() - state.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn float_text_round_trip_is_bit_exact(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let text = format!("{x}");
        let back: f64 = text.parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn walker_snapshot_round_trip(seed in any::<u64>(), width in 1usize..24) {
        let state = random_walker(seed, width);
        let text = snapshot::write_walker(&state);
        let back: WalkerState<f64> = snapshot::read_walker(&text).unwrap();
        prop_assert_eq!(back, state);
    }

    #[test]
    fn q_exponential_is_within_support_and_bounded(q in -1.0f64..0.99, z in 0.0f64..10.0) {
        let v: f64 = q_exp_neg(q, z);
        prop_assert!((0.0..=1.0).contains(&v));
        if (1.0 - q) * z >= 1.0 {
            prop_assert_eq!(v, 0.0);
        } else if z == 0.0 {
            prop_assert_eq!(v, 1.0);
        }
    }
}

#[test]
fn rate_function_matches_neighbors_on_evolved_state() {
    let mut state = WalkerState::<f64>::two_site_default();
    for _ in 0..25 {
        state = feed_forward_step(&state).unwrap();
    }
    let (lo, hi) = state.window();
    for j in (lo - 1)..=(hi + 1) {
        let rate = rate_function(&state, j);
        let expected_re = state.amp(j - 1).a.norm();
        let expected_im = state.amp(j + 1).b.norm();
        assert!((rate.g().re - expected_re).abs() < 1e-14);
        assert!((rate.g().im - expected_im).abs() < 1e-14);
    }
}

#[test]
fn fitting_scaled_walk_distribution_is_scale_covariant() {
    // Generic-scalar sanity: the same fit through the f32 path stays close.
    let xs: Vec<f64> = (-200..=200).map(|j| j as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| 2e-3 * q_exp_neg(0.5, (x / 90.0).powi(2)))
        .collect();
    let fit64 = fit_q_gaussian_xy(&xs, &ys, Some(0.5)).unwrap();
    let xs32: Vec<f32> = xs.iter().map(|&x| x as f32).collect();
    let ys32: Vec<f32> = ys.iter().map(|&y| y as f32).collect();
    let fit32 = fit_q_gaussian_xy(&xs32, &ys32, Some(0.5f32)).unwrap();
    assert!(
        (f64::from(fit32.sigma_q) - fit64.sigma_q).abs() / fit64.sigma_q < 1e-3,
        "f32 path diverged: {} vs {}",
        fit32.sigma_q,
        fit64.sigma_q
    );
}
