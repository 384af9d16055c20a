//! Least-squares fitting of q-Gaussian profiles.
//!
//! The model is `A * [1 - (1-q) (x-mu)^2 / sigma^2]_+^{1/(1-q)}`, compactly
//! supported for q < 1 and reducing to `A exp(-(x-mu)^2/sigma^2)` as q -> 1.
//! The amplitude is optimal in closed form for fixed shape parameters, so the
//! searches run over `(sigma, mu)` and optionally `q` with a coarse q grid
//! followed by Nelder-Mead refinement.

use crate::error::{Error, Result};
use crate::float::Real;

use super::Distribution;

/// Threshold on |1 - q| below which the Gaussian limit is used directly.
const GAUSSIAN_LIMIT_TOL: f64 = 1e-3;

/// q-deformed exponential of a non-positive argument: for `z >= 0` returns
/// `[1 - (1-q) z]_+^{1/(1-q)}`, or `exp(-z)` when q is within 1e-3 of one.
pub fn q_exp_neg<F: Real>(q: F, z: F) -> F {
    let one_minus_q = F::one() - q;
    if one_minus_q.abs() < F::of(GAUSSIAN_LIMIT_TOL) {
        return (-z).exp();
    }
    let w = one_minus_q * z;
    if w >= F::one() {
        return F::zero();
    }
    ((-w).ln_1p() / one_minus_q).exp()
}

/// Fitted q-Gaussian parameters with the root-mean-square residual over the
/// fitted bins.
#[derive(Debug, Clone, PartialEq)]
pub struct QGaussianFit<F: Real> {
    pub q: F,
    pub sigma_q: F,
    pub amplitude: F,
    pub center: F,
    pub residual_rms: F,
    pub q_fixed: bool,
}

impl<F: Real> QGaussianFit<F> {
    /// Model value at `x`; exactly zero outside the compact support.
    pub fn model_at(&self, x: F) -> F {
        let u = (x - self.center) / self.sigma_q;
        self.amplitude * q_exp_neg(self.q, u * u)
    }

    /// Half-width of the compact support for q < 1, `sigma / sqrt(1-q)`.
    pub fn support_halfwidth(&self) -> Option<F> {
        let one_minus_q = F::one() - self.q;
        if one_minus_q > F::of(GAUSSIAN_LIMIT_TOL) {
            Some(self.sigma_q / one_minus_q.sqrt())
        } else {
            None
        }
    }

    pub(crate) fn to_f64(&self) -> QGaussianFit<f64> {
        QGaussianFit {
            q: self.q.as_f64(),
            sigma_q: self.sigma_q.as_f64(),
            amplitude: self.amplitude.as_f64(),
            center: self.center.as_f64(),
            residual_rms: self.residual_rms.as_f64(),
            q_fixed: self.q_fixed,
        }
    }
}

struct FitData<'a, F: Real> {
    xs: &'a [F],
    ys: &'a [F],
    sum_yy: F,
}

impl<'a, F: Real> FitData<'a, F> {
    fn new(xs: &'a [F], ys: &'a [F]) -> Self {
        let mut sum_yy = F::zero();
        for &y in ys {
            sum_yy += y * y;
        }
        Self { xs, ys, sum_yy }
    }

    /// Sum of squares at the optimal amplitude for the given shape, and that
    /// amplitude. Uses the algebraic minimum, cheap enough for the searches.
    fn profiled_sse(&self, q: F, sigma: F, mu: F) -> (F, F) {
        if !(sigma > F::zero()) || !sigma.is_finite() {
            return (F::infinity(), F::zero());
        }
        let mut s_mm = F::zero();
        let mut s_ym = F::zero();
        for (&x, &y) in self.xs.iter().zip(self.ys) {
            let u = (x - mu) / sigma;
            let m = q_exp_neg(q, u * u);
            s_mm += m * m;
            s_ym += y * m;
        }
        if !(s_mm > F::zero()) {
            return (self.sum_yy, F::zero());
        }
        let amp = s_ym / s_mm;
        ((self.sum_yy - amp * s_ym).max(F::zero()), amp)
    }

    /// Exact residual sum of squares, used once for the reported diagnostics.
    fn direct_sse(&self, q: F, sigma: F, mu: F, amp: F) -> F {
        let mut sse = F::zero();
        for (&x, &y) in self.xs.iter().zip(self.ys) {
            let u = (x - mu) / sigma;
            let r = y - amp * q_exp_neg(q, u * u);
            sse += r * r;
        }
        sse
    }

    fn moments(&self) -> (F, F) {
        let mut w = F::zero();
        let mut wx = F::zero();
        for (&x, &y) in self.xs.iter().zip(self.ys) {
            w += y;
            wx += y * x;
        }
        let mean = wx / w;
        let mut wxx = F::zero();
        for (&x, &y) in self.xs.iter().zip(self.ys) {
            let d = x - mean;
            wxx += y * d * d;
        }
        (mean, wxx / w)
    }

    /// Width guess from the variance identity `Var = sigma^2 / (5 - 3q)`.
    fn sigma_guess(&self, q: F, variance: F) -> F {
        let factor = (F::of(5.0) - F::of(3.0) * q).max(F::of(2.0));
        (factor * variance).sqrt().max(F::of(1e-9))
    }
}

/// Derivative-free Nelder-Mead minimizer. Returns the best point, its value
/// and whether the simplex converged before the iteration cap.
fn nelder_mead<F: Real>(
    f: &mut impl FnMut(&[F]) -> F,
    start: &[F],
    scale: &[F],
    max_iter: usize,
) -> (Vec<F>, F, bool) {
    let n = start.len();
    let mut simplex: Vec<(Vec<F>, F)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += scale[i];
        let v = f(&p);
        simplex.push((p, v));
    }
    let ftol = F::of(1e-12);
    let xtol = F::of(1e-10);
    let mut converged = false;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let fspread = (worst - best).abs();
        let xspread = (0..n).fold(F::zero(), |acc, i| {
            acc.max((simplex[n].0[i] - simplex[0].0[i]).abs())
        });
        if fspread <= ftol * (best.abs() + F::of(1e-30)) || xspread <= xtol {
            converged = true;
            break;
        }
        // Centroid of all but the worst vertex.
        let mut centroid = vec![F::zero(); n];
        for (p, _) in simplex.iter().take(n) {
            for (c, &x) in centroid.iter_mut().zip(p) {
                *c += x;
            }
        }
        let inv = F::from_usize(n).unwrap().recip();
        for c in &mut centroid {
            *c *= inv;
        }
        let worst_point = simplex[n].0.clone();
        let blend = |t: F| -> Vec<F> {
            centroid
                .iter()
                .zip(&worst_point)
                .map(|(&c, &w)| c + (c - w) * t)
                .collect()
        };
        let reflected = blend(F::one());
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = blend(F::of(2.0));
            let fe = f(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[n].1 {
                blend(F::of(0.5))
            } else {
                blend(F::of(-0.5))
            };
            let fc = f(&contracted);
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                // Shrink towards the best vertex.
                let best_point = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for (x, &b) in entry.0.iter_mut().zip(&best_point) {
                        *x = b + (*x - b) * F::of(0.5);
                    }
                    entry.1 = f(&entry.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (p, v) = simplex.swap_remove(0);
    (p, v, converged)
}

const Q_GRID_LO: f64 = -1.0;
const Q_GRID_HI: f64 = 0.95;
const Q_GRID_STEP: f64 = 0.05;
const Q_REFINE_LO: f64 = -1.25;
const Q_REFINE_HI: f64 = 0.98;

fn fit_fixed_q<F: Real>(
    data: &FitData<'_, F>,
    q: F,
    max_iter: usize,
) -> (F, F, F, bool) {
    let (mean, variance) = data.moments();
    let sigma0 = data.sigma_guess(q, variance);
    let mut objective = |p: &[F]| -> F {
        let sigma = p[0].exp();
        data.profiled_sse(q, sigma, p[1]).0
    };
    let scale = [F::of(0.15), (sigma0 * F::of(0.05)).max(F::of(0.5))];
    let (p, sse, converged) = nelder_mead(&mut objective, &[sigma0.ln(), mean], &scale, max_iter);
    (p[0].exp(), p[1], sse, converged)
}

/// Least-squares q-Gaussian fit over `(amplitude, sigma, center)` and, when
/// `q_fixed` is absent, `q`. Needs at least eight nonzero samples.
pub fn fit_q_gaussian_xy<F: Real>(xs: &[F], ys: &[F], q_fixed: Option<F>) -> Result<QGaussianFit<F>> {
    if xs.len() != ys.len() {
        return Err(Error::Config("fit input lengths differ".into()));
    }
    let nonzero = ys.iter().filter(|y| **y > F::zero()).count();
    if nonzero < 8 {
        return Err(Error::InsufficientData {
            needed: 8,
            got: nonzero,
        });
    }
    if let Some(q) = q_fixed {
        if !(q < F::one()) {
            return Err(Error::UnsupportedParameter {
                name: "q_fixed",
                value: q.as_f64(),
            });
        }
    }
    let data = FitData::new(xs, ys);

    let build = |q: F, sigma: F, mu: F, fixed: bool| -> QGaussianFit<F> {
        let (_, amp) = data.profiled_sse(q, sigma, mu);
        let sse = data.direct_sse(q, sigma, mu, amp);
        let rms = (sse / F::from_usize(xs.len()).unwrap()).sqrt();
        QGaussianFit {
            q,
            sigma_q: sigma,
            amplitude: amp,
            center: mu,
            residual_rms: rms,
            q_fixed: fixed,
        }
    };

    match q_fixed {
        Some(q) => {
            let (sigma, mu, _, converged) = fit_fixed_q(&data, q, 400);
            let fit = build(q, sigma, mu, true);
            if !converged {
                return Err(Error::FitFailure {
                    best: Box::new(fit.to_f64()),
                });
            }
            Ok(fit)
        }
        None => {
            // Coarse scan over q, then joint refinement.
            let mut best: Option<(F, F, F, F)> = None;
            let steps = ((Q_GRID_HI - Q_GRID_LO) / Q_GRID_STEP).round() as usize;
            for k in 0..=steps {
                let q = F::of(Q_GRID_LO + k as f64 * Q_GRID_STEP);
                let (sigma, mu, sse, _) = fit_fixed_q(&data, q, 120);
                if best.as_ref().is_none_or(|b| sse < b.3) {
                    best = Some((q, sigma, mu, sse));
                }
            }
            let (q0, sigma0, mu0, _) = best.expect("grid is nonempty");
            let lo = F::of(Q_REFINE_LO);
            let hi = F::of(Q_REFINE_HI);
            let mut objective = |p: &[F]| -> F {
                if p[0] < lo || p[0] > hi {
                    return F::infinity();
                }
                data.profiled_sse(p[0], p[1].exp(), p[2]).0
            };
            let start = [q0, sigma0.ln(), mu0];
            let scale = [F::of(0.03), F::of(0.05), (sigma0 * F::of(0.02)).max(F::of(0.5))];
            let (p, _, converged) = nelder_mead(&mut objective, &start, &scale, 600);
            let fit = build(p[0], p[1].exp(), p[2], false);
            if !converged {
                return Err(Error::FitFailure {
                    best: Box::new(fit.to_f64()),
                });
            }
            Ok(fit)
        }
    }
}

/// Fit over the sites of a distribution; see [`fit_q_gaussian_xy`].
pub fn fit_q_gaussian<F: Real>(dist: &Distribution<F>, q_fixed: Option<F>) -> Result<QGaussianFit<F>> {
    let (xs, ys) = dist.xy();
    fit_q_gaussian_xy(&xs, &ys, q_fixed)
}

/// Estimates the common q of two snapshots of one evolution taken at `t_a`
/// and `t_b`, constraining the fitted widths to the self-similar ratio
/// `(t_b / t_a)^{1/(3-q)}`. Returns the q minimizing the joint relative
/// residual, located by a coarse scan plus golden-section refinement.
pub fn estimate_q_two_times<F: Real>(
    dist_a: &Distribution<F>,
    t_a: u64,
    dist_b: &Distribution<F>,
    t_b: u64,
) -> Result<F> {
    if t_b <= t_a {
        return Err(Error::Config(format!(
            "snapshot times must increase, got {t_a} then {t_b}"
        )));
    }
    let (xs_a, ys_a) = dist_a.xy();
    let (xs_b, ys_b) = dist_b.xy();
    for (name, ys) in [("first", &ys_a), ("second", &ys_b)] {
        let nonzero = ys.iter().filter(|y| **y > F::zero()).count();
        if nonzero < 8 {
            return Err(Error::Config(format!(
                "{name} distribution has too few nonzero bins for a joint fit"
            )));
        }
    }
    let data_a = FitData::new(&xs_a, &ys_a);
    let data_b = FitData::new(&xs_b, &ys_b);
    let ratio = F::from_u64(t_b).unwrap() / F::from_u64(t_a).unwrap();

    let (mean_a, var_a) = data_a.moments();
    let (mean_b, _) = data_b.moments();

    // Joint relative residual at fixed q, optimizing the nuisance parameters.
    let joint = |q: F| -> F {
        let width_ratio = ratio.powf((F::of(3.0) - q).recip());
        let sigma0 = data_a.sigma_guess(q, var_a);
        let mut objective = |p: &[F]| -> F {
            let sigma_a = p[0].exp();
            let sigma_b = sigma_a * width_ratio;
            let (sse_a, _) = data_a.profiled_sse(q, sigma_a, p[1]);
            let (sse_b, _) = data_b.profiled_sse(q, sigma_b, p[2]);
            sse_a / data_a.sum_yy + sse_b / data_b.sum_yy
        };
        let start = [sigma0.ln(), mean_a, mean_b];
        let scale = [F::of(0.15), (sigma0 * F::of(0.05)).max(F::of(0.5)), (sigma0 * F::of(0.05)).max(F::of(0.5))];
        nelder_mead(&mut objective, &start, &scale, 200).1
    };

    let steps = ((Q_GRID_HI - Q_GRID_LO) / Q_GRID_STEP).round() as usize;
    let mut best_q = F::of(Q_GRID_LO);
    let mut best_v = F::infinity();
    for k in 0..=steps {
        let q = F::of(Q_GRID_LO + k as f64 * Q_GRID_STEP);
        let v = joint(q);
        if v < best_v {
            best_v = v;
            best_q = q;
        }
    }
    // Golden-section refinement in the winning grid cell.
    let gr = F::of(0.618_033_988_749_894_8);
    let mut lo = (best_q - F::of(Q_GRID_STEP)).max(F::of(Q_GRID_LO));
    let mut hi = (best_q + F::of(Q_GRID_STEP)).min(F::of(Q_GRID_HI));
    let mut x1 = hi - (hi - lo) * gr;
    let mut x2 = lo + (hi - lo) * gr;
    let mut f1 = joint(x1);
    let mut f2 = joint(x2);
    for _ in 0..30 {
        if (hi - lo).abs() < F::of(5e-4) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - (hi - lo) * gr;
            f1 = joint(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + (hi - lo) * gr;
            f2 = joint(x2);
        }
    }
    let q_refined = if f1 < f2 { x1 } else { x2 };
    let v_refined = f1.min(f2).min(best_v);

    // Guard against the constraint being grossly inconsistent with the data:
    // compare against unconstrained fits at the same q.
    let (_, _, sse_a, _) = fit_fixed_q(&data_a, q_refined, 200);
    let (_, _, sse_b, _) = fit_fixed_q(&data_b, q_refined, 200);
    let independent = sse_a / data_a.sum_yy + sse_b / data_b.sum_yy;
    if v_refined > independent * F::of(4.0) + F::of(1e-9) {
        let (sigma, mu, _, _) = fit_fixed_q(&data_a, q_refined, 200);
        let fit = QGaussianFit {
            q: q_refined,
            sigma_q: sigma,
            amplitude: F::zero(),
            center: mu,
            residual_rms: v_refined.sqrt(),
            q_fixed: false,
        };
        return Err(Error::FitFailure {
            best: Box::new(fit.to_f64()),
        });
    }
    Ok(if v_refined < best_v { q_refined } else { best_q })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_q_gaussian(q: f64, sigma: f64, mu: f64, amp: f64, lo: i64, hi: i64) -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (lo..=hi).map(|j| j as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let u = (x - mu) / sigma;
                amp * q_exp_neg(q, u * u)
            })
            .collect();
        (xs, ys)
    }

    #[test]
    fn q_exp_limits() {
        // q = 0 is the truncated parabola.
        assert_eq!(q_exp_neg(0.0, 0.25), 0.75);
        assert_eq!(q_exp_neg(0.0, 1.0), 0.0);
        assert_eq!(q_exp_neg(0.0, 2.0), 0.0);
        // q = 0.999 is within 1e-3 of the exponential pointwise.
        for z in [0.0f64, 0.3, 1.0, 2.5, 5.0] {
            let diff = (q_exp_neg(0.999, z) - (-z).exp()).abs();
            assert!(diff < 1e-3, "z = {z}, diff = {diff}");
        }
        // Inside the Gaussian window the exponential is used exactly.
        assert_eq!(q_exp_neg(1.0, 2.0), (-2.0_f64).exp());
    }

    #[test]
    fn recovers_exact_parameters_fixed_q() {
        let (xs, ys) = sample_q_gaussian(0.5, 200.0, 0.0, 1e-3, -400, 400);
        let fit = fit_q_gaussian_xy(&xs, &ys, Some(0.5)).unwrap();
        assert!((fit.sigma_q - 200.0).abs() / 200.0 < 5e-3, "sigma {}", fit.sigma_q);
        assert!(fit.center.abs() < 0.5, "center {}", fit.center);
        assert!((fit.amplitude - 1e-3).abs() / 1e-3 < 1e-2);
        assert!(fit.residual_rms < 1e-9);
        assert!(fit.q_fixed);
    }

    #[test]
    fn recovers_exact_parameters_free_q() {
        let (xs, ys) = sample_q_gaussian(0.5, 200.0, 0.0, 1e-3, -400, 400);
        let fit = fit_q_gaussian_xy(&xs, &ys, None).unwrap();
        assert!((fit.q - 0.5).abs() < 0.01, "q {}", fit.q);
        assert!((fit.sigma_q - 200.0).abs() / 200.0 < 5e-3, "sigma {}", fit.sigma_q);
        assert!(!fit.q_fixed);
    }

    #[test]
    fn fit_is_idempotent() {
        let (xs, ys) = sample_q_gaussian(0.3, 150.0, 12.0, 2e-3, -300, 340);
        let first = fit_q_gaussian_xy(&xs, &ys, None).unwrap();
        let resampled: Vec<f64> = xs.iter().map(|&x| first.model_at(x)).collect();
        let second = fit_q_gaussian_xy(&xs, &resampled, None).unwrap();
        assert!((second.q - first.q).abs() < 0.01);
        assert!((second.sigma_q - first.sigma_q).abs() / first.sigma_q < 5e-3);
    }

    #[test]
    fn scale_and_translation_covariance() {
        let (xs, ys) = sample_q_gaussian(0.5, 120.0, -5.0, 1e-3, -260, 250);
        let base = fit_q_gaussian_xy(&xs, &ys, Some(0.5)).unwrap();

        let scaled: Vec<f64> = ys.iter().map(|y| y * 7.5).collect();
        let fit_scaled = fit_q_gaussian_xy(&xs, &scaled, Some(0.5)).unwrap();
        assert!((fit_scaled.amplitude / base.amplitude - 7.5).abs() < 1e-6);
        assert!((fit_scaled.sigma_q - base.sigma_q).abs() / base.sigma_q < 1e-6);
        assert!((fit_scaled.center - base.center).abs() < 1e-6);

        let shifted: Vec<f64> = xs.iter().map(|x| x + 40.0).collect();
        let fit_shifted = fit_q_gaussian_xy(&shifted, &ys, Some(0.5)).unwrap();
        assert!((fit_shifted.center - (base.center + 40.0)).abs() < 1e-6);
        assert!((fit_shifted.sigma_q - base.sigma_q).abs() / base.sigma_q < 1e-6);
    }

    #[test]
    fn rejects_sparse_input() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let ys = vec![0.1; 6];
        match fit_q_gaussian_xy(&xs, &ys, None) {
            Err(Error::InsufficientData { needed: 8, .. }) => {}
            other => panic!("expected insufficient data, got {other:?}"),
        }
    }

    #[test]
    fn rejects_q_fixed_at_or_above_one() {
        let (xs, ys) = sample_q_gaussian(0.5, 50.0, 0.0, 1.0, -100, 100);
        assert!(fit_q_gaussian_xy(&xs, &ys, Some(1.0)).is_err());
        assert!(fit_q_gaussian_xy(&xs, &ys, Some(1.5)).is_err());
    }

    #[test]
    fn two_time_estimate_on_synthetic_pair() {
        let q = 0.5;
        let sigma_a = 80.0;
        let ratio = 10.0_f64.powf(1.0 / 2.5);
        let (xs_a, ys_a) = sample_q_gaussian(q, sigma_a, 0.0, 1e-3, -250, 250);
        let (xs_b, ys_b) = sample_q_gaussian(q, sigma_a * ratio, 0.0, 1e-3 / ratio, -450, 450);
        let dist_a = Distribution::new(-250, ys_a.clone()).unwrap();
        let dist_b = Distribution::new(-450, ys_b.clone()).unwrap();
        let _ = (xs_a, xs_b);
        let q_est = estimate_q_two_times(&dist_a, 100_000, &dist_b, 1_000_000).unwrap();
        assert!((q_est - 0.5).abs() < 0.02, "q_est = {q_est}");
    }

    #[test]
    fn two_time_estimate_rejects_bad_times() {
        let (_, ys) = sample_q_gaussian(0.5, 50.0, 0.0, 1.0, -100, 100);
        let dist = Distribution::new(-100, ys).unwrap();
        assert!(estimate_q_two_times(&dist, 10, &dist, 10).is_err());
    }
}
