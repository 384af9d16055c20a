//! Distribution handling, q-Gaussian fitting, scaling-exponent regression
//! and residual power spectra.

mod fit;
mod spectrum;

pub use fit::{fit_q_gaussian, fit_q_gaussian_xy, estimate_q_two_times, q_exp_neg, QGaussianFit};
pub use spectrum::{residual_spectrum, SpectrumResult};

use crate::error::{Error, Result};
use crate::float::Real;

/// Probability mass per lattice site over a contiguous window.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<F: Real> {
    origin: i64,
    masses: Vec<F>,
    total: F,
}

impl<F: Real> Distribution<F> {
    pub fn new(origin: i64, masses: Vec<F>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::Config("distribution must hold at least one bin".into()));
        }
        if let Some(idx) = masses.iter().position(|m| !(*m >= F::zero()) || !m.is_finite()) {
            return Err(Error::ModelViolation {
                site: origin + idx as i64,
                value: masses[idx].as_f64(),
            });
        }
        Ok(Self::from_nonneg(origin, masses))
    }

    /// Internal constructor for masses already known to be non-negative.
    pub(crate) fn from_nonneg(origin: i64, masses: Vec<F>) -> Self {
        let mut total = F::zero();
        for m in &masses {
            total += *m;
        }
        Self { origin, masses, total }
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn masses(&self) -> &[F] {
        &self.masses
    }

    /// First and last site of the stored window.
    pub fn window(&self) -> (i64, i64) {
        (self.origin, self.origin + self.masses.len() as i64 - 1)
    }

    pub fn window_len(&self) -> usize {
        self.masses.len()
    }

    /// Total stored mass; at most one when truncation discarded some.
    pub fn total(&self) -> F {
        self.total
    }

    /// Mass at `site`, zero outside the window.
    pub fn mass_at(&self, site: i64) -> F {
        let idx = site - self.origin;
        if idx >= 0 && (idx as usize) < self.masses.len() {
            self.masses[idx as usize]
        } else {
            F::zero()
        }
    }

    pub fn count_nonzero(&self) -> usize {
        self.masses.iter().filter(|m| **m > F::zero()).count()
    }

    pub fn max_mass(&self) -> F {
        self.masses.iter().fold(F::zero(), |acc, &m| acc.max(m))
    }

    /// Mass-weighted mean site.
    pub fn mean(&self) -> F {
        let mut acc = F::zero();
        for (i, &m) in self.masses.iter().enumerate() {
            acc += m * F::from_i64(self.origin + i as i64).unwrap();
        }
        acc / self.total
    }

    /// Mass-weighted variance around the mean.
    pub fn variance(&self) -> F {
        let mu = self.mean();
        let mut acc = F::zero();
        for (i, &m) in self.masses.iter().enumerate() {
            let d = F::from_i64(self.origin + i as i64).unwrap() - mu;
            acc += m * d * d;
        }
        acc / self.total
    }

    /// Moment-based width in the `exp(-x^2/sigma^2)` convention used for the
    /// q-Gaussian widths: `sigma = sqrt(2 Var)`.
    pub fn sigma_gaussian(&self) -> F {
        (F::of(2.0) * self.variance()).sqrt()
    }

    /// `(site, mass)` pairs with the site index as a scalar.
    pub fn xy(&self) -> (Vec<F>, Vec<F>) {
        let xs = (0..self.masses.len())
            .map(|i| F::from_i64(self.origin + i as i64).unwrap())
            .collect();
        (xs, self.masses.clone())
    }
}

/// Centered moving average over `window` sites (odd). The distribution is
/// treated as zero outside its window, so the output window widens by half
/// the averaging window per side and the total mass is preserved.
pub fn running_average<F: Real>(dist: &Distribution<F>, window: usize) -> Result<Distribution<F>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "running-average window must be odd, got {window}"
        )));
    }
    if window == 1 {
        return Ok(dist.clone());
    }
    let h = window / 2;
    let n = dist.masses.len();
    let out_len = n + 2 * h;
    let inv_w = F::from_usize(window).unwrap().recip();
    let at = |i: isize| -> F {
        if i >= 0 && (i as usize) < n {
            dist.masses[i as usize]
        } else {
            F::zero()
        }
    };
    let mut out = Vec::with_capacity(out_len);
    // Output bin k sits at site origin - h + k; its window covers input
    // indices [k - 2h, k] in output coordinates.
    let mut acc = F::zero();
    for i in -(2 * h as isize)..=0 {
        acc += at(i);
    }
    out.push(acc * inv_w);
    for k in 1..out_len {
        let k = k as isize;
        acc += at(k) - at(k - 1 - 2 * h as isize);
        // The sliding subtraction can leave a negative rounding residue.
        out.push((acc * inv_w).max(F::zero()));
    }
    Ok(Distribution::from_nonneg(dist.origin - h as i64, out))
}

/// Fitted width samples `(t, sigma_q)` along one evolution.
#[derive(Debug, Clone)]
pub struct ScalingSeries<F: Real> {
    samples: Vec<(u64, F)>,
    q_used: F,
}

impl<F: Real> ScalingSeries<F> {
    pub fn new(q_used: F) -> Self {
        Self {
            samples: Vec::new(),
            q_used,
        }
    }

    pub fn push(&mut self, t: u64, sigma_q: F) -> Result<()> {
        if !(sigma_q > F::zero()) || !sigma_q.is_finite() {
            return Err(Error::Config(format!(
                "sigma_q must be positive, got {} at t = {t}",
                sigma_q.as_f64()
            )));
        }
        if t == 0 || self.samples.last().is_some_and(|&(prev, _)| prev >= t) {
            return Err(Error::Config(format!("time stamps must increase, got {t}")));
        }
        self.samples.push((t, sigma_q));
        Ok(())
    }

    pub fn samples(&self) -> &[(u64, F)] {
        &self.samples
    }

    pub fn q_used(&self) -> F {
        self.q_used
    }
}

/// Ordinary least squares of `sigma ~ t^z` on log-log axes over the samples
/// with `t_min <= t <= t_max`; returns the exponent and its standard error.
pub fn estimate_exponent<F: Real>(
    series: &ScalingSeries<F>,
    t_min: u64,
    t_max: u64,
) -> Result<(F, F)> {
    let pts: Vec<(F, F)> = series
        .samples
        .iter()
        .filter(|&&(t, _)| t >= t_min && t <= t_max)
        .map(|&(t, s)| (F::from_u64(t).unwrap(), s))
        .collect();
    loglog_regression(&pts)
}

/// Slope and slope standard error of `ln y` against `ln x`. Requires at
/// least five positive points.
pub fn loglog_regression<F: Real>(points: &[(F, F)]) -> Result<(F, F)> {
    if points.len() < 5 {
        return Err(Error::InsufficientData {
            needed: 5,
            got: points.len(),
        });
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > F::zero() && y > F::zero())) {
        return Err(Error::Config(format!(
            "log-log regression needs positive values, got ({}, {})",
            x.as_f64(),
            y.as_f64()
        )));
    }
    let logged: Vec<(F, F)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = F::from_usize(logged.len()).unwrap();
    let mut sx = F::zero();
    let mut sy = F::zero();
    for &(x, y) in &logged {
        sx += x;
        sy += y;
    }
    let mx = sx / n;
    let my = sy / n;
    let mut sxx = F::zero();
    let mut sxy = F::zero();
    for &(x, y) in &logged {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == F::zero() {
        return Err(Error::Config("log-log regression abscissae are degenerate".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut sse = F::zero();
    for &(x, y) in &logged {
        let r = y - (intercept + slope * x);
        sse += r * r;
    }
    let dof = F::from_usize(logged.len() - 2).unwrap();
    let stderr = if logged.len() > 2 {
        (sse / dof / sxx).sqrt()
    } else {
        F::zero()
    };
    Ok((slope, stderr))
}
