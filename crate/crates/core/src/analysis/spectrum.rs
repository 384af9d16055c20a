//! Power spectrum of fit residuals.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::float::Real;

use super::{loglog_regression, Distribution, QGaussianFit};

/// One-sided residual power spectrum with a log-log slope over the middle
/// two frequency decades (or the full positive band when narrower).
#[derive(Debug, Clone)]
pub struct SpectrumResult<F: Real> {
    pub frequencies: Vec<F>,
    pub power: Vec<F>,
    pub slope_loglog: F,
    pub slope_stderr: F,
}

/// In-place radix-2 Cooley-Tukey transform; `buf.len()` must be a power of two.
fn fft_in_place<F: Real>(buf: &mut [Complex<F>]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = -F::of(2.0) * F::PI() / F::from_usize(len).unwrap();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let angle = step * F::from_usize(k).unwrap();
                let (s, c) = angle.sin_cos();
                let w = Complex::new(c, s);
                let even = buf[start + k];
                let odd = buf[start + k + half] * w;
                buf[start + k] = even + odd;
                buf[start + k + half] = even - odd;
            }
        }
        len <<= 1;
    }
}

/// Residual `P_j - model_j` over the fit support, mean-removed, zero-padded
/// to the next power of two and Fourier transformed. Requires a support of
/// at least 32 sites.
pub fn residual_spectrum<F: Real>(
    dist: &Distribution<F>,
    fit: &QGaussianFit<F>,
) -> Result<SpectrumResult<F>> {
    let (win_lo, win_hi) = dist.window();
    let (lo, hi) = match fit.support_halfwidth() {
        Some(hw) => {
            let lo = (fit.center - hw).ceil().as_f64() as i64;
            let hi = (fit.center + hw).floor().as_f64() as i64;
            (lo.max(win_lo), hi.min(win_hi))
        }
        None => (win_lo, win_hi),
    };
    if hi < lo || (hi - lo + 1) < 32 {
        return Err(Error::InsufficientData {
            needed: 32,
            got: (hi - lo + 1).max(0) as usize,
        });
    }
    let support_len = (hi - lo + 1) as usize;
    let mut residual: Vec<F> = (lo..=hi)
        .map(|j| dist.mass_at(j) - fit.model_at(F::from_i64(j).unwrap()))
        .collect();
    let mut mean = F::zero();
    for &r in &residual {
        mean += r;
    }
    mean /= F::from_usize(support_len).unwrap();
    for r in &mut residual {
        *r -= mean;
    }
    let n = support_len.next_power_of_two();
    let mut buf: Vec<Complex<F>> = residual
        .into_iter()
        .map(|r| Complex::new(r, F::zero()))
        .chain(std::iter::repeat(Complex::new(F::zero(), F::zero())))
        .take(n)
        .collect();
    fft_in_place(&mut buf);

    let half = n / 2;
    let inv_n = F::from_usize(n).unwrap().recip();
    let mut frequencies = Vec::with_capacity(half + 1);
    let mut power = Vec::with_capacity(half + 1);
    for (k, c) in buf.iter().take(half + 1).enumerate() {
        frequencies.push(F::from_usize(k).unwrap() * inv_n);
        power.push(c.norm_sqr());
    }

    // Middle two decades of the positive-frequency band, in log space.
    let f_min = frequencies[1];
    let f_max = frequencies[half];
    let span = (f_max / f_min).log10();
    let (band_lo, band_hi) = if span > F::of(2.0) {
        let mid = (f_min.log10() + f_max.log10()) * F::of(0.5);
        (
            F::of(10.0).powf(mid - F::one()),
            F::of(10.0).powf(mid + F::one()),
        )
    } else {
        (f_min, f_max)
    };
    let pts: Vec<(F, F)> = frequencies
        .iter()
        .zip(&power)
        .skip(1)
        .filter(|(&f, &p)| f >= band_lo && f <= band_hi && p > F::zero())
        .map(|(&f, &p)| (f, p))
        .collect();
    let (slope, stderr) = loglog_regression(&pts)?;
    Ok(SpectrumResult {
        frequencies,
        power,
        slope_loglog: slope,
        slope_stderr: stderr,
    })
}
