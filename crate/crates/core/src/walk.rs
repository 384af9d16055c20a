//! Quantum walker states on the integer line and the unitary step maps.
//!
//! A walker carries a two-component complex amplitude `(a_j, b_j)` per lattice
//! site inside an active window; sites outside the window are exactly zero.
//! Two step maps are provided: the homogeneous walk with a fixed coin angle,
//! and the feed-forward walk whose coin at site `j` is built from the moduli
//! of the neighboring amplitudes of the previous step,
//! `g_j = |a_{j-1}| + i |b_{j+1}|`.

use num_complex::Complex;

use crate::analysis::Distribution;
use crate::error::{Error, Result};
use crate::float::Real;

/// Default per-site probability below which window edges are trimmed.
pub const DEFAULT_EPSILON_TRUNC: f64 = 1e-30;

/// Two-component amplitude at one lattice site: `a` shifts left, `b` right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpPair<F: Real> {
    pub a: Complex<F>,
    pub b: Complex<F>,
}

impl<F: Real> AmpPair<F> {
    pub fn new(a: Complex<F>, b: Complex<F>) -> Self {
        Self { a, b }
    }

    pub fn zero() -> Self {
        Self {
            a: Complex::new(F::zero(), F::zero()),
            b: Complex::new(F::zero(), F::zero()),
        }
    }

    /// Site probability `|a|^2 + |b|^2`.
    pub fn probability(&self) -> F {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    fn is_finite(&self) -> bool {
        self.a.re.is_finite()
            && self.a.im.is_finite()
            && self.b.re.is_finite()
            && self.b.im.is_finite()
    }
}

/// Coin angle of the homogeneous walk; the walk only depends on `cos(theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinAngle<F: Real> {
    theta: F,
}

impl<F: Real> CoinAngle<F> {
    pub fn new(theta: F) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::Config("coin angle must be finite".into()));
        }
        Ok(Self { theta })
    }

    /// The balanced coin, `theta = pi / 4`.
    pub fn hadamard() -> Self {
        Self {
            theta: F::FRAC_PI_4(),
        }
    }

    pub fn theta(&self) -> F {
        self.theta
    }
}

/// Site-dependent coin rate `g` with `|g|^2` clamped to at most one, so the
/// flip amplitude `sqrt(1 - |g|^2)` is always real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateValue<F: Real> {
    g: Complex<F>,
    norm_sqr: F,
}

impl<F: Real> RateValue<F> {
    pub fn new(g: Complex<F>) -> Self {
        let mut norm_sqr = g.re * g.re + g.im * g.im;
        let mut g = g;
        if norm_sqr > F::one() {
            let inv = norm_sqr.sqrt().recip();
            g = Complex::new(g.re * inv, g.im * inv);
            norm_sqr = F::one();
        }
        Self { g, norm_sqr }
    }

    /// Builds the rate from the squared moduli of the two neighbor components,
    /// `g = sqrt(asq) + i sqrt(bsq)`.
    fn from_parts(asq: F, bsq: F) -> Self {
        let mut g = Complex::new(asq.sqrt(), bsq.sqrt());
        let mut norm_sqr = asq + bsq;
        if norm_sqr > F::one() {
            let inv = norm_sqr.sqrt().recip();
            g = Complex::new(g.re * inv, g.im * inv);
            norm_sqr = F::one();
        }
        Self { g, norm_sqr }
    }

    pub fn g(&self) -> Complex<F> {
        self.g
    }

    pub fn norm_sqr(&self) -> F {
        self.norm_sqr
    }

    /// Off-diagonal coin coefficient `sqrt(1 - |g|^2)`.
    pub fn flip_amplitude(&self) -> F {
        (F::one() - self.norm_sqr).sqrt()
    }
}

/// Walker state over a contiguous active window `[window_lo, window_hi]`.
///
/// The probability discarded when trimming window edges accumulates in
/// `truncated_mass`, so `sum_j P_j + truncated_mass` stays at one.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState<F: Real> {
    window_lo: i64,
    amps: Vec<AmpPair<F>>,
    step_count: u64,
    truncated_mass: F,
    epsilon_trunc: F,
}

impl<F: Real> WalkerState<F> {
    /// Builds a state from per-site amplitudes starting at `window_lo`.
    /// The total probability must be one within 1e-10.
    pub fn from_pairs(window_lo: i64, amps: Vec<AmpPair<F>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Config("walker window must hold at least one site".into()));
        }
        if !amps.iter().all(AmpPair::is_finite) {
            return Err(Error::Config("walker amplitudes must be finite".into()));
        }
        let state = Self {
            window_lo,
            amps,
            step_count: 0,
            truncated_mass: F::zero(),
            epsilon_trunc: F::of(DEFAULT_EPSILON_TRUNC),
        };
        let norm = state.total_probability();
        if (norm - F::one()).abs() > F::of(1e-10) {
            return Err(Error::Config(format!(
                "walker state not normalized: total probability {}",
                norm.as_f64()
            )));
        }
        Ok(state)
    }

    /// State concentrated at one site with spinor `(1/sqrt(2), i/sqrt(2))`.
    pub fn single_site(site: i64) -> Self {
        let r = F::FRAC_1_SQRT_2();
        let amp = AmpPair::new(Complex::new(r, F::zero()), Complex::new(F::zero(), r));
        Self::from_pairs(site, vec![amp]).expect("single-site state is normalized")
    }

    /// The two-site default initial state `(a, b) = (1/2, i/2)` on sites 0 and 1.
    pub fn two_site_default() -> Self {
        let h = F::of(0.5);
        let amp = AmpPair::new(Complex::new(h, F::zero()), Complex::new(F::zero(), h));
        Self::from_pairs(0, vec![amp, amp]).expect("two-site state is normalized")
    }

    /// Real two-site family: `(a_0, b_0) = (cos(beta pi), sin(beta pi)) / sqrt(2)`
    /// and `(a_1, b_1) = (cos(gamma pi), sin(gamma pi)) / sqrt(2)`.
    ///
    /// Half-turn multiples produce exact zeros (`cos(pi/2)` is not zero in
    /// floating point); the nonlinear coin amplifies any such residue, which
    /// would turn the exactly localized members of this family into slowly
    /// seeded spreading ones.
    pub fn from_coin_angles(beta: F, gamma: F) -> Result<Self> {
        for (name, v) in [("beta", beta), ("gamma", gamma)] {
            if !(v >= F::zero() && v <= F::one()) {
                return Err(Error::UnsupportedParameter {
                    name,
                    value: v.as_f64(),
                });
            }
        }
        let r = F::FRAC_1_SQRT_2();
        let spinor = |angle: F| {
            let half_turns = angle + angle;
            let (s, c) = if half_turns == half_turns.trunc() {
                match half_turns.to_i64().unwrap_or(0).rem_euclid(4) {
                    0 => (F::zero(), F::one()),
                    1 => (F::one(), F::zero()),
                    2 => (F::zero(), -F::one()),
                    _ => (-F::one(), F::zero()),
                }
            } else {
                (angle * F::PI()).sin_cos()
            };
            AmpPair::new(
                Complex::new(c * r, F::zero()),
                Complex::new(s * r, F::zero()),
            )
        };
        Self::from_pairs(0, vec![spinor(beta), spinor(gamma)])
    }

    /// Sets the edge-trimming threshold, which must lie in `(0, 1e-6)`.
    pub fn with_epsilon_trunc(mut self, epsilon: F) -> Result<Self> {
        if !(epsilon > F::zero() && epsilon < F::of(1e-6)) {
            return Err(Error::Config(format!(
                "epsilon_trunc must lie in (0, 1e-6), got {}",
                epsilon.as_f64()
            )));
        }
        self.epsilon_trunc = epsilon;
        Ok(self)
    }

    /// Rebuilds a mid-run state, e.g. from a snapshot. The ledger identity
    /// `sum P + truncated_mass = 1` must hold within 1e-10.
    pub fn restore(
        window_lo: i64,
        amps: Vec<AmpPair<F>>,
        step_count: u64,
        truncated_mass: F,
        epsilon_trunc: F,
    ) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Config("walker window must hold at least one site".into()));
        }
        if !amps.iter().all(AmpPair::is_finite) || !truncated_mass.is_finite() {
            return Err(Error::Config("walker amplitudes must be finite".into()));
        }
        let state = Self {
            window_lo,
            amps,
            step_count,
            truncated_mass,
            epsilon_trunc,
        };
        let norm = state.total_probability();
        if (norm - F::one()).abs() > F::of(1e-10) {
            return Err(Error::Config(format!(
                "walker state not normalized: total probability {}",
                norm.as_f64()
            )));
        }
        Ok(state)
    }

    pub fn window(&self) -> (i64, i64) {
        (self.window_lo, self.window_lo + self.amps.len() as i64 - 1)
    }

    pub fn window_len(&self) -> usize {
        self.amps.len()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn truncated_mass(&self) -> F {
        self.truncated_mass
    }

    pub fn epsilon_trunc(&self) -> F {
        self.epsilon_trunc
    }

    pub fn amps(&self) -> &[AmpPair<F>] {
        &self.amps
    }

    /// Amplitude pair at `site`; exactly zero outside the window.
    pub fn amp(&self, site: i64) -> AmpPair<F> {
        let idx = site - self.window_lo;
        if idx >= 0 && (idx as usize) < self.amps.len() {
            self.amps[idx as usize]
        } else {
            AmpPair::zero()
        }
    }

    /// Total probability inside the window.
    pub fn total_probability(&self) -> F {
        let mut sum = F::zero();
        for p in &self.amps {
            sum += p.probability();
        }
        sum + self.truncated_mass
    }

    fn trim_edges(&mut self) {
        let eps = self.epsilon_trunc;
        let mut front = 0usize;
        let mut back = self.amps.len();
        let mut trimmed = F::zero();
        while back - front > 1 {
            let p = self.amps[front].probability();
            if p < eps {
                trimmed += p;
                front += 1;
            } else {
                break;
            }
        }
        while back - front > 1 {
            let p = self.amps[back - 1].probability();
            if p < eps {
                trimmed += p;
                back -= 1;
            } else {
                break;
            }
        }
        if front == 0 && back == self.amps.len() {
            return;
        }
        self.amps.truncate(back);
        self.amps.drain(..front);
        self.window_lo += front as i64;
        self.truncated_mass += trimmed;
    }
}

/// Per-site rate `g_j = |a_{j-1}| + i |b_{j+1}|` read from the current state.
///
/// Out-of-window neighbors contribute zero, so this is total over all sites.
pub fn rate_function<F: Real>(state: &WalkerState<F>, site: i64) -> RateValue<F> {
    RateValue::from_parts(
        state.amp(site - 1).a.norm_sqr(),
        state.amp(site + 1).b.norm_sqr(),
    )
}

#[inline]
fn apply_coin<F: Real>(rate: RateValue<F>, amp: AmpPair<F>) -> (Complex<F>, Complex<F>) {
    let g = rate.g;
    let s = rate.flip_amplitude();
    let new_a = g * amp.a - amp.b * s;
    let new_b = amp.a * s + g.conj() * amp.b;
    (new_a, new_b)
}

/// Shared kernel of both step maps: applies per-site rates drawn only from
/// the pre-step state, grows the window by one site per side and trims edges
/// below the threshold. New amplitudes go to a separate buffer, so the old
/// state is never aliased while rates are still being read.
fn step_with_rates<F: Real>(
    src: &WalkerState<F>,
    mut rate_for: impl FnMut(usize) -> RateValue<F>,
) -> Result<WalkerState<F>> {
    let n = src.amps.len();
    let mut new_amps = vec![AmpPair::zero(); n + 2];
    let mut finite = true;
    for i in 0..n {
        let (na, nb) = apply_coin(rate_for(i), src.amps[i]);
        // Window origin shifts down by one, so site j-1 lands at index i and
        // site j+1 at index i+2.
        new_amps[i].a = na;
        new_amps[i + 2].b = nb;
        finite &= na.re.is_finite() && na.im.is_finite() && nb.re.is_finite() && nb.im.is_finite();
    }
    if !finite {
        let bad = new_amps
            .iter()
            .position(|p| !p.is_finite())
            .expect("non-finite site exists");
        return Err(Error::NonFiniteAmplitude {
            site: src.window_lo - 1 + bad as i64,
            step: src.step_count,
        });
    }
    let mut out = WalkerState {
        window_lo: src.window_lo - 1,
        amps: new_amps,
        step_count: src.step_count + 1,
        truncated_mass: src.truncated_mass,
        epsilon_trunc: src.epsilon_trunc,
    };
    out.trim_edges();
    Ok(out)
}

/// Rate at buffer index `i` of the feed-forward coin, with out-of-window
/// neighbors reading as zero.
#[inline]
fn rate_at_index<F: Real>(amps: &[AmpPair<F>], i: usize) -> RateValue<F> {
    let asq = if i >= 1 {
        amps[i - 1].a.norm_sqr()
    } else {
        F::zero()
    };
    let bsq = if i + 1 < amps.len() {
        amps[i + 1].b.norm_sqr()
    } else {
        F::zero()
    };
    RateValue::from_parts(asq, bsq)
}

/// One step of the homogeneous walk: the constant-rate reduction of the
/// feed-forward kernel with `g = cos(theta)`, bit-for-bit.
pub fn homogeneous_step<F: Real>(state: &WalkerState<F>, coin: CoinAngle<F>) -> Result<WalkerState<F>> {
    let rate = RateValue::new(Complex::new(coin.theta().cos(), F::zero()));
    step_with_rates(state, |_| rate)
}

/// One step of the feed-forward walk. All rates are computed from the
/// pre-step state before any new amplitude is written.
pub fn feed_forward_step<F: Real>(state: &WalkerState<F>) -> Result<WalkerState<F>> {
    step_with_rates(state, |i| rate_at_index(&state.amps, i))
}

/// Splitting of one feed-forward step into its Markovian and interference
/// parts. Entry `i` describes the step out of source site `window_lo + i`:
/// the `a` parts land one site left, the `b` parts one site right, and
/// `markov + interference` reconstructs the post-step probabilities.
#[derive(Debug, Clone)]
pub struct StepDecomposition<F: Real> {
    window_lo: i64,
    pub markov_a: Vec<F>,
    pub markov_b: Vec<F>,
    pub interference_a: Vec<F>,
    pub interference_b: Vec<F>,
    pub beta: Vec<F>,
}

impl<F: Real> StepDecomposition<F> {
    pub fn window(&self) -> (i64, i64) {
        (self.window_lo, self.window_lo + self.beta.len() as i64 - 1)
    }
}

/// Decomposes the upcoming feed-forward step from `state` into per-site
/// Markov transfer terms and interference terms `±2 sqrt(1-|g|^2) beta`,
/// where `beta_j = Re[g_j a_j conj(b_j)]`.
pub fn decompose_step<F: Real>(state: &WalkerState<F>) -> StepDecomposition<F> {
    let n = state.amps.len();
    let rates: Vec<RateValue<F>> = (0..n).map(|i| rate_at_index(&state.amps, i)).collect();
    let mut dec = StepDecomposition {
        window_lo: state.window_lo,
        markov_a: Vec::with_capacity(n),
        markov_b: Vec::with_capacity(n),
        interference_a: Vec::with_capacity(n),
        interference_b: Vec::with_capacity(n),
        beta: Vec::with_capacity(n),
    };
    let two = F::of(2.0);
    for (amp, rate) in state.amps.iter().zip(&rates) {
        let gsq = rate.norm_sqr();
        let s = rate.flip_amplitude();
        let la = amp.a.norm_sqr();
        let lb = amp.b.norm_sqr();
        let beta = (rate.g() * amp.a * amp.b.conj()).re;
        dec.markov_a.push(gsq * la + (F::one() - gsq) * lb);
        dec.markov_b.push((F::one() - gsq) * la + gsq * lb);
        dec.interference_a.push(-two * s * beta);
        dec.interference_b.push(two * s * beta);
        dec.beta.push(beta);
    }
    dec
}

/// Per-site probabilities `P_j = |a_j|^2 + |b_j|^2` over the window.
pub fn probability_distribution<F: Real>(state: &WalkerState<F>) -> Distribution<F> {
    Distribution::from_nonneg(
        state.window_lo,
        state.amps.iter().map(AmpPair::probability).collect(),
    )
}
