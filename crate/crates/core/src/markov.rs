//! The classical dynamics obtained from the feed-forward walk by dropping
//! the interference terms: per step, site occupations `(L_j, R_j)` obey
//!
//! ```text
//! R_{j+1}' + L_{j-1}' = R_j + L_j
//! R_{j+1}' - L_{j-1}' = (2 (L_{j-1} + R_{j+1}) - 1) (R_j - L_j)
//! ```
//!
//! with all right-hand sides read from the pre-step state and out-of-window
//! neighbors equal to zero.

use crate::analysis::Distribution;
use crate::error::{Error, Result};
use crate::float::Real;
use crate::walk::{WalkerState, DEFAULT_EPSILON_TRUNC};

/// Occupation pair at one site: `l` moves left, `r` moves right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccPair<F: Real> {
    pub l: F,
    pub r: F,
}

impl<F: Real> OccPair<F> {
    pub fn new(l: F, r: F) -> Self {
        Self { l, r }
    }

    pub fn zero() -> Self {
        Self {
            l: F::zero(),
            r: F::zero(),
        }
    }

    pub fn mass(&self) -> F {
        self.l + self.r
    }
}

/// Occupation state over a contiguous window with the same truncation ledger
/// as the walker states.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovState<F: Real> {
    window_lo: i64,
    occ: Vec<OccPair<F>>,
    step_count: u64,
    truncated_mass: F,
    epsilon_trunc: F,
}

impl<F: Real> MarkovState<F> {
    /// Builds a state from per-site occupations; total mass must be one
    /// within 1e-12 and every entry non-negative.
    pub fn from_pairs(window_lo: i64, occ: Vec<OccPair<F>>) -> Result<Self> {
        Self::restore(window_lo, occ, 0, F::zero(), F::of(DEFAULT_EPSILON_TRUNC))
    }

    /// Rebuilds a mid-run state; `sum (L + R) + truncated_mass` must be one
    /// within 1e-12.
    pub fn restore(
        window_lo: i64,
        occ: Vec<OccPair<F>>,
        step_count: u64,
        truncated_mass: F,
        epsilon_trunc: F,
    ) -> Result<Self> {
        if occ.is_empty() {
            return Err(Error::Config("occupation window must hold at least one site".into()));
        }
        for (i, pair) in occ.iter().enumerate() {
            for v in [pair.l, pair.r] {
                if !(v >= F::zero()) || !v.is_finite() {
                    return Err(Error::ModelViolation {
                        site: window_lo + i as i64,
                        value: v.as_f64(),
                    });
                }
            }
        }
        let state = Self {
            window_lo,
            occ,
            step_count,
            truncated_mass,
            epsilon_trunc,
        };
        let total = state.total_mass();
        if (total - F::one()).abs() > F::of(1e-12) {
            return Err(Error::Config(format!(
                "occupation state not normalized: total mass {}",
                total.as_f64()
            )));
        }
        Ok(state)
    }

    /// Two-site default initial condition: `(L, R) = (1/4, 1/4)` on sites
    /// 0 and 1.
    pub fn two_site_default() -> Self {
        let q = F::of(0.25);
        Self::from_pairs(0, vec![OccPair::new(q, q), OccPair::new(q, q)])
            .expect("two-site occupations are normalized")
    }

    /// Mass one concentrated on a single site, split evenly.
    pub fn single_site(site: i64) -> Self {
        let h = F::of(0.5);
        Self::from_pairs(site, vec![OccPair::new(h, h)]).expect("single site is normalized")
    }

    /// Occupations induced by a walker state: `L = |a|^2`, `R = |b|^2`.
    pub fn from_walker(state: &WalkerState<F>) -> Self {
        let occ = state
            .amps()
            .iter()
            .map(|p| OccPair::new(p.a.norm_sqr(), p.b.norm_sqr()))
            .collect();
        Self {
            window_lo: state.window().0,
            occ,
            step_count: state.step_count(),
            truncated_mass: state.truncated_mass(),
            epsilon_trunc: state.epsilon_trunc(),
        }
    }

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

    pub fn window(&self) -> (i64, i64) {
        (self.window_lo, self.window_lo + self.occ.len() as i64 - 1)
    }

    pub fn window_len(&self) -> usize {
        self.occ.len()
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

    pub fn occupations(&self) -> &[OccPair<F>] {
        &self.occ
    }

    /// Occupation at `site`, zero outside the window.
    pub fn occ(&self, site: i64) -> OccPair<F> {
        let idx = site - self.window_lo;
        if idx >= 0 && (idx as usize) < self.occ.len() {
            self.occ[idx as usize]
        } else {
            OccPair::zero()
        }
    }

    pub fn total_mass(&self) -> F {
        let mut sum = F::zero();
        for p in &self.occ {
            sum += p.mass();
        }
        sum + self.truncated_mass
    }

    fn trim_edges(&mut self) {
        let eps = self.epsilon_trunc;
        let mut front = 0usize;
        let mut back = self.occ.len();
        let mut trimmed = F::zero();
        while back - front > 1 {
            let p = self.occ[front].mass();
            if p < eps {
                trimmed += p;
                front += 1;
            } else {
                break;
            }
        }
        while back - front > 1 {
            let p = self.occ[back - 1].mass();
            if p < eps {
                trimmed += p;
                back -= 1;
            } else {
                break;
            }
        }
        if front == 0 && back == self.occ.len() {
            return;
        }
        self.occ.truncate(back);
        self.occ.drain(..front);
        self.window_lo += front as i64;
        self.truncated_mass += trimmed;
    }
}

/// One step of the associated Markov dynamics. Values that round into
/// `(-1e-15, 0)` are clamped to zero; anything below that threshold is an
/// implementation bug and reported as a model violation.
pub fn markov_step<F: Real>(state: &MarkovState<F>) -> Result<MarkovState<F>> {
    let n = state.occ.len();
    let mut new_occ = vec![OccPair::zero(); n + 2];
    let half = F::of(0.5);
    let two = F::of(2.0);
    for i in 0..n {
        let OccPair { l, r } = state.occ[i];
        let coupling = {
            let left_l = if i >= 1 { state.occ[i - 1].l } else { F::zero() };
            let right_r = if i + 1 < n { state.occ[i + 1].r } else { F::zero() };
            left_l + right_r
        };
        let c = two * coupling - F::one();
        let sum = r + l;
        let diff = (r - l) * c;
        // Window origin shifts down by one: L lands at index i, R at i + 2.
        new_occ[i].l = half * (sum - diff);
        new_occ[i + 2].r = half * (sum + diff);
    }
    let floor = F::of(-1e-15);
    for (i, pair) in new_occ.iter_mut().enumerate() {
        for v in [&mut pair.l, &mut pair.r] {
            if *v < F::zero() {
                if *v < floor {
                    return Err(Error::ModelViolation {
                        site: state.window_lo - 1 + i as i64,
                        value: v.as_f64(),
                    });
                }
                *v = F::zero();
            }
        }
    }
    let mut out = MarkovState {
        window_lo: state.window_lo - 1,
        occ: new_occ,
        step_count: state.step_count + 1,
        truncated_mass: state.truncated_mass,
        epsilon_trunc: state.epsilon_trunc,
    };
    out.trim_edges();
    Ok(out)
}

/// Site masses `P_j = L_j + R_j`.
pub fn markov_distribution<F: Real>(state: &MarkovState<F>) -> Distribution<F> {
    Distribution::from_nonneg(
        state.window_lo,
        state.occ.iter().map(OccPair::mass).collect(),
    )
}
