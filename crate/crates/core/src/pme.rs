//! Explicit finite-difference solvers for degenerate diffusion on a uniform
//! 1-D grid: the porous medium equation `dp/dt = d2(p^m)/dx2`, and the
//! nonlinear density equation
//! `dr/dt = [ (1/2) d2(r^2)/dx2 - r^2 d2r/dx2 ] / (2 (1-r)^2)`
//! whose small-density limit is the m = 2 equation with a 1/4 coefficient.
//!
//! Both use zero-flux (mirrored-ghost) boundaries, so total mass is conserved
//! by construction for the porous-medium update while the nonlinear update
//! tracks its drift in a ledger.

use crate::error::{Error, Result};
use crate::float::Real;

/// Default safety margin below the linearized explicit-stability limit.
pub const DEFAULT_STABILITY_FACTOR: f64 = 0.4;

/// Non-negative density samples on a uniform grid of cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct PmeGrid<F: Real> {
    x_lo: F,
    dx: F,
    rho: Vec<F>,
    time: F,
    m: Option<F>,
    dt: F,
    stability_factor: F,
    mass_drift: F,
}

impl<F: Real> PmeGrid<F> {
    /// Empty (zero-density) grid over `[x_lo, x_hi]` with `n_cells` cells.
    /// `m` is the porosity exponent (at least one) or `None` for grids that
    /// only step the nonlinear density equation.
    pub fn new(x_lo: F, x_hi: F, n_cells: usize, m: Option<F>, dt: F) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::Config("grid needs at least one cell".into()));
        }
        if !(x_hi > x_lo) {
            return Err(Error::Config("grid bounds must satisfy x_lo < x_hi".into()));
        }
        if !(dt > F::zero()) || !dt.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {}", dt.as_f64())));
        }
        if let Some(m) = m {
            if !(m >= F::one()) || !m.is_finite() {
                return Err(Error::UnsupportedParameter {
                    name: "m",
                    value: m.as_f64(),
                });
            }
        }
        let dx = (x_hi - x_lo) / F::from_usize(n_cells).unwrap();
        Ok(Self {
            x_lo,
            dx,
            rho: vec![F::zero(); n_cells],
            time: F::zero(),
            m,
            dt,
            stability_factor: F::of(DEFAULT_STABILITY_FACTOR),
            mass_drift: F::zero(),
        })
    }

    pub fn with_stability_factor(mut self, factor: F) -> Result<Self> {
        if !(factor > F::zero() && factor <= F::one()) {
            return Err(Error::Config(format!(
                "stability factor must lie in (0, 1], got {}",
                factor.as_f64()
            )));
        }
        self.stability_factor = factor;
        Ok(self)
    }

    /// Replaces the density with samples of `f` at the cell centers,
    /// rejecting negative values.
    pub fn fill(&mut self, f: impl Fn(F) -> F) -> Result<()> {
        let values = (0..self.rho.len()).map(|i| f(self.cell_center(i))).collect();
        self.set_density(values)
    }

    /// Replaces the density with explicit per-cell values.
    pub fn set_density(&mut self, values: Vec<F>) -> Result<()> {
        if values.len() != self.rho.len() {
            return Err(Error::Config(format!(
                "expected {} density values, got {}",
                self.rho.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v >= F::zero()) || !v.is_finite()) {
            return Err(Error::ModelViolation {
                site: i as i64,
                value: values[i].as_f64(),
            });
        }
        self.rho = values;
        Ok(())
    }

    /// Rescales the density so the discrete mass is exactly `target`.
    pub fn normalize_mass(&mut self, target: F) -> Result<()> {
        let mass = self.mass();
        if !(mass > F::zero()) {
            return Err(Error::Config("cannot normalize an empty grid".into()));
        }
        let scale = target / mass;
        for r in &mut self.rho {
            *r *= scale;
        }
        Ok(())
    }

    pub fn x_lo(&self) -> F {
        self.x_lo
    }

    pub fn x_hi(&self) -> F {
        self.x_lo + self.dx * F::from_usize(self.rho.len()).unwrap()
    }

    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    pub fn dx(&self) -> F {
        self.dx
    }

    pub fn dt(&self) -> F {
        self.dt
    }

    pub fn set_dt(&mut self, dt: F) -> Result<()> {
        if !(dt > F::zero()) || !dt.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {}", dt.as_f64())));
        }
        self.dt = dt;
        Ok(())
    }

    pub fn time(&self) -> F {
        self.time
    }

    /// Offsets the internal clock (e.g. to the self-similar time origin).
    pub fn set_time(&mut self, t: F) {
        self.time = t;
    }

    pub fn m(&self) -> Option<F> {
        self.m
    }

    pub fn rho(&self) -> &[F] {
        &self.rho
    }

    pub fn mass_drift(&self) -> F {
        self.mass_drift
    }

    pub fn cell_center(&self, i: usize) -> F {
        self.x_lo + self.dx * (F::from_usize(i).unwrap() + F::of(0.5))
    }

    /// Total mass `sum rho * dx`.
    pub fn mass(&self) -> F {
        let mut acc = F::zero();
        for &r in &self.rho {
            acc += r;
        }
        acc * self.dx
    }

    pub fn max_density(&self) -> F {
        self.rho.iter().fold(F::zero(), |acc, &r| acc.max(r))
    }

    /// Mass-weighted mean position.
    pub fn mean(&self) -> F {
        let mut w = F::zero();
        let mut wx = F::zero();
        for (i, &r) in self.rho.iter().enumerate() {
            w += r;
            wx += r * self.cell_center(i);
        }
        wx / w
    }

    /// Mass-weighted variance.
    pub fn variance(&self) -> F {
        let mu = self.mean();
        let mut w = F::zero();
        let mut acc = F::zero();
        for (i, &r) in self.rho.iter().enumerate() {
            let d = self.cell_center(i) - mu;
            w += r;
            acc += r * d * d;
        }
        acc / w
    }

    /// Positions of the outermost cells with density above `threshold`.
    pub fn support_edges(&self, threshold: F) -> Option<(F, F)> {
        let first = self.rho.iter().position(|&r| r > threshold)?;
        let last = self.rho.iter().rposition(|&r| r > threshold)?;
        Some((self.cell_center(first), self.cell_center(last)))
    }

    /// Cell centers and densities, for fitting.
    pub fn xy(&self) -> (Vec<F>, Vec<F>) {
        let xs = (0..self.rho.len()).map(|i| self.cell_center(i)).collect();
        (xs, self.rho.clone())
    }

    /// Largest stable time step for the porous-medium update,
    /// `factor * dx^2 / (2 m max(rho)^{m-1})`.
    pub fn stable_dt_pme(&self) -> Result<F> {
        let m = self.m.ok_or_else(|| Error::Config("grid has no porosity exponent m".into()))?;
        let peak = self.max_density();
        let diffusivity = if peak > F::zero() {
            m * pow_real(peak, m - F::one())
        } else {
            F::zero()
        };
        if diffusivity == F::zero() {
            return Ok(F::infinity());
        }
        Ok(self.stability_factor * self.dx * self.dx / (F::of(2.0) * diffusivity))
    }

    /// Largest stable time step for the nonlinear density update, using the
    /// local effective diffusivity `rho / (2 (1 - rho))`.
    pub fn stable_dt_nlpde(&self) -> Result<F> {
        let peak = self.max_density();
        if peak >= F::one() {
            return Err(Error::DensityLimit {
                x: self.argmax_x().as_f64(),
                rho: peak.as_f64(),
            });
        }
        let diffusivity = peak / (F::of(2.0) * (F::one() - peak));
        if diffusivity == F::zero() {
            return Ok(F::infinity());
        }
        Ok(self.stability_factor * self.dx * self.dx / (F::of(2.0) * diffusivity))
    }

    fn argmax_x(&self) -> F {
        let mut best = 0usize;
        for (i, &r) in self.rho.iter().enumerate() {
            if r > self.rho[best] {
                best = i;
            }
        }
        self.cell_center(best)
    }

    /// One explicit step of `dp/dt = d2(p^m)/dx2` with zero-flux boundaries.
    pub fn pme_step(&self) -> Result<Self> {
        let m = self.m.ok_or_else(|| Error::Config("grid has no porosity exponent m".into()))?;
        let dt_max = self.stable_dt_pme()?;
        if self.dt > dt_max {
            return Err(Error::Unstable {
                dt: self.dt.as_f64(),
                dt_max: dt_max.as_f64(),
            });
        }
        let n = self.rho.len();
        let u: Vec<F> = self.rho.iter().map(|&r| pow_real(r, m)).collect();
        let mu = self.dt / (self.dx * self.dx);
        let mut next = self.clone();
        for i in 0..n {
            let left = u[i.saturating_sub(1)];
            let right = u[(i + 1).min(n - 1)];
            let lap = left - u[i] - u[i] + right;
            let v = self.rho[i] + mu * lap;
            if v < F::of(-1e-14) {
                return Err(Error::ModelViolation {
                    site: i as i64,
                    value: v.as_f64(),
                });
            }
            next.rho[i] = v.max(F::zero());
        }
        next.time = self.time + self.dt;
        Ok(next)
    }

    /// One explicit step of the nonlinear density equation. Requires
    /// `max(rho) < 1`; the mass ledger records the (small) drift this
    /// non-conservative form produces.
    pub fn nlpde_step(&self) -> Result<Self> {
        let dt_max = self.stable_dt_nlpde()?;
        if self.dt > dt_max {
            return Err(Error::Unstable {
                dt: self.dt.as_f64(),
                dt_max: dt_max.as_f64(),
            });
        }
        let n = self.rho.len();
        let sq: Vec<F> = self.rho.iter().map(|&r| r * r).collect();
        let inv_dx2 = (self.dx * self.dx).recip();
        let half = F::of(0.5);
        let mut next = self.clone();
        let mut new_mass = F::zero();
        for i in 0..n {
            let il = i.saturating_sub(1);
            let ir = (i + 1).min(n - 1);
            let lap_sq = (sq[il] - sq[i] - sq[i] + sq[ir]) * inv_dx2;
            let lap_r = (self.rho[il] - self.rho[i] - self.rho[i] + self.rho[ir]) * inv_dx2;
            let r = self.rho[i];
            let denom = F::one() - r;
            let rhs = (half * lap_sq - sq[i] * lap_r) / (F::of(2.0) * denom * denom);
            let v = (r + self.dt * rhs).max(F::zero());
            next.rho[i] = v;
            new_mass += v;
        }
        next.time = self.time + self.dt;
        next.mass_drift = self.mass_drift + (new_mass * self.dx - self.mass());
        Ok(next)
    }
}

/// `x^m` with exact handling of the common integer exponents.
fn pow_real<F: Real>(x: F, m: F) -> F {
    if m == F::one() {
        x
    } else if m == F::of(2.0) {
        x * x
    } else if m == F::of(3.0) {
        x * x * x
    } else {
        x.powf(m)
    }
}

/// Self-similar profile of the porous-medium equation expressed as the
/// normalized q-Gaussian `exp_q(-(x-center)^2/sigma^2) / Z` with q = 2 - m.
#[derive(Debug, Clone, PartialEq)]
pub struct BarenblattProfile<F: Real> {
    q: F,
    sigma_q: F,
    center: F,
    normalization: F,
}

impl<F: Real> BarenblattProfile<F> {
    /// Only the compactly supported regime q < 1 is handled.
    pub fn new(q: F, sigma_q: F, center: F) -> Result<Self> {
        if !(q < F::one()) || !q.is_finite() {
            return Err(Error::UnsupportedParameter {
                name: "q",
                value: q.as_f64(),
            });
        }
        if !(sigma_q > F::zero()) || !sigma_q.is_finite() {
            return Err(Error::UnsupportedParameter {
                name: "sigma_q",
                value: sigma_q.as_f64(),
            });
        }
        let z = F::of(q_gaussian_norm_factor(q.as_f64())) * sigma_q;
        Ok(Self {
            q,
            sigma_q,
            center,
            normalization: z,
        })
    }

    pub fn q(&self) -> F {
        self.q
    }

    pub fn sigma_q(&self) -> F {
        self.sigma_q
    }

    pub fn center(&self) -> F {
        self.center
    }

    /// Normalization factor `Z` with `density = exp_q(...) / Z`; for q = 0
    /// this is the textbook `4 sigma / 3`.
    pub fn normalization(&self) -> F {
        self.normalization
    }

    /// Half-width of the compact support, `sigma / sqrt(1-q)`.
    pub fn support_halfwidth(&self) -> F {
        self.sigma_q / (F::one() - self.q).sqrt()
    }

    pub fn density(&self, x: F) -> F {
        let u = (x - self.center) / self.sigma_q;
        crate::analysis::q_exp_neg(self.q, u * u) / self.normalization
    }

    /// Samples the profile onto a grid and rescales so the discrete mass is
    /// exactly one. The grid's porosity exponent is set to the matching
    /// m = 2 - q.
    pub fn sample_grid(&self, x_lo: F, x_hi: F, n_cells: usize, dt: F) -> Result<PmeGrid<F>> {
        let m = F::of(2.0) - self.q;
        let mut grid = PmeGrid::new(x_lo, x_hi, n_cells, Some(m), dt)?;
        grid.fill(|x| self.density(x))?;
        grid.normalize_mass(F::one())?;
        Ok(grid)
    }

    /// Time at which the mass-one self-similar solution of the unit
    /// coefficient equation has this width: inverts `sigma(t) = s_m t^{1/(m+1)}`.
    pub fn time_origin(&self) -> F {
        let m = 2.0 - self.q.as_f64();
        let prefactor = bp_width_prefactor(m);
        let alpha = 1.0 / (m + 1.0);
        F::of((self.sigma_q.as_f64() / prefactor).powf(1.0 / alpha))
    }

    /// Width of the mass-one self-similar solution at time `t`.
    pub fn width_at(m: f64, t: f64) -> f64 {
        bp_width_prefactor(m) * t.powf(1.0 / (m + 1.0))
    }
}

/// Samples a normalized self-similar profile onto a fresh grid.
pub fn barenblatt_profile<F: Real>(
    q: F,
    sigma_q: F,
    center: F,
    x_lo: F,
    x_hi: F,
    n_cells: usize,
    dt: F,
) -> Result<PmeGrid<F>> {
    BarenblattProfile::new(q, sigma_q, center)?.sample_grid(x_lo, x_hi, n_cells, dt)
}

/// Continuous normalization of the q-Gaussian for q < 1:
/// `integral exp_q(-x^2/sigma^2) dx = Z(q) sigma` with
/// `Z(q) = B(1/2, n+1) / sqrt(1-q)`, `n = 1/(1-q)`.
fn q_gaussian_norm_factor(q: f64) -> f64 {
    let n = 1.0 / (1.0 - q);
    let beta = std::f64::consts::PI.sqrt() * gamma(n + 1.0) / gamma(n + 1.5);
    beta / (1.0 - q).sqrt()
}

/// Width prefactor `s_m` of the mass-one self-similar solution,
/// `sigma(t) = s_m t^{1/(m+1)}`.
fn bp_width_prefactor(m: f64) -> f64 {
    let k = (m - 1.0) / (2.0 * m * (m + 1.0));
    let n = 1.0 / (m - 1.0);
    let beta = std::f64::consts::PI.sqrt() * gamma(n + 1.0) / gamma(n + 1.5);
    let c = (k.sqrt() / beta).powf(1.0 / (n + 0.5));
    ((m - 1.0) * c / k).sqrt()
}

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-13 for the
/// positive arguments used here.
fn gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = COEF[0];
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + 7.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}
