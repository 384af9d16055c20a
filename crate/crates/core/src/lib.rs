//! Simulation and analysis toolkit for the feed-forward discrete-time
//! quantum walk, its associated Markovian dynamics and their porous-medium
//! continuum companions.
//!
//! The walk evolves a two-component amplitude field on the integer line with
//! a coin that depends on the neighboring moduli of the previous step. Both
//! engines keep a contiguous active window with a truncation ledger, so
//! million-step evolutions stay cheap while `sum P + truncated_mass = 1`
//! remains checkable. The analysis side provides running averages,
//! q-Gaussian least-squares fits, scaling-exponent regression and residual
//! power spectra; the PDE side provides explicit solvers used as independent
//! references for the anomalous-diffusion scaling.
//!
//! All numerics are generic over the scalar (`f32` or `f64`) through the
//! [`float::Real`] trait; the `*64` aliases below are the types the command
//! line tooling uses.

// Negated float comparisons like `!(v >= 0)` are deliberate: they reject NaN
// along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod float;
pub mod markov;
pub mod pme;
pub mod snapshot;
pub mod walk;

pub use error::{Error, Result};
pub use float::Real;

/// Double-precision walker state.
pub type WalkerState64 = walk::WalkerState<f64>;
/// Double-precision coin angle.
pub type CoinAngle64 = walk::CoinAngle<f64>;
/// Double-precision occupation state of the associated Markov model.
pub type MarkovState64 = markov::MarkovState<f64>;
/// Double-precision site distribution.
pub type Distribution64 = analysis::Distribution<f64>;
/// Double-precision q-Gaussian fit result.
pub type QGaussianFit64 = analysis::QGaussianFit<f64>;
/// Double-precision width series.
pub type ScalingSeries64 = analysis::ScalingSeries<f64>;
/// Double-precision residual spectrum.
pub type SpectrumResult64 = analysis::SpectrumResult<f64>;
/// Double-precision finite-difference grid.
pub type PmeGrid64 = pme::PmeGrid<f64>;
/// Double-precision self-similar profile.
pub type BarenblattProfile64 = pme::BarenblattProfile<f64>;
