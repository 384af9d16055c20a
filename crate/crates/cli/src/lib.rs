//! Library side of the `feedwalk` batch driver: configuration, evolution
//! runs, the initial-state sweep and the PDE validation harness.

// Negated float comparisons like `!(v > 0)` are deliberate: they reject NaN
// along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod schedule;
pub mod sweep;
pub mod validate;

pub use config::{Initial, Model, RunConfig};
pub use error::{CliError, Result};
pub use run::{run_evolution, LatticeArtifacts, RunOutcome};
pub use sweep::{run_sweep, SweepResult};
pub use validate::{run_pme_validation, PmeValidationReport};
