//! Run configuration: TOML config file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    FeedForward,
    Homogeneous,
    Markov,
    Pme,
    Nlpde,
}

impl Model {
    pub fn tag(self) -> &'static str {
        match self {
            Model::FeedForward => "feed-forward",
            Model::Homogeneous => "homogeneous",
            Model::Markov => "markov",
            Model::Pme => "pme",
            Model::Nlpde => "nlpde",
        }
    }

    /// Default q used when fitting widths along an evolution.
    pub fn default_q(self) -> Option<f64> {
        match self {
            Model::FeedForward => Some(0.5),
            Model::Markov => Some(0.0),
            Model::Homogeneous => None,
            Model::Pme | Model::Nlpde => None,
        }
    }
}

/// Initial condition of a lattice run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Initial {
    /// The standard two-site state used throughout.
    Default,
    /// Mass one on a single site (the oscillating, non-spreading case).
    SingleSite,
    /// Real two-site family parameterized by angles in units of pi.
    BetaGamma { beta: f64, gamma: f64 },
    /// State snapshot loaded from a file.
    File { path: PathBuf },
}

impl Initial {
    /// Parses `default`, `single-site`, `beta-gamma:B,G` or `file:PATH`.
    pub fn parse_flag(s: &str) -> std::result::Result<Self, String> {
        if s == "default" {
            return Ok(Initial::Default);
        }
        if s == "single-site" {
            return Ok(Initial::SingleSite);
        }
        if let Some(rest) = s.strip_prefix("beta-gamma:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err("expected beta-gamma:<beta>,<gamma>".into());
            }
            let beta: f64 = parts[0].trim().parse().map_err(|_| "invalid beta")?;
            let gamma: f64 = parts[1].trim().parse().map_err(|_| "invalid gamma")?;
            return Ok(Initial::BetaGamma { beta, gamma });
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(Initial::File { path: path.into() });
        }
        Err("expected default, single-site, beta-gamma:<b>,<g> or file:<path>".into())
    }
}

/// Fully resolved configuration of one evolution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub steps: u64,
    /// Coin angle in radians; homogeneous model only.
    pub theta: f64,
    pub initial: Initial,
    pub epsilon_trunc: f64,
    pub checkpoints_per_decade: u32,
    pub smooth_window: usize,
    /// q used for width fits at checkpoints; per-model default when absent.
    pub q_fixed: Option<f64>,
    /// Interval between resumable checkpoints; 0 disables them.
    pub checkpoint_every: u64,
    /// Write the full distribution at every scheduled measurement.
    pub snapshot_checkpoints: bool,
    pub out_dir: PathBuf,
    // Grid-model parameters.
    pub m: f64,
    pub sigma0: f64,
    pub dx: f64,
    pub decades: f64,
    pub stability_factor: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Model::FeedForward,
            steps: 1_000_000,
            theta: std::f64::consts::FRAC_PI_4,
            initial: Initial::Default,
            epsilon_trunc: 1e-30,
            checkpoints_per_decade: 8,
            smooth_window: 11,
            q_fixed: None,
            checkpoint_every: 100_000,
            snapshot_checkpoints: false,
            out_dir: PathBuf::from("run-out"),
            m: 2.0,
            sigma0: 40.0,
            dx: 1.0,
            decades: 1.0,
            stability_factor: 0.4,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Effective q for checkpoint fits; `None` means moment-based widths.
    pub fn effective_q(&self) -> Option<f64> {
        self.q_fixed.or_else(|| self.model.default_q())
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(CliError::Config("steps must be at least 1".into()));
        }
        if !(self.epsilon_trunc > 0.0 && self.epsilon_trunc < 1e-6) {
            return Err(CliError::Config(format!(
                "epsilon_trunc must lie in (0, 1e-6), got {}",
                self.epsilon_trunc
            )));
        }
        if self.smooth_window == 0 || self.smooth_window.is_multiple_of(2) {
            return Err(CliError::Config(format!(
                "smooth_window must be odd, got {}",
                self.smooth_window
            )));
        }
        if self.checkpoints_per_decade == 0 {
            return Err(CliError::Config("checkpoints_per_decade must be positive".into()));
        }
        if let Some(q) = self.q_fixed {
            if !(q < 1.0) {
                return Err(CliError::Config(format!("q_fixed must be below 1, got {q}")));
            }
        }
        if let Initial::BetaGamma { beta, gamma } = self.initial {
            for (name, v) in [("beta", beta), ("gamma", gamma)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(CliError::Config(format!("{name} must lie in [0, 1], got {v}")));
                }
            }
        }
        if !self.theta.is_finite() {
            return Err(CliError::Config("theta must be finite".into()));
        }
        match self.model {
            Model::Pme | Model::Nlpde => {
                if !(self.m >= 1.0 && self.m < 3.0) {
                    return Err(CliError::Config(format!(
                        "m must lie in [1, 3), got {}",
                        self.m
                    )));
                }
                if !(self.sigma0 > 0.0) {
                    return Err(CliError::Config("sigma0 must be positive".into()));
                }
                if !(self.dx > 0.0) {
                    return Err(CliError::Config("dx must be positive".into()));
                }
                if !(self.decades > 0.0) {
                    return Err(CliError::Config("decades must be positive".into()));
                }
                if !(self.stability_factor > 0.0 && self.stability_factor <= 1.0) {
                    return Err(CliError::Config("stability_factor must lie in (0, 1]".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_flag_parsing() {
        assert_eq!(Initial::parse_flag("default").unwrap(), Initial::Default);
        assert_eq!(Initial::parse_flag("single-site").unwrap(), Initial::SingleSite);
        assert_eq!(
            Initial::parse_flag("beta-gamma:0.25,0.75").unwrap(),
            Initial::BetaGamma { beta: 0.25, gamma: 0.75 }
        );
        assert_eq!(
            Initial::parse_flag("file:foo/state.txt").unwrap(),
            Initial::File { path: "foo/state.txt".into() }
        );
        assert!(Initial::parse_flag("nope").is_err());
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let cfg = RunConfig {
            model: Model::Markov,
            steps: 12345,
            initial: Initial::BetaGamma { beta: 0.1, gamma: 0.9 },
            ..RunConfig::default()
        };
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);

        let bad = "modle = \"markov\"\n";
        assert!(toml::from_str::<RunConfig>(bad).is_err());
    }

    #[test]
    fn validation_bounds() {
        let mut cfg = RunConfig {
            epsilon_trunc: 1e-3,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.epsilon_trunc = 1e-30;
        cfg.smooth_window = 10;
        assert!(cfg.validate().is_err());
        cfg.smooth_window = 11;
        cfg.q_fixed = Some(1.2);
        assert!(cfg.validate().is_err());
        cfg.q_fixed = Some(0.5);
        assert!(cfg.validate().is_ok());
    }
}
