//! Experiment configuration files (TOML). Unknown keys are rejected and
//! every section validates before anything runs.
//!
//! ```toml
//! command = "reconstruct"
//! seed = 7
//! bandwidth = 16
//!
//! [family]
//! kind = "intervals"
//! epsilon = 0.1
//!
//! [op]
//! kind = "integration"
//!
//! [reconstruct.data]
//! mode = "synthetic"
//! truth = [0.3, 0.7]
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::ForwardOp;
use crate::manifolds::{FamilySpec, PairOptions};
use crate::reconstruct::{ConstantsConfig, ReconstructConfig, SolverConfig};
use crate::stabilitylab::YNorm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Symmdiff,
    Stability,
    FindN,
    Reconstruct,
    Table,
    Counterexample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
}

/// A pair of shapes for `symmdiff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapePair {
    Balls {
        centres: [Vec<f64>; 2],
        radii: [f64; 2],
        /// Parameter box `|a| <= a_max`, `rho <= r <= r_max` for the certifier.
        a_max: f64,
        rho: f64,
        r_max: f64,
    },
    Simplices { first: Vec<Vec<f64>>, second: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmdiffConfig {
    pub shapes: ShapePair,
    #[serde(default = "default_mc_samples")]
    pub samples: u64,
}

fn default_mc_samples() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub pairs: usize,
    pub alpha: Option<f64>,
    /// Norm for the unprojected map F.
    pub y_norm: YNorm,
    /// Norm for `Q_N F`, reported when a bandwidth is configured.
    pub projected_norm: YNorm,
    pub near_fraction: f64,
    pub near_min: f64,
    pub near_max: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        let near = PairOptions::default();
        StabilityConfig {
            pairs: 10_000,
            alpha: None,
            y_norm: YNorm::Lp { q: 1.0 },
            projected_norm: YNorm::Parseval,
            near_fraction: near.near_fraction,
            near_min: near.near_min,
            near_max: near.near_max,
        }
    }
}

impl StabilityConfig {
    pub fn near(&self) -> PairOptions {
        PairOptions { near_fraction: self.near_fraction, near_min: self.near_min, near_max: self.near_max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FindNConfig {
    pub grid: Vec<usize>,
    pub samples: usize,
    /// Stability constant in `δ/(4C)`; the sampled `Ĉ` of F in L¹ when unset.
    pub stability: Option<f64>,
    /// δ in `δ/(4C)`; the sampled ambient diameter of K when unset.
    pub delta: Option<f64>,
    pub stability_pairs: usize,
}

impl Default for FindNConfig {
    fn default() -> Self {
        FindNConfig { grid: vec![4, 8, 16, 32, 64, 128], samples: 1000, stability: None, delta: None, stability_pairs: 10_000 }
    }
}

/// Where the reconstruction data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    Synthetic {
        truth: Vec<f64>,
        #[serde(default)]
        noise: f64,
    },
    /// A measurement file as written by a synthetic run.
    Blind { measurement: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSection {
    pub data: DataConfig,
    /// Precomputed lattice table; built on the fly when unset.
    #[serde(default)]
    pub table: Option<PathBuf>,
    #[serde(default = "yes")]
    pub trajectory: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CounterexampleConfig {
    /// `f′(1/(2kπ))` for `k = 1..=k_max`.
    Sin { k_max: u64 },
    /// Multiplication by the periodic weight on shifted windows.
    Weight { ts: Vec<f64>, alphas: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub op: Option<ForwardOp>,
    #[serde(default)]
    pub bandwidth: Option<usize>,
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub symmdiff: Option<SymmdiffConfig>,
    #[serde(default)]
    pub stability: Option<StabilityConfig>,
    #[serde(default)]
    pub find_n: Option<FindNConfig>,
    #[serde(default)]
    pub reconstruct: Option<ReconstructSection>,
    #[serde(default)]
    pub counterexample: Option<CounterexampleConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Checks that the sections the command needs are present and sane.
    pub fn validate(&self) -> Result<()> {
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(invalid(format!("command {:?} needs `{what}`", self.command)))
            }
        };
        match self.command {
            Command::Symmdiff => need(self.symmdiff.is_some(), "[symmdiff]")?,
            Command::Counterexample => need(self.counterexample.is_some(), "[counterexample]")?,
            Command::Stability | Command::FindN => {
                need(self.family.is_some(), "[family]")?;
                need(self.op.is_some(), "[op]")?;
            }
            Command::Table | Command::Reconstruct => {
                need(self.family.is_some(), "[family]")?;
                need(self.op.is_some(), "[op]")?;
                need(self.bandwidth.is_some(), "bandwidth")?;
                if self.command == Command::Reconstruct {
                    need(self.reconstruct.is_some(), "[reconstruct]")?;
                }
            }
        }
        if let Some(s) = &self.stability {
            if s.pairs < 100 || !(0.0..=1.0).contains(&s.near_fraction) || !(s.near_min > 0.0 && s.near_min < s.near_max) {
                return Err(invalid("stability needs >= 100 pairs, near_fraction in [0, 1] and 0 < near_min < near_max"));
            }
        }
        if let Some(f) = &self.find_n {
            if f.grid.is_empty() || f.samples == 0 {
                return Err(invalid("find_n needs a nonempty grid and samples >= 1"));
            }
        }
        let stop = self.solver.stop();
        if !(stop.tolerance >= 0.0) || stop.divergence_factor <= 1.0 || self.solver.lattice_cap == 0 {
            return Err(invalid("solver needs tolerance >= 0, divergence_factor > 1 and lattice_cap >= 1"));
        }
        Ok(())
    }

    pub fn reconstruct_config(&self) -> Result<ReconstructConfig> {
        match (&self.family, self.op, self.bandwidth) {
            (Some(family), Some(op), Some(bandwidth)) => Ok(ReconstructConfig {
                family: family.clone(),
                op,
                bandwidth,
                constants: self.constants,
                solver: self.solver,
                seed: self.seed,
            }),
            _ => Err(invalid("reconstruction needs family, op and bandwidth")),
        }
    }
}
