//! Structured experiment configurations. A config file is the provenance
//! unit: together with the seed it determines every output bitwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::Probe;
use crate::grid::{AnalyticSignal, SpectralGrid};
use crate::norms::Region;
use crate::wiener::{Profile, RandomLaw};

/// Grid parameters as they appear in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub extent: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.dim, self.extent, self.points)
    }
}

/// Free evolution of a datum at a list of times, with unitarity tracking
/// and, for the unit Gaussian, the closed-form oracle error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateConfig {
    pub grid: GridSpec,
    pub datum: AnalyticSignal,
    pub times: Vec<f64>,
}

/// Fourier-Lebesgue norm of a datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub grid: GridSpec,
    pub datum: AnalyticSignal,
    pub s: f64,
    pub r: f64,
}

/// Ratio of the maximal-function mixed norm to the datum norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalRatioConfig {
    pub grid: GridSpec,
    pub datum: AnalyticSignal,
    pub s: f64,
    pub r: f64,
    pub q_space: f64,
    pub region: Region,
    pub t_max: f64,
}

/// Dyadic counterexample sweep across scales with the blow-up fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub ks: Vec<u32>,
    pub s: f64,
    pub p: f64,
    pub delta: f64,
}

/// Randomization diagnostics: plan summary, square function, and
/// Khintchine moment ratios of the per-cube masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomizeConfig {
    pub grid: GridSpec,
    pub datum: AnalyticSignal,
    pub profile: Profile,
    pub law: RandomLaw,
    pub seed: u64,
    pub num_draws: u64,
    #[serde(default = "default_moment_orders")]
    pub moment_orders: Vec<f64>,
}

fn default_moment_orders() -> Vec<f64> {
    vec![2.0, 4.0, 8.0, 16.0]
}

/// Monte Carlo tail probabilities of the randomized convergence defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsConfig {
    pub grid: GridSpec,
    pub datum: AnalyticSignal,
    pub profile: Profile,
    pub law: RandomLaw,
    pub seed: u64,
    pub t: f64,
    #[serde(default)]
    pub alpha_grid: Option<Vec<f64>>,
    pub probe: Probe,
    pub num_draws: u64,
}

/// Deterministic convergence sweep `t -> 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub grid: GridSpec,
    pub datum: AnalyticSignal,
    pub times: Vec<f64>,
    pub region: Region,
    #[serde(default)]
    pub alpha_ladder: Option<Vec<f64>>,
}

/// One experiment, dispatched on the `experiment` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Propagate(PropagateConfig),
    Norms(NormsConfig),
    MaximalRatio(MaximalRatioConfig),
    Counterexample(CounterexampleConfig),
    Randomize(RandomizeConfig),
    Tails(TailsConfig),
    Convergence(ConvergenceConfig),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("config does not parse: {e}")))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Propagate(_) => "propagate",
            ExperimentConfig::Norms(_) => "norms",
            ExperimentConfig::MaximalRatio(_) => "maximal_ratio",
            ExperimentConfig::Counterexample(_) => "counterexample",
            ExperimentConfig::Randomize(_) => "randomize",
            ExperimentConfig::Tails(_) => "tails",
            ExperimentConfig::Convergence(_) => "convergence",
        }
    }

    /// The seed the experiment consumes, if it is randomized.
    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentConfig::Randomize(c) => Some(c.seed),
            ExperimentConfig::Tails(c) => Some(c.seed),
            _ => None,
        }
    }

    /// Override the seed where one applies (CLI `--seed`).
    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Randomize(c) => c.seed = seed,
            ExperimentConfig::Tails(c) => c.seed = seed,
            _ => {}
        }
    }
}
