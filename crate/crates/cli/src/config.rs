//! Run configuration file.
//!
//! `[network]` and `[channel]` must spell out every key; the experiment
//! sections are optional and fall back to the standard settings below.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tournament_routing::channel::ChannelParams;
use tournament_routing::experiments::{DEFAULT_PROFILE_SAMPLES, DEFAULT_Z};
use tournament_routing::netgraph::DEFAULT_MAX_PATHS;
use tournament_routing::simengine::{default_gamma_grid, ExperimentConfig, ServingOrder};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn default_seed() -> u64 {
    1
}

fn default_max_paths() -> usize {
    DEFAULT_MAX_PATHS
}

fn standard_loads() -> Vec<u32> {
    vec![10, 20, 30, 40]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub network: NetworkSection,
    pub channel: ChannelSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub optimal_gamma: OptimalGammaSection,
    #[serde(default)]
    pub heatmap: HeatmapSection,
    #[serde(default)]
    pub distance: DistanceSection,
    #[serde(default)]
    pub multipair: MultipairSection,
    #[serde(default)]
    pub fairness: LoadsSection,
    #[serde(default)]
    pub bounds: LoadsSection,
    #[serde(default)]
    pub hopfit: HopfitSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub n_nodes: usize,
    pub radius: f64,
    #[serde(default = "default_max_paths")]
    pub max_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub alpha: f64,
    pub c0: u32,
    pub p_swap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Requests per pair per window.
    pub requests: u32,
    pub windows: usize,
    pub gammas: Vec<f64>,
    pub pairs: usize,
    pub serving_order: ServingOrder,
    /// Windows measured for the analytic model inputs.
    pub profile_samples: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            requests: 20,
            windows: 1000,
            gammas: default_gamma_grid(),
            pairs: 1,
            serving_order: ServingOrder::RoundRobin,
            profile_samples: DEFAULT_PROFILE_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimalGammaSection {
    pub loads: Vec<u32>,
    /// Normal quantile of the indistinguishable-optimum test.
    pub z: f64,
}

impl Default for OptimalGammaSection {
    fn default() -> Self {
        Self {
            loads: standard_loads(),
            z: DEFAULT_Z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapSection {
    pub alphas: Vec<f64>,
    pub p_swaps: Vec<f64>,
    pub loads: Vec<u32>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

impl Default for HeatmapSection {
    fn default() -> Self {
        Self {
            alphas: linspace(0.25, 2.0, 8),
            p_swaps: linspace(0.6, 0.95, 8),
            loads: standard_loads(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceSection {
    pub bins: usize,
    /// Sampled source-destination pairs.
    pub windows: usize,
    pub gammas: Vec<f64>,
    pub min_bin_samples: usize,
}

impl Default for DistanceSection {
    fn default() -> Self {
        Self {
            bins: 12,
            windows: 20_000,
            gammas: vec![0.0, 0.5, 1.0],
            min_bin_samples: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultipairSection {
    pub max_pairs: usize,
    pub gammas: Vec<f64>,
}

impl Default for MultipairSection {
    fn default() -> Self {
        Self {
            max_pairs: 8,
            gammas: vec![0.02, 0.5, 0.98],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadsSection {
    pub loads: Vec<u32>,
}

impl Default for LoadsSection {
    fn default() -> Self {
        Self {
            loads: standard_loads(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopfitSection {
    /// Complete path sets entering the fit.
    pub samples: usize,
    pub samples_per_topology: usize,
}

impl Default for HopfitSection {
    fn default() -> Self {
        Self {
            samples: 15_000,
            samples_per_topology: 500,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Fails only for seeds above `i64::MAX`, which TOML cannot hold.
    pub fn to_toml(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    /// Ensemble sizes divided by ten.
    pub fn quick(mut self) -> Self {
        let tenth = |v: usize| (v / 10).max(1);
        self.simulation.windows = tenth(self.simulation.windows);
        self.simulation.profile_samples = tenth(self.simulation.profile_samples);
        self.distance.windows = tenth(self.distance.windows);
        self.hopfit.samples = tenth(self.hopfit.samples);
        self
    }

    /// Simulation settings for the main sweep.
    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            n_nodes: self.network.n_nodes,
            radius: self.network.radius,
            channel: ChannelParams {
                alpha: self.channel.alpha,
                c0: self.channel.c0,
                p_swap: self.channel.p_swap,
            },
            requests: self.simulation.requests,
            windows: self.simulation.windows,
            gammas: self.simulation.gammas.clone(),
            pairs: self.simulation.pairs,
            max_paths: self.network.max_paths,
            seed: self.seed,
            serving_order: self.simulation.serving_order,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if let Err(e) = self.experiment().validate() {
            return bad(e.to_string());
        }
        if self.simulation.gammas.is_empty() {
            return bad("simulation.gammas must not be empty".into());
        }
        if self.simulation.profile_samples == 0 {
            return bad("simulation.profile_samples must be at least 1".into());
        }
        let loads = [
            ("optimal_gamma.loads", &self.optimal_gamma.loads),
            ("heatmap.loads", &self.heatmap.loads),
            ("fairness.loads", &self.fairness.loads),
            ("bounds.loads", &self.bounds.loads),
        ];
        for (name, list) in loads {
            if list.is_empty() || list.contains(&0) {
                return bad(format!("{name} must be a non-empty list of positive loads"));
            }
        }
        if !(self.optimal_gamma.z > 0.0) {
            return bad("optimal_gamma.z must be positive".into());
        }
        if self.heatmap.alphas.is_empty() || self.heatmap.alphas.iter().any(|a| !(*a >= 0.0)) {
            return bad("heatmap.alphas must be a non-empty list of values >= 0".into());
        }
        if self.heatmap.p_swaps.is_empty()
            || self.heatmap.p_swaps.iter().any(|p| !(0.0..=1.0).contains(p))
        {
            return bad("heatmap.p_swaps must be a non-empty list of probabilities".into());
        }
        if self.distance.bins < 2 {
            return bad("distance.bins must be at least 2".into());
        }
        if self.distance.windows == 0 {
            return bad("distance.windows must be at least 1".into());
        }
        let grids = [
            ("distance.gammas", &self.distance.gammas),
            ("multipair.gammas", &self.multipair.gammas),
        ];
        for (name, grid) in grids {
            if grid.is_empty() || grid.iter().any(|g| !(0.0..=1.0).contains(g)) {
                return bad(format!("{name} must be a non-empty list of probabilities"));
            }
        }
        if self.multipair.max_pairs == 0 {
            return bad("multipair.max_pairs must be at least 1".into());
        }
        if self.hopfit.samples == 0 || self.hopfit.samples_per_topology == 0 {
            return bad("hopfit sample counts must be positive".into());
        }
        Ok(())
    }
}
