//! TOML run configuration. Every section and key is optional; missing keys
//! take the defaults below and unknown keys are rejected.
//!
//! ```toml
//! [scenario]
//! n_objects = 10
//! dt = 0.25
//!
//! [measurement]
//! sigma_n_sq = 1.0
//!
//! [filter]
//! p_s = 0.999
//! particles_per_bernoulli = 500
//!
//! [point_filters]
//! sigma_p_sq = 0.0833333333333333
//! position_likelihood = "gaussian"
//!
//! [association]
//! method = "bp"
//!
//! [gospa]
//! c = 20.0
//!
//! [harness]
//! filters = ["pmb-cm", "pmb-am", "pmb"]
//! etas = [2.0, 4.0, 6.0]
//! runs = 100
//! seed = 1
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{AssociationParams, FilterKind, FilterParams, PointParams};
use crate::gospa::GospaParams;
use crate::measurement::AmplitudeModel;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    pub sigma_n_sq: f64,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self { sigma_n_sq: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub filters: Vec<FilterKind>,
    pub etas: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    /// Worker threads; 0 uses one per core.
    pub threads: usize,
    /// Stop every replicate after this step; 0 runs all steps.
    pub stop_after: u32,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            filters: FilterKind::ALL.to_vec(),
            etas: vec![2.0, 4.0, 6.0],
            runs: 100,
            seed: 1,
            threads: 0,
            stop_after: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioConfig,
    pub measurement: MeasurementConfig,
    pub filter: FilterParams,
    pub point_filters: PointParams,
    pub association: AssociationParams,
    pub gospa: GospaParams,
    pub harness: HarnessConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Reference particle counts and 1000 replicates.
    pub fn full_scale(mut self) -> Self {
        let full = FilterParams::full_scale();
        self.filter.particles_per_bernoulli = full.particles_per_bernoulli;
        self.filter.phd_particle_budget = full.phd_particle_budget;
        self.filter.birth_particles = full.birth_particles;
        self.harness.runs = 1000;
        self
    }

    pub fn amplitude(&self) -> Result<AmplitudeModel> {
        AmplitudeModel::new(self.measurement.sigma_n_sq).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.amplitude()?;
        self.filter.validate()?;
        self.gospa.validate()?;
        let h = &self.harness;
        if h.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if h.filters.is_empty() || h.etas.is_empty() {
            return Err(Error::Config("at least one filter and one eta are required".into()));
        }
        Ok(())
    }
}
