//! JSON configuration file tying the plant, measurement chain and estimator together.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Thresholds;
use crate::error::Result;
use crate::estimator::EstimatorConfig;
use crate::params::{apply_degradation, ConverterParams, DegradationState};
use crate::sim::{NoiseProfile, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub params: ConverterParams,
    #[serde(default)]
    pub sim: SimConfig,
    /// Jumper setting; when present it overrides `params.c` and adds to `params.esr`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degradation: Option<DegradationState>,
    /// Replaces the noise fields of `sim` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_profile: Option<NoiseProfile>,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl Config {
    /// Design-point converter sampled at 2 MHz with ideal sensors.
    pub fn design_point() -> Self {
        Self {
            params: ConverterParams::design_point(),
            sim: SimConfig::default(),
            degradation: None,
            noise_profile: None,
            estimator: EstimatorConfig::default(),
            thresholds: Thresholds::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Plant after applying the degradation setting, if any.
    pub fn plant(&self) -> Result<ConverterParams> {
        match &self.degradation {
            Some(d) => apply_degradation(&self.params, d),
            None => {
                self.params.validate()?;
                Ok(self.params)
            }
        }
    }

    /// Simulation config after applying the noise profile, if any.
    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = self.sim.clone();
        if let Some(p) = self.noise_profile {
            p.apply(&mut cfg);
        }
        cfg
    }
}
