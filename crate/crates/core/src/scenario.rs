//! Human-editable simulation scenarios (TOML): network, device power,
//! plan, and dataset reference.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datasets::{builtin_spec, sample_sizes};
use crate::engine::TransferPlan;
use crate::error::{Error, Result};
use crate::netsim::{DevicePowerModel, NetworkConfig, DEFAULT_TRACE_RATE_HZ};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub name: String,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_rate() -> f64 {
    DEFAULT_TRACE_RATE_HZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub network: NetworkConfig,
    pub power: DevicePowerModel,
    #[serde(default)]
    pub plan: TransferPlan,
    pub dataset: DatasetRef,
    #[serde(default = "default_rate")]
    pub trace_rate_hz: f64,
}

/// Per-stream buffer of the long-RTT path: about 13.6 Mbps at 290 ms.
const SYDNEY_BUFFER_BYTES: f64 = 480.0 * 1024.0;

impl Scenario {
    /// Long-haul WiFi path: 290 ms RTT, 60 Mbps bottleneck.
    pub fn sydney_wifi() -> Self {
        Self {
            name: "sydney-wifi".into(),
            network: NetworkConfig::new(60.0, 0.29, SYDNEY_BUFFER_BYTES),
            power: DevicePowerModel::wifi(),
            plan: TransferPlan::default(),
            dataset: DatasetRef {
                name: "HTML".into(),
                scale: 1.0,
                seed: 7,
            },
            trace_rate_hz: DEFAULT_TRACE_RATE_HZ,
        }
    }

    pub fn sydney_lte() -> Self {
        Self {
            name: "sydney-lte".into(),
            network: NetworkConfig::new(45.0, 0.29, SYDNEY_BUFFER_BYTES),
            power: DevicePowerModel::lte(),
            ..Self::sydney_wifi()
        }
    }

    /// 115 ms RTT path.
    pub fn frankfurt_wifi() -> Self {
        Self {
            name: "frankfurt-wifi".into(),
            network: NetworkConfig::new(90.0, 0.115, SYDNEY_BUFFER_BYTES),
            ..Self::sydney_wifi()
        }
    }

    /// 59 ms RTT path.
    pub fn chameleon_wifi() -> Self {
        Self {
            name: "chameleon-wifi".into(),
            network: NetworkConfig::new(125.0, 0.059, SYDNEY_BUFFER_BYTES),
            ..Self::sydney_wifi()
        }
    }

    pub fn presets() -> Vec<Self> {
        vec![
            Self::sydney_wifi(),
            Self::sydney_lte(),
            Self::frankfurt_wifi(),
            Self::chameleon_wifi(),
        ]
    }

    /// A preset by name, or a TOML file path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if let Some(preset) = Self::presets().into_iter().find(|s| s.name == name_or_path) {
            return Ok(preset);
        }
        Self::load(Path::new(name_or_path))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let scenario: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::path_io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.power.validate()?;
        self.plan.validate()?;
        builtin_spec(&self.dataset.name)?;
        if !(self.trace_rate_hz > 0.0) {
            return Err(Error::Config(format!("trace_rate_hz must be > 0, got {}", self.trace_rate_hz)));
        }
        Ok(())
    }

    /// File sizes of the referenced dataset.
    pub fn file_sizes(&self) -> Result<Vec<u64>> {
        let spec = builtin_spec(&self.dataset.name)?;
        sample_sizes(&spec, self.dataset.seed, self.dataset.scale)
    }

    pub fn with_dataset(mut self, name: &str, scale: f64) -> Self {
        self.dataset.name = name.to_string();
        self.dataset.scale = scale;
        self
    }
}
