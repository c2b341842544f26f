//! Run configuration: one JSON file plus dotted `key=value` overrides.

use std::path::{Path, PathBuf};

use pinsim_core::circuit::CircuitConfig;
use pinsim_core::device::{DeviceParams, NeuronSimConfig, NeuronSimulator};
use pinsim_core::mapping::MappingConfig;
use pinsim_core::rbm::{InferenceMode, NetworkTopology, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CoreContext, PinsimError, Result};

/// Where the MNIST files come from and how much of them is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Directory holding the four IDX files; `None` searches the usual places.
    pub mnist_dir: Option<PathBuf>,
    pub binarize_threshold: u8,
    /// Test images evaluated, taken from the front of the test split.
    pub test_samples: usize,
    /// Evaluate the whole test split and ignore `test_samples`.
    pub full_test: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            mnist_dir: None,
            binarize_threshold: 127,
            test_samples: 1000,
            full_test: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub topology: NetworkTopology,
    pub seed: u64,
    pub train: TrainConfig,
    pub mapping: MappingConfig,
    pub circuit: CircuitConfig,
    pub device: DeviceParams,
    pub neuron: NeuronSimConfig,
    pub software_inference: InferenceMode,
    pub data: DataConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            topology: "784x200x10".parse().expect("valid default topology"),
            seed: 1,
            train: TrainConfig::default(),
            mapping: MappingConfig::default(),
            circuit: CircuitConfig::default(),
            device: DeviceParams::default(),
            neuron: NeuronSimConfig::default(),
            software_inference: InferenceMode::MeanField,
            data: DataConfig::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

pub const IMAGE_PIXELS: usize = 784;
pub const NUM_CLASSES: usize = 10;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(PinsimError::io(path))?;
        serde_json::from_str(&text).map_err(|e| PinsimError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `key=value` overrides. Keys are dotted paths into the JSON
    /// form (`mapping.delta_r_w=100`); values parse as JSON and fall back to
    /// a plain string.
    pub fn with_overrides<S: AsRef<str>>(self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut tree = serde_json::to_value(&self).map_err(|e| PinsimError::Config(e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| PinsimError::Config(format!("override `{item}` is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
            set_path(&mut tree, key.trim(), value)?;
        }
        serde_json::from_value(tree).map_err(|e| PinsimError::Config(format!("after overrides: {e}")))
    }

    /// Resolves derived fields: the training seed follows `seed`.
    pub fn resolved(mut self) -> Self {
        self.train.rng_seed = self.seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate().context("train")?;
        self.mapping.validate().context("mapping")?;
        self.circuit.validate().context("circuit")?;
        self.device.validate().context("device")?;
        self.neuron.validate(self.device.supply_voltage).context("neuron")?;
        if self.topology.visible_size() != IMAGE_PIXELS {
            return Err(PinsimError::Config(format!(
                "topology visible size {} differs from image size {IMAGE_PIXELS}",
                self.topology.visible_size()
            )));
        }
        if self.topology.output_size() != NUM_CLASSES {
            return Err(PinsimError::Config(format!(
                "topology output size {} differs from class count {NUM_CLASSES}",
                self.topology.output_size()
            )));
        }
        if (self.device.supply_voltage - self.circuit.vdd).abs() > 1e-12 {
            return Err(PinsimError::Config(
                "device.supply_voltage and circuit.vdd differ".into(),
            ));
        }
        if !self.data.full_test && self.data.test_samples == 0 {
            return Err(PinsimError::Config("data.test_samples must be at least 1".into()));
        }
        if let InferenceMode::Stochastic { samples: 0 } = self.software_inference {
            return Err(PinsimError::Config(
                "software_inference.samples must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Neuron simulator whose window matches the circuit clock.
    pub fn neuron_simulator(&self) -> Result<NeuronSimulator> {
        let cfg = NeuronSimConfig {
            window: self.circuit.clock_period,
            ..self.neuron.clone()
        };
        NeuronSimulator::new(&cfg, &self.device).context("neuron simulator")
    }
}

fn set_path(tree: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    for part in parents {
        node = match node {
            Value::Object(map) => map
                .get_mut(*part)
                .ok_or_else(|| PinsimError::Config(format!("unknown key `{key}`")))?,
            _ => return Err(PinsimError::Config(format!("`{key}`: `{part}` is not a table"))),
        };
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    match node {
        Value::Object(map) => {
            if !map.contains_key(*last) && !parents.is_empty() && !is_tagged(map) {
                return Err(PinsimError::Config(format!("unknown key `{key}`")));
            }
            if parents.is_empty() && !map.contains_key(*last) {
                return Err(PinsimError::Config(format!("unknown key `{key}`")));
            }
            map.insert((*last).to_owned(), value);
            Ok(())
        }
        _ => Err(PinsimError::Config(format!("`{key}` does not name a field"))),
    }
}

// Internally tagged enums gain fields when the variant changes.
fn is_tagged(map: &serde_json::Map<String, Value>) -> bool {
    map.contains_key("kind")
}
