//! One-parameter sweeps over the run configuration.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pinsim_core::rbm::DbnModel;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{PinsimError, Result};
use crate::experiment::{
    create_run_dir, evaluate_hardware, evaluate_software, load_datasets, map_model, train_model, write_json, Datasets,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Topology,
    TrainNum,
    DeltaRW,
    #[serde(rename = "Q")]
    Quantization,
    VariationSigma,
    InputNoiseSigma,
}

impl SweepParam {
    /// Dotted config key the value is written to.
    pub fn config_key(self) -> &'static str {
        match self {
            Self::Topology => "topology",
            Self::TrainNum => "train.num_train_samples",
            Self::DeltaRW => "mapping.delta_r_w",
            Self::Quantization => "mapping.quantization",
            Self::VariationSigma => "mapping.variation_sigma",
            Self::InputNoiseSigma => "circuit.input_noise_sigma",
        }
    }

    /// Whether changing this parameter needs a new trained model.
    pub fn retrains(self) -> bool {
        matches!(self, Self::Topology | Self::TrainNum)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Topology => "topology",
            Self::TrainNum => "train_num",
            Self::DeltaRW => "delta_r_w",
            Self::Quantization => "Q",
            Self::VariationSigma => "variation_sigma",
            Self::InputNoiseSigma => "input_noise_sigma",
        })
    }
}

impl FromStr for SweepParam {
    type Err = PinsimError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "topology" => Self::Topology,
            "train_num" => Self::TrainNum,
            "delta_r_w" => Self::DeltaRW,
            "Q" | "q" => Self::Quantization,
            "variation_sigma" => Self::VariationSigma,
            "input_noise_sigma" => Self::InputNoiseSigma,
            other => {
                return Err(PinsimError::Config(format!(
                    "unknown sweep parameter `{other}` (topology, train_num, delta_r_w, Q, variation_sigma, input_noise_sigma)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    /// Values as they would be typed after `key=`; `none` means unquantized.
    pub values: Vec<String>,
    pub replications: usize,
    pub base: RunConfig,
    pub software: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(PinsimError::Config("replications must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(PinsimError::Config("sweep needs at least one value".into()));
        }
        for v in &self.values {
            self.point_config(v, 0)?;
        }
        Ok(())
    }

    /// Configuration of one sweep row. Replication `r` uses seed `base + r`.
    pub fn point_config(&self, value: &str, replication: usize) -> Result<RunConfig> {
        let value = if value.eq_ignore_ascii_case("none") {
            "null"
        } else {
            value
        };
        let cfg = self
            .base
            .clone()
            .with_overrides(&[format!("{}={value}", self.parameter.config_key())])?;
        let cfg = RunConfig {
            seed: self.base.seed + replication as u64,
            ..cfg
        }
        .resolved();
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub replication: usize,
    pub seed: u64,
    pub software_err: Option<f64>,
    pub hardware_err: f64,
    pub hardware_rmse: f64,
    pub total_power: f64,
    pub neuron_power: f64,
    pub energy: f64,
    pub cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: String,
    pub replications: usize,
    pub software_err_mean: Option<f64>,
    pub software_err_std: Option<f64>,
    pub hardware_err_mean: f64,
    /// `None` for a single replication.
    pub hardware_err_std: Option<f64>,
    pub total_power_mean: f64,
    pub energy_mean: f64,
}

/// Mean and sample standard deviation; the deviation is absent for one value.
pub fn mean_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

pub fn aggregate(rows: &[SweepRow]) -> Vec<SweepPoint> {
    let mut order: Vec<&str> = Vec::new();
    for r in rows {
        if !order.contains(&r.value.as_str()) {
            order.push(&r.value);
        }
    }
    order
        .into_iter()
        .map(|value| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.value == value).collect();
            let hw: Vec<f64> = group.iter().map(|r| r.hardware_err).collect();
            let sw: Option<Vec<f64>> = group.iter().map(|r| r.software_err).collect();
            let (hardware_err_mean, hardware_err_std) = mean_std(&hw);
            let (software_err_mean, software_err_std) = match sw {
                Some(sw) => {
                    let (m, s) = mean_std(&sw);
                    (Some(m), s)
                }
                None => (None, None),
            };
            let power: Vec<f64> = group.iter().map(|r| r.total_power).collect();
            let energy: Vec<f64> = group.iter().map(|r| r.energy).collect();
            SweepPoint {
                value: value.to_owned(),
                replications: group.len(),
                software_err_mean,
                software_err_std,
                hardware_err_mean,
                hardware_err_std,
                total_power_mean: mean_std(&power).0,
                energy_mean: mean_std(&energy).0,
            }
        })
        .collect()
}

/// Trained models keyed by everything that affects training.
#[derive(Debug, Default)]
pub struct ModelCache {
    models: HashMap<String, DbnModel>,
    datasets: HashMap<String, Datasets>,
}

impl ModelCache {
    fn data_key(cfg: &RunConfig) -> String {
        serde_json::to_string(&(&cfg.data, cfg.train.num_train_samples)).expect("config serializes")
    }

    fn datasets(&mut self, cfg: &RunConfig) -> Result<&Datasets> {
        let key = Self::data_key(cfg);
        if !self.datasets.contains_key(&key) {
            let data = load_datasets(cfg)?;
            self.datasets.insert(key.clone(), data);
        }
        Ok(&self.datasets[&key])
    }

    pub fn model(&mut self, cfg: &RunConfig) -> Result<DbnModel> {
        let key = serde_json::to_string(&(&cfg.topology, &cfg.train, &cfg.data)).expect("config serializes");
        if let Some(m) = self.models.get(&key) {
            return Ok(m.clone());
        }
        let model = train_model(cfg, &self.datasets(cfg)?.train)?;
        self.models.insert(key, model.clone());
        Ok(model)
    }
}

/// Evaluates one row; `cache` is shared across rows.
pub fn run_point(cfg: &RunConfig, software: bool, cache: &mut ModelCache) -> Result<(SweepRow, Option<f64>)> {
    let model = cache.model(cfg)?;
    let test = cache.datasets(cfg)?.test.clone();
    let rdbn = map_model(cfg, &model)?;
    let sw = if software {
        Some(evaluate_software(cfg, &model, &test)?.report.err)
    } else {
        None
    };
    let hw = evaluate_hardware(cfg, &rdbn, &test)?.report;
    Ok((
        SweepRow {
            value: String::new(),
            replication: 0,
            seed: cfg.seed,
            software_err: sw,
            hardware_err: hw.err,
            hardware_rmse: hw.rmse,
            total_power: hw.total_power,
            neuron_power: hw.neuron_power,
            energy: hw.energy,
            cycles: hw.cycles,
        },
        sw,
    ))
}

#[derive(Debug, Clone)]
pub struct SweepOutputs {
    pub dir: Option<PathBuf>,
    pub rows: Vec<SweepRow>,
    pub points: Vec<SweepPoint>,
}

/// Runs every (value, replication) row in order. Writes `rows.csv`,
/// `points.csv` and the resolved sweep settings when `write` is set.
pub fn run_sweep(spec: &SweepSpec, write: bool) -> Result<SweepOutputs> {
    spec.validate()?;
    let mut cache = ModelCache::default();
    let mut rows = Vec::new();
    for value in &spec.values {
        for rep in 0..spec.replications {
            let cfg = spec.point_config(value, rep)?;
            log::info!("sweep {}={value} replication {rep}", spec.parameter);
            let (mut row, _) = run_point(&cfg, spec.software, &mut cache)?;
            row.value = value.clone();
            row.replication = rep;
            rows.push(row);
        }
    }
    let points = aggregate(&rows);
    let dir = if write {
        let dir = create_run_dir(&spec.base.output_dir, &format!("sweep-{}", spec.parameter))?;
        write_json(
            &dir.join("config.json"),
            &serde_json::json!({
                "parameter": spec.parameter.to_string(),
                "values": spec.values,
                "replications": spec.replications,
                "base": spec.base.clone().resolved(),
            }),
        )?;
        write_rows_csv(&dir.join("rows.csv"), spec.parameter, &rows)?;
        write_points_csv(&dir.join("points.csv"), spec.parameter, &points)?;
        Some(dir)
    } else {
        None
    };
    Ok(SweepOutputs { dir, rows, points })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn write_rows_csv(path: &Path, param: SweepParam, rows: &[SweepRow]) -> Result<()> {
    let mut text = format!(
        "{param},replication,seed,software_err,hardware_err,hardware_rmse,total_power_W,neuron_power_W,energy_J,cycles\n"
    );
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&r.value),
            r.replication,
            r.seed,
            opt(r.software_err),
            r.hardware_err,
            r.hardware_rmse,
            r.total_power,
            r.neuron_power,
            r.energy,
            r.cycles
        ));
    }
    fs::write(path, text).map_err(PinsimError::io(path))
}

pub fn write_points_csv(path: &Path, param: SweepParam, points: &[SweepPoint]) -> Result<()> {
    let mut text = format!(
        "{param},replications,software_err_mean,software_err_std,hardware_err_mean,hardware_err_std,total_power_W,energy_J\n"
    );
    for p in points {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_field(&p.value),
            p.replications,
            opt(p.software_err_mean),
            opt(p.software_err_std),
            p.hardware_err_mean,
            opt(p.hardware_err_std),
            p.total_power_mean,
            p.energy_mean
        ));
    }
    fs::write(path, text).map_err(PinsimError::io(path))
}
