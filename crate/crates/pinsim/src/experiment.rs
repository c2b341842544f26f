//! Train, map and evaluate; write per-sample tables and a summary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pinsim_core::circuit::{EvalAccumulator, EvalReport, HardwareNetwork, LayerPower};
use pinsim_core::mapping::{apply_resistance_variation, map_dbn, ResistiveDbn};
use pinsim_core::metrics::{compute_metrics, ConfusionMatrix};
use pinsim_core::rbm::{classify, software_infer, train_dbn, DbnModel, TrainingSet};
use pinsim_core::rng::stream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::config::{RunConfig, NUM_CLASSES};
use crate::dataset::{binarize, load_split, BinaryDataset, Split};
use crate::error::{CoreContext, PinsimError, Result};

/// Stream offsets keep the random draws of different stages apart.
const SOFTWARE_STREAMS: u64 = 1 << 40;
const VARIATION_STREAM: u64 = 1 << 41;

pub const WORKERS_ENV: &str = "PINSIM_WORKERS";
pub const MNIST_DIR_ENV: &str = "PINSIM_MNIST_DIR";

/// Thread pool sized by `PINSIM_WORKERS` (default: all cores).
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var(WORKERS_ENV) {
        let n: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| PinsimError::Config(format!("{WORKERS_ENV}=`{text}` is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| PinsimError::Config(format!("cannot start worker pool: {e}")))
}

/// The bundled 5,000/1,000-image subset used when nothing else is found.
pub fn bundled_subset_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

/// Config path, then `PINSIM_MNIST_DIR`, then `./data/mnist`, then the
/// bundled subset.
pub fn locate_mnist_dir(configured: Option<&Path>) -> PathBuf {
    if let Some(dir) = configured {
        return dir.to_path_buf();
    }
    if let Some(dir) = std::env::var_os(MNIST_DIR_ENV) {
        return PathBuf::from(dir);
    }
    let local = PathBuf::from("data/mnist");
    if local.is_dir() {
        return local;
    }
    bundled_subset_dir()
}

#[derive(Debug, Clone)]
pub struct Datasets {
    pub train: BinaryDataset,
    pub test: BinaryDataset,
}

pub fn load_datasets(cfg: &RunConfig) -> Result<Datasets> {
    let dir = locate_mnist_dir(cfg.data.mnist_dir.as_deref());
    log::info!("loading MNIST from {}", dir.display());
    let threshold = cfg.data.binarize_threshold;
    let train = binarize(&load_split(&dir, Split::Train)?, threshold);
    let mut test = binarize(&load_split(&dir, Split::Test)?, threshold);
    if train.len() < cfg.train.num_train_samples {
        log::warn!(
            "{} training images requested, {} available",
            cfg.train.num_train_samples,
            train.len()
        );
    }
    if !cfg.data.full_test {
        if test.len() < cfg.data.test_samples {
            log::warn!(
                "{} test images requested, {} available",
                cfg.data.test_samples,
                test.len()
            );
        }
        test = test.take(cfg.data.test_samples);
    }
    Ok(Datasets {
        train: train.take(cfg.train.num_train_samples),
        test,
    })
}

pub fn train_model(cfg: &RunConfig, train: &BinaryDataset) -> Result<DbnModel> {
    let data = TrainingSet {
        images: &train.images,
        labels: Some(&train.labels),
    };
    log::info!(
        "training {} on {} samples",
        cfg.topology,
        train.len().min(cfg.train.num_train_samples)
    );
    train_dbn(data, &cfg.topology, &cfg.train).context("training")
}

/// Maps the model and applies the configured resistance variation.
pub fn map_model(cfg: &RunConfig, model: &DbnModel) -> Result<ResistiveDbn> {
    let rdbn = map_dbn(model, &cfg.mapping).context("mapping")?;
    let mut rng = stream(cfg.seed, VARIATION_STREAM);
    apply_resistance_variation(&rdbn, cfg.mapping.variation_sigma, &mut rng).context("resistance variation")
}

/// One evaluated test image.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample_id: usize,
    pub label: usize,
    pub prediction: usize,
    /// Output probabilities (software) or integrator voltages in V (hardware).
    pub outputs: Vec<f64>,
    pub cycles: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftwareReport {
    pub samples: usize,
    pub err: f64,
    pub rmse: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone)]
pub struct SoftwareEvaluation {
    pub records: Vec<SampleRecord>,
    pub report: SoftwareReport,
}

#[derive(Debug, Clone)]
pub struct HardwareEvaluation {
    pub records: Vec<SampleRecord>,
    pub report: EvalReport,
}

pub fn evaluate_software(cfg: &RunConfig, model: &DbnModel, test: &BinaryDataset) -> Result<SoftwareEvaluation> {
    let records = worker_pool()?.install(|| {
        test.images
            .par_iter()
            .zip(test.labels.par_iter())
            .enumerate()
            .map(|(i, (image, &label))| {
                let mut rng = stream(cfg.seed, SOFTWARE_STREAMS + i as u64);
                let scores = software_infer(model, image, cfg.software_inference, &mut rng)?;
                Ok(SampleRecord {
                    sample_id: i,
                    label,
                    prediction: classify(&scores),
                    outputs: scores,
                    cycles: model.topology.num_rbms(),
                    energy: 0.0,
                })
            })
            .collect::<pinsim_core::Result<Vec<_>>>()
    });
    let records = records.context("software inference")?;
    let predictions: Vec<usize> = records.iter().map(|r| r.prediction).collect();
    let scores: Vec<Vec<f64>> = records.iter().map(|r| r.outputs.clone()).collect();
    let metrics = compute_metrics(&predictions, &scores, &test.labels, NUM_CLASSES).context("software metrics")?;
    let mut confusion = ConfusionMatrix::new(NUM_CLASSES);
    for r in &records {
        confusion.record(r.label, r.prediction);
    }
    Ok(SoftwareEvaluation {
        records,
        report: SoftwareReport {
            samples: test.len(),
            err: metrics.err,
            rmse: metrics.rmse,
            confusion,
        },
    })
}

pub fn evaluate_hardware(cfg: &RunConfig, rdbn: &ResistiveDbn, test: &BinaryDataset) -> Result<HardwareEvaluation> {
    let net = HardwareNetwork::new(rdbn, &cfg.circuit, cfg.neuron_simulator()?).context("hardware network")?;
    let outcomes = worker_pool()?.install(|| {
        test.images
            .par_iter()
            .enumerate()
            .map(|(i, image)| net.evaluate(image, false, &mut stream(cfg.seed, i as u64)))
            .collect::<pinsim_core::Result<Vec<_>>>()
    });
    let outcomes = outcomes.context("hardware inference")?;
    let mut acc = EvalAccumulator::new(NUM_CLASSES);
    let mut records = Vec::with_capacity(outcomes.len());
    for (i, (outcome, &label)) in outcomes.into_iter().zip(&test.labels).enumerate() {
        acc.add(label, &outcome).context("hardware metrics")?;
        records.push(SampleRecord {
            sample_id: i,
            label,
            prediction: outcome.prediction,
            outputs: outcome.integrator,
            cycles: outcome.cycles,
            energy: outcome.energy,
        });
    }
    Ok(HardwareEvaluation {
        records,
        report: acc.finish().context("hardware metrics")?,
    })
}

/// `output_column` is the per-class column prefix, e.g. `v` or `p`.
pub fn write_records_csv(path: &Path, records: &[SampleRecord], output_column: &str) -> Result<()> {
    let file = File::create(path).map_err(PinsimError::io(path))?;
    let mut out = BufWriter::new(file);
    let classes = records.first().map_or(0, |r| r.outputs.len());
    let mut header = vec!["sample_id".to_owned(), "label".to_owned(), "prediction".to_owned()];
    header.extend((0..classes).map(|k| format!("{output_column}_{k}")));
    header.extend(["cycles".to_owned(), "energy_J".to_owned()]);
    let io = PinsimError::io;
    writeln!(out, "{}", header.join(",")).map_err(io(path))?;
    for r in records {
        write!(out, "{},{},{}", r.sample_id, r.label, r.prediction).map_err(io(path))?;
        for v in &r.outputs {
            write!(out, ",{v}").map_err(io(path))?;
        }
        writeln!(out, ",{},{}", r.cycles, r.energy).map_err(io(path))?;
    }
    out.flush().map_err(io(path))
}

/// Creates `<output_dir>/<YYYYmmdd-HHMMSS>-<label>`, adding a counter if the
/// name is taken.
pub fn create_run_dir(output_dir: &Path, label: &str) -> Result<PathBuf> {
    fs::create_dir_all(output_dir).map_err(PinsimError::io(output_dir))?;
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
    for n in 0.. {
        let name = if n == 0 {
            format!("{stamp}-{label}")
        } else {
            format!("{stamp}-{label}-{n}")
        };
        let dir = output_dir.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(PinsimError::Io { path: dir, source: e }),
        }
    }
    unreachable!("unbounded counter")
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| PinsimError::format(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(PinsimError::io(path))
}

/// Which evaluations an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub software: bool,
    pub hardware: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Self {
            software: true,
            hardware: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub topology: String,
    pub seed: u64,
    pub train_samples: usize,
    pub test_samples: usize,
    pub software: Option<SoftwareReport>,
    pub hardware: Option<EvalReport>,
    pub neuron_power_share: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub dir: PathBuf,
    pub model: DbnModel,
    pub resistances: ResistiveDbn,
    pub summary: RunSummary,
}

/// Full pipeline: train (or reuse `model`), map, evaluate and write
/// everything under a fresh run directory.
pub fn run_experiment(cfg: &RunConfig, model: Option<DbnModel>, stages: Stages, label: &str) -> Result<RunOutputs> {
    let cfg = cfg.clone().resolved();
    cfg.validate()?;
    let data = load_datasets(&cfg)?;
    let dir = create_run_dir(&cfg.output_dir, label)?;
    write_json(&dir.join("config.json"), &cfg)?;
    let model = match model {
        Some(m) => m,
        None => train_model(&cfg, &data.train)?,
    };
    if model.topology != cfg.topology {
        return Err(PinsimError::Config(format!(
            "model topology {} differs from configured {}",
            model.topology, cfg.topology
        )));
    }
    checkpoint::save_model(&dir.join("model.json"), &model, cfg.seed, &cfg)?;
    let rdbn = map_model(&cfg, &model)?;
    checkpoint::save_resistances(&dir.join("resistances.json"), &rdbn, cfg.seed, &cfg)?;
    checkpoint::export_resistance_csv(&dir.join("resistances"), &rdbn)?;

    let software = if stages.software {
        let eval = evaluate_software(&cfg, &model, &data.test)?;
        write_records_csv(&dir.join("software.csv"), &eval.records, "p")?;
        log::info!("software ERR {:.4}", eval.report.err);
        Some(eval.report)
    } else {
        None
    };
    let hardware = if stages.hardware {
        let eval = evaluate_hardware(&cfg, &rdbn, &data.test)?;
        write_records_csv(&dir.join("hardware.csv"), &eval.records, "v")?;
        write_power_csv(&dir.join("power.csv"), &eval.report.layer_power)?;
        log::info!("hardware ERR {:.4}", eval.report.err);
        Some(eval.report)
    } else {
        None
    };
    let summary = RunSummary {
        topology: cfg.topology.to_string(),
        seed: cfg.seed,
        train_samples: data.train.len(),
        test_samples: data.test.len(),
        neuron_power_share: hardware.as_ref().map(EvalReport::neuron_power_share),
        software,
        hardware,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(RunOutputs {
        dir,
        model,
        resistances: rdbn,
        summary,
    })
}

fn write_power_csv(path: &Path, layers: &[LayerPower]) -> Result<()> {
    let mut text = String::from("layer,array_W,neuron_W,total_W\n");
    for (k, p) in layers.iter().enumerate() {
        text.push_str(&format!("{k},{},{},{}\n", p.array, p.neuron, p.total()));
    }
    fs::write(path, text).map_err(PinsimError::io(path))
}
