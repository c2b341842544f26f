//! Versioned artifacts on disk: models, mapped resistances, reports.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pinsim_core::mapping::ResistiveDbn;
use pinsim_core::rbm::DbnModel;
use pinsim_core::Matrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{PinsimError, Result};

pub const FORMAT_VERSION: u32 = 1;

/// What an artifact file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Model,
    Resistances,
    EvalReport,
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    kind: ArtifactKind,
    version: u32,
    seed: Option<u64>,
    /// Resolved run configuration that produced the payload, if any.
    config: Option<Value>,
    payload: T,
}

/// Writes `value` as JSON with a versioned header. The file is written to a
/// sibling temporary and renamed, so readers never see a half-written file.
pub fn save_artifact<T: Serialize>(
    path: &Path,
    kind: ArtifactKind,
    value: &T,
    seed: Option<u64>,
    config: Option<&impl Serialize>,
) -> Result<()> {
    let config = config
        .map(serde_json::to_value)
        .transpose()
        .map_err(|e| PinsimError::format(path, e.to_string()))?;
    let envelope = Envelope {
        kind,
        version: FORMAT_VERSION,
        seed,
        config,
        payload: value,
    };
    let tmp = tmp_path(path);
    let file = File::create(&tmp).map_err(PinsimError::io(&tmp))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer(&mut out, &envelope).map_err(|e| PinsimError::format(path, e.to_string()))?;
    out.flush().map_err(PinsimError::io(&tmp))?;
    drop(out);
    fs::rename(&tmp, path).map_err(PinsimError::io(path))
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Reads an artifact written by [`save_artifact`], checking kind and version.
pub fn load_artifact<T: DeserializeOwned>(path: &Path, kind: ArtifactKind) -> Result<T> {
    let bytes = fs::read(path).map_err(PinsimError::io(path))?;
    let envelope: Envelope<Value> =
        serde_json::from_slice(&bytes).map_err(|e| PinsimError::format(path, format!("corrupt file: {e}")))?;
    if envelope.version != FORMAT_VERSION {
        return Err(PinsimError::format(
            path,
            format!("version {} (this build reads {FORMAT_VERSION})", envelope.version),
        ));
    }
    if envelope.kind != kind {
        return Err(PinsimError::format(
            path,
            format!("holds {:?}, expected {kind:?}", envelope.kind),
        ));
    }
    serde_json::from_value(envelope.payload).map_err(|e| PinsimError::format(path, format!("corrupt payload: {e}")))
}

pub fn save_model(path: &Path, model: &DbnModel, seed: u64, config: &impl Serialize) -> Result<()> {
    save_artifact(path, ArtifactKind::Model, model, Some(seed), Some(config))
}

pub fn load_model(path: &Path) -> Result<DbnModel> {
    let model: DbnModel = load_artifact(path, ArtifactKind::Model)?;
    model
        .validate()
        .map_err(|e| PinsimError::format(path, format!("inconsistent model: {e}")))?;
    Ok(model)
}

pub fn save_resistances(path: &Path, rdbn: &ResistiveDbn, seed: u64, config: &impl Serialize) -> Result<()> {
    save_artifact(path, ArtifactKind::Resistances, rdbn, Some(seed), Some(config))
}

pub fn load_resistances(path: &Path) -> Result<ResistiveDbn> {
    let rdbn: ResistiveDbn = load_artifact(path, ArtifactKind::Resistances)?;
    rdbn.validate()
        .map_err(|e| PinsimError::format(path, format!("inconsistent resistances: {e}")))?;
    Ok(rdbn)
}

/// `x` with six significant digits, no exponent for ordinary magnitudes.
pub fn six_significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..=9).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    format!("{x:.*}", (5 - magnitude).max(0) as usize)
}

fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(PinsimError::io(path))?;
    let mut out = BufWriter::new(file);
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|&x| six_significant(x)).collect();
        writeln!(out, "{}", line.join(",")).map_err(PinsimError::io(path))?;
    }
    out.flush().map_err(PinsimError::io(path))
}

/// One CSV per matrix and layer: `layer{k}_posWeight.csv`, `_negWeight`,
/// `_posBias`, `_negBias` (Ω). Weight files have one row per input line.
pub fn export_resistance_csv(dir: &Path, rdbn: &ResistiveDbn) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(PinsimError::io(dir))?;
    let mut written = Vec::new();
    for (k, layer) in rdbn.layers.iter().enumerate() {
        let bias_row = |v: &[f64]| Matrix::from_vec(1, v.len(), v.to_vec()).expect("row shape");
        for (name, m) in [
            ("posWeight", layer.rw_pos.clone()),
            ("negWeight", layer.rw_neg.clone()),
            ("posBias", bias_row(&layer.rb_pos)),
            ("negBias", bias_row(&layer.rb_neg)),
        ] {
            let path = dir.join(format!("layer{k}_{name}.csv"));
            write_matrix_csv(&path, &m)?;
            written.push(path);
        }
    }
    Ok(written)
}
