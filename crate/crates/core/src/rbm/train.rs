//! Contrastive-divergence training.

use alloc::vec::Vec;

use rand::Rng;

use super::{sample_layer, BinaryState, DbnModel, NetworkTopology, RbmParams};
use crate::error::{ensure_len, invalid, Error, Result};
use crate::matrix::Matrix;
use crate::rng::seeded;

/// Order in which samples, RBMs and CD repetitions are visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TrainSchedule {
    /// Train the first RBM for all epochs, propagate the data through it,
    /// then train the next one on the propagated data.
    #[default]
    Greedy,
    /// For each epoch and each sample, run `max_iter` CD steps on every RBM in
    /// turn, feeding the sampled hidden layer of one RBM to the next.
    Interleaved,
}

/// What one RBM passes to the next during greedy training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Propagation {
    /// Sampled binary hidden states.
    #[default]
    Sampled,
    /// Hidden activation probabilities.
    MeanField,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// CD repetitions per sample per RBM.
    pub max_iter: usize,
    /// Passes over the training set.
    pub epochs: usize,
    /// Training samples taken from the front of the dataset.
    pub num_train_samples: usize,
    pub rng_seed: u64,
    pub schedule: TrainSchedule,
    /// Standard deviation of the initial weights.
    pub init_std: f64,
    /// Clamp the last RBM's hidden layer to the one-hot label in the
    /// positive phase, so the output layer learns class units.
    pub clamp_labels: bool,
    /// Data passed up the stack by the greedy schedule.
    pub propagation: Propagation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_iter: 1,
            epochs: 10,
            num_train_samples: 3000,
            rng_seed: 1,
            schedule: TrainSchedule::Greedy,
            init_std: 0.01,
            clamp_labels: true,
            propagation: Propagation::Sampled,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be finite and > 0"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(invalid("epochs", "must be at least 1"));
        }
        if self.num_train_samples == 0 {
            return Err(invalid("num_train_samples", "must be at least 1"));
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite()) {
            return Err(invalid("init_std", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Binary training images with optional class labels.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSet<'a> {
    pub images: &'a [BinaryState],
    pub labels: Option<&'a [usize]>,
}

/// Parameter increments of one CD step.
#[derive(Debug, Clone, PartialEq)]
pub struct CdDeltas {
    pub weights: Matrix,
    pub hidden_bias: Vec<f64>,
    pub visible_bias: Vec<f64>,
}

impl CdDeltas {
    /// `ΔW = η(v hᵀ − v′ h′ᵀ)`, `ΔB = η(h − h′)`, `ΔC = η(v − v′)`.
    pub fn from_phases(v: &[f64], h: &[f64], v_neg: &[f64], h_neg: &[f64], eta: f64) -> Result<Self> {
        ensure_len("cd negative visible", v.len(), v_neg.len())?;
        ensure_len("cd negative hidden", h.len(), h_neg.len())?;
        let weights = Matrix::from_fn(v.len(), h.len(), |i, j| eta * (v[i] * h[j] - v_neg[i] * h_neg[j]));
        let hidden_bias = h.iter().zip(h_neg).map(|(a, b)| eta * (a - b)).collect();
        let visible_bias = v.iter().zip(v_neg).map(|(a, b)| eta * (a - b)).collect();
        Ok(Self {
            weights,
            hidden_bias,
            visible_bias,
        })
    }

    pub fn apply(&self, rbm: &mut RbmParams) -> Result<()> {
        ensure_len(
            "cd weights",
            rbm.weights.as_slice().len(),
            self.weights.as_slice().len(),
        )?;
        for (w, d) in rbm.weights.as_mut_slice().iter_mut().zip(self.weights.as_slice()) {
            *w += d;
        }
        for (b, d) in rbm.hidden_bias.iter_mut().zip(&self.hidden_bias) {
            *b += d;
        }
        for (c, d) in rbm.visible_bias.iter_mut().zip(&self.visible_bias) {
            *c += d;
        }
        Ok(())
    }
}

struct Phases {
    h: Vec<f64>,
    v_neg: Vec<f64>,
    h_neg: Vec<f64>,
}

/// Feed-forward 1 (sampled `h`, unless clamped), feed-back (sampled `v′`),
/// feed-forward 2 (probabilities `h′`).
fn phases<R: Rng + ?Sized>(rbm: &RbmParams, v: &[f64], clamped: Option<&[f64]>, rng: &mut R) -> Result<Phases> {
    let h = match clamped {
        Some(h) => {
            ensure_len("clamped hidden", rbm.n_hidden(), h.len())?;
            h.to_vec()
        }
        None => sample_layer(&rbm.hidden_probabilities(v)?, rng).to_f64(),
    };
    let v_neg = sample_layer(&rbm.visible_probabilities(&h)?, rng).to_f64();
    let h_neg = rbm.hidden_probabilities(&v_neg)?;
    Ok(Phases { h, v_neg, h_neg })
}

fn apply_phases(rbm: &mut RbmParams, v: &[f64], p: &Phases, eta: f64) {
    let nh = rbm.n_hidden();
    for (i, (&vi, &vni)) in v.iter().zip(&p.v_neg).enumerate() {
        if vi == 0.0 && vni == 0.0 {
            continue;
        }
        let row = &mut rbm.weights.as_mut_slice()[i * nh..(i + 1) * nh];
        for ((w, &hj), &hnj) in row.iter_mut().zip(&p.h).zip(&p.h_neg) {
            *w += eta * (vi * hj - vni * hnj);
        }
    }
    for ((b, &hj), &hnj) in rbm.hidden_bias.iter_mut().zip(&p.h).zip(&p.h_neg) {
        *b += eta * (hj - hnj);
    }
    for ((c, &vi), &vni) in rbm.visible_bias.iter_mut().zip(v).zip(&p.v_neg) {
        *c += eta * (vi - vni);
    }
}

/// Deltas of one CD-1 step, without modifying `rbm`.
pub fn cd_deltas<R: Rng + ?Sized>(rbm: &RbmParams, v: &BinaryState, eta: f64, rng: &mut R) -> Result<CdDeltas> {
    ensure_len("cd visible", rbm.n_visible(), v.len())?;
    let v = v.to_f64();
    let p = phases(rbm, &v, None, rng)?;
    CdDeltas::from_phases(&v, &p.h, &p.v_neg, &p.h_neg, eta)
}

/// One CD-1 step applied in place.
pub fn cd_update<R: Rng + ?Sized>(rbm: &mut RbmParams, v: &[f64], eta: f64, rng: &mut R) -> Result<()> {
    ensure_len("cd visible", rbm.n_visible(), v.len())?;
    let p = phases(rbm, v, None, rng)?;
    apply_phases(rbm, v, &p, eta);
    Ok(())
}

/// One CD-1 step with the positive-phase hidden layer fixed to `hidden`.
pub fn cd_update_clamped<R: Rng + ?Sized>(
    rbm: &mut RbmParams,
    v: &[f64],
    hidden: &[f64],
    eta: f64,
    rng: &mut R,
) -> Result<()> {
    ensure_len("cd visible", rbm.n_visible(), v.len())?;
    let p = phases(rbm, v, Some(hidden), rng)?;
    apply_phases(rbm, v, &p, eta);
    Ok(())
}

fn one_hot(len: usize, hot: usize) -> Vec<f64> {
    let mut h = alloc::vec![0.0; len];
    h[hot] = 1.0;
    h
}

/// Trains a DBN on `data` and returns the model.
///
/// Only the first `cfg.num_train_samples` images are used. Deterministic for
/// a fixed `cfg.rng_seed`.
pub fn train_dbn(data: TrainingSet<'_>, topology: &NetworkTopology, cfg: &TrainConfig) -> Result<DbnModel> {
    cfg.validate()?;
    if data.images.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let count = cfg.num_train_samples.min(data.images.len());
    let images = &data.images[..count];
    for image in images {
        ensure_len("training image", topology.visible_size(), image.len())?;
    }
    let labels = if cfg.clamp_labels {
        let labels = data
            .labels
            .ok_or_else(|| invalid("clamp_labels", "label clamping needs labelled data"))?;
        ensure_len("training labels", data.images.len(), labels.len())?;
        let labels = &labels[..count];
        if let Some(&bad) = labels.iter().find(|&&l| l >= topology.output_size()) {
            return Err(Error::OutOfRange {
                name: "label",
                value: bad as f64,
                min: 0.0,
                max: topology.output_size() as f64 - 1.0,
            });
        }
        Some(labels)
    } else {
        None
    };

    let mut rng = seeded(cfg.rng_seed);
    let mut rbms = topology
        .layer_sizes()
        .windows(2)
        .map(|pair| RbmParams::random(pair[0], pair[1], cfg.init_std, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let top = rbms.len() - 1;
    let eta = cfg.learning_rate;

    match cfg.schedule {
        TrainSchedule::Greedy => {
            let mut layer_input: Vec<Vec<f64>> = images.iter().map(BinaryState::to_f64).collect();
            for (j, rbm) in rbms.iter_mut().enumerate() {
                for _ in 0..cfg.epochs {
                    for (k, v) in layer_input.iter().enumerate() {
                        for _ in 0..cfg.max_iter {
                            match labels.filter(|_| j == top) {
                                Some(l) => cd_update_clamped(rbm, v, &one_hot(rbm.n_hidden(), l[k]), eta, &mut rng)?,
                                None => cd_update(rbm, v, eta, &mut rng)?,
                            }
                        }
                    }
                }
                log::debug!("trained rbm {j} ({}x{})", rbm.n_visible(), rbm.n_hidden());
                if j < top {
                    layer_input = layer_input
                        .iter()
                        .map(|v| {
                            let p = rbm.hidden_probabilities(v)?;
                            Ok(match cfg.propagation {
                                Propagation::Sampled => sample_layer(&p, &mut rng).to_f64(),
                                Propagation::MeanField => p,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                }
            }
        }
        TrainSchedule::Interleaved => {
            for _ in 0..cfg.epochs {
                for (k, image) in images.iter().enumerate() {
                    let mut v = image.to_f64();
                    for (j, rbm) in rbms.iter_mut().enumerate() {
                        for _ in 0..cfg.max_iter {
                            match labels.filter(|_| j == top) {
                                Some(l) => cd_update_clamped(rbm, &v, &one_hot(rbm.n_hidden(), l[k]), eta, &mut rng)?,
                                None => cd_update(rbm, &v, eta, &mut rng)?,
                            }
                        }
                        if j < top {
                            v = sample_layer(&rbm.hidden_probabilities(&v)?, &mut rng).to_f64();
                        }
                    }
                }
            }
        }
    }
    DbnModel::new(topology.clone(), rbms)
}
