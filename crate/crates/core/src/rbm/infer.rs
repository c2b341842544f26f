//! Ideal-sigmoid forward pass used as the software baseline.

use alloc::vec::Vec;

use rand::Rng;

use super::{sample_layer, BinaryState, DbnModel};
use crate::error::{ensure_len, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum InferenceMode {
    /// Propagate activation probabilities.
    #[default]
    MeanField,
    /// Sample every hidden layer and average the output probabilities over
    /// `samples` passes.
    Stochastic { samples: usize },
}

/// Output-layer scores for one input.
pub fn software_infer<R: Rng + ?Sized>(
    model: &DbnModel,
    input: &BinaryState,
    mode: InferenceMode,
    rng: &mut R,
) -> Result<Vec<f64>> {
    ensure_len("software_infer input", model.topology.visible_size(), input.len())?;
    match mode {
        InferenceMode::MeanField => {
            let mut a = input.to_f64();
            for rbm in &model.rbms {
                a = rbm.hidden_probabilities(&a)?;
            }
            Ok(a)
        }
        InferenceMode::Stochastic { samples } => {
            if samples == 0 {
                return Err(invalid("samples", "must be at least 1"));
            }
            let (last, hidden) = model.rbms.split_last().expect("topology has at least one rbm");
            let mut scores = alloc::vec![0.0; model.topology.output_size()];
            for _ in 0..samples {
                let mut a = input.to_f64();
                for rbm in hidden {
                    a = sample_layer(&rbm.hidden_probabilities(&a)?, rng).to_f64();
                }
                for (s, p) in scores.iter_mut().zip(last.hidden_probabilities(&a)?) {
                    *s += p;
                }
            }
            for s in &mut scores {
                *s /= samples as f64;
            }
            Ok(scores)
        }
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn classify(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    best
}
