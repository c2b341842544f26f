//! Exhaustive Boltzmann tables and Gibbs-sampled estimates for small RBMs.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{network_energy, sample_layer, BinaryState, RbmParams};
use crate::error::{invalid, Error, Result};
use crate::math::exp;

/// Largest visible + hidden node count accepted for exhaustive tables.
pub const MAX_ENUMERATED_NODES: usize = 20;

/// Probability table over all joint states of a small RBM.
///
/// State index `k` encodes the visible bits in its low `n_visible` bits
/// (unit 0 least significant) followed by the hidden bits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    n_visible: usize,
    n_hidden: usize,
    probabilities: Vec<f64>,
}

impl StateDistribution {
    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, visible: &BinaryState, hidden: &BinaryState) -> f64 {
        self.probabilities[joint_index(visible.bits(), hidden.bits())]
    }

    /// Splits a state index into its visible and hidden parts.
    pub fn state(&self, index: usize) -> (BinaryState, BinaryState) {
        (
            BinaryState::from_index(index, self.n_visible),
            BinaryState::from_index(index >> self.n_visible, self.n_hidden),
        )
    }

    /// Marginal probability that visible unit `i` is on.
    pub fn visible_marginal(&self, i: usize) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(k, _)| (k >> i) & 1 == 1)
            .map(|(_, p)| p)
            .sum()
    }

    /// Total-variation distance `½ Σ |p - q|`.
    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        if self.n_visible != other.n_visible || self.n_hidden != other.n_hidden {
            return Err(Error::DimensionMismatch {
                context: "total_variation",
                expected: self.probabilities.len(),
                actual: other.probabilities.len(),
            });
        }
        Ok(0.5
            * self
                .probabilities
                .iter()
                .zip(&other.probabilities)
                .map(|(p, q)| (p - q).abs())
                .sum::<f64>())
    }
}

fn joint_index(visible: &[u8], hidden: &[u8]) -> usize {
    visible
        .iter()
        .chain(hidden)
        .enumerate()
        .fold(0, |acc, (k, &b)| acc | (usize::from(b) << k))
}

fn check_size(rbm: &RbmParams) -> Result<()> {
    let nodes = rbm.n_visible() + rbm.n_hidden();
    if nodes > MAX_ENUMERATED_NODES {
        return Err(Error::TooManyNodes {
            nodes,
            limit: MAX_ENUMERATED_NODES,
        });
    }
    Ok(())
}

/// `P(s) = e^{-E(s)} / Z` over every joint state.
pub fn exact_boltzmann_distribution(rbm: &RbmParams) -> Result<StateDistribution> {
    check_size(rbm)?;
    rbm.validate()?;
    let (nv, nh) = (rbm.n_visible(), rbm.n_hidden());
    let states = 1usize << (nv + nh);
    let energies = (0..states)
        .map(|k| {
            network_energy(
                &BinaryState::from_index(k, nv),
                &BinaryState::from_index(k >> nv, nh),
                rbm,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    // Shift by the minimum energy so the largest weight is exp(0).
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut probabilities: Vec<f64> = energies.iter().map(|e| exp(-(e - e_min))).collect();
    let z: f64 = probabilities.iter().sum();
    for p in &mut probabilities {
        *p /= z;
    }
    Ok(StateDistribution {
        n_visible: nv,
        n_hidden: nh,
        probabilities,
    })
}

/// Empirical joint-state frequencies from `sweeps` block Gibbs sweeps.
///
/// The chain starts from a uniformly random visible state; each sweep samples
/// the hidden layer given the visible one, then the visible layer given the
/// new hidden layer, and records the joint state.
pub fn gibbs_empirical_distribution<R: Rng + ?Sized>(
    rbm: &RbmParams,
    sweeps: usize,
    rng: &mut R,
) -> Result<StateDistribution> {
    if sweeps == 0 {
        return Err(invalid("sweeps", "must be at least 1"));
    }
    check_size(rbm)?;
    rbm.validate()?;
    let (nv, nh) = (rbm.n_visible(), rbm.n_hidden());
    let mut counts = vec![0u64; 1 << (nv + nh)];
    let mut visible = sample_layer(&vec![0.5; nv], rng);
    for _ in 0..sweeps {
        let hidden = sample_layer(&rbm.hidden_probabilities(&visible.to_f64())?, rng);
        visible = sample_layer(&rbm.visible_probabilities(&hidden.to_f64())?, rng);
        counts[joint_index(visible.bits(), hidden.bits())] += 1;
    }
    let probabilities = counts.iter().map(|&c| c as f64 / sweeps as f64).collect();
    Ok(StateDistribution {
        n_visible: nv,
        n_hidden: nh,
        probabilities,
    })
}
