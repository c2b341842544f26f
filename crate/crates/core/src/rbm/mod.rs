//! Restricted Boltzmann machines and their stacks (deep belief networks).
//!
//! Weights are stored visible-major: `weights.get(i, j)` couples visible unit
//! `i` to hidden unit `j`. The energy of a joint state is
//!
//! ```text
//! E(v, h) = -Σ_i c_i v_i - Σ_j b_j h_j - Σ_ij v_i w_ij h_j
//! ```
//!
//! and every unit switches on with probability `σ(bias + Σ w s)` given the
//! opposite layer.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ensure_len, invalid, Error, Result};
use crate::math::sigmoid;
use crate::matrix::Matrix;

mod boltzmann;
mod infer;
mod train;

pub use boltzmann::{
    exact_boltzmann_distribution, gibbs_empirical_distribution, StateDistribution, MAX_ENUMERATED_NODES,
};
pub use infer::{classify, software_infer, InferenceMode};
pub use train::{
    cd_deltas, cd_update, cd_update_clamped, train_dbn, CdDeltas, Propagation, TrainConfig, TrainSchedule, TrainingSet,
};

/// A vector of binary unit states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinaryState(Vec<u8>);

impl BinaryState {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(invalid("bits", "entries must be 0 or 1"));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(alloc::vec![0; len])
    }

    /// Bits `0..len` of `index`, least significant first.
    pub fn from_index(index: usize, len: usize) -> Self {
        Self((0..len).map(|k| ((index >> k) & 1) as u8).collect())
    }

    pub fn one_hot(len: usize, hot: usize) -> Result<Self> {
        if hot >= len {
            return Err(Error::OutOfRange {
                name: "one-hot index",
                value: hot as f64,
                min: 0.0,
                max: len as f64 - 1.0,
            });
        }
        let mut bits = alloc::vec![0; len];
        bits[hot] = 1;
        Ok(Self(bits))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| f64::from(b)).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }
}

/// Layer sizes from the visible layer to the output layer.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "TopologyRepr", into = "Vec<usize>"))]
pub struct NetworkTopology(Vec<usize>);

impl NetworkTopology {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(invalid("topology", "at least two layers are required"));
        }
        if layer_sizes.contains(&0) {
            return Err(invalid("topology", "every layer needs at least one node"));
        }
        Ok(Self(layer_sizes))
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn num_rbms(&self) -> usize {
        self.0.len() - 1
    }

    pub fn visible_size(&self) -> usize {
        self.0[0]
    }

    pub fn output_size(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    pub fn total_nodes(&self) -> usize {
        self.0.iter().sum()
    }
}

impl TryFrom<Vec<usize>> for NetworkTopology {
    type Error = Error;

    fn try_from(value: Vec<usize>) -> Result<Self> {
        Self::new(value)
    }
}

/// Accepts `[784, 200, 10]` or `"784x200x10"`.
#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
#[serde(untagged)]
enum TopologyRepr {
    Sizes(Vec<usize>),
    Text(alloc::string::String),
}

#[cfg(feature = "serde")]
impl TryFrom<TopologyRepr> for NetworkTopology {
    type Error = Error;

    fn try_from(value: TopologyRepr) -> Result<Self> {
        match value {
            TopologyRepr::Sizes(sizes) => Self::new(sizes),
            TopologyRepr::Text(text) => text.parse(),
        }
    }
}

impl From<NetworkTopology> for Vec<usize> {
    fn from(value: NetworkTopology) -> Self {
        value.0
    }
}

impl core::fmt::Display for NetworkTopology {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for (k, n) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("x")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl core::str::FromStr for NetworkTopology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .split(['x', 'X', '×', ',', '-'])
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| invalid("topology", alloc::format!("cannot parse `{part}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sizes)
    }
}

/// Parameters of one RBM.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RbmParams {
    /// `n_visible × n_hidden`.
    pub weights: Matrix,
    pub hidden_bias: Vec<f64>,
    pub visible_bias: Vec<f64>,
}

impl RbmParams {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Self {
            weights: Matrix::zeros(n_visible, n_hidden),
            hidden_bias: alloc::vec![0.0; n_hidden],
            visible_bias: alloc::vec![0.0; n_visible],
        }
    }

    /// Zero biases and weights drawn from `N(0, std²)`.
    pub fn random<R: Rng + ?Sized>(n_visible: usize, n_hidden: usize, std: f64, rng: &mut R) -> Result<Self> {
        let normal = Normal::new(0.0, std).map_err(|_| invalid("init_std", "must be finite and >= 0"))?;
        let mut params = Self::zeros(n_visible, n_hidden);
        for w in params.weights.as_mut_slice() {
            *w = normal.sample(rng);
        }
        Ok(params)
    }

    pub fn n_visible(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_hidden(&self) -> usize {
        self.weights.cols()
    }

    /// Checks internal consistency and finiteness.
    pub fn validate(&self) -> Result<()> {
        ensure_len("hidden bias", self.n_hidden(), self.hidden_bias.len())?;
        ensure_len("visible bias", self.n_visible(), self.visible_bias.len())?;
        let finite = self.weights.all_finite()
            && self.hidden_bias.iter().all(|x| x.is_finite())
            && self.visible_bias.iter().all(|x| x.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::NonFinite("rbm parameters"))
        }
    }

    /// `σ(B + Wᵀ v)`.
    pub fn hidden_probabilities(&self, visible: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.weights.transpose_mul_vec(visible)?;
        for (zj, bj) in z.iter_mut().zip(&self.hidden_bias) {
            *zj = sigmoid(*zj + bj);
        }
        Ok(z)
    }

    /// `σ(C + W h)`.
    pub fn visible_probabilities(&self, hidden: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.weights.mul_vec(hidden)?;
        for (zi, ci) in z.iter_mut().zip(&self.visible_bias) {
            *zi = sigmoid(*zi + ci);
        }
        Ok(z)
    }

    /// Every parameter negated.
    pub fn negated(&self) -> Self {
        Self {
            weights: self.weights.map(|w| -w),
            hidden_bias: self.hidden_bias.iter().map(|b| -b).collect(),
            visible_bias: self.visible_bias.iter().map(|c| -c).collect(),
        }
    }
}

/// A trained (or initialised) stack of RBMs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DbnModel {
    pub topology: NetworkTopology,
    pub rbms: Vec<RbmParams>,
}

impl DbnModel {
    pub fn new(topology: NetworkTopology, rbms: Vec<RbmParams>) -> Result<Self> {
        let model = Self { topology, rbms };
        model.validate()?;
        Ok(model)
    }

    pub fn zeros(topology: NetworkTopology) -> Self {
        let rbms = topology
            .layer_sizes()
            .windows(2)
            .map(|pair| RbmParams::zeros(pair[0], pair[1]))
            .collect();
        Self { topology, rbms }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_len("rbm count", self.topology.num_rbms(), self.rbms.len())?;
        for (rbm, pair) in self.rbms.iter().zip(self.topology.layer_sizes().windows(2)) {
            ensure_len("rbm visible size", pair[0], rbm.n_visible())?;
            ensure_len("rbm hidden size", pair[1], rbm.n_hidden())?;
            rbm.validate()?;
        }
        Ok(())
    }
}

/// Energy of the joint state `(visible, hidden)`.
pub fn network_energy(visible: &BinaryState, hidden: &BinaryState, rbm: &RbmParams) -> Result<f64> {
    ensure_len("network_energy visible", rbm.n_visible(), visible.len())?;
    ensure_len("network_energy hidden", rbm.n_hidden(), hidden.len())?;
    let v = visible.bits();
    let h = hidden.bits();
    let mut energy = 0.0;
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0 {
            continue;
        }
        energy -= rbm.visible_bias[i];
        for (j, &hj) in h.iter().enumerate() {
            if hj == 1 {
                energy -= rbm.weights.get(i, j);
            }
        }
    }
    for (j, &hj) in h.iter().enumerate() {
        if hj == 1 {
            energy -= rbm.hidden_bias[j];
        }
    }
    Ok(energy)
}

/// Probability that a unit with `bias` is on, given its incoming weights and
/// the state of the units feeding it.
pub fn activation_probability(bias: f64, incoming_weights: &[f64], source_state: &BinaryState) -> Result<f64> {
    ensure_len("activation_probability", incoming_weights.len(), source_state.len())?;
    if !bias.is_finite() || incoming_weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("activation_probability input"));
    }
    let drive: f64 = incoming_weights
        .iter()
        .zip(source_state.bits())
        .filter(|(_, &s)| s == 1)
        .map(|(w, _)| w)
        .sum();
    Ok(sigmoid(bias + drive))
}

/// Independent Bernoulli draws, one per probability.
///
/// Probabilities outside `[0, 1]` are clamped.
pub fn sample_layer<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> BinaryState {
    BinaryState(
        probabilities
            .iter()
            .map(|&p| u8::from(rng.random::<f64>() < p))
            .collect(),
    )
}
