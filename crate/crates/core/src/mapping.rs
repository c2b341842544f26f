//! Trained weights to crossbar resistances.
//!
//! Each signed matrix is split into two non-negative matrices, one per
//! crossbar. Values are mapped linearly onto `[g_min, g_max] = [1/r_max,
//! 1/r_min]` using per-RBM extrema (weights and biases separately), and the
//! resulting resistances are snapped to a grid of `Q` equal intervals.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::math::round_half_even;
use crate::matrix::Matrix;
use crate::rbm::{DbnModel, NetworkTopology};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MappingConfig {
    /// Ω
    pub r_min: f64,
    /// Percent spread: `r_max = (1 + delta_r_w/100) · r_min`.
    pub delta_r_w: f64,
    /// Number of equal resistance intervals; `None` leaves values unquantized.
    pub quantization: Option<u32>,
    /// Standard deviation of additive resistance variation, Ω.
    pub variation_sigma: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            r_min: 1000.0,
            delta_r_w: 400.0,
            quantization: Some(8),
            variation_sigma: 0.0,
        }
    }
}

impl MappingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return Err(invalid("r_min", "must be finite and > 0"));
        }
        if !(self.delta_r_w > 0.0 && self.delta_r_w.is_finite()) {
            return Err(invalid("delta_r_w", "must be finite and > 0"));
        }
        if self.quantization == Some(0) {
            return Err(invalid("quantization", "must be at least 1"));
        }
        if !(self.variation_sigma >= 0.0 && self.variation_sigma.is_finite()) {
            return Err(invalid("variation_sigma", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn r_max(&self) -> f64 {
        (1.0 + self.delta_r_w / 100.0) * self.r_min
    }

    pub fn g_min(&self) -> f64 {
        1.0 / self.r_max()
    }

    pub fn g_max(&self) -> f64 {
        1.0 / self.r_min
    }

    /// Spacing of the resistance grid, if quantized.
    pub fn grid_pitch(&self) -> Option<f64> {
        self.quantization.map(|q| (self.r_max() - self.r_min) / f64::from(q))
    }
}

/// `(pos, neg)` with `pos − neg = m` and disjoint support.
pub fn split_signed(m: &Matrix) -> (Matrix, Matrix) {
    (
        m.map(|w| if w >= 0.0 { w } else { 0.0 }),
        m.map(|w| if w < 0.0 { -w } else { 0.0 }),
    )
}

fn split_vec(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        v.iter().map(|&w| if w >= 0.0 { w } else { 0.0 }).collect(),
        v.iter().map(|&w| if w < 0.0 { -w } else { 0.0 }).collect(),
    )
}

/// Affine map from a value range onto `[g_min, g_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConductanceMap {
    pub value_min: f64,
    pub value_max: f64,
    pub g_min: f64,
    pub g_max: f64,
}

impl ConductanceMap {
    pub fn new(value_min: f64, value_max: f64, cfg: &MappingConfig) -> Result<Self> {
        if !(value_min.is_finite() && value_max.is_finite()) {
            return Err(Error::NonFinite("mapping extrema"));
        }
        Ok(Self {
            value_min,
            value_max,
            g_min: cfg.g_min(),
            g_max: cfg.g_max(),
        })
    }

    /// Over the union of the split pair, as the positive and negative arrays
    /// share one scale.
    fn over(pos: &[f64], neg: &[f64], cfg: &MappingConfig) -> Result<Self> {
        let lo = pos.iter().chain(neg).copied().fold(f64::INFINITY, f64::min);
        let hi = pos.iter().chain(neg).copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(lo, hi, cfg)
    }

    pub fn is_degenerate(&self) -> bool {
        self.value_max <= self.value_min
    }

    /// `g = (g_max − g_min)(w − w_min)/(w_max − w_min) + g_min`; a degenerate
    /// range maps everything to `g_min`.
    pub fn conductance(&self, w: f64) -> f64 {
        if self.is_degenerate() {
            return self.g_min;
        }
        (self.g_max - self.g_min) * (w - self.value_min) / (self.value_max - self.value_min) + self.g_min
    }

    /// Inverse of [`Self::conductance`].
    pub fn value(&self, g: f64) -> f64 {
        if self.is_degenerate() {
            return self.value_min;
        }
        (g - self.g_min) * (self.value_max - self.value_min) / (self.g_max - self.g_min) + self.value_min
    }
}

/// Maps values to conductances with `map`.
pub fn map_to_conductance(values: &[f64], map: &ConductanceMap) -> Vec<f64> {
    values.iter().map(|&w| map.conductance(w)).collect()
}

/// Resistance `1/g`, snapped to the grid when quantization is enabled.
///
/// The grid is `r_min + k·(r_max − r_min)/Q`, `k = 0..=Q`; ties round to the
/// even grid index.
pub fn quantize_resistance(g: f64, cfg: &MappingConfig) -> f64 {
    let r = 1.0 / g;
    match cfg.grid_pitch() {
        Some(pitch) => cfg.r_min + round_half_even((r - cfg.r_min) / pitch) * pitch,
        None => r,
    }
}

/// Resistances of one RBM, one crossbar pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResistiveLayer {
    /// `n_visible × n_hidden`, Ω.
    pub rw_pos: Matrix,
    pub rw_neg: Matrix,
    /// One per hidden unit, Ω.
    pub rb_pos: Vec<f64>,
    pub rb_neg: Vec<f64>,
}

impl ResistiveLayer {
    pub fn n_inputs(&self) -> usize {
        self.rw_pos.rows()
    }

    pub fn n_outputs(&self) -> usize {
        self.rw_pos.cols()
    }

    pub fn resistances(&self) -> impl Iterator<Item = f64> + '_ {
        self.rw_pos
            .as_slice()
            .iter()
            .chain(self.rw_neg.as_slice())
            .chain(&self.rb_pos)
            .chain(&self.rb_neg)
            .copied()
    }

    fn validate(&self) -> Result<()> {
        let (n, m) = (self.rw_pos.rows(), self.rw_pos.cols());
        let consistent =
            self.rw_neg.rows() == n && self.rw_neg.cols() == m && self.rb_pos.len() == m && self.rb_neg.len() == m;
        if !consistent {
            return Err(invalid("resistive layer", "array shapes disagree"));
        }
        if self.resistances().any(|r| !(r > 0.0 && r.is_finite())) {
            return Err(invalid("resistive layer", "resistances must be finite and > 0"));
        }
        Ok(())
    }
}

/// A mapped network ready for circuit evaluation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResistiveDbn {
    pub topology: NetworkTopology,
    pub layers: Vec<ResistiveLayer>,
    pub config: MappingConfig,
}

impl ResistiveDbn {
    pub fn validate(&self) -> Result<()> {
        crate::error::ensure_len("resistive layers", self.topology.num_rbms(), self.layers.len())?;
        for (layer, pair) in self.layers.iter().zip(self.topology.layer_sizes().windows(2)) {
            crate::error::ensure_len("resistive layer inputs", pair[0], layer.n_inputs())?;
            crate::error::ensure_len("resistive layer outputs", pair[1], layer.n_outputs())?;
            layer.validate()?;
        }
        Ok(())
    }
}

/// Per-RBM split, map and quantize.
pub fn map_dbn(model: &DbnModel, cfg: &MappingConfig) -> Result<ResistiveDbn> {
    cfg.validate()?;
    model.validate()?;
    let mut layers = Vec::with_capacity(model.rbms.len());
    for (k, rbm) in model.rbms.iter().enumerate() {
        let (w_pos, w_neg) = split_signed(&rbm.weights);
        let (b_pos, b_neg) = split_vec(&rbm.hidden_bias);
        let w_map = ConductanceMap::over(w_pos.as_slice(), w_neg.as_slice(), cfg)?;
        let b_map = ConductanceMap::over(&b_pos, &b_neg, cfg)?;
        if w_map.is_degenerate() {
            log::warn!("rbm {k}: all weights equal, mapping every weight to r_max");
        }
        if b_map.is_degenerate() {
            log::warn!("rbm {k}: all biases equal, mapping every bias to r_max");
        }
        let wr = |w: f64| quantize_resistance(w_map.conductance(w), cfg);
        let br = |b: f64| quantize_resistance(b_map.conductance(b), cfg);
        layers.push(ResistiveLayer {
            rw_pos: w_pos.map(&wr),
            rw_neg: w_neg.map(&wr),
            rb_pos: b_pos.iter().map(|&b| br(b)).collect(),
            rb_neg: b_neg.iter().map(|&b| br(b)).collect(),
        });
    }
    Ok(ResistiveDbn {
        topology: model.topology.clone(),
        layers,
        config: cfg.clone(),
    })
}

/// Adds independent `N(0, sigma²)` to every resistance, clamped to
/// `[r_min/2, 2 r_max]`.
pub fn apply_resistance_variation<R: Rng + ?Sized>(
    rdbn: &ResistiveDbn,
    sigma: f64,
    rng: &mut R,
) -> Result<ResistiveDbn> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid("variation sigma", "must be finite and >= 0"));
    }
    if sigma == 0.0 {
        return Ok(rdbn.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|_| invalid("variation sigma", "invalid"))?;
    let lo = 0.5 * rdbn.config.r_min;
    let hi = 2.0 * rdbn.config.r_max();
    let mut out = rdbn.clone();
    let mut perturb = |r: &mut f64| *r = (*r + normal.sample(rng)).clamp(lo, hi);
    for layer in &mut out.layers {
        layer.rw_pos.as_mut_slice().iter_mut().for_each(&mut perturb);
        layer.rw_neg.as_mut_slice().iter_mut().for_each(&mut perturb);
        layer.rb_pos.iter_mut().for_each(&mut perturb);
        layer.rb_neg.iter_mut().for_each(&mut perturb);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbm::RbmParams;
    use crate::rng::seeded;
    use alloc::vec;
    use proptest::prelude::*;

    fn cfg(q: Option<u32>) -> MappingConfig {
        MappingConfig {
            quantization: q,
            ..MappingConfig::default()
        }
    }

    #[test]
    fn split_examples() {
        let m = Matrix::from_vec(1, 2, vec![0.3, -0.2]).unwrap();
        let (p, n) = split_signed(&m);
        assert_eq!(p.as_slice(), &[0.3, 0.0]);
        assert_eq!(n.as_slice(), &[0.0, 0.2]);
        let (p, n) = split_signed(&Matrix::zeros(2, 2));
        assert_eq!(p, Matrix::zeros(2, 2));
        assert_eq!(n, Matrix::zeros(2, 2));
    }

    #[test]
    fn conductance_endpoints_and_midpoint() {
        let c = cfg(None);
        let map = ConductanceMap::new(0.0, 2.0, &c).unwrap();
        assert_eq!(map.conductance(2.0), 1e-3);
        assert!((map.conductance(0.0) - 1.0 / 5000.0).abs() < 1e-18);
        let g = map.conductance(1.0);
        assert!((g - 0.6e-3).abs() < 1e-15);
        assert!((1.0 / g - 1_666.666_666_7).abs() < 1e-3);
    }

    #[test]
    fn quantization_grid_examples() {
        let c = cfg(Some(8));
        assert_eq!(c.grid_pitch(), Some(500.0));
        assert_eq!(quantize_resistance(1.0 / 1000.0, &c), 1000.0);
        assert_eq!(quantize_resistance(1.0 / 2300.0, &c), 2500.0);
        // Exact tie between 2000 and 2500 goes to the even index (2000).
        assert_eq!(quantize_resistance(1.0 / 2250.0, &c), 2000.0);
    }

    #[test]
    fn degenerate_model_maps_to_r_max() {
        let topo = NetworkTopology::new(vec![3, 2]).unwrap();
        let model = DbnModel::zeros(topo);
        let r = map_dbn(&model, &cfg(Some(8))).unwrap();
        assert!(r.layers[0].resistances().all(|x| x == 5000.0));
    }

    #[test]
    fn fine_grid_round_trip_recovers_weights() {
        let mut rng = seeded(17);
        let rbm = RbmParams::random(30, 12, 1.0, &mut rng).unwrap();
        let model = DbnModel::new(NetworkTopology::new(vec![30, 12]).unwrap(), vec![rbm]).unwrap();
        let c = cfg(Some(1_000_000));
        let r = map_dbn(&model, &c).unwrap();
        let w = &model.rbms[0].weights;
        let (p, n) = split_signed(w);
        let map = ConductanceMap::over(p.as_slice(), n.as_slice(), &c).unwrap();
        let scale = w.max().max(-w.min());
        for k in 0..w.as_slice().len() {
            let wp = map.value(1.0 / r.layers[0].rw_pos.as_slice()[k]);
            let wn = map.value(1.0 / r.layers[0].rw_neg.as_slice()[k]);
            assert!((wp - wn - w.as_slice()[k]).abs() < 1e-3 * scale);
        }
    }

    #[test]
    fn variation_statistics() {
        let topo = NetworkTopology::new(vec![500, 100]).unwrap();
        let mut model = DbnModel::zeros(topo);
        for (k, w) in model.rbms[0].weights.as_mut_slice().iter_mut().enumerate() {
            *w = ((k % 7) as f64 - 3.0) * 0.1;
        }
        let r = map_dbn(&model, &cfg(Some(8))).unwrap();
        assert_eq!(apply_resistance_variation(&r, 0.0, &mut seeded(1)).unwrap(), r);
        let sigma = 100.0;
        let v = apply_resistance_variation(&r, sigma, &mut seeded(1)).unwrap();
        let diffs: Vec<f64> = v.layers[0]
            .rw_pos
            .as_slice()
            .iter()
            .zip(r.layers[0].rw_pos.as_slice())
            .map(|(a, b)| a - b)
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let std = (diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / diffs.len() as f64).sqrt();
        assert!((std / sigma - 1.0).abs() < 0.05, "std {std}");
        assert_eq!(v, apply_resistance_variation(&r, sigma, &mut seeded(1)).unwrap());
    }

    proptest! {
        #[test]
        fn split_reconstructs(values in proptest::collection::vec(-5.0f64..5.0, 1..40)) {
            let m = Matrix::from_vec(1, values.len(), values.clone()).unwrap();
            let (p, n) = split_signed(&m);
            for ((&a, &b), &v) in p.as_slice().iter().zip(n.as_slice()).zip(&values) {
                prop_assert_eq!(a - b, v);
                prop_assert_eq!(a * b, 0.0);
            }
        }

        #[test]
        fn mapping_is_order_preserving(a in 0.0f64..3.0, b in 0.0f64..3.0) {
            let map = ConductanceMap::new(0.0, 3.0, &cfg(None)).unwrap();
            if a >= b {
                prop_assert!(map.conductance(a) >= map.conductance(b));
                prop_assert!(1.0 / map.conductance(a) <= 1.0 / map.conductance(b));
            }
        }

        #[test]
        fn quantized_values_lie_on_grid(
            values in proptest::collection::vec(-2.0f64..2.0, 4..60),
            q in 1u32..20,
            delta in 50.0f64..1600.0,
        ) {
            let c = MappingConfig { delta_r_w: delta, quantization: Some(q), ..MappingConfig::default() };
            let cols = values.len();
            let rbm = RbmParams {
                weights: Matrix::from_vec(1, cols, values.clone()).unwrap(),
                hidden_bias: values.clone(),
                visible_bias: vec![0.0],
            };
            let model = DbnModel::new(NetworkTopology::new(vec![1, cols]).unwrap(), vec![rbm]).unwrap();
            let r = map_dbn(&model, &c).unwrap();
            let pitch = c.grid_pitch().unwrap();
            let mut distinct: Vec<f64> = Vec::new();
            for x in r.layers[0].rw_pos.as_slice().iter().chain(r.layers[0].rw_neg.as_slice()) {
                prop_assert!(*x >= c.r_min - 1e-9 && *x <= c.r_max() + 1e-9);
                let k = (x - c.r_min) / pitch;
                prop_assert!((k - k.round()).abs() < 1e-9);
                if !distinct.iter().any(|d| (d - x).abs() < 1e-9) {
                    distinct.push(*x);
                }
            }
            prop_assert!(distinct.len() <= q as usize + 1);
        }

        #[test]
        fn quantization_error_is_bounded(r in 1000.0f64..5000.0, q in 1u32..64) {
            let c = cfg(Some(q));
            let rq = quantize_resistance(1.0 / r, &c);
            prop_assert!((rq - r).abs() <= c.grid_pitch().unwrap() / 2.0 + 1e-9);
        }
    }
}
