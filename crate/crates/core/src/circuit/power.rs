//! Static power of the crossbars and neurons.

use crate::error::{ensure_len, Result};
use crate::matrix::Matrix;

/// Power drawn by one RBM during its clock, W.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerPower {
    /// Both crossbars, bias rows included.
    pub array: f64,
    /// Neuron branches plus amplifier static power.
    pub neuron: f64,
}

impl LayerPower {
    pub fn total(&self) -> f64 {
        self.array + self.neuron
    }

    pub(crate) fn add_scaled(&mut self, other: &Self, scale: f64) {
        self.array += other.array * scale;
        self.neuron += other.neuron * scale;
    }
}

/// Dissipation of one crossbar:
/// `Σ_ij G_ij (V_i − Vc_j)² + Σ_j Gb_j (V_bias − Vc_j)² + g_load Σ_j Vc_j²`.
///
/// `conductances` is `rows × columns`; `column_voltages` are the column node
/// voltages (0 for a virtual-ground readout).
pub fn array_power(
    row_voltages: &[f64],
    conductances: &Matrix,
    bias_conductances: &[f64],
    bias_voltage: f64,
    column_voltages: &[f64],
    g_load: f64,
) -> Result<f64> {
    ensure_len("array_power rows", conductances.rows(), row_voltages.len())?;
    ensure_len("array_power columns", conductances.cols(), column_voltages.len())?;
    ensure_len("array_power bias", conductances.cols(), bias_conductances.len())?;
    let mut p = 0.0;
    for (i, &vi) in row_voltages.iter().enumerate() {
        for (g, vc) in conductances.row(i).iter().zip(column_voltages) {
            p += g * (vi - vc) * (vi - vc);
        }
    }
    for (g, vc) in bias_conductances.iter().zip(column_voltages) {
        p += g * (bias_voltage - vc) * (bias_voltage - vc) + g_load * vc * vc;
    }
    Ok(p)
}
