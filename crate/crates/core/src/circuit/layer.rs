//! One clocked RBM stage: crossbars, amplifiers, neurons, integrators.

use alloc::vec::Vec;

use rand::Rng;

use super::{
    diff_amp_output, inject_input_noise, CircuitConfig, ColumnReadout, IntegratorKernel, LayerPower, NeuronMode,
};
use crate::device::{BehavioralNeuron, Magnetization, NeuronSimulator};
use crate::error::{ensure_len, Result};
use crate::mapping::ResistiveLayer;
use crate::matrix::Matrix;
use crate::rbm::BinaryState;

/// Signals of one layer during one clock.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerTrace {
    /// Amplifier inputs from the positive and negative arrays, V.
    pub v_pos: Vec<f64>,
    pub v_neg: Vec<f64>,
    /// Neuron gate voltages (amplifier output plus any injected noise), V.
    pub amp: Vec<f64>,
    /// Integrator voltages at the end of the clock, V.
    pub integrator: Vec<f64>,
    pub output: BinaryState,
    /// Neuron output streams (one entry per bit period or LLG step); empty
    /// unless recording was requested.
    pub bit_streams: Vec<Vec<u8>>,
    pub power: LayerPower,
}

/// Crossbar pair stored as conductances.
#[derive(Debug, Clone)]
pub(crate) struct PreparedLayer {
    g_pos: Matrix,
    g_neg: Matrix,
    gb_pos: Vec<f64>,
    gb_neg: Vec<f64>,
    /// Column conductance including the bias row.
    total_pos: Vec<f64>,
    total_neg: Vec<f64>,
}

impl PreparedLayer {
    pub(crate) fn new(layer: &ResistiveLayer) -> Self {
        let g_pos = layer.rw_pos.map(|r| 1.0 / r);
        let g_neg = layer.rw_neg.map(|r| 1.0 / r);
        let gb_pos: Vec<f64> = layer.rb_pos.iter().map(|r| 1.0 / r).collect();
        let gb_neg: Vec<f64> = layer.rb_neg.iter().map(|r| 1.0 / r).collect();
        let ones = alloc::vec![1.0; g_pos.rows()];
        let col_sum = |g: &Matrix, b: &[f64]| -> Vec<f64> {
            let s = g.transpose_mul_vec(&ones).expect("shape");
            s.iter().zip(b).map(|(x, y)| x + y).collect()
        };
        let total_pos = col_sum(&g_pos, &gb_pos);
        let total_neg = col_sum(&g_neg, &gb_neg);
        Self {
            g_pos,
            g_neg,
            gb_pos,
            gb_neg,
            total_pos,
            total_neg,
        }
    }

    pub(crate) fn n_inputs(&self) -> usize {
        self.g_pos.rows()
    }

    pub(crate) fn n_outputs(&self) -> usize {
        self.g_pos.cols()
    }
}

/// The neuron model shared by every layer of a network.
#[derive(Debug, Clone)]
pub(crate) struct NeuronStage {
    pub(crate) mode: NeuronMode,
    pub(crate) behavioral: BehavioralNeuron,
    pub(crate) simulator: NeuronSimulator,
    pub(crate) behavioral_kernel: IntegratorKernel,
    pub(crate) device_kernel: IntegratorKernel,
}

impl NeuronStage {
    fn kernel(&self) -> &IntegratorKernel {
        match self.mode {
            NeuronMode::Behavioral => &self.behavioral_kernel,
            NeuronMode::Device => &self.device_kernel,
        }
    }

    /// Integrator voltage, supply current and (optionally) the bit stream
    /// for one neuron over one clock.
    fn fire<R: Rng + ?Sized>(&self, v_in: f64, vdd: f64, record: bool, rng: &mut R) -> Result<(f64, f64, Vec<u8>)> {
        match self.mode {
            NeuronMode::Behavioral => {
                let p = self.behavioral.probability(v_in);
                let kernel = &self.behavioral_kernel;
                let bits: Vec<u8> = (0..kernel.chunks())
                    .map(|_| u8::from(rng.random::<f64>() < p))
                    .collect();
                let v = vdd * kernel.integrate_bits(&bits);
                let current = self.simulator.expected_supply_current(v_in)?;
                Ok((v, current, if record { bits } else { Vec::new() }))
            }
            NeuronMode::Device => {
                let state = Magnetization::random(rng);
                let w = self.simulator.window(v_in, state, rng)?;
                let v = vdd * self.device_kernel.integrate_bits(&w.bits);
                Ok((v, w.mean_supply_current, if record { w.bits } else { Vec::new() }))
            }
        }
    }
}

pub(crate) fn evaluate_prepared<R: Rng + ?Sized>(
    layer: &PreparedLayer,
    input: &BinaryState,
    cfg: &CircuitConfig,
    stage: &NeuronStage,
    record: bool,
    rng: &mut R,
) -> Result<LayerTrace> {
    ensure_len("layer input", layer.n_inputs(), input.len())?;
    let vdd = cfg.vdd;
    let x = input.to_f64();
    // Column currents with every active row and the bias row at VDD.
    let column_current = |g: &Matrix, gb: &[f64]| -> Result<Vec<f64>> {
        let s = g.transpose_mul_vec(&x)?;
        Ok(s.iter().zip(gb).map(|(a, b)| vdd * (a + b)).collect())
    };
    let i_pos = column_current(&layer.g_pos, &layer.gb_pos)?;
    let i_neg = column_current(&layer.g_neg, &layer.gb_neg)?;

    let (v_pos, v_neg, array) = match cfg.readout {
        ColumnReadout::VirtualGround { r_sense } => {
            // Sensed before subtraction; only the amplifier output is rail-limited.
            let sense = |i: &[f64]| i.iter().map(|c| r_sense * c).collect::<Vec<_>>();
            // Every conducting resistor sees the full VDD.
            let array = vdd * (i_pos.iter().sum::<f64>() + i_neg.iter().sum::<f64>());
            (sense(&i_pos), sense(&i_neg), array)
        }
        ColumnReadout::Passive { g_load } => {
            let node = |i: &[f64], total: &[f64]| {
                i.iter()
                    .zip(total)
                    .map(|(c, t)| if t + g_load > 0.0 { c / (t + g_load) } else { 0.0 })
                    .collect::<Vec<_>>()
            };
            let vp = node(&i_pos, &layer.total_pos);
            let vn = node(&i_neg, &layer.total_neg);
            // Σ G (V_i − Vc)² over rows at VDD (current I = VDD·G_active) and
            // rows at 0, plus the termination: VDD·I − 2·Vc·I + Vc²·(G_total + g_load).
            let dissipation = |i: &[f64], total: &[f64], vc: &[f64]| -> f64 {
                i.iter()
                    .zip(total)
                    .zip(vc)
                    .map(|((c, t), v)| vdd * c - 2.0 * v * c + v * v * (t + g_load))
                    .sum()
            };
            let array = dissipation(&i_pos, &layer.total_pos, &vp) + dissipation(&i_neg, &layer.total_neg, &vn);
            (vp, vn, array)
        }
    };

    let mut amp: Vec<f64> = v_pos
        .iter()
        .zip(&v_neg)
        .map(|(p, n)| diff_amp_output(*p, *n, cfg))
        .collect();
    inject_input_noise(&mut amp, cfg.input_noise_sigma, vdd, rng)?;

    let threshold = 0.5 * vdd * stage.kernel().full_scale();
    let m = layer.n_outputs();
    let mut integrator = Vec::with_capacity(m);
    let mut bits = Vec::with_capacity(m);
    let mut bit_streams = Vec::new();
    let mut neuron_current = 0.0;
    for &v_in in &amp {
        let (v, current, stream) = stage.fire(v_in, vdd, record, rng)?;
        integrator.push(v);
        bits.push(u8::from(v > threshold));
        neuron_current += current;
        if record {
            bit_streams.push(stream);
        }
    }
    Ok(LayerTrace {
        v_pos,
        v_neg,
        amp,
        integrator,
        output: BinaryState::new(bits)?,
        bit_streams,
        power: LayerPower {
            array,
            neuron: vdd * neuron_current + cfg.amp_static_power * m as f64,
        },
    })
}

/// Evaluates one mapped RBM for one clock.
///
/// `simulator` provides the device model (used directly in device mode and
/// for the expected neuron current in behavioral mode).
pub fn evaluate_layer<R: Rng + ?Sized>(
    layer: &ResistiveLayer,
    input: &BinaryState,
    cfg: &CircuitConfig,
    simulator: &NeuronSimulator,
    record: bool,
    rng: &mut R,
) -> Result<LayerTrace> {
    let stage = super::network::neuron_stage(cfg, simulator.clone())?;
    evaluate_prepared(&PreparedLayer::new(layer), input, cfg, &stage, record, rng)
}
