//! Layer-sequential evaluation of a whole mapped network.

use alloc::vec::Vec;

use rand::Rng;

use super::layer::{evaluate_prepared, NeuronStage, PreparedLayer};
use super::{CircuitConfig, IntegratorKernel, LayerPower, LayerTrace};
use crate::device::NeuronSimulator;
use crate::error::{ensure_len, Error, Result};
use crate::mapping::ResistiveDbn;
use crate::metrics::{compute_metrics, ConfusionMatrix};
use crate::rbm::{classify, BinaryState, NetworkTopology};

pub(crate) fn neuron_stage(cfg: &CircuitConfig, simulator: NeuronSimulator) -> Result<NeuronStage> {
    cfg.validate()?;
    let steps = libm::round(cfg.clock_period / simulator.dt()) as usize;
    let device_kernel = IntegratorKernel::new(simulator.dt(), cfg.tau(), steps, 1)?;
    Ok(NeuronStage {
        mode: cfg.neuron_mode,
        behavioral: cfg.behavioral,
        behavioral_kernel: IntegratorKernel::for_behavioral(cfg)?,
        device_kernel,
        simulator,
    })
}

/// A mapped network prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub struct HardwareNetwork {
    topology: NetworkTopology,
    layers: Vec<PreparedLayer>,
    cfg: CircuitConfig,
    stage: NeuronStage,
}

/// Result of evaluating one input.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub prediction: usize,
    /// Last-layer integrator voltages, V.
    pub integrator: Vec<f64>,
    /// Integrator voltages divided by the integrator full scale, in `[0, 1]`.
    pub scores: Vec<f64>,
    pub layer_power: Vec<LayerPower>,
    /// `Σ layer power × clock period`, J.
    pub energy: f64,
    pub cycles: usize,
    /// Per-layer signals, when requested.
    pub traces: Vec<LayerTrace>,
}

impl HardwareNetwork {
    /// `simulator` must be configured with the same VDD as `cfg` and, for
    /// device mode, a window equal to the clock period.
    pub fn new(rdbn: &ResistiveDbn, cfg: &CircuitConfig, simulator: NeuronSimulator) -> Result<Self> {
        rdbn.validate()?;
        if (simulator.vdd() - cfg.vdd).abs() > 1e-12 {
            return Err(crate::error::invalid(
                "vdd",
                "device and circuit supply voltages differ",
            ));
        }
        Ok(Self {
            topology: rdbn.topology.clone(),
            layers: rdbn.layers.iter().map(PreparedLayer::new).collect(),
            stage: neuron_stage(cfg, simulator)?,
            cfg: cfg.clone(),
        })
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    pub fn config(&self) -> &CircuitConfig {
        &self.cfg
    }

    /// Feeds `sample` through every layer, one clock per RBM.
    pub fn evaluate<R: Rng + ?Sized>(&self, sample: &BinaryState, record: bool, rng: &mut R) -> Result<SampleOutcome> {
        ensure_len("hardware input", self.topology.visible_size(), sample.len())?;
        let mut input = sample.clone();
        let mut layer_power = Vec::with_capacity(self.layers.len());
        let mut traces = Vec::new();
        let mut last = None;
        for layer in &self.layers {
            let trace = evaluate_prepared(layer, &input, &self.cfg, &self.stage, record, rng)?;
            layer_power.push(trace.power);
            input = trace.output.clone();
            if record {
                traces.push(trace.clone());
            }
            last = Some(trace);
        }
        let last = last.expect("topology has at least one rbm");
        let full = self.cfg.vdd * self.stage_full_scale();
        let scores: Vec<f64> = last.integrator.iter().map(|v| v / full).collect();
        let energy = layer_power.iter().map(|p| p.total() * self.cfg.clock_period).sum();
        Ok(SampleOutcome {
            prediction: classify(&last.integrator),
            integrator: last.integrator,
            scores,
            cycles: self.layers.len(),
            layer_power,
            energy,
            traces,
        })
    }

    fn stage_full_scale(&self) -> f64 {
        match self.stage.mode {
            super::NeuronMode::Behavioral => self.stage.behavioral_kernel.full_scale(),
            super::NeuronMode::Device => self.stage.device_kernel.full_scale(),
        }
    }
}

/// Evaluates one input on a prepared network.
pub fn evaluate_dbn_hardware<R: Rng + ?Sized>(
    net: &HardwareNetwork,
    sample: &BinaryState,
    rng: &mut R,
) -> Result<SampleOutcome> {
    net.evaluate(sample, false, rng)
}

/// Aggregate over a test set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub samples: usize,
    pub err: f64,
    pub rmse: f64,
    /// Mean power per layer over the samples, W.
    pub layer_power: Vec<LayerPower>,
    pub total_power: f64,
    pub neuron_power: f64,
    /// Mean energy per inference, J.
    pub energy: f64,
    pub cycles: usize,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    pub fn neuron_power_share(&self) -> f64 {
        if self.total_power > 0.0 {
            self.neuron_power / self.total_power
        } else {
            0.0
        }
    }
}

/// Accumulates outcomes in a fixed order.
#[derive(Debug, Clone)]
pub struct EvalAccumulator {
    num_classes: usize,
    labels: Vec<usize>,
    predictions: Vec<usize>,
    scores: Vec<Vec<f64>>,
    power_sum: Vec<LayerPower>,
    energy_sum: f64,
    cycles: usize,
    confusion: ConfusionMatrix,
}

impl EvalAccumulator {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            labels: Vec::new(),
            predictions: Vec::new(),
            scores: Vec::new(),
            power_sum: Vec::new(),
            energy_sum: 0.0,
            cycles: 0,
            confusion: ConfusionMatrix::new(num_classes),
        }
    }

    pub fn add(&mut self, label: usize, outcome: &SampleOutcome) -> Result<()> {
        if label >= self.num_classes {
            return Err(Error::OutOfRange {
                name: "label",
                value: label as f64,
                min: 0.0,
                max: self.num_classes as f64 - 1.0,
            });
        }
        if self.power_sum.is_empty() {
            self.power_sum = alloc::vec![LayerPower::default(); outcome.layer_power.len()];
        }
        ensure_len("layer count", self.power_sum.len(), outcome.layer_power.len())?;
        for (acc, p) in self.power_sum.iter_mut().zip(&outcome.layer_power) {
            acc.add_scaled(p, 1.0);
        }
        self.labels.push(label);
        self.predictions.push(outcome.prediction);
        self.scores.push(outcome.scores.clone());
        self.energy_sum += outcome.energy;
        self.cycles = outcome.cycles;
        self.confusion.record(label, outcome.prediction);
        Ok(())
    }

    pub fn finish(self) -> Result<EvalReport> {
        let metrics = compute_metrics(&self.predictions, &self.scores, &self.labels, self.num_classes)?;
        let n = self.labels.len() as f64;
        let layer_power: Vec<LayerPower> = self
            .power_sum
            .iter()
            .map(|p| LayerPower {
                array: p.array / n,
                neuron: p.neuron / n,
            })
            .collect();
        Ok(EvalReport {
            samples: self.labels.len(),
            err: metrics.err,
            rmse: metrics.rmse,
            total_power: layer_power.iter().map(LayerPower::total).sum(),
            neuron_power: layer_power.iter().map(|p| p.neuron).sum(),
            layer_power,
            energy: self.energy_sum / n,
            cycles: self.cycles,
            confusion: self.confusion,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{DeviceParams, NeuronSimConfig};
    use crate::mapping::{MappingConfig, ResistiveLayer};
    use crate::rng::seeded;
    use crate::Matrix;
    use alloc::vec;

    fn identity_network(layers: usize) -> ResistiveDbn {
        // Diagonal at r_min in the positive array, r_max elsewhere; the
        // negative array mirrors it.
        let layer = ResistiveLayer {
            rw_pos: Matrix::from_fn(2, 2, |i, j| if i == j { 1000.0 } else { 5000.0 }),
            rw_neg: Matrix::from_fn(2, 2, |i, j| if i == j { 5000.0 } else { 1000.0 }),
            rb_pos: vec![5000.0; 2],
            rb_neg: vec![5000.0; 2],
        };
        ResistiveDbn {
            topology: NetworkTopology::new(vec![2; layers + 1]).unwrap(),
            layers: vec![layer; layers],
            config: MappingConfig::default(),
        }
    }

    fn simulator(cfg: &CircuitConfig) -> NeuronSimulator {
        let neuron = NeuronSimConfig {
            window: cfg.clock_period,
            ..NeuronSimConfig::default()
        };
        NeuronSimulator::new(&neuron, &DeviceParams::default()).unwrap()
    }

    #[test]
    fn identity_network_passes_bits_through() {
        let cfg = CircuitConfig::default();
        let net = HardwareNetwork::new(&identity_network(3), &cfg, simulator(&cfg)).unwrap();
        let mut rng = seeded(3);
        for hot in 0..2 {
            let input = BinaryState::one_hot(2, hot).unwrap();
            for _ in 0..50 {
                let out = net.evaluate(&input, true, &mut rng).unwrap();
                assert_eq!(out.prediction, hot);
                assert_eq!(out.cycles, 3);
                for t in &out.traces {
                    assert_eq!(t.output, input);
                    assert!(t.amp.iter().chain(&t.integrator).all(|v| (0.0..=cfg.vdd).contains(v)));
                }
                let energy: f64 = out.layer_power.iter().map(|p| p.total() * cfg.clock_period).sum();
                assert_eq!(out.energy, energy);
            }
        }
    }

    #[test]
    fn device_mode_runs_the_same_network() {
        let cfg = CircuitConfig {
            neuron_mode: crate::circuit::NeuronMode::Device,
            ..CircuitConfig::default()
        };
        let net = HardwareNetwork::new(&identity_network(2), &cfg, simulator(&cfg)).unwrap();
        let mut rng = seeded(5);
        let input = BinaryState::one_hot(2, 1).unwrap();
        let out = net.evaluate(&input, true, &mut rng).unwrap();
        assert_eq!(out.prediction, 1);
        assert_eq!(out.traces[0].bit_streams[0].len(), 2000);
        assert!(out.layer_power.iter().all(|p| p.neuron > 0.0));
    }

    #[test]
    fn report_aggregates() {
        let cfg = CircuitConfig::default();
        let net = HardwareNetwork::new(&identity_network(2), &cfg, simulator(&cfg)).unwrap();
        let mut acc = EvalAccumulator::new(2);
        let mut rng = seeded(9);
        for k in 0..10 {
            let input = BinaryState::one_hot(2, k % 2).unwrap();
            let out = evaluate_dbn_hardware(&net, &input, &mut rng).unwrap();
            acc.add(k % 2, &out).unwrap();
        }
        let report = acc.finish().unwrap();
        assert_eq!(report.samples, 10);
        assert_eq!(report.err, 0.0);
        assert_eq!(report.cycles, 2);
        assert_eq!(report.confusion.correct(), 10);
        let per_layer: f64 = report.layer_power.iter().map(|p| p.total()).sum();
        assert!((report.energy - per_layer * cfg.clock_period).abs() < 1e-9 * report.energy);
    }
}
