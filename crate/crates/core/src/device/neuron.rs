//! The stochastic neuron: free layer + MTJ/transistor divider + inverter.

use alloc::vec::Vec;

use rand::Rng;

use super::{
    drain_voltage, mtj_conductance, DerivedDeviceConstants, DeviceParams, LlgIntegrator, Magnetization, TransistorModel,
};
use crate::error::{invalid, Result};
use crate::math::sigmoid;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct NeuronSimConfig {
    /// LLG step, s.
    pub dt: f64,
    /// Observation window per clock, s.
    pub window: f64,
    pub transistor: TransistorModel,
    /// Drain voltage below which the inverter outputs VDD, V.
    pub inverter_threshold: f64,
}

impl Default for NeuronSimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-12,
            window: 2e-9,
            transistor: TransistorModel::default(),
            inverter_threshold: 0.4,
        }
    }
}

impl NeuronSimConfig {
    pub fn validate(&self, vdd: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be finite and > 0"));
        }
        if (self.window / self.dt).is_nan() || self.window / self.dt < 100.0 {
            return Err(invalid("window", "must span at least 100 LLG steps"));
        }
        if !(self.inverter_threshold > 0.0 && self.inverter_threshold < vdd) {
            return Err(invalid("inverter_threshold", "must lie strictly between the rails"));
        }
        self.transistor.validate(vdd)
    }

    pub fn steps_per_window(&self) -> usize {
        libm::round(self.window / self.dt) as usize
    }
}

/// Result of observing one neuron for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronWindow {
    /// Time-averaged inverter output as a fraction of VDD.
    pub mean_output: f64,
    pub final_state: Magnetization,
    /// Inverter output per LLG step (1 = VDD).
    pub bits: Vec<u8>,
    /// Time-averaged current drawn through the MTJ branch, A.
    pub mean_supply_current: f64,
}

/// Pre-computed per-device state for repeated windows.
#[derive(Debug, Clone)]
pub struct NeuronSimulator {
    llg: LlgIntegrator,
    consts: DerivedDeviceConstants,
    tmr: f64,
    polarization: f64,
    vdd: f64,
    threshold_fraction: f64,
    transistor: TransistorModel,
    steps: usize,
}

impl NeuronSimulator {
    pub fn new(cfg: &NeuronSimConfig, params: &DeviceParams) -> Result<Self> {
        params.validate()?;
        cfg.validate(params.supply_voltage)?;
        let consts = params.derive()?;
        Ok(Self {
            llg: LlgIntegrator::new(params, &consts, cfg.dt)?,
            consts,
            tmr: params.tmr,
            polarization: params.polarization,
            vdd: params.supply_voltage,
            threshold_fraction: cfg.inverter_threshold / params.supply_voltage,
            transistor: cfg.transistor,
            steps: cfg.steps_per_window(),
        })
    }

    pub fn constants(&self) -> &DerivedDeviceConstants {
        &self.consts
    }

    pub fn vdd(&self) -> f64 {
        self.vdd
    }

    pub fn dt(&self) -> f64 {
        self.llg.dt()
    }

    /// Runs `steps` LLG steps at gate voltage `v_in`, calling `each` with the
    /// inverter bit and supply current of every step.
    pub fn run<R: Rng + ?Sized>(
        &self,
        v_in: f64,
        steps: usize,
        mut state: Magnetization,
        rng: &mut R,
        mut each: impl FnMut(u8, f64),
    ) -> Result<Magnetization> {
        let alpha = self.transistor.conductance_ratio(v_in, self.vdd)?;
        for _ in 0..steps {
            let m_z = state.z();
            let v_drain = drain_voltage(m_z, alpha, self.tmr);
            let bit = u8::from(v_drain < self.threshold_fraction);
            let current = self.vdd * (1.0 - v_drain) * mtj_conductance(m_z, &self.consts, self.tmr)?;
            each(bit, current);
            state = self.llg.step(state, self.polarization * current, rng)?;
        }
        Ok(state)
    }

    pub fn window<R: Rng + ?Sized>(&self, v_in: f64, state: Magnetization, rng: &mut R) -> Result<NeuronWindow> {
        let mut bits = Vec::with_capacity(self.steps);
        let mut current = 0.0;
        let final_state = self.run(v_in, self.steps, state, rng, |b, i| {
            bits.push(b);
            current += i;
        })?;
        let ones = bits.iter().filter(|&&b| b == 1).count();
        Ok(NeuronWindow {
            mean_output: ones as f64 / self.steps as f64,
            final_state,
            bits,
            mean_supply_current: current / self.steps as f64,
        })
    }

    /// Mean output fraction of a window, without keeping the trace.
    pub fn window_mean<R: Rng + ?Sized>(
        &self,
        v_in: f64,
        state: Magnetization,
        rng: &mut R,
    ) -> Result<(f64, Magnetization)> {
        let mut ones = 0usize;
        let state = self.run(v_in, self.steps, state, rng, |b, _| ones += b as usize)?;
        Ok((ones as f64 / self.steps as f64, state))
    }

    /// Expected supply current at gate voltage `v_in`, averaging over the
    /// equilibrium in-plane magnetization (angle uniform, so `m_z = cos φ`).
    pub fn expected_supply_current(&self, v_in: f64) -> Result<f64> {
        const NODES: usize = 256;
        let alpha = self.transistor.conductance_ratio(v_in, self.vdd)?;
        let mut total = 0.0;
        for k in 0..NODES {
            let m_z = libm::cos(core::f64::consts::PI * (k as f64 + 0.5) / NODES as f64);
            let v_drain = drain_voltage(m_z, alpha, self.tmr);
            total += self.vdd * (1.0 - v_drain) * mtj_conductance(m_z, &self.consts, self.tmr)?;
        }
        Ok(total / NODES as f64)
    }

    /// Average duration of constant-output runs over `duration` seconds.
    pub fn mean_dwell_time<R: Rng + ?Sized>(&self, v_in: f64, duration: f64, rng: &mut R) -> Result<f64> {
        let steps = libm::round(duration / self.dt()) as usize;
        let mut last = None;
        let mut switches = 0usize;
        self.run(v_in, steps, Magnetization::random(rng), rng, |b, _| {
            if last.is_some_and(|l| l != b) {
                switches += 1;
            }
            last = Some(b);
        })?;
        Ok(duration / (switches + 1) as f64)
    }
}

/// One observation window of the device-mode neuron.
pub fn simulate_neuron_window<R: Rng + ?Sized>(
    v_in: f64,
    cfg: &NeuronSimConfig,
    params: &DeviceParams,
    state: Magnetization,
    rng: &mut R,
) -> Result<NeuronWindow> {
    NeuronSimulator::new(cfg, params)?.window(v_in, state, rng)
}

/// The calibrated sigmoid abstraction of the neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BehavioralNeuron {
    /// Midpoint, V.
    pub v0: f64,
    /// Slope, 1/V.
    pub lambda: f64,
}

impl Default for BehavioralNeuron {
    /// Fit of the default device configuration's transfer curve (17-point
    /// grid, 1000 windows per point).
    fn default() -> Self {
        Self {
            v0: 0.403,
            lambda: 35.3,
        }
    }
}

impl BehavioralNeuron {
    /// `σ(λ (v_in − v0))`.
    #[inline]
    pub fn probability(&self, v_in: f64) -> f64 {
        sigmoid(self.lambda * (v_in - self.v0))
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, v_in: f64, rng: &mut R) -> u8 {
        u8::from(rng.random::<f64>() < self.probability(v_in))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn midpoint_input_fluctuates_around_half() {
        let cfg = NeuronSimConfig::default();
        let params = DeviceParams::default();
        let sim = NeuronSimulator::new(&cfg, &params).unwrap();
        let mut rng = seeded(5);
        let mut state = Magnetization::random(&mut rng);
        let mut total = 0.0;
        let windows = 200;
        for _ in 0..windows {
            let w = sim.window(0.4, state, &mut rng).unwrap();
            assert_eq!(w.bits.len(), 2000);
            total += w.mean_output;
            state = w.final_state;
        }
        let mean = total / windows as f64;
        assert!((mean - 0.5).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn rails_saturate() {
        let cfg = NeuronSimConfig::default();
        let params = DeviceParams::default();
        let mut rng = seeded(6);
        let low = simulate_neuron_window(0.0, &cfg, &params, Magnetization::random(&mut rng), &mut rng).unwrap();
        assert!(low.mean_output < 0.02);
        assert_eq!(low.mean_supply_current, 0.0);
        let high = simulate_neuron_window(0.8, &cfg, &params, Magnetization::random(&mut rng), &mut rng).unwrap();
        assert!(high.mean_output > 0.98);
        assert!(high.mean_supply_current > 0.0);
    }

    #[test]
    fn expected_current_matches_simulation() {
        let cfg = NeuronSimConfig::default();
        let sim = NeuronSimulator::new(&cfg, &DeviceParams::default()).unwrap();
        let mut rng = seeded(8);
        let mut state = Magnetization::random(&mut rng);
        for v in [0.3, 0.4, 0.6] {
            let mut current = 0.0;
            for _ in 0..100 {
                let w = sim.window(v, state, &mut rng).unwrap();
                current += w.mean_supply_current / 100.0;
                state = w.final_state;
            }
            let expected = sim.expected_supply_current(v).unwrap();
            assert!((current / expected - 1.0).abs() < 0.05, "{v}: {current} vs {expected}");
        }
        assert_eq!(sim.expected_supply_current(0.1).unwrap(), 0.0);
    }

    #[test]
    fn rejects_short_windows() {
        let cfg = NeuronSimConfig {
            window: 50e-12,
            ..NeuronSimConfig::default()
        };
        assert!(NeuronSimulator::new(&cfg, &DeviceParams::default()).is_err());
    }

    #[test]
    fn behavioral_sampling() {
        let n = BehavioralNeuron { v0: 0.4, lambda: 30.0 };
        assert_eq!(n.probability(0.4), 0.5);
        assert!(n.probability(0.0) < 1e-5);
        assert!(n.probability(0.8) > 1.0 - 1e-5);
        let mut rng = seeded(7);
        let v = 0.43;
        let draws = 100_000;
        let ones: usize = (0..draws).map(|_| n.sample(v, &mut rng) as usize).sum();
        assert!((ones as f64 / draws as f64 - n.probability(v)).abs() < 0.01);
    }
}
