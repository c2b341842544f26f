//! Behavioral circuit model of a mapped network.
//!
//! Each RBM is a pair of crossbars (positive and negative weights) with one
//! extra always-on bias row. Column signals feed a differential amplifier
//! biased at VDD/2, whose output drives a stochastic neuron. An RC
//! integrator averages the neuron's bit stream over one clock; the sampled
//! integrator voltage is restored to a bit for the next layer.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::device::BehavioralNeuron;
use crate::error::{ensure_len, invalid, Error, Result};
use crate::math::powf;

mod layer;
mod network;
mod power;

pub use layer::{evaluate_layer, LayerTrace};
pub use network::{evaluate_dbn_hardware, EvalAccumulator, EvalReport, HardwareNetwork, SampleOutcome};
pub use power::{array_power, LayerPower};

/// How a crossbar column is turned into the amplifier input voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum ColumnReadout {
    /// Open column terminated by `g_load` to ground; the amplifier sees the
    /// conductance-weighted average of the row voltages.
    Passive { g_load: f64 },
    /// Column held at 0 V by a transimpedance stage; the amplifier sees
    /// `r_sense · I_column`. Only the amplifier output is rail-limited.
    VirtualGround { r_sense: f64 },
}

impl Default for ColumnReadout {
    fn default() -> Self {
        Self::VirtualGround { r_sense: 40.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NeuronMode {
    /// Calibrated sigmoid, resampled every `bit_period`.
    #[default]
    Behavioral,
    /// Full stochastic-LLG neuron.
    Device,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CircuitConfig {
    /// Ω
    pub r0: f64,
    /// Ω
    pub r1: f64,
    /// Integrator resistor, Ω.
    pub ri: f64,
    /// Integrator capacitor, F.
    pub ci: f64,
    /// s
    pub clock_period: f64,
    /// V
    pub vdd: f64,
    pub readout: ColumnReadout,
    pub neuron_mode: NeuronMode,
    pub behavioral: BehavioralNeuron,
    /// Interval between independent behavioral neuron draws, s. The default
    /// matches the device's mean dwell time (about 2× this at VDD/2).
    pub bit_period: f64,
    /// Integrator time step in behavioral mode, s.
    pub integrator_dt: f64,
    /// Standard deviation of noise added to neuron input voltages, V.
    pub input_noise_sigma: f64,
    /// Static power per amplifier, W.
    pub amp_static_power: f64,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            r0: 1e3,
            r1: 5e3,
            ri: 100e3,
            ci: 20e-15,
            clock_period: 2e-9,
            vdd: 0.8,
            readout: ColumnReadout::default(),
            neuron_mode: NeuronMode::Behavioral,
            behavioral: BehavioralNeuron::default(),
            bit_period: 100e-12,
            integrator_dt: 1e-12,
            input_noise_sigma: 0.0,
            amp_static_power: 0.0,
        }
    }
}

fn whole_multiple(a: f64, b: f64) -> Option<usize> {
    let n = libm::round(a / b);
    ((a / b - n).abs() < 1e-6 && n >= 1.0).then_some(n as usize)
}

impl CircuitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r0", self.r0),
            ("r1", self.r1),
            ("ri", self.ri),
            ("ci", self.ci),
            ("clock_period", self.clock_period),
            ("vdd", self.vdd),
            ("bit_period", self.bit_period),
            ("integrator_dt", self.integrator_dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be finite and > 0"));
            }
        }
        if !(self.input_noise_sigma >= 0.0 && self.amp_static_power >= 0.0) {
            return Err(invalid("input_noise_sigma/amp_static_power", "must be >= 0"));
        }
        match self.readout {
            ColumnReadout::Passive { g_load } if !(g_load >= 0.0 && g_load.is_finite()) => {
                return Err(invalid("g_load", "must be finite and >= 0"));
            }
            ColumnReadout::VirtualGround { r_sense } if !(r_sense > 0.0 && r_sense.is_finite()) => {
                return Err(invalid("r_sense", "must be finite and > 0"));
            }
            _ => {}
        }
        if self.integrator_dt >= self.tau() {
            return Err(Error::UnstableIntegrator {
                dt: self.integrator_dt,
                tau: self.tau(),
            });
        }
        if whole_multiple(self.bit_period, self.integrator_dt).is_none() {
            return Err(invalid("bit_period", "must be a whole multiple of integrator_dt"));
        }
        if whole_multiple(self.clock_period, self.bit_period).is_none() {
            return Err(invalid("clock_period", "must be a whole multiple of bit_period"));
        }
        Ok(())
    }

    /// Integrator time constant `Ri·Ci`.
    pub fn tau(&self) -> f64 {
        self.ri * self.ci
    }

    pub fn gain(&self) -> f64 {
        self.r1 / self.r0
    }
}

/// `Σ G_i V_i / (Σ G_i + g_load)`; zero when the column has no conductance.
pub fn column_voltage(input_voltages: &[f64], conductances: &[f64], g_load: f64) -> Result<f64> {
    ensure_len("column_voltage", input_voltages.len(), conductances.len())?;
    let current: f64 = input_voltages.iter().zip(conductances).map(|(v, g)| v * g).sum();
    let total: f64 = conductances.iter().sum::<f64>() + g_load;
    if total == 0.0 {
        log::warn!("column with zero total conductance reads 0 V");
        return Ok(0.0);
    }
    Ok(current / total)
}

/// `clamp((R1/R0)(v⁺ − v⁻) + VDD/2, 0, VDD)`.
#[inline]
pub fn diff_amp_output(v_plus: f64, v_minus: f64, cfg: &CircuitConfig) -> f64 {
    (cfg.gain() * (v_plus - v_minus) + 0.5 * cfg.vdd).clamp(0.0, cfg.vdd)
}

/// Integrates `trace` (one voltage per `dt`) through the RC low-pass from
/// 0 V and returns the final voltage.
pub fn rc_integrator_sample(trace: &[f64], dt: f64, cfg: &CircuitConfig) -> Result<f64> {
    let tau = cfg.tau();
    if dt.is_nan() || dt <= 0.0 || dt >= tau {
        return Err(Error::UnstableIntegrator { dt, tau });
    }
    let k = dt / tau;
    Ok(trace.iter().fold(0.0, |v, &vin| v + k * (vin - v)))
}

/// Adds `N(0, sigma²)` to every voltage and clamps to the rails.
pub fn inject_input_noise<R: Rng + ?Sized>(voltages: &mut [f64], sigma: f64, vdd: f64, rng: &mut R) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid("input noise sigma", "must be finite and >= 0"));
    }
    if sigma == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, sigma).map_err(|_| invalid("input noise sigma", "invalid"))?;
    for v in voltages {
        *v = (*v + normal.sample(rng)).clamp(0.0, vdd);
    }
    Ok(())
}

/// Weights that turn a piecewise-constant 0/1 input into the integrator
/// output at the end of the clock.
///
/// Stepping `v ← v + k(u − v)` for `n` steps from 0 gives
/// `v_n = Σ_t k(1−k)^{n−1−t} u_t`; consecutive steps sharing one input
/// level are summed into one weight per chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorKernel {
    chunk_weights: Vec<f64>,
    full_scale: f64,
}

impl IntegratorKernel {
    /// `chunks` inputs of `steps_per_chunk` steps of `dt` each.
    pub fn new(dt: f64, tau: f64, chunks: usize, steps_per_chunk: usize) -> Result<Self> {
        if dt.is_nan() || dt <= 0.0 || dt >= tau {
            return Err(Error::UnstableIntegrator { dt, tau });
        }
        let k = dt / tau;
        let n = chunks * steps_per_chunk;
        let chunk_weights: Vec<f64> = (0..chunks)
            .map(|c| {
                (0..steps_per_chunk)
                    .map(|s| {
                        let t = c * steps_per_chunk + s;
                        k * powf(1.0 - k, (n - 1 - t) as f64)
                    })
                    .sum()
            })
            .collect();
        let full_scale = chunk_weights.iter().sum();
        Ok(Self {
            chunk_weights,
            full_scale,
        })
    }

    pub fn for_behavioral(cfg: &CircuitConfig) -> Result<Self> {
        let steps = whole_multiple(cfg.bit_period, cfg.integrator_dt)
            .ok_or_else(|| invalid("bit_period", "not a multiple of integrator_dt"))?;
        let chunks = whole_multiple(cfg.clock_period, cfg.bit_period)
            .ok_or_else(|| invalid("clock_period", "not a multiple of bit_period"))?;
        Self::new(cfg.integrator_dt, cfg.tau(), chunks, steps)
    }

    pub fn chunks(&self) -> usize {
        self.chunk_weights.len()
    }

    /// Integrator output for a constant unit input: `1 − (1−k)^n`.
    pub fn full_scale(&self) -> f64 {
        self.full_scale
    }

    /// Integrator output in units of the input level for a 0/1 stream.
    pub fn integrate_bits(&self, bits: &[u8]) -> f64 {
        self.chunk_weights
            .iter()
            .zip(bits)
            .filter(|(_, &b)| b == 1)
            .map(|(w, _)| w)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn column_voltage_examples() {
        assert!((column_voltage(&[0.8, 0.8, 0.8], &[1e-3, 2e-3, 5e-4], 0.0).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(column_voltage(&[0.8, 0.0], &[1e-3, 1e-3], 0.0).unwrap(), 0.4);
        assert!((column_voltage(&[0.8, 0.0], &[1e-3, 3e-3], 0.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(column_voltage(&[0.8], &[0.0], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn amplifier_examples() {
        let cfg = CircuitConfig::default();
        assert_eq!(diff_amp_output(0.3, 0.3, &cfg), 0.4);
        assert_eq!(diff_amp_output(0.2, 0.1, &cfg), 0.8);
        assert!((diff_amp_output(0.1, 0.14, &cfg) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn integrator_step_response() {
        let cfg = CircuitConfig::default();
        let trace = vec![0.8; 2000];
        let v = rc_integrator_sample(&trace, 1e-12, &cfg).unwrap();
        let closed = 0.8 * (1.0 - (-1.0f64).exp());
        assert!((v / closed - 1.0).abs() < 0.02);
        assert!((v - 0.5057).abs() < 0.01);
        assert_eq!(rc_integrator_sample(&[0.0; 2000], 1e-12, &cfg).unwrap(), 0.0);
        assert!(rc_integrator_sample(&trace, 2e-9, &cfg).is_err());
    }

    #[test]
    fn integrator_averages_fast_square_wave() {
        let cfg = CircuitConfig {
            ci: 200e-15,
            ..CircuitConfig::default()
        };
        // τ = 20 ns, square wave with a 20 ps period, observed for 100 ns.
        let trace: Vec<f64> = (0..100_000)
            .map(|t| if (t / 10) % 2 == 0 { 0.8 } else { 0.0 })
            .collect();
        let v = rc_integrator_sample(&trace, 1e-12, &cfg).unwrap();
        assert!((v - 0.4).abs() < 0.01, "{v}");
    }

    #[test]
    fn kernel_matches_direct_integration() {
        let cfg = CircuitConfig::default();
        let kernel = IntegratorKernel::for_behavioral(&cfg).unwrap();
        assert_eq!(kernel.chunks(), 20);
        let mut rng = seeded(3);
        let bits: Vec<u8> = (0..20).map(|_| rng.random::<bool>() as u8).collect();
        let trace: Vec<f64> = bits
            .iter()
            .flat_map(|&b| core::iter::repeat_n(f64::from(b) * 0.8, 100))
            .collect();
        let direct = rc_integrator_sample(&trace, 1e-12, &cfg).unwrap();
        assert!((0.8 * kernel.integrate_bits(&bits) - direct).abs() < 1e-12);
        let full = rc_integrator_sample(&[1.0; 2000], 1e-12, &cfg).unwrap();
        assert!((kernel.full_scale() - full).abs() < 1e-12);
    }

    #[test]
    fn noise_statistics_and_identity() {
        let mut v = vec![0.4; 100_000];
        inject_input_noise(&mut v, 0.0, 0.8, &mut seeded(1)).unwrap();
        assert!(v.iter().all(|&x| x == 0.4));
        inject_input_noise(&mut v, 0.02, 0.8, &mut seeded(1)).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let std = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64).sqrt();
        assert!((std / 0.02 - 1.0).abs() < 0.05);
        let mut rail = vec![0.79; 1000];
        inject_input_noise(&mut rail, 0.1, 0.8, &mut seeded(2)).unwrap();
        assert!(rail.iter().all(|&x| (0.0..=0.8).contains(&x)));
    }

    #[test]
    fn config_validation() {
        assert!(CircuitConfig::default().validate().is_ok());
        let bad = CircuitConfig {
            bit_period: 1.5e-12,
            ..CircuitConfig::default()
        };
        assert!(bad.validate().is_err());
        let unstable = CircuitConfig {
            ci: 1e-18,
            ..CircuitConfig::default()
        };
        assert!(matches!(unstable.validate(), Err(Error::UnstableIntegrator { .. })));
    }

    proptest::proptest! {
        #[test]
        fn column_voltage_is_scale_invariant(
            g in proptest::collection::vec(1e-5f64..1e-2, 1..20),
            bits in proptest::collection::vec(proptest::bool::ANY, 20),
            scale in 0.1f64..10.0,
        ) {
            let v: Vec<f64> = bits.iter().take(g.len()).map(|&b| if b { 0.8 } else { 0.0 }).collect();
            let scaled: Vec<f64> = g.iter().map(|x| x * scale).collect();
            let a = column_voltage(&v, &g, 0.0).unwrap();
            let b = column_voltage(&v, &scaled, 0.0).unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn swapped_amplifier_inputs_mirror(a in 0.0f64..0.8, b in 0.0f64..0.8) {
            let cfg = CircuitConfig::default();
            let x = diff_amp_output(a, b, &cfg);
            let y = diff_amp_output(b, a, &cfg);
            proptest::prop_assert!((x + y - cfg.vdd).abs() < 1e-12);
        }
    }
}
