//! Embedded-MRAM stochastic neuron.
//!
//! A low-barrier circular free layer fluctuates thermally; its MTJ forms a
//! divider with the input transistor and an inverter turns the drain voltage
//! into a rail-to-rail random bit stream whose mean is a sigmoid of the gate
//! voltage.

mod fit;
mod llg;
mod mtj;
mod neuron;
mod params;

pub use fit::{
    fit_sigmoid, fit_transfer_curve, is_monotone, measure_transfer_point, voltage_grid, CurvePoint, SigmoidFit,
    TransferCurve,
};
pub use llg::{llg_step, LlgIntegrator, Magnetization};
pub use mtj::{drain_voltage, mtj_conductance, TransistorModel};
pub use neuron::{simulate_neuron_window, BehavioralNeuron, NeuronSimConfig, NeuronSimulator, NeuronWindow};
pub use params::{DerivedDeviceConstants, DeviceParams, BOHR_MAGNETON, BOLTZMANN, ELECTRON_CHARGE, GYROMAGNETIC_RATIO};
