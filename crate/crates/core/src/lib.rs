//! Core of the probabilistic inference network simulator.
//!
//! Everything in this crate is pure computation over caller-owned data and
//! caller-supplied random streams, so it builds without `std` (only `alloc`
//! is required). File formats, datasets, parallel drivers and the command
//! line live in the `pinsim` companion crate.
//!
//! The pipeline mirrors the hardware flow:
//!
//! 1. [`rbm`] trains a deep belief network with contrastive divergence and
//!    provides the software (ideal sigmoid) reference.
//! 2. [`device`] models the embedded-MRAM stochastic neuron: stochastic LLG
//!    dynamics of a low-barrier free layer, MTJ/transistor voltage division
//!    and an inverter, plus a calibrated behavioral sigmoid.
//! 3. [`mapping`] turns trained weights into quantized resistances for a
//!    pair of crossbar arrays.
//! 4. [`circuit`] evaluates the resistive network layer by layer and
//!    accounts for power and energy.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod circuit;
pub mod device;
pub mod error;
pub mod mapping;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod rbm;
pub mod rng;

pub use error::{Error, Result};
pub use matrix::Matrix;
