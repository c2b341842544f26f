//! MNIST loading, checkpoints, experiment and sweep drivers for the
//! probabilistic inference network simulator in `pinsim-core`.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod device_curve;
pub mod error;
pub mod experiment;
#[cfg(feature = "plot")]
pub mod plot;
pub mod sweep;

pub use config::RunConfig;
pub use error::{PinsimError, Result};
