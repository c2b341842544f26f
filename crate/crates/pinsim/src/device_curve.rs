//! Device-mode transfer curve measured in parallel over the voltage grid.

use std::fs;
use std::path::Path;

use pinsim_core::device::{fit_sigmoid, measure_transfer_point, voltage_grid, NeuronSimulator, TransferCurve};
use pinsim_core::rng::stream;
use rayon::prelude::*;

use crate::error::{CoreContext, PinsimError, Result};
use crate::experiment::worker_pool;

/// Same streams as the sequential core routine (point `k` uses stream `k`),
/// so the result does not depend on the worker count.
pub fn measure_curve(sim: &NeuronSimulator, points: usize, windows: usize, seed: u64) -> Result<TransferCurve> {
    if points < 2 || windows == 0 {
        return Err(PinsimError::Config(
            "device curve needs >= 2 points and >= 1 window".into(),
        ));
    }
    let grid = voltage_grid(sim.vdd(), points);
    let measured = worker_pool()?.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(k, &v)| measure_transfer_point(sim, v, windows, &mut stream(seed, k as u64)))
            .collect::<pinsim_core::Result<Vec<_>>>()
    });
    let points = measured.context("device curve")?;
    let fit = fit_sigmoid(&points).context("sigmoid fit")?;
    Ok(TransferCurve { points, fit })
}

/// `v_in,mean_output,std,fit`; mean and fit as fractions of VDD.
pub fn write_curve_csv(path: &Path, curve: &TransferCurve) -> Result<()> {
    let mut text = String::from("v_in,mean_output,std,fit\n");
    for p in &curve.points {
        text.push_str(&format!(
            "{},{},{},{}\n",
            p.v_in,
            p.mean,
            p.std,
            curve.fit.neuron.probability(p.v_in)
        ));
    }
    fs::write(path, text).map_err(PinsimError::io(path))
}
