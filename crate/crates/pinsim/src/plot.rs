//! SVG figures for the CSV tables (feature `plot`).

use std::path::Path;

use pinsim_core::device::TransferCurve;
use plotters::prelude::*;

use crate::error::{PinsimError, Result};
use crate::sweep::SweepPoint;

fn plot_error(path: &Path, e: impl std::fmt::Display) -> PinsimError {
    PinsimError::format(path, format!("plot: {e}"))
}

/// Measured mean output with the fitted sigmoid.
pub fn transfer_curve_svg(path: &Path, curve: &TransferCurve) -> Result<()> {
    let root = SVGBackend::new(path, (640, 480)).into_drawing_area();
    let v_max = curve.points.last().map_or(1.0, |p| p.v_in);
    let draw = || -> std::result::Result<(), Box<dyn std::error::Error>> {
        root.fill(&WHITE)?;
        let mut chart = ChartBuilder::on(&root)
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(45)
            .build_cartesian_2d(0.0..v_max, 0.0..1.0)?;
        chart
            .configure_mesh()
            .x_desc("v_in (V)")
            .y_desc("mean output / VDD")
            .draw()?;
        let fit: Vec<(f64, f64)> = (0..=200)
            .map(|k| {
                let v = v_max * f64::from(k) / 200.0;
                (v, curve.fit.neuron.probability(v))
            })
            .collect();
        chart.draw_series(LineSeries::new(fit, &BLUE))?;
        chart.draw_series(
            curve
                .points
                .iter()
                .map(|p| Circle::new((p.v_in, p.mean), 3, RED.filled())),
        )?;
        root.present()?;
        Ok(())
    };
    draw().map_err(|e| plot_error(path, e))
}

/// Mean hardware error per sweep point, in sweep order.
pub fn sweep_svg(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let root = SVGBackend::new(path, (640, 480)).into_drawing_area();
    let draw = || -> std::result::Result<(), Box<dyn std::error::Error>> {
        root.fill(&WHITE)?;
        let n = points.len().max(1);
        let mut chart = ChartBuilder::on(&root)
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(45)
            .build_cartesian_2d(0..n, 0.0..1.0)?;
        chart
            .configure_mesh()
            .x_labels(n)
            .x_label_formatter(&|k| points.get(*k).map(|p| p.value.clone()).unwrap_or_default())
            .y_desc("ERR")
            .draw()?;
        let hw: Vec<(usize, f64)> = points
            .iter()
            .enumerate()
            .map(|(k, p)| (k, p.hardware_err_mean))
            .collect();
        chart.draw_series(LineSeries::new(hw.clone(), &RED))?;
        chart.draw_series(hw.into_iter().map(|xy| Circle::new(xy, 3, RED.filled())))?;
        let sw: Vec<(usize, f64)> = points
            .iter()
            .enumerate()
            .filter_map(|(k, p)| p.software_err_mean.map(|e| (k, e)))
            .collect();
        chart.draw_series(LineSeries::new(sw, &BLUE))?;
        root.present()?;
        Ok(())
    };
    draw().map_err(|e| plot_error(path, e))
}
