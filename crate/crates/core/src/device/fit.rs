//! Device-mode transfer curves and their sigmoid fit.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::{BehavioralNeuron, Magnetization, NeuronSimulator};
use crate::error::{invalid, Error, Result};
use crate::math::{sigmoid, sqrt};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    /// V
    pub v_in: f64,
    /// Mean output over all windows, fraction of VDD.
    pub mean: f64,
    /// Standard deviation of the per-window means.
    pub std: f64,
    pub windows: usize,
}

impl CurvePoint {
    /// Standard error of `mean`.
    pub fn standard_error(&self) -> f64 {
        self.std / sqrt(self.windows as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SigmoidFit {
    pub neuron: BehavioralNeuron,
    /// Largest `|mean − fit|` over the grid, fraction of VDD.
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferCurve {
    pub points: Vec<CurvePoint>,
    pub fit: SigmoidFit,
}

/// Measures the mean output at one gate voltage over `windows` consecutive
/// windows, starting from a random magnetization.
pub fn measure_transfer_point<R: Rng + ?Sized>(
    sim: &NeuronSimulator,
    v_in: f64,
    windows: usize,
    rng: &mut R,
) -> Result<CurvePoint> {
    if windows < 2 {
        return Err(invalid("windows", "need at least two windows per point"));
    }
    let mut state = Magnetization::random(rng);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..windows {
        let (mean, next) = sim.window_mean(v_in, state, rng)?;
        state = next;
        sum += mean;
        sum_sq += mean * mean;
    }
    let n = windows as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(CurvePoint {
        v_in,
        mean,
        std: sqrt(var),
        windows,
    })
}

/// True when no point drops below its predecessor by more than `slack`
/// combined standard errors.
pub fn is_monotone(points: &[CurvePoint], slack: f64) -> bool {
    points.windows(2).all(|p| {
        let (a, b) = (p[0].standard_error(), p[1].standard_error());
        let tol = slack * sqrt(a * a + b * b);
        p[1].mean >= p[0].mean - tol
    })
}

fn residuals(points: &[CurvePoint], v0: f64, lambda: f64) -> impl Iterator<Item = f64> + '_ {
    points.iter().map(move |p| sigmoid(lambda * (p.v_in - v0)) - p.mean)
}

/// Levenberg–Marquardt least-squares fit of `σ(λ(v − v0))` to the points.
pub fn fit_sigmoid(points: &[CurvePoint]) -> Result<SigmoidFit> {
    if points.len() < 3 {
        return Err(Error::FitFailed(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if !is_monotone(points, 3.0) {
        return Err(Error::FitFailed("transfer curve is not monotone".into()));
    }
    let lo = points.first().map(|p| p.v_in).unwrap_or(0.0);
    let hi = points.last().map(|p| p.v_in).unwrap_or(1.0);
    // Start at the half-crossing with a slope spanning a tenth of the range.
    let mut v0 = points
        .windows(2)
        .find(|p| p[0].mean <= 0.5 && p[1].mean >= 0.5)
        .map_or(0.5 * (lo + hi), |p| 0.5 * (p[0].v_in + p[1].v_in));
    let mut lambda = 40.0 / (hi - lo);
    let mut cost: f64 = residuals(points, v0, lambda).map(|r| r * r).sum();
    let mut mu = 1e-3;
    for _ in 0..500 {
        let (mut a00, mut a01, mut a11, mut g0, mut g1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in points {
            let s = sigmoid(lambda * (p.v_in - v0));
            let d = s * (1.0 - s);
            let j0 = -lambda * d;
            let j1 = (p.v_in - v0) * d;
            let r = s - p.mean;
            a00 += j0 * j0;
            a01 += j0 * j1;
            a11 += j1 * j1;
            g0 += j0 * r;
            g1 += j1 * r;
        }
        let mut improved = false;
        while mu < 1e12 {
            let b00 = a00 * (1.0 + mu);
            let b11 = a11 * (1.0 + mu);
            let det = b00 * b11 - a01 * a01;
            if det.abs() < 1e-300 {
                mu *= 10.0;
                continue;
            }
            let d0 = -(b11 * g0 - a01 * g1) / det;
            let d1 = -(b00 * g1 - a01 * g0) / det;
            let (nv0, nl) = (v0 + d0, lambda + d1);
            let new_cost: f64 = residuals(points, nv0, nl).map(|r| r * r).sum();
            if new_cost.is_finite() && new_cost < cost {
                let converged = (cost - new_cost) < 1e-15 * (1.0 + cost);
                v0 = nv0;
                lambda = nl;
                cost = new_cost;
                mu = (mu / 10.0).max(1e-12);
                improved = !converged;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !(v0.is_finite() && lambda.is_finite() && lambda > 0.0) {
        return Err(Error::FitFailed(format!("fit diverged (v0 = {v0}, lambda = {lambda})")));
    }
    let max_residual = residuals(points, v0, lambda).fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(SigmoidFit {
        neuron: BehavioralNeuron { v0, lambda },
        max_residual,
    })
}

/// Device-mode transfer curve over `grid` and its sigmoid fit.
///
/// Grid point `k` uses random stream `k` of `seed`, so points can be measured
/// independently and in any order.
pub fn fit_transfer_curve(
    sim: &NeuronSimulator,
    samples_per_point: usize,
    grid: &[f64],
    seed: u64,
) -> Result<TransferCurve> {
    let points = grid
        .iter()
        .enumerate()
        .map(|(k, &v)| measure_transfer_point(sim, v, samples_per_point, &mut stream(seed, k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_sigmoid(&points)?;
    Ok(TransferCurve { points, fit })
}

/// `n` evenly spaced voltages from 0 to `vdd` inclusive.
pub fn voltage_grid(vdd: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| vdd * k as f64 / (n.max(2) - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(v0: f64, lambda: f64) -> Vec<CurvePoint> {
        voltage_grid(0.8, 17)
            .into_iter()
            .map(|v| CurvePoint {
                v_in: v,
                mean: sigmoid(lambda * (v - v0)),
                std: 0.01,
                windows: 1000,
            })
            .collect()
    }

    #[test]
    fn recovers_exact_sigmoid() {
        let fit = fit_sigmoid(&synthetic(0.37, 22.0)).unwrap();
        assert!((fit.neuron.v0 - 0.37).abs() < 1e-6);
        assert!((fit.neuron.lambda - 22.0).abs() < 1e-4);
        assert!(fit.max_residual < 1e-6);
    }

    #[test]
    fn rejects_non_monotone_curve() {
        let mut pts = synthetic(0.4, 20.0);
        pts[10].mean = 0.0;
        assert!(matches!(fit_sigmoid(&pts), Err(Error::FitFailed(_))));
    }

    #[test]
    fn grid_spacing() {
        let g = voltage_grid(0.8, 17);
        assert_eq!(g.len(), 17);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[8], 0.4);
        assert_eq!(g[16], 0.8);
    }
}
