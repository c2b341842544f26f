//! Stochastic Landau–Lifshitz–Gilbert dynamics of the free layer.
//!
//! Axes: `x` is out of plane (the demagnetizing axis), `z` is the in-plane
//! direction of the fixed layer, so `m_z` sets the MTJ conductance.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DerivedDeviceConstants, DeviceParams};
use crate::error::{invalid, Error, Result};
use crate::math::sqrt;

const UNIT_TOLERANCE: f64 = 1e-9;

type Vec3 = [f64; 3];

#[inline]
fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn norm(a: Vec3) -> f64 {
    sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
}

/// Unit magnetization vector of the free layer.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Magnetization(Vec3);

impl Magnetization {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = norm([x, y, z]);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnitVector(n));
        }
        Ok(Self([x, y, z]))
    }

    /// Normalizes any non-zero vector.
    pub fn from_direction(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = norm([x, y, z]);
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid("magnetization", "direction must be non-zero and finite"));
        }
        Ok(Self([x / n, y / n, z / n]))
    }

    /// Uniformly distributed on the unit sphere.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: Vec3 = [
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            ];
            let n = norm(v);
            if n > 1e-12 {
                return Self([v[0] / n, v[1] / n, v[2] / n]);
            }
        }
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn norm(&self) -> f64 {
        norm(self.0)
    }
}

/// Heun integrator for the stochastic LLG equation
///
/// ```text
/// (1+α²) dm/dt = −|γ| m×H − α|γ| m×(m×H) + (1/qN) m×(I_S×m) + (α/qN) m×I_S
/// H = −4πMs m_x x̂ + H_n
/// ```
///
/// with a spin current `I_S` along `ẑ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlgIntegrator {
    dt: f64,
    gamma: f64,
    damping: f64,
    demag_field: f64,
    spin_torque_per_amp: f64,
    thermal_std: f64,
    prefactor: f64,
}

impl LlgIntegrator {
    pub fn new(params: &DeviceParams, consts: &DerivedDeviceConstants, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", "must be finite and > 0"));
        }
        Ok(Self {
            dt,
            gamma: consts.gyromagnetic_ratio,
            damping: params.damping,
            demag_field: consts.demag_field,
            spin_torque_per_amp: 1.0 / (consts.electron_charge * consts.n_spins),
            thermal_std: consts.thermal_field_std(params, dt),
            prefactor: 1.0 / (1.0 + params.damping * params.damping),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Per-component standard deviation of the thermal field, Oe.
    pub fn thermal_std(&self) -> f64 {
        self.thermal_std
    }

    /// Same integrator with the thermal field switched off.
    pub fn without_noise(mut self) -> Self {
        self.thermal_std = 0.0;
        self
    }

    #[inline]
    fn rate(&self, m: Vec3, noise: Vec3, spin_current: f64) -> Vec3 {
        let h = [noise[0] - self.demag_field * m[0], noise[1], noise[2]];
        let mxh = cross(m, h);
        let mxmxh = cross(m, mxh);
        let is = [0.0, 0.0, spin_current];
        let mxis = cross(m, is);
        let mxisxm = cross(m, cross(is, m));
        let g = self.gamma;
        let a = self.damping;
        let s = self.spin_torque_per_amp;
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = self.prefactor * (-g * mxh[k] - a * g * mxmxh[k] + s * mxisxm[k] + a * s * mxis[k]);
        }
        out
    }

    /// One predictor–corrector step with a given thermal field sample.
    pub fn step_with_field(&self, m: Magnetization, spin_current: f64, noise: Vec3) -> Result<Magnetization> {
        let n = m.norm();
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnitVector(n));
        }
        let m0 = m.0;
        let k1 = self.rate(m0, noise, spin_current);
        let pred = [
            m0[0] + self.dt * k1[0],
            m0[1] + self.dt * k1[1],
            m0[2] + self.dt * k1[2],
        ];
        let k2 = self.rate(pred, noise, spin_current);
        let next = [
            m0[0] + 0.5 * self.dt * (k1[0] + k2[0]),
            m0[1] + 0.5 * self.dt * (k1[1] + k2[1]),
            m0[2] + 0.5 * self.dt * (k1[2] + k2[2]),
        ];
        let n = norm(next);
        if !n.is_finite() {
            return Err(Error::NonFinite("llg step"));
        }
        Ok(Magnetization([next[0] / n, next[1] / n, next[2] / n]))
    }

    /// One step with a freshly drawn thermal field.
    pub fn step<R: Rng + ?Sized>(&self, m: Magnetization, spin_current: f64, rng: &mut R) -> Result<Magnetization> {
        let noise = if self.thermal_std > 0.0 {
            let s = self.thermal_std;
            [
                s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
                s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
                s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
            ]
        } else {
            [0.0; 3]
        };
        self.step_with_field(m, spin_current, noise)
    }
}

/// One stochastic LLG step of length `dt` with spin current `spin_current`
/// (amperes, polarized along `ẑ`).
pub fn llg_step<R: Rng + ?Sized>(
    m: Magnetization,
    spin_current: f64,
    dt: f64,
    consts: &DerivedDeviceConstants,
    params: &DeviceParams,
    rng: &mut R,
) -> Result<Magnetization> {
    LlgIntegrator::new(params, consts, dt)?.step(m, spin_current, rng)
}
