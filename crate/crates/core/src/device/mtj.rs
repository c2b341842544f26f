//! MTJ conductance, transistor conductance and the drain-node divider.

use super::DerivedDeviceConstants;
use crate::error::{invalid, Error, Result};
use crate::math::powf;

/// `G = G0 [1 + m_z TMR / (2 + TMR)]`.
pub fn mtj_conductance(m_z: f64, consts: &DerivedDeviceConstants, tmr: f64) -> Result<f64> {
    if m_z.is_nan() || m_z.abs() > 1.0 {
        return Err(Error::OutOfRange {
            name: "m_z",
            value: m_z,
            min: -1.0,
            max: 1.0,
        });
    }
    Ok(consts.g0 * (1.0 + m_z * tmr / (2.0 + tmr)))
}

/// Drain voltage as a fraction of VDD for an MTJ (to VDD) in series with a
/// transistor (to ground) of conductance `alpha_ratio · G0`:
/// `[(2+TMR) + TMR m_z] / [(2+TMR)(1+α) + TMR m_z]`.
#[inline]
pub fn drain_voltage(m_z: f64, alpha_ratio: f64, tmr: f64) -> f64 {
    let a = 2.0 + tmr;
    (a + tmr * m_z) / (a * (1.0 + alpha_ratio) + tmr * m_z)
}

/// Behavioral stand-in for the neuron's input transistor.
///
/// `G_T(v) = G0 · ((v − V_th)/(VDD/2 − V_th))^exponent` above threshold and
/// zero below, so `G_T(VDD/2) = G0` exactly. `exponent = 1` is a linear
/// (square-law-free) device; larger exponents give a softer turn-on.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TransistorModel {
    /// V
    pub threshold: f64,
    pub exponent: f64,
}

impl Default for TransistorModel {
    fn default() -> Self {
        Self {
            threshold: 0.24,
            exponent: 1.0,
        }
    }
}

impl TransistorModel {
    pub fn validate(&self, vdd: f64) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < vdd / 2.0) {
            return Err(invalid("transistor threshold", "must lie in (0, VDD/2)"));
        }
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return Err(invalid("transistor exponent", "must be finite and > 0"));
        }
        Ok(())
    }

    /// `G_T / G0` at gate voltage `v_in`.
    pub fn conductance_ratio(&self, v_in: f64, vdd: f64) -> Result<f64> {
        if !(0.0..=vdd).contains(&v_in) {
            return Err(Error::OutOfRange {
                name: "v_in",
                value: v_in,
                min: 0.0,
                max: vdd,
            });
        }
        if v_in <= self.threshold {
            return Ok(0.0);
        }
        Ok(powf(
            (v_in - self.threshold) / (vdd / 2.0 - self.threshold),
            self.exponent,
        ))
    }

    /// Transistor conductance in siemens.
    pub fn conductance(&self, v_in: f64, vdd: f64, consts: &DerivedDeviceConstants) -> Result<f64> {
        Ok(consts.g0 * self.conductance_ratio(v_in, vdd)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceParams;

    fn consts() -> DerivedDeviceConstants {
        DeviceParams::default().derive().unwrap()
    }

    #[test]
    fn conductance_midpoint_and_endpoints() {
        let c = consts();
        assert_eq!(mtj_conductance(0.0, &c, 1.1).unwrap(), c.g0);
        let g_p = mtj_conductance(1.0, &c, 1.1).unwrap();
        let g_ap = mtj_conductance(-1.0, &c, 1.1).unwrap();
        assert!((g_p - 1.0 / c.r_parallel).abs() < 1e-15);
        assert!((g_ap - 1.0 / c.r_antiparallel).abs() < 1e-15);
        assert!((g_p - g_ap * 2.1).abs() < 1e-15);
        let g = mtj_conductance(0.5, &c, 1.1).unwrap();
        assert!((g / c.g0 - (1.0 + 0.55 / 3.1)).abs() < 1e-14);
        assert!((g / c.g0 - 1.1774).abs() < 1e-4);
        assert!(mtj_conductance(1.01, &c, 1.1).is_err());
    }

    #[test]
    fn divider_values() {
        assert_eq!(drain_voltage(0.0, 1.0, 1.1), 0.5);
        for m in [-1.0, -0.3, 0.0, 0.8, 1.0] {
            assert_eq!(drain_voltage(m, 0.0, 1.1), 1.0);
        }
        assert!((drain_voltage(1.0, 1.0, 1.1) - 4.2 / 7.3).abs() < 1e-15);
    }

    #[test]
    fn transistor_calibration() {
        let c = consts();
        let t = TransistorModel::default();
        assert_eq!(t.conductance(0.4, 0.8, &c).unwrap(), c.g0);
        assert_eq!(t.conductance(t.threshold, 0.8, &c).unwrap(), 0.0);
        assert_eq!(t.conductance(0.1, 0.8, &c).unwrap(), 0.0);
        assert!(t.conductance(0.8, 0.8, &c).unwrap() > c.g0);
        assert!(t.conductance(0.9, 0.8, &c).is_err());
        let quad = TransistorModel {
            threshold: 0.2,
            exponent: 2.0,
        };
        assert!((quad.conductance_ratio(0.4, 0.8).unwrap() - 1.0).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn conductance_is_affine_in_mz(a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let c = consts();
            let mid = mtj_conductance(0.5 * (a + b), &c, 1.1).unwrap();
            let avg = 0.5 * (mtj_conductance(a, &c, 1.1).unwrap() + mtj_conductance(b, &c, 1.1).unwrap());
            proptest::prop_assert!((mid - avg).abs() < 1e-18);
        }

        #[test]
        fn drain_decreases_with_alpha(m in -1.0f64..1.0, a in 0.0f64..5.0, da in 1e-3f64..2.0) {
            proptest::prop_assert!(drain_voltage(m, a + da, 1.1) < drain_voltage(m, a, 1.1));
        }

        #[test]
        fn transistor_is_monotone(v in 0.0f64..0.79, dv in 0.0f64..0.01) {
            let t = TransistorModel::default();
            proptest::prop_assert!(t.conductance_ratio(v + dv, 0.8).unwrap() >= t.conductance_ratio(v, 0.8).unwrap());
        }
    }
}
