use crate::error::{invalid, Result};
use crate::math::sqrt;

/// Bohr magneton, erg/G.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-21;
/// Elementary charge, C.
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, erg/K.
pub const BOLTZMANN: f64 = 1.380_649e-16;
/// Electron gyromagnetic ratio, rad/(s·Oe).
pub const GYROMAGNETIC_RATIO: f64 = 1.760_859_630e7;

/// Physical description of the free layer, MTJ and supply.
///
/// Magnetic quantities are CGS, electrical ones SI.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DeviceParams {
    /// emu/cm³
    pub saturation_magnetization: f64,
    /// nm
    pub free_layer_diameter: f64,
    /// nm
    pub free_layer_thickness: f64,
    pub polarization: f64,
    /// Ratio, 1.10 means 110 %.
    pub tmr: f64,
    /// Ω·µm²
    pub ra_product: f64,
    pub damping: f64,
    /// K
    pub temperature: f64,
    /// V
    pub supply_voltage: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            saturation_magnetization: 1100.0,
            free_layer_diameter: 22.0,
            free_layer_thickness: 2.0,
            polarization: 0.59,
            tmr: 1.10,
            ra_product: 9.0,
            damping: 0.01,
            temperature: 300.0,
            supply_voltage: 0.8,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("saturation_magnetization", self.saturation_magnetization),
            ("free_layer_diameter", self.free_layer_diameter),
            ("free_layer_thickness", self.free_layer_thickness),
            ("tmr", self.tmr),
            ("ra_product", self.ra_product),
            ("damping", self.damping),
            ("temperature", self.temperature),
            ("supply_voltage", self.supply_voltage),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(name, "must be finite and > 0"));
            }
        }
        if !(self.polarization > 0.0 && self.polarization <= 1.0) {
            return Err(invalid("polarization", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Free-layer area in µm².
    pub fn area_um2(&self) -> f64 {
        let r = self.free_layer_diameter * 1e-3 / 2.0;
        core::f64::consts::PI * r * r
    }

    /// Free-layer volume in cm³.
    pub fn volume_cm3(&self) -> f64 {
        let r = self.free_layer_diameter * 1e-7 / 2.0;
        core::f64::consts::PI * r * r * self.free_layer_thickness * 1e-7
    }

    /// Computes the derived constants once.
    pub fn derive(&self) -> Result<DerivedDeviceConstants> {
        self.validate()?;
        let r_parallel = self.ra_product / self.area_um2();
        let r_antiparallel = r_parallel * (1.0 + self.tmr);
        let g0 = 0.5 * (1.0 / r_parallel + 1.0 / r_antiparallel);
        let volume = self.volume_cm3();
        let consts = DerivedDeviceConstants {
            g0,
            r_parallel,
            r_antiparallel,
            volume,
            n_spins: self.saturation_magnetization * volume / BOHR_MAGNETON,
            gyromagnetic_ratio: GYROMAGNETIC_RATIO,
            electron_charge: ELECTRON_CHARGE,
            boltzmann_kt: BOLTZMANN * self.temperature,
            demag_field: 4.0 * core::f64::consts::PI * self.saturation_magnetization,
        };
        log::info!(
            "device constants: G0 = {:.4e} S (R_P = {:.1} Ω), N = {:.4e}, 4πMs = {:.1} Oe",
            consts.g0,
            consts.r_parallel,
            consts.n_spins,
            consts.demag_field
        );
        Ok(consts)
    }
}

/// Quantities computed from [`DeviceParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedDeviceConstants {
    /// Average MTJ conductance `(G_P + G_AP)/2`, S.
    pub g0: f64,
    /// Ω
    pub r_parallel: f64,
    /// Ω
    pub r_antiparallel: f64,
    /// cm³
    pub volume: f64,
    /// `Ms·Vol/µ_B`.
    pub n_spins: f64,
    /// rad/(s·Oe)
    pub gyromagnetic_ratio: f64,
    /// C
    pub electron_charge: f64,
    /// erg
    pub boltzmann_kt: f64,
    /// `4πMs`, Oe.
    pub demag_field: f64,
}

impl DerivedDeviceConstants {
    /// Standard deviation of one thermal-field component for step `dt`, Oe.
    pub fn thermal_field_std(&self, params: &DeviceParams, dt: f64) -> f64 {
        sqrt(
            2.0 * params.damping * self.boltzmann_kt
                / (self.gyromagnetic_ratio * params.saturation_magnetization * self.volume * dt),
        )
    }

    /// Thermal-equilibrium `⟨m_x²⟩` for the demagnetizing energy
    /// `2π Ms² Vol m_x²`.
    pub fn equilibrium_mx_variance(&self, params: &DeviceParams) -> f64 {
        self.boltzmann_kt / (self.demag_field * params.saturation_magnetization * self.volume)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values_give_expected_derived_constants() {
        let p = DeviceParams::default();
        let c = p.derive().unwrap();
        // R_P = 9 Ω·µm² / (π · 0.011² µm²)
        let r_p = 9.0 / (core::f64::consts::PI * 0.011 * 0.011);
        assert!((c.r_parallel - r_p).abs() < 1e-9 * r_p);
        assert!((c.r_parallel - 23_675.6).abs() < 1.0);
        assert!((c.g0 - 0.5 * (1.0 / r_p + 1.0 / (2.1 * r_p))).abs() < 1e-18);
        assert!((c.n_spins - 9.018e4).abs() < 0.01e4);
        assert!((c.demag_field - 13_823.0).abs() < 1.0);
        assert!((c.boltzmann_kt - 4.1419e-14).abs() < 1e-17);
        assert!((c.thermal_field_std(&p, 1e-12) - 237.0).abs() < 2.0);
    }

    #[test]
    fn rejects_bad_polarization() {
        let p = DeviceParams {
            polarization: 1.5,
            ..DeviceParams::default()
        };
        assert!(p.validate().is_err());
    }
}
