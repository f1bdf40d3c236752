//! Dimensionless unit system and shared numeric aliases.
//!
//! Internally `Γ0 = λ0 = 1`, so `k0 = 2π`. Conversion to laboratory units is
//! done only when reading configs and writing reports.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

/// Free-space single-atom decay rate in internal units.
pub const GAMMA0: f64 = 1.0;
/// Resonant free-space wavelength in internal units.
pub const LAMBDA0: f64 = 1.0;
/// Free-space wavenumber, `2π / λ0`.
pub const K0: f64 = std::f64::consts::TAU / LAMBDA0;

pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantityKind {
    Time,
    Length,
    Rate,
}

/// Laboratory values of the unit scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Calibration {
    /// Resonant wavelength in metres.
    pub lambda0: f64,
    /// Free-space decay rate in s^-1.
    pub gamma0: f64,
}

impl Default for Calibration {
    /// Cesium D2 line: 852.35 nm, Γ0 = 2π × 5.234 MHz (lifetime ≈ 30.4 ns).
    fn default() -> Self {
        Self {
            lambda0: 852.35e-9,
            gamma0: std::f64::consts::TAU * 5.234e6,
        }
    }
}

impl Calibration {
    pub fn new(lambda0: f64, gamma0: f64) -> Result<Self> {
        let cal = Self { lambda0, gamma0 };
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return Err(Error::InvalidCalibration(format!(
                "lambda0 must be positive, got {}",
                self.lambda0
            )));
        }
        if !(self.gamma0.is_finite() && self.gamma0 > 0.0) {
            return Err(Error::InvalidCalibration(format!(
                "gamma0 must be positive, got {}",
                self.gamma0
            )));
        }
        Ok(())
    }

    fn scale(&self, kind: QuantityKind) -> f64 {
        match kind {
            QuantityKind::Time => 1.0 / self.gamma0,
            QuantityKind::Length => self.lambda0,
            QuantityKind::Rate => self.gamma0,
        }
    }

    pub fn to_physical(&self, value: f64, kind: QuantityKind) -> Result<f64> {
        self.validate()?;
        Ok(value * self.scale(kind))
    }

    pub fn to_internal(&self, value: f64, kind: QuantityKind) -> Result<f64> {
        self.validate()?;
        Ok(value / self.scale(kind))
    }

    /// Convenience for configs that specify lengths in nanometres.
    pub fn nm_to_internal(&self, nm: f64) -> f64 {
        nm * 1e-9 / self.lambda0
    }
}
