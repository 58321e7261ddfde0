use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// CODATA 2018 reduced Planck constant, J s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Electron mass as rounded in the reference electron-diffraction setup, kg.
pub const ELECTRON_MASS_SI: f64 = 9.1e-31;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub hbar: f64,
    pub mass: f64,
    /// Set for the `hbar = m = 1` system used by property tests and toy
    /// scenarios; purely informational for the numerics.
    pub dimensionless: bool,
}

impl UnitSystem {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::invalid("hbar", format!("must be positive, got {hbar}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid("mass", format!("must be positive, got {mass}")));
        }
        Ok(Self {
            hbar,
            mass,
            dimensionless: false,
        })
    }

    pub fn si(mass: f64) -> Result<Self> {
        Self::new(HBAR_SI, mass)
    }

    pub fn electron() -> Self {
        Self::new(HBAR_SI, ELECTRON_MASS_SI).expect("positive constants")
    }

    pub fn dimensionless() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            dimensionless: true,
        }
    }

    /// `m / (2 hbar)`, the coefficient of the free-particle action.
    pub fn beta(&self) -> f64 {
        self.mass / (2.0 * self.hbar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_constants() {
        assert!(UnitSystem::new(0.0, 1.0).is_err());
        assert!(UnitSystem::new(1.0, -1.0).is_err());
        assert!(UnitSystem::new(f64::NAN, 1.0).is_err());
        assert!(UnitSystem::dimensionless().dimensionless);
        assert!(!UnitSystem::electron().dimensionless);
    }
}
