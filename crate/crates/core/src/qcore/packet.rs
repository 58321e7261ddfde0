use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ComplexGaussian, UnitSystem};
use crate::{Error, Result, C64};

/// Direction in which a packet is evolved away from its reference time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evolution {
    /// Pre-selected waves, evaluated at `t >= reference_time`.
    Forward,
    /// Post-selected waves, evaluated at `t <= reference_time`.
    Backward,
}

impl Evolution {
    fn name(self) -> &'static str {
        match self {
            Evolution::Forward => "forward",
            Evolution::Backward => "backward",
        }
    }
}

/// Normalised Gaussian
/// `(2 pi w^2)^(-1/4) exp(-(x - x_c)^2 / (4 w^2) + i p (x - x_c) / hbar)`
/// at `reference_time`, freely evolved to other times.
///
/// `width` is the standard deviation of `|psi|^2` at the reference time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub center: f64,
    pub width: f64,
    pub mean_momentum: f64,
    pub reference_time: f64,
    pub role: Evolution,
}

impl GaussianPacket {
    pub fn new(
        center: f64,
        width: f64,
        mean_momentum: f64,
        reference_time: f64,
        role: Evolution,
    ) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::invalid("width", format!("must be positive, got {width}")));
        }
        if !center.is_finite() || !mean_momentum.is_finite() || !reference_time.is_finite() {
            return Err(Error::invalid("packet", "non-finite parameter"));
        }
        Ok(Self {
            center,
            width,
            mean_momentum,
            reference_time,
            role,
        })
    }

    pub fn forward(center: f64, width: f64, mean_momentum: f64, reference_time: f64) -> Result<Self> {
        Self::new(center, width, mean_momentum, reference_time, Evolution::Forward)
    }

    pub fn backward(center: f64, width: f64, mean_momentum: f64, reference_time: f64) -> Result<Self> {
        Self::new(center, width, mean_momentum, reference_time, Evolution::Backward)
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let ok = match self.role {
            Evolution::Forward => t >= self.reference_time,
            Evolution::Backward => t <= self.reference_time,
        };
        if ok && t.is_finite() {
            Ok(())
        } else {
            Err(Error::TimeOrder {
                t,
                reference: self.reference_time,
                role: self.role.name(),
            })
        }
    }

    /// Classical line followed by the maximum of `|psi|^2`.
    pub fn centroid(&self, t: f64, units: &UnitSystem) -> f64 {
        self.center + self.mean_momentum / units.mass * (t - self.reference_time)
    }

    /// Standard deviation of `|psi(., t)|^2`.
    pub fn width_at(&self, t: f64, units: &UnitSystem) -> f64 {
        let spread = units.hbar * (t - self.reference_time) / (2.0 * units.mass * self.width * self.width);
        self.width * (1.0 + spread * spread).sqrt()
    }

    /// Closed-form free evolution to time `t` as a complex Gaussian.
    ///
    /// Obtained by applying the free kernel to the reference Gaussian:
    /// with `s = w^2 + i hbar dt / (2m)`,
    /// `psi = N (w^2/s)^(1/2) exp(-(x - x_c - p dt/m)^2 / (4s) + i p (x - x_c)/hbar - i p^2 dt / (2 m hbar))`.
    /// Negative `dt` (backward packets) uses the same expression, which is
    /// the inverse free evolution.
    pub fn at(&self, t: f64, units: &UnitSystem) -> Result<ComplexGaussian> {
        self.check_time(t)?;
        Ok(self.evolved_unchecked(t - self.reference_time, units))
    }

    pub(crate) fn evolved_unchecked(&self, dt: f64, units: &UnitSystem) -> ComplexGaussian {
        let w2 = self.width * self.width;
        let s = C64::new(w2, units.hbar * dt / (2.0 * units.mass));
        let k = self.mean_momentum / units.hbar;
        let log_norm = -0.25 * (2.0 * PI * w2).ln();
        let log_spread = 0.5 * (C64::from(w2) / s).ln();
        let phase = C64::new(0.0, self.mean_momentum * self.mean_momentum * dt / (2.0 * units.mass * units.hbar));
        ComplexGaussian {
            origin: self.centroid(self.reference_time + dt, units),
            a: 0.25 / s,
            b: C64::new(0.0, k),
            c: log_norm + log_spread + phase,
        }
    }

    pub fn value(&self, x: f64, t: f64, units: &UnitSystem) -> Result<C64> {
        Ok(self.at(t, units)?.eval(x))
    }

    /// Analytic `d psi / dx` at `(x, t)`.
    pub fn gradient(&self, x: f64, t: f64, units: &UnitSystem) -> Result<C64> {
        let g = self.at(t, units)?;
        Ok(g.eval(x) * g.log_derivative(x))
    }
}

/// Amplitude of the freely evolved packet at `(x, t)`.
pub fn packet_value(packet: &GaussianPacket, x: f64, t: f64, units: &UnitSystem) -> Result<C64> {
    packet.value(x, t, units)
}
