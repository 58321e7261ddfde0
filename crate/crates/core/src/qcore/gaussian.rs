use std::f64::consts::PI;

use crate::C64;

/// `exp(c + b u - a u^2)` with `u = x - origin`.
///
/// Gaussian wavepackets, their products and their derivatives all live in
/// this family, which is closed under multiplication and has closed-form
/// integrals whenever `Re a > 0`. Keeping an explicit origin avoids the
/// catastrophic cancellation that expanding around `x = 0` would cause in
/// SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexGaussian {
    pub origin: f64,
    pub a: C64,
    pub b: C64,
    pub c: C64,
}

impl ComplexGaussian {
    pub fn exponent(&self, x: f64) -> C64 {
        let u = x - self.origin;
        self.c + self.b * u - self.a * u * u
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.exponent(x).exp()
    }

    /// `d/dx log g`, a linear function of `x`.
    pub fn log_derivative(&self, x: f64) -> C64 {
        self.b - 2.0 * self.a * (x - self.origin)
    }

    pub fn conj(&self) -> Self {
        Self {
            origin: self.origin,
            a: self.a.conj(),
            b: self.b.conj(),
            c: self.c.conj(),
        }
    }

    /// Same function written around another origin.
    pub fn recentered(&self, origin: f64) -> Self {
        let d = origin - self.origin;
        Self {
            origin,
            a: self.a,
            b: self.b - 2.0 * self.a * d,
            c: self.c + self.b * d - self.a * d * d,
        }
    }

    /// Pointwise product, expressed around `self.origin`.
    pub fn mul(&self, other: &Self) -> Self {
        let o = other.recentered(self.origin);
        Self {
            origin: self.origin,
            a: self.a + o.a,
            b: self.b + o.b,
            c: self.c + o.c,
        }
    }

    /// Multiplies by the constant `exp(log_factor)`.
    pub fn scaled_log(&self, log_factor: C64) -> Self {
        Self {
            c: self.c + log_factor,
            ..*self
        }
    }

    /// Normalised real Gaussian window of standard deviation `width`
    /// centred at `center`.
    pub fn window(center: f64, width: f64) -> Self {
        Self {
            origin: center,
            a: C64::new(1.0 / (2.0 * width * width), 0.0),
            b: C64::new(0.0, 0.0),
            c: C64::new(-(width * (2.0 * PI).sqrt()).ln(), 0.0),
        }
    }

    /// `\int g dx` over the real line. Requires `Re a > 0`.
    pub fn integral(&self) -> C64 {
        debug_assert!(self.a.re > 0.0, "integral of a non-decaying Gaussian");
        (C64::from(PI) / self.a).sqrt() * (self.c + self.b * self.b / (4.0 * self.a)).exp()
    }

    /// `\int (p0 + p1 (x - origin)) g dx` over the real line.
    pub fn integral_linear(&self, p0: C64, p1: C64) -> C64 {
        self.integral() * (p0 + p1 * self.b / (2.0 * self.a))
    }

    /// Standard deviation of `|g|^2`, the natural length scale of `g`.
    pub fn density_width(&self) -> f64 {
        // |g|^2 ~ exp(-2 Re(a) u^2 + ...) so sigma^2 = 1 / (4 Re a).
        (1.0 / (4.0 * self.a.re)).sqrt()
    }

    /// Location of the maximum of `|g|`.
    pub fn peak(&self) -> f64 {
        self.origin + self.b.re / (2.0 * self.a.re)
    }
}
