//! Independent numerical oracles shared by the integration tests.
//!
//! Nothing here calls into the library's own quadrature or kernels.

#![allow(dead_code)]

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Composite Simpson rule on `n` (rounded up to even) intervals.
pub fn simpson<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, n: usize) -> C64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Real-valued Simpson rule.
pub fn simpson_re<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    simpson(|x| C64::new(f(x), 0.0), a, b, n).re
}

/// Free kernel for complex argument `x_to - x_from = dx`:
/// `sqrt(m / (2 pi i hbar dt)) exp(i m dx^2 / (2 hbar dt))`.
pub fn kernel(dx: C64, dt: f64, hbar: f64, mass: f64) -> C64 {
    let pre = (C64::new(mass, 0.0) / C64::new(0.0, 2.0 * PI * hbar * dt)).sqrt();
    pre * (C64::i() * mass * dx * dx / (2.0 * hbar * dt)).exp()
}

/// Gaussian `(2 pi w^2)^(-1/4) exp(-(x - c)^2 / (4 w^2) + i p (x - c) / hbar)`.
pub fn gaussian(x: f64, c: f64, w: f64, p: f64, hbar: f64) -> C64 {
    let n = (2.0 * PI * w * w).powf(-0.25);
    n * C64::new(-(x - c).powi(2) / (4.0 * w * w), p * (x - c) / hbar).exp()
}

pub fn rel_err(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Richardson-extrapolated central difference.
pub fn derivative<F: Fn(f64) -> C64>(f: F, x: f64, h: f64) -> C64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}
