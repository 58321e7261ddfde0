//! Composite Gauss-Legendre quadrature for complex integrands on a
//! truncated real interval.
//!
//! All integrands met here are Gaussian-damped, so truncation is explicit:
//! callers integrate over `[peak - n w, peak + n w]` where `w` is the
//! density width (standard deviation of `|psi|^2`). The default of
//! [`DEFAULT_SPANS`] density widths is eight effective widths of the
//! amplitude `exp(-(x/2w)^2)`, where the amplitude has decayed to `e^-64`.

use std::f64::consts::PI;

use crate::C64;

/// Truncation half-width in density widths.
pub const DEFAULT_SPANS: f64 = 16.0;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`; nodes found by Newton iteration on the
    /// Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Composite rule with `panels` equal sub-intervals.
    pub fn integrate<F: Fn(f64) -> C64>(&self, f: &F, a: f64, b: f64, panels: usize) -> C64 {
        let h = (b - a) / panels as f64;
        let mut total = C64::new(0.0, 0.0);
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * h;
            let mut s = C64::new(0.0, 0.0);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += f(mid + 0.5 * h * x) * *w;
            }
            total += s * (0.5 * h);
        }
        total
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: C64,
    /// Difference between the last two refinements.
    pub error: f64,
    pub panels: usize,
}

/// Doubles the panel count of a 16-point composite rule until two
/// successive estimates agree to `rel_tol`.
pub fn integrate_adaptive<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, rel_tol: f64) -> Estimate {
    let rule = GaussLegendre::new(16);
    let mut panels = 8;
    let mut prev = rule.integrate(&f, a, b, panels);
    loop {
        panels *= 2;
        let next = rule.integrate(&f, a, b, panels);
        let error = (next - prev).norm();
        if error <= rel_tol * next.norm() || error == 0.0 || panels >= 1 << 16 {
            return Estimate {
                value: next,
                error,
                panels,
            };
        }
        prev = next;
    }
}
