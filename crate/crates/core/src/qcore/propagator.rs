use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ComplexGaussian, Slit, UnitSystem};
use crate::{Error, Result, C64};

/// Free-particle kernel
/// `K(x', t' | x, t) = (m / (2 i pi hbar dt))^(1/2) exp(i m (x' - x)^2 / (2 hbar dt))`
/// with the principal square root.
pub fn free_propagator(x_to: f64, t_to: f64, x_from: f64, t_from: f64, units: &UnitSystem) -> Result<C64> {
    let dt = t_to - t_from;
    if !(dt > 0.0) {
        return Err(Error::DegenerateTime { t_from, t_to });
    }
    let dx = x_to - x_from;
    Ok(prefactor(dt, units) * C64::new(0.0, units.beta() * dx * dx / dt).exp())
}

fn prefactor(dt: f64, units: &UnitSystem) -> C64 {
    (C64::new(units.mass, 0.0) / C64::new(0.0, 2.0 * PI * units.hbar * dt)).sqrt()
}

/// Two Gaussian slits of transmission `exp(-(x -+ x0)^2 / (2 c^2))`, crossed
/// at `slit_time` by a wave emitted from a point source at `x = 0, t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitGeometry {
    pub half_separation: f64,
    pub slit_width: f64,
    pub slit_time: f64,
    pub screen_distance: f64,
    /// Longitudinal speed `p_z / m`.
    pub pz_over_m: f64,
}

impl SlitGeometry {
    pub fn new(
        half_separation: f64,
        slit_width: f64,
        slit_time: f64,
        screen_distance: f64,
        pz_over_m: f64,
    ) -> Result<Self> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive, got {v}")))
            }
        };
        positive("half_separation", half_separation)?;
        positive("slit_width", slit_width)?;
        positive("screen_distance", screen_distance)?;
        positive("pz_over_m", pz_over_m)?;
        if !(slit_time.is_finite() && slit_time >= 0.0) {
            return Err(Error::invalid("slit_time", format!("must be non-negative, got {slit_time}")));
        }
        Ok(Self {
            half_separation,
            slit_width,
            slit_time,
            screen_distance,
            pz_over_m,
        })
    }

    /// Arrival time at the screen, `tau + D / v_z`.
    pub fn final_time(&self) -> f64 {
        self.slit_time + self.screen_distance / self.pz_over_m
    }

    pub fn pz(&self, units: &UnitSystem) -> f64 {
        units.mass * self.pz_over_m
    }

    /// `(Delta x)^2 = (c t/tau)^2 + (hbar (t - tau) / (m c))^2`.
    pub fn delta_x_sq(&self, t: f64, units: &UnitSystem) -> f64 {
        let geometric = self.slit_width * t / self.slit_time;
        let diffractive = units.hbar * (t - self.slit_time) / (units.mass * self.slit_width);
        geometric * geometric + diffractive * diffractive
    }

    /// `alpha = hbar / (m c^2)`.
    pub fn alpha(&self, units: &UnitSystem) -> f64 {
        units.hbar / (units.mass * self.slit_width * self.slit_width)
    }

    /// `eta`, ratio of the geometric to the diffractive spread at `t`.
    pub fn eta(&self, t: f64, units: &UnitSystem) -> f64 {
        (self.slit_width * t / self.slit_time) / (units.hbar * (t - self.slit_time) / (units.mass * self.slit_width))
    }

    /// Far-field flag: screen distance at least `ratio` slit widths.
    pub fn is_fraunhofer(&self, ratio: f64) -> bool {
        self.screen_distance >= ratio * self.slit_width
    }
}

/// Propagator from the source `(0, 0)` to `(x_f, t_f)` through slit `slit`,
/// `K_j = \int K(x_f, t_f | x, tau) phi_j(x) K(x, tau | 0, 0) dx`, evaluated
/// as a closed-form complex Gaussian integral.
pub fn slit_propagator(slit: Slit, x_f: f64, t_f: f64, geometry: &SlitGeometry, units: &UnitSystem) -> Result<C64> {
    let tau = geometry.slit_time;
    if !(tau > 0.0) {
        return Err(Error::DegenerateTime { t_from: 0.0, t_to: tau });
    }
    if !(t_f > tau) {
        return Err(Error::DegenerateTime { t_from: tau, t_to: t_f });
    }
    let rest = t_f - tau;
    let beta = units.beta();
    let c2 = geometry.slit_width * geometry.slit_width;
    let centre = slit.sign() * geometry.half_separation;
    let offset = x_f - centre;
    // Integrand written around the slit centre, u = x - centre.
    let integrand = ComplexGaussian {
        origin: centre,
        a: C64::new(1.0 / (2.0 * c2), -beta * (1.0 / tau + 1.0 / rest)),
        b: C64::new(0.0, 2.0 * beta * (centre / tau - offset / rest)),
        c: C64::new(0.0, beta * (centre * centre / tau + offset * offset / rest)),
    };
    Ok(prefactor(tau, units) * prefactor(rest, units) * integrand.integral())
}

/// Far-field approximation
/// `cos^2(2 p_z x0 x_f / (hbar D)) exp(-x_f^2 / (Delta x)^2)` at the
/// geometry's arrival time.
pub fn fraunhofer_pattern(x_f: f64, geometry: &SlitGeometry, units: &UnitSystem) -> f64 {
    let delta_x = geometry.delta_x_sq(geometry.final_time(), units).sqrt();
    fraunhofer_profile(
        x_f,
        geometry.pz(units),
        geometry.half_separation,
        geometry.screen_distance,
        delta_x,
        units,
    )
}

/// The same compact form with the envelope width supplied directly.
pub fn fraunhofer_profile(x_f: f64, pz: f64, x0: f64, screen_distance: f64, delta_x: f64, units: &UnitSystem) -> f64 {
    let phase = 2.0 * pz * x0 * x_f / (units.hbar * screen_distance);
    phase.cos().powi(2) * (-(x_f * x_f) / (delta_x * delta_x)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometry() -> SlitGeometry {
        SlitGeometry::new(1.0, 0.3, 0.5, 150.0, 100.0).unwrap()
    }

    #[test]
    fn free_kernel_modulus_and_symmetry() {
        let u = UnitSystem::dimensionless();
        let expect = (1.0 / (2.0 * PI * 0.7f64)).sqrt();
        for (a, b) in [(0.0, 0.0), (1.0, -2.0), (5.0, 3.3)] {
            let k = free_propagator(a, 1.2, b, 0.5, &u).unwrap();
            assert!((k.norm() - expect).abs() < 1e-14);
            let swapped = free_propagator(b, 1.2, a, 0.5, &u).unwrap();
            assert_eq!(k, swapped);
        }
    }

    #[test]
    fn free_kernel_rejects_degenerate_time() {
        let u = UnitSystem::dimensionless();
        assert!(matches!(free_propagator(0.0, 1.0, 0.0, 1.0, &u), Err(Error::DegenerateTime { .. })));
        assert!(matches!(free_propagator(0.0, 0.0, 0.0, 1.0, &u), Err(Error::DegenerateTime { .. })));
    }

    #[test]
    fn slit_propagators_are_mirror_images() {
        let u = UnitSystem::dimensionless();
        let g = geometry();
        for x in [0.0, 0.4, 3.1, 17.0] {
            let k1 = slit_propagator(Slit::One, x, 2.0, &g, &u).unwrap();
            let k2 = slit_propagator(Slit::Two, -x, 2.0, &g, &u).unwrap();
            assert!((k1 - k2).norm() < 1e-14 * k1.norm());
        }
    }

    #[test]
    fn slit_propagator_time_checks() {
        let u = UnitSystem::dimensionless();
        let g = geometry();
        assert!(slit_propagator(Slit::One, 0.0, 0.5, &g, &u).is_err());
        let mut flat = g;
        flat.slit_time = 0.0;
        assert!(slit_propagator(Slit::One, 0.0, 2.0, &flat, &u).is_err());
    }

    #[test]
    fn fraunhofer_closed_form_values() {
        let u = UnitSystem::dimensionless();
        let g = geometry();
        assert!((fraunhofer_pattern(0.0, &g, &u) - 1.0).abs() < 1e-15);
        let pz = g.pz(&u);
        let first_zero = PI / 2.0 * u.hbar * g.screen_distance / (2.0 * pz * g.half_separation);
        assert!(fraunhofer_pattern(first_zero, &g, &u) < 1e-25);
        let dx = g.delta_x_sq(g.final_time(), &u).sqrt();
        let cos2 = (2.0 * pz * g.half_separation * dx / g.screen_distance).cos().powi(2);
        assert!((fraunhofer_pattern(dx, &g, &u) - (-1f64).exp() * cos2).abs() < 1e-14);
    }
}
