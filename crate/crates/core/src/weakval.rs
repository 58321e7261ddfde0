//! Complex weak values between pre- and post-selected Gaussian states.
//!
//! For an operator `O` acting at `(x_a, t_b)` the weak value is
//! `<chi(t_b)| O Gamma_a |psi(t_b)> / <chi(t_b)|psi(t_b)>`, where `Gamma_a`
//! is the spatial profile of the coupling. Both states are sums of complex
//! Gaussians, so every numerator and denominator is a closed-form Gaussian
//! integral; quadrature routes are kept alongside for validation.

use serde::{Deserialize, Serialize};

use crate::error::Denominator;
use crate::qcore::quadrature::{integrate_adaptive, DEFAULT_SPANS};
use crate::qcore::{ComplexGaussian, Slit, SlitConfig, StateSpec, UnitSystem};
use crate::{Error, Result, C64};

/// Default relative floor on `|<chi|psi>|`, in units of `|chi| |psi|`.
pub const DEFAULT_EPS_DEN: f64 = 1e-12;

/// Spatial profile of a probe's coupling, centred on the probe position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InteractionProfile {
    /// `Gamma_a(x) = delta(x - x_a)`.
    Point,
    /// Unit-area Gaussian of standard deviation `width`; tends to `Point`
    /// as the width goes to zero.
    Gaussian { width: f64 },
}

impl Default for InteractionProfile {
    fn default() -> Self {
        InteractionProfile::Point
    }
}

impl InteractionProfile {
    pub fn gaussian(width: f64) -> Result<Self> {
        let p = InteractionProfile::Gaussian { width };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InteractionProfile::Point => Ok(()),
            InteractionProfile::Gaussian { width } if width.is_finite() && width > 0.0 => Ok(()),
            InteractionProfile::Gaussian { width } => {
                Err(Error::invalid("profile.width", format!("must be positive, got {width}")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    /// Spatial projector `|x_a><x_a|`.
    Projector,
    /// Transverse momentum `-i hbar d/dx`.
    Momentum,
}

/// Where and when a coupling acts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub position: f64,
    pub time: f64,
}

impl ProbePoint {
    pub fn new(position: f64, time: f64) -> Self {
        Self { position, time }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValueRecord {
    pub value: C64,
    pub operator: Operator,
    pub probe_position: f64,
    pub probe_time: f64,
    /// Slits contributing to the pre-selected state, when it is slit-tagged.
    pub slit_config: Option<SlitConfig>,
}

/// Denominator used by [`WeakValueEngine::per_slit_component`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    /// `k_a^{jl}`: one post component and one slit over the full two-slit
    /// overlap.
    FullDenominator,
    /// `kappa_a^l`: the weak value with only slit `l` open.
    SingleSlit,
}

/// Weak-value evaluator bound to a unit system and a zero-overlap floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValueEngine {
    pub units: UnitSystem,
    pub eps_den: f64,
}

impl WeakValueEngine {
    pub fn new(units: UnitSystem) -> Self {
        Self {
            units,
            eps_den: DEFAULT_EPS_DEN,
        }
    }

    pub fn with_eps_den(mut self, eps_den: f64) -> Self {
        self.eps_den = eps_den;
        self
    }

    /// `<chi(t)|psi(t)>` summed over Gaussian component pairs.
    pub fn overlap(&self, post: &StateSpec, pre: &StateSpec, t: f64) -> Result<C64> {
        let chi = post.gaussians_at(t, &self.units)?;
        let psi = pre.gaussians_at(t, &self.units)?;
        let mut total = C64::new(0.0, 0.0);
        for (cw, cg) in &chi {
            let cc = cg.conj();
            for (pw, pg) in &psi {
                total += cw.conj() * pw * cc.mul(pg).integral();
            }
        }
        Ok(total)
    }

    /// Quadrature route for the overlap on the truncated joint support.
    pub fn overlap_quadrature(&self, post: &StateSpec, pre: &StateSpec, t: f64) -> Result<C64> {
        let (lo, hi) = joint_support(post, pre, t, &self.units)?;
        let chi = post.gaussians_at(t, &self.units)?;
        let psi = pre.gaussians_at(t, &self.units)?;
        let f = |x: f64| sum_eval(&chi, x).conj() * sum_eval(&psi, x);
        Ok(integrate_adaptive(f, lo, hi, 1e-13).value)
    }

    /// Overlap, refused when it falls under the relative floor.
    pub fn checked_overlap(&self, post: &StateSpec, pre: &StateSpec, t: f64, which: Denominator) -> Result<C64> {
        let ov = self.overlap(post, pre, t)?;
        let scale = (post.norm_squared(t, &self.units)? * pre.norm_squared(t, &self.units)?).sqrt();
        let threshold = self.eps_den * scale;
        if !(ov.norm() >= threshold) || ov.norm() == 0.0 {
            return Err(Error::VanishingOverlap {
                denominator: which,
                magnitude: ov.norm(),
                threshold,
            });
        }
        Ok(ov)
    }

    fn numerator(
        &self,
        pre: &StateSpec,
        post: &StateSpec,
        post_component: Option<usize>,
        probe: ProbePoint,
        profile: InteractionProfile,
        op: Operator,
    ) -> Result<C64> {
        profile.validate()?;
        let t = probe.time;
        let mut chi = post.gaussians_at(t, &self.units)?;
        if let Some(j) = post_component {
            let comp = post
                .components()
                .get(j)
                .ok_or_else(|| Error::invalid("post_component", format!("no component {j}")))?;
            let g = comp.packet.at(t, &self.units)?;
            chi = vec![(comp.weight, g)];
        }
        let psi = pre.gaussians_at(t, &self.units)?;
        let hbar = self.units.hbar;
        let minus_i_hbar = C64::new(0.0, -hbar);

        let total = match profile {
            InteractionProfile::Point => {
                let x = probe.position;
                let chi_val = sum_eval(&chi, x).conj();
                let op_psi: C64 = psi
                    .iter()
                    .map(|(w, g)| match op {
                        Operator::Projector => w * g.eval(x),
                        Operator::Momentum => w * g.eval(x) * g.log_derivative(x) * minus_i_hbar,
                    })
                    .sum();
                chi_val * op_psi
            }
            InteractionProfile::Gaussian { width } => {
                let window = ComplexGaussian::window(probe.position, width);
                let mut s = C64::new(0.0, 0.0);
                for (cw, cg) in &chi {
                    let left = window.mul(&cg.conj());
                    for (pw, pg) in &psi {
                        let prod = left.mul(pg);
                        let term = match op {
                            Operator::Projector => prod.integral(),
                            Operator::Momentum => {
                                // d psi/dx = psi (b - 2 a (x - o)), rewritten around prod.origin
                                let shift = prod.origin - pg.origin;
                                let p0 = (pg.b - 2.0 * pg.a * shift) * minus_i_hbar;
                                let p1 = -2.0 * pg.a * minus_i_hbar;
                                prod.integral_linear(p0, p1)
                            }
                        };
                        s += cw.conj() * pw * term;
                    }
                }
                s
            }
        };
        Ok(total)
    }

    fn record(&self, value: C64, op: Operator, pre: &StateSpec, probe: ProbePoint) -> WeakValueRecord {
        WeakValueRecord {
            value,
            operator: op,
            probe_position: probe.position,
            probe_time: probe.time,
            slit_config: pre.slit_config(),
        }
    }

    /// Weak value of the spatial projector at the probe.
    pub fn projector(
        &self,
        pre: &StateSpec,
        post: &StateSpec,
        probe: ProbePoint,
        profile: InteractionProfile,
    ) -> Result<WeakValueRecord> {
        let den = self.checked_overlap(post, pre, probe.time, Denominator::Full)?;
        let num = self.numerator(pre, post, None, probe, profile, Operator::Projector)?;
        Ok(self.record(num / den, Operator::Projector, pre, probe))
    }

    /// Weak value of the transverse momentum at the probe.
    pub fn momentum(
        &self,
        pre: &StateSpec,
        post: &StateSpec,
        probe: ProbePoint,
        profile: InteractionProfile,
    ) -> Result<WeakValueRecord> {
        let den = self.checked_overlap(post, pre, probe.time, Denominator::Full)?;
        let num = self.numerator(pre, post, None, probe, profile, Operator::Momentum)?;
        Ok(self.record(num / den, Operator::Momentum, pre, probe))
    }

    pub fn weak_value(
        &self,
        op: Operator,
        pre: &StateSpec,
        post: &StateSpec,
        probe: ProbePoint,
        profile: InteractionProfile,
    ) -> Result<WeakValueRecord> {
        match op {
            Operator::Projector => self.projector(pre, post, probe, profile),
            Operator::Momentum => self.momentum(pre, post, probe, profile),
        }
    }

    /// `\int (Pi_{x_a})^w dx_a` at time `t`, integrating the point-profile
    /// numerator by quadrature over the joint support. Equals 1 for every
    /// admissible pair.
    pub fn projector_sum_rule(&self, pre: &StateSpec, post: &StateSpec, t: f64) -> Result<C64> {
        let den = self.checked_overlap(post, pre, t, Denominator::Full)?;
        let (lo, hi) = joint_support(post, pre, t, &self.units)?;
        let chi = post.gaussians_at(t, &self.units)?;
        let psi = pre.gaussians_at(t, &self.units)?;
        let f = |x: f64| sum_eval(&chi, x).conj() * sum_eval(&psi, x) / den;
        Ok(integrate_adaptive(f, lo, hi, 1e-12).value)
    }

    /// `R_l = <chi|psi^l> / <chi|psi>` for the slit-`l` term of the pre-state.
    pub fn overlap_ratio(&self, pre: &StateSpec, post: &StateSpec, slit: Slit, t: f64) -> Result<C64> {
        let full = self.checked_overlap(post, pre, t, Denominator::Full)?;
        let part = self.overlap(post, &pre.restrict(slit)?, t)?;
        Ok(part / full)
    }

    /// `k_a^{jl}`: momentum numerator from post component `j` (0-based,
    /// weight included) and slit `l`, over the full two-slit overlap.
    /// Summing over `j` and `l` gives the full weak value exactly.
    pub fn path_component(
        &self,
        pre: &StateSpec,
        post: &StateSpec,
        slit: Slit,
        post_component: usize,
        probe: ProbePoint,
        profile: InteractionProfile,
    ) -> Result<C64> {
        let den = self.checked_overlap(post, pre, probe.time, Denominator::Full)?;
        let branch = pre.restrict(slit)?;
        let num = self.numerator(&branch, post, Some(post_component), probe, profile, Operator::Momentum)?;
        Ok(num / den)
    }

    /// `kappa_a^l`: the momentum weak value with only slit `l` open.
    pub fn single_slit(
        &self,
        pre: &StateSpec,
        post: &StateSpec,
        slit: Slit,
        probe: ProbePoint,
        profile: InteractionProfile,
    ) -> Result<C64> {
        let branch = pre.restrict(slit)?;
        let den = self.checked_overlap(post, &branch, probe.time, Denominator::SingleSlit(slit))?;
        let num = self.numerator(&branch, post, None, probe, profile, Operator::Momentum)?;
        Ok(num / den)
    }

    /// Per-slit momentum contribution with the denominator chosen by `mode`.
    /// `post_component` is only used in [`PathMode::FullDenominator`].
    #[allow(clippy::too_many_arguments)]
    pub fn per_slit_component(
        &self,
        pre: &StateSpec,
        post: &StateSpec,
        slit: Slit,
        post_component: usize,
        probe: ProbePoint,
        profile: InteractionProfile,
        mode: PathMode,
    ) -> Result<C64> {
        match mode {
            PathMode::FullDenominator => self.path_component(pre, post, slit, post_component, probe, profile),
            PathMode::SingleSlit => self.single_slit(pre, post, slit, probe, profile),
        }
    }
}

fn sum_eval(gs: &[(C64, ComplexGaussian)], x: f64) -> C64 {
    gs.iter().map(|(w, g)| w * g.eval(x)).sum()
}

fn joint_support(post: &StateSpec, pre: &StateSpec, t: f64, units: &UnitSystem) -> Result<(f64, f64)> {
    let (a0, a1) = post.support(t, units, DEFAULT_SPANS)?;
    let (b0, b1) = pre.support(t, units, DEFAULT_SPANS)?;
    // The product is negligible outside the intersection, but an empty
    // intersection still needs a finite interval.
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    if lo < hi {
        Ok((lo, hi))
    } else {
        Ok((a0.min(b0), a1.max(b1)))
    }
}

/// [`WeakValueEngine::overlap`] with the default floor.
pub fn overlap(post: &StateSpec, pre: &StateSpec, t: f64, units: &UnitSystem) -> Result<C64> {
    WeakValueEngine::new(*units).overlap(post, pre, t)
}

pub fn projector_weak_value(
    pre: &StateSpec,
    post: &StateSpec,
    probe: ProbePoint,
    profile: InteractionProfile,
    units: &UnitSystem,
) -> Result<WeakValueRecord> {
    WeakValueEngine::new(*units).projector(pre, post, probe, profile)
}

pub fn momentum_weak_value(
    pre: &StateSpec,
    post: &StateSpec,
    probe: ProbePoint,
    profile: InteractionProfile,
    units: &UnitSystem,
) -> Result<WeakValueRecord> {
    WeakValueEngine::new(*units).momentum(pre, post, probe, profile)
}

pub fn projector_weak_value_sum_rule(pre: &StateSpec, post: &StateSpec, t: f64, units: &UnitSystem) -> Result<C64> {
    WeakValueEngine::new(*units).projector_sum_rule(pre, post, t)
}
