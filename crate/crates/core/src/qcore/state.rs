use std::fmt;
use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::{ComplexGaussian, Evolution, GaussianPacket, UnitSystem};
use crate::{Error, Result, C64};

/// Pre-selected (evolved forward from the slits) or post-selected
/// (evolved backward from the screen).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Pre,
    Post,
}

impl Role {
    fn evolution(self) -> Evolution {
        match self {
            Role::Pre => Evolution::Forward,
            Role::Post => Evolution::Backward,
        }
    }
}

/// Slit 1 is centred at `+x0`, slit 2 at `-x0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slit {
    #[serde(rename = "slit1")]
    One,
    #[serde(rename = "slit2")]
    Two,
}

impl Slit {
    pub const BOTH: [Slit; 2] = [Slit::One, Slit::Two];

    /// `+1` for slit 1, `-1` for slit 2.
    pub fn sign(self) -> f64 {
        match self {
            Slit::One => 1.0,
            Slit::Two => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Slit::One => 1,
            Slit::Two => 2,
        }
    }

    pub fn other(self) -> Slit {
        match self {
            Slit::One => Slit::Two,
            Slit::Two => Slit::One,
        }
    }
}

impl fmt::Display for Slit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "slit{}", self.index())
    }
}

/// Which slits contribute to a pre-selected state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlitConfig {
    Both,
    Slit1,
    Slit2,
}

impl SlitConfig {
    pub const ALL: [SlitConfig; 3] = [SlitConfig::Both, SlitConfig::Slit1, SlitConfig::Slit2];

    pub fn open_slits(self) -> &'static [Slit] {
        match self {
            SlitConfig::Both => &Slit::BOTH,
            SlitConfig::Slit1 => &[Slit::One],
            SlitConfig::Slit2 => &[Slit::Two],
        }
    }

    pub fn only(slit: Slit) -> Self {
        match slit {
            Slit::One => SlitConfig::Slit1,
            Slit::Two => SlitConfig::Slit2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SlitConfig::Both => "both",
            SlitConfig::Slit1 => "slit1",
            SlitConfig::Slit2 => "slit2",
        }
    }
}

impl fmt::Display for SlitConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: C64,
    pub packet: GaussianPacket,
    /// Slit the component emanates from, when it has one.
    pub slit: Option<Slit>,
}

/// Weighted superposition of Gaussian packets.
///
/// Weights are kept exactly as given; nothing is renormalised, so a state
/// restricted to one slit is literally the corresponding term of the
/// two-slit sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    components: Vec<Component>,
    role: Role,
}

impl StateSpec {
    pub fn new(role: Role, components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyState);
        }
        if components.iter().all(|c| c.weight == C64::new(0.0, 0.0)) {
            return Err(Error::ZeroWeights);
        }
        if let Some(c) = components.iter().find(|c| c.packet.role != role.evolution()) {
            return Err(Error::RoleMismatch(format!(
                "{role:?} state holds a {:?} packet centred at {:e}",
                c.packet.role, c.packet.center
            )));
        }
        Ok(Self { components, role })
    }

    /// `(psi^1 + psi^2) / sqrt(2)` with Gaussians of width `width` at
    /// `+-x0` and time 0, carrying momenta `p1`, `p2`.
    pub fn two_slit(x0: f64, width: f64, p1: f64, p2: f64) -> Result<Self> {
        if !(x0 > 0.0) {
            return Err(Error::invalid("x0", "half separation must be positive"));
        }
        let w = C64::new(FRAC_1_SQRT_2, 0.0);
        let comps = [(Slit::One, p1), (Slit::Two, p2)]
            .into_iter()
            .map(|(slit, p)| {
                Ok(Component {
                    weight: w,
                    packet: GaussianPacket::forward(slit.sign() * x0, width, p, 0.0)?,
                    slit: Some(slit),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(Role::Pre, comps)
    }

    /// Single Gaussian emerging from one slit, weight 1.
    pub fn single_slit(slit: Slit, x0: f64, width: f64, p: f64) -> Result<Self> {
        Self::new(
            Role::Pre,
            vec![Component {
                weight: C64::new(1.0, 0.0),
                packet: GaussianPacket::forward(slit.sign() * x0, width, p, 0.0)?,
                slit: Some(slit),
            }],
        )
    }

    /// Sum of Gaussians of width `delta` centred on `x_f` at the final time,
    /// each collimated along one momentum: `sum_k c_k Xi_{x_f, p_k}`.
    pub fn screen_post(x_f: f64, delta: f64, t_f: f64, collimation: &[(C64, f64)]) -> Result<Self> {
        let comps = collimation
            .iter()
            .map(|&(weight, p)| {
                Ok(Component {
                    weight,
                    packet: GaussianPacket::backward(x_f, delta, p, t_f)?,
                    slit: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(Role::Post, comps)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// The state with every component not coming from `slit` removed.
    pub fn restrict(&self, slit: Slit) -> Result<Self> {
        let comps: Vec<_> = self
            .components
            .iter()
            .filter(|c| c.slit == Some(slit))
            .copied()
            .collect();
        Self::new(self.role, comps)
    }

    pub fn restrict_config(&self, config: SlitConfig) -> Result<Self> {
        match config {
            SlitConfig::Both => Ok(self.clone()),
            SlitConfig::Slit1 => self.restrict(Slit::One),
            SlitConfig::Slit2 => self.restrict(Slit::Two),
        }
    }

    /// Slit configuration implied by the component tags, if every component
    /// is tagged.
    pub fn slit_config(&self) -> Option<SlitConfig> {
        let mut one = false;
        let mut two = false;
        for c in &self.components {
            match c.slit? {
                Slit::One => one = true,
                Slit::Two => two = true,
            }
        }
        match (one, two) {
            (true, true) => Some(SlitConfig::Both),
            (true, false) => Some(SlitConfig::Slit1),
            (false, true) => Some(SlitConfig::Slit2),
            _ => None,
        }
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        self.components.iter().try_for_each(|c| c.packet.check_time(t))
    }

    /// Weighted Gaussians making up the state at time `t`; zero-weight
    /// components are dropped.
    pub fn gaussians_at(&self, t: f64, units: &UnitSystem) -> Result<Vec<(C64, ComplexGaussian)>> {
        self.check_time(t)?;
        Ok(self
            .components
            .iter()
            .filter(|c| c.weight != C64::new(0.0, 0.0))
            .map(|c| (c.weight, c.packet.evolved_unchecked(t - c.packet.reference_time, units)))
            .collect())
    }

    pub fn value(&self, x: f64, t: f64, units: &UnitSystem) -> Result<C64> {
        Ok(self
            .gaussians_at(t, units)?
            .iter()
            .map(|(w, g)| w * g.eval(x))
            .sum())
    }

    pub fn gradient(&self, x: f64, t: f64, units: &UnitSystem) -> Result<C64> {
        Ok(self
            .gaussians_at(t, units)?
            .iter()
            .map(|(w, g)| w * g.eval(x) * g.log_derivative(x))
            .sum())
    }

    /// `<self|self>` at time `t`, in closed form.
    pub fn norm_squared(&self, t: f64, units: &UnitSystem) -> Result<f64> {
        let gs = self.gaussians_at(t, units)?;
        let mut total = C64::new(0.0, 0.0);
        for (wi, gi) in &gs {
            for (wj, gj) in &gs {
                total += wi.conj() * wj * gi.conj().mul(gj).integral();
            }
        }
        Ok(total.re)
    }

    /// Interval holding every component to within `spans` density widths
    /// at time `t`.
    pub fn support(&self, t: f64, units: &UnitSystem, spans: f64) -> Result<(f64, f64)> {
        let gs = self.gaussians_at(t, units)?;
        let lo = gs
            .iter()
            .map(|(_, g)| g.peak() - spans * g.density_width())
            .fold(f64::INFINITY, f64::min);
        let hi = gs
            .iter()
            .map(|(_, g)| g.peak() + spans * g.density_width())
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }

    /// Largest density width among the components at time `t`.
    pub fn max_width(&self, t: f64, units: &UnitSystem) -> f64 {
        self.components
            .iter()
            .map(|c| c.packet.width_at(t, units))
            .fold(0.0, f64::max)
    }
}

/// Weighted sum of packet amplitudes at `(x, t)`.
pub fn state_value(state: &StateSpec, x: f64, t: f64, units: &UnitSystem) -> Result<C64> {
    state.value(x, t, units)
}
