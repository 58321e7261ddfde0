//! Scenario files: a TOML tree with one section per part of the setup.
//!
//! Every optional field is filled in by [`ScenarioConfig::resolve`], and the
//! filled-in tree is what gets echoed and hashed, so two files that differ
//! only in spelled-out defaults produce identical outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::probegrid::{
    default_linking_radius, probe_lattice, Probe, DEFAULT_FIRST_ORDER_GUARD, DEFAULT_THRESHOLD_REL,
};
use crate::protocol::{Crystal, CrystalId, ProtocolSetup, SimulationMode};
use crate::qcore::{Slit, SlitConfig, SlitGeometry, StateSpec, UnitSystem, ELECTRON_MASS_SI, HBAR_SI};
use crate::weakval::InteractionProfile;
use crate::{Error, Result, C64};

use super::bundled;

pub const DEFAULT_SCREEN_POINTS: usize = 4096;
pub const DEFAULT_DENSITY_POINTS: usize = 1024;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub units: UnitsConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub pre_state: PreStateConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_state: Option<PostStateConfig>,
    #[serde(default)]
    pub screen: ScreenConfig,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<ProbesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    /// `hbar = m = 1` unless overridden.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimensionless: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Half the slit separation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    /// Slit plane to screen, `D`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screen_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pz_over_m: Option<f64>,
    /// Flight time from the slits to the screen; `D / (p_z/m)` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
    /// Gaussian slit width `c`, for the slit-propagator model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slit_width: Option<f64>,
    /// Source-to-slit time `tau`, for the slit-propagator model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slit_time: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreStateConfig {
    /// Packet width `d` at the slits (standard deviation of `|psi|^2`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open: Option<SlitConfig>,
    /// Transverse velocities `p/m` of the slit 1 and slit 2 packets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocities: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aim {
    /// Two components, each collimated along the line to one slit centre.
    Slits,
    Slit1,
    Slit2,
    /// One component with zero transverse momentum.
    Vertical,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostStateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aim: Option<Aim>,
    /// Explicit collimation velocities `p'/m`, one per component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocities: Option<Vec<f64>>,
    /// Real component weights; equal weights `1/sqrt(n)` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    /// Half-width of the sampled interval; `4 Delta x` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_range: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Fixed half-width around 0; each snapshot covers its packets to
    /// eight widths when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_range: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbesConfig {
    /// Coupling `gamma` shared by all probes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// `point` or `gaussian:<width>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linking_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<NamedPointConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
}

/// A single placed probe or crystal. The time is `t`, or `t_frac` times
/// the final time; the position is `x`, or the point of post-selected
/// component `along` (1-based) on its classical line at that time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPointConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub along: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SimulationMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default)]
    pub crystals: Vec<CrystalConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalConfig {
    pub id: CrystalId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub along: Option<usize>,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_shifted: Option<bool>,
}

/// A validated scenario with every derived object built.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// The configuration with all defaults filled in.
    pub config: ScenarioConfig,
    pub units: UnitSystem,
    pub final_time: f64,
    pub pre: StateSpec,
    pub post: Option<StateSpec>,
    pub slit_geometry: Option<SlitGeometry>,
    pub probes: Option<ProbeSetup>,
    pub protocol: Option<ProtocolSetup>,
}

#[derive(Debug, Clone)]
pub struct ProbeSetup {
    pub probes: Vec<Probe>,
    pub profile: InteractionProfile,
    pub threshold_rel: f64,
    pub linking_radius: f64,
    pub guard: f64,
}

/// `point` or `gaussian:<width>`.
pub fn parse_profile(text: &str) -> Result<InteractionProfile> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("point") {
        return Ok(InteractionProfile::Point);
    }
    if let Some(w) = t.strip_prefix("gaussian:") {
        let width: f64 = w
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("profile width `{w}` is not a number")))?;
        return InteractionProfile::gaussian(width);
    }
    Err(Error::Parse(format!("unknown profile `{text}`; expected `point` or `gaussian:<width>`")))
}

pub fn profile_name(profile: &InteractionProfile) -> String {
    match profile {
        InteractionProfile::Point => "point".into(),
        InteractionProfile::Gaussian { width } => format!("gaussian:{width:e}"),
    }
}

/// Parses a scenario from TOML text; `origin` labels error messages.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse(format!("{origin}: {e}")))?;
    config.resolve()
}

/// Loads a scenario file, or a bundled scenario when `spec` is not an
/// existing path but names one.
pub fn load_scenario(spec: &str) -> Result<Scenario> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: spec.to_string(),
            message: e.to_string(),
        })?;
        return parse_scenario(&text, spec);
    }
    match bundled::get(spec) {
        Some(text) => parse_scenario(text, spec),
        None => Err(Error::Io {
            path: spec.to_string(),
            message: format!(
                "no such file, and not a bundled scenario ({})",
                bundled::NAMES.join(", ")
            ),
        }),
    }
}

fn require<T: Copy>(value: Option<T>, field: &str) -> Result<T> {
    value.ok_or_else(|| Error::validation(field, "is required"))
}

fn positive(value: f64, field: &str) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::validation(field, format!("must be positive and finite, got {value}")))
    }
}

fn finite(value: f64, field: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::validation(field, format!("must be finite, got {value}")))
    }
}

impl ScenarioConfig {
    /// Validates the tree, fills in defaults and builds the states.
    pub fn resolve(&self) -> Result<Scenario> {
        let mut cfg = self.clone();

        // units
        let dimensionless = cfg.units.dimensionless.unwrap_or(false);
        let (h0, m0) = if dimensionless { (1.0, 1.0) } else { (HBAR_SI, ELECTRON_MASS_SI) };
        let hbar = positive(cfg.units.hbar.unwrap_or(h0), "units.hbar")?;
        let mass = positive(cfg.units.mass.unwrap_or(m0), "units.mass")?;
        cfg.units = UnitsConfig {
            dimensionless: Some(dimensionless),
            hbar: Some(hbar),
            mass: Some(mass),
        };
        let mut units = UnitSystem::new(hbar, mass).map_err(|e| Error::validation("units", e.to_string()))?;
        units.dimensionless = dimensionless;

        // geometry
        let g = &mut cfg.geometry;
        let x0 = positive(require(g.x0, "geometry.x0")?, "geometry.x0")?;
        let final_time = match (g.final_time, g.screen_distance, g.pz_over_m) {
            (Some(t), d, v) => {
                let t = positive(t, "geometry.final_time")?;
                if let (Some(d), Some(v)) = (d, v) {
                    let implied = d / v;
                    if ((implied - t) / t).abs() > 1e-9 {
                        return Err(Error::validation(
                            "geometry.final_time",
                            format!("disagrees with screen_distance / pz_over_m = {implied:e}"),
                        ));
                    }
                }
                t
            }
            (None, Some(d), Some(v)) => positive(d, "geometry.screen_distance")? / positive(v, "geometry.pz_over_m")?,
            _ => {
                return Err(Error::validation(
                    "geometry.final_time",
                    "is required unless screen_distance and pz_over_m are both given",
                ))
            }
        };
        g.final_time = Some(final_time);
        let slit_geometry = match (g.slit_width, g.slit_time) {
            (None, None) => None,
            (Some(c), Some(tau)) => {
                let d = require(g.screen_distance, "geometry.screen_distance")?;
                let v = require(g.pz_over_m, "geometry.pz_over_m")?;
                Some(SlitGeometry::new(x0, c, tau, d, v).map_err(|e| Error::validation("geometry", e.to_string()))?)
            }
            (Some(_), None) => return Err(Error::validation("geometry.slit_time", "is required with slit_width")),
            (None, Some(_)) => return Err(Error::validation("geometry.slit_width", "is required with slit_time")),
        };

        // pre-selection
        let p = &mut cfg.pre_state;
        let width = positive(require(p.width, "pre_state.width")?, "pre_state.width")?;
        let open = p.open.unwrap_or(SlitConfig::Both);
        let velocities = p.velocities.clone().unwrap_or_else(|| vec![0.0, 0.0]);
        if velocities.len() != 2 {
            return Err(Error::validation(
                "pre_state.velocities",
                format!("needs one velocity per slit, got {}", velocities.len()),
            ));
        }
        for v in &velocities {
            finite(*v, "pre_state.velocities")?;
        }
        p.open = Some(open);
        p.velocities = Some(velocities.clone());
        let momentum = |s: Slit| mass * velocities[s.index() - 1];
        let pre = match open {
            SlitConfig::Both => StateSpec::two_slit(x0, width, momentum(Slit::One), momentum(Slit::Two)),
            SlitConfig::Slit1 => StateSpec::single_slit(Slit::One, x0, width, momentum(Slit::One)),
            SlitConfig::Slit2 => StateSpec::single_slit(Slit::Two, x0, width, momentum(Slit::Two)),
        }
        .map_err(|e| Error::validation("pre_state", e.to_string()))?;

        // post-selection
        let post = match cfg.post_state.as_mut() {
            None => None,
            Some(q) => Some(resolve_post(q, x0, final_time, mass)?),
        };

        // screen and density sampling
        let spread = pre.max_width(final_time, &units);
        let delta_x = match &slit_geometry {
            Some(geo) => geo.delta_x_sq(geo.final_time(), &units).sqrt(),
            None => std::f64::consts::SQRT_2 * spread,
        };
        let s = &mut cfg.screen;
        let points = s.points.unwrap_or(DEFAULT_SCREEN_POINTS);
        if points < 2 {
            return Err(Error::validation("screen.points", "needs at least 2 points"));
        }
        s.points = Some(points);
        s.center = Some(finite(s.center.unwrap_or(0.0), "screen.center")?);
        s.half_range = Some(positive(s.half_range.unwrap_or(4.0 * delta_x), "screen.half_range")?);

        let d = &mut cfg.density;
        let times = d
            .times
            .clone()
            .unwrap_or_else(|| (0..=4).map(|k| final_time * k as f64 / 4.0).collect());
        if times.is_empty() {
            return Err(Error::validation("density.times", "needs at least one time"));
        }
        for &t in &times {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::validation("density.times", format!("time {t} must be non-negative")));
            }
        }
        let dpoints = d.points.unwrap_or(DEFAULT_DENSITY_POINTS);
        if dpoints < 2 {
            return Err(Error::validation("density.points", "needs at least 2 points"));
        }
        if let Some(h) = d.half_range {
            positive(h, "density.half_range")?;
        }
        d.times = Some(times);
        d.points = Some(dpoints);

        // probes
        let probes = match cfg.probes.as_mut() {
            None => None,
            Some(pc) => Some(resolve_probes(pc, &pre, post.as_ref(), final_time, &units, mass)?),
        };

        // protocol
        let protocol = match cfg.protocol.as_mut() {
            None => None,
            Some(pc) => Some(resolve_protocol(pc, post.as_ref(), final_time, mass)?),
        };

        Ok(Scenario {
            config: cfg,
            units,
            final_time,
            pre,
            post,
            slit_geometry,
            probes,
            protocol,
        })
    }
}

fn resolve_post(q: &mut PostStateConfig, x0: f64, t_f: f64, mass: f64) -> Result<StateSpec> {
    let x_f = finite(require(q.x_f, "post_state.x_f")?, "post_state.x_f")?;
    let delta = positive(require(q.delta, "post_state.delta")?, "post_state.delta")?;
    let toward = |s: Slit| (x_f - s.sign() * x0) / t_f;
    let velocities = match (q.aim, q.velocities.clone()) {
        (Some(_), Some(_)) => {
            return Err(Error::validation("post_state.velocities", "cannot be combined with post_state.aim"))
        }
        (_, Some(v)) => v,
        (aim, None) => match aim.unwrap_or(Aim::Slits) {
            Aim::Slits => vec![toward(Slit::One), toward(Slit::Two)],
            Aim::Slit1 => vec![toward(Slit::One)],
            Aim::Slit2 => vec![toward(Slit::Two)],
            Aim::Vertical => vec![0.0],
        },
    };
    if velocities.is_empty() {
        return Err(Error::validation("post_state.velocities", "needs at least one component"));
    }
    for v in &velocities {
        finite(*v, "post_state.velocities")?;
    }
    let n = velocities.len();
    let weights = q
        .weights
        .clone()
        .unwrap_or_else(|| vec![1.0 / (n as f64).sqrt(); n]);
    if weights.len() != n {
        return Err(Error::validation(
            "post_state.weights",
            format!("has {} entries for {n} components", weights.len()),
        ));
    }
    // the echo spells out the velocities the aim resolved to
    q.aim = None;
    q.velocities = Some(velocities.clone());
    q.weights = Some(weights.clone());
    let collimation: Vec<(C64, f64)> = weights
        .iter()
        .zip(&velocities)
        .map(|(&w, &v)| (C64::new(w, 0.0), mass * v))
        .collect();
    StateSpec::screen_post(x_f, delta, t_f, &collimation).map_err(|e| Error::validation("post_state", e.to_string()))
}

/// Position and time of a named point or crystal.
fn place(
    field: &str,
    x: Option<f64>,
    t: Option<f64>,
    t_frac: Option<f64>,
    along: Option<usize>,
    post: Option<&StateSpec>,
    t_f: f64,
    mass: f64,
) -> Result<(f64, f64)> {
    let t = match (t, t_frac) {
        (Some(_), Some(_)) => return Err(Error::validation(field, "give either t or t_frac, not both")),
        (Some(t), None) => t,
        (None, Some(f)) => f * t_f,
        (None, None) => return Err(Error::validation(field, "needs t or t_frac")),
    };
    if !(t.is_finite() && (0.0..=t_f).contains(&t)) {
        return Err(Error::validation(field, format!("time {t:e} is outside [0, {t_f:e}]")));
    }
    let x = match (x, along) {
        (Some(_), Some(_)) => return Err(Error::validation(field, "give either x or along, not both")),
        (Some(x), None) => finite(x, field)?,
        (None, Some(j)) => {
            let post = post.ok_or_else(|| Error::validation(field, "`along` needs a post_state"))?;
            let comp = j
                .checked_sub(1)
                .and_then(|i| post.components().get(i))
                .ok_or_else(|| Error::validation(field, format!("post_state has no component {j}")))?;
            comp.packet.center - comp.packet.mean_momentum * (t_f - t) / mass
        }
        (None, None) => return Err(Error::validation(field, "needs x or along")),
    };
    Ok((x, t))
}

fn resolve_probes(
    pc: &mut ProbesConfig,
    pre: &StateSpec,
    post: Option<&StateSpec>,
    t_f: f64,
    units: &UnitSystem,
    mass: f64,
) -> Result<ProbeSetup> {
    let gamma = finite(require(pc.gamma, "probes.gamma")?, "probes.gamma")?;
    let profile_text = pc.profile.clone().unwrap_or_else(|| "point".into());
    let profile = parse_profile(&profile_text).map_err(|e| Error::validation("probes.profile", e.to_string()))?;
    let threshold_rel = pc.threshold_rel.unwrap_or(DEFAULT_THRESHOLD_REL);
    if !(threshold_rel > 0.0 && threshold_rel <= 1.0) {
        return Err(Error::validation("probes.threshold_rel", format!("must lie in (0, 1], got {threshold_rel}")));
    }
    let guard = positive(pc.guard.unwrap_or(DEFAULT_FIRST_ORDER_GUARD), "probes.guard")?;

    let mut probes = Vec::new();
    let mut mid_time = 0.5 * t_f;
    if let Some(grid) = &pc.grid {
        if grid.nx == 0 || grid.nt == 0 {
            return Err(Error::validation("probes.grid", "nx and nt must be positive"));
        }
        if !(grid.x_min <= grid.x_max) || !(grid.t_min <= grid.t_max) {
            return Err(Error::validation("probes.grid", "ranges must be ordered"));
        }
        if grid.t_min < 0.0 || grid.t_max > t_f * (1.0 + 1e-12) {
            return Err(Error::validation("probes.grid", format!("times must lie in [0, {t_f:e}]")));
        }
        mid_time = 0.5 * (grid.t_min + grid.t_max);
        probes = probe_lattice(
            (grid.x_min, grid.x_max, grid.nx),
            (grid.t_min, grid.t_max.min(t_f), grid.nt),
            gamma,
            profile,
        );
    }
    for (i, point) in pc.points.iter_mut().enumerate() {
        let field = format!("probes.points[{i}]");
        let (x, t) = place(&field, point.x, point.t, point.t_frac, point.along, post, t_f, mass)?;
        point.x = Some(x);
        point.t = Some(t);
        point.t_frac = None;
        point.along = None;
        let id = probes.len();
        probes.push(Probe::new(id, x, t, gamma, profile).named(point.name.clone()));
    }
    if probes.is_empty() {
        return Err(Error::validation("probes", "needs a grid or at least one point"));
    }
    let linking_radius = positive(
        pc.linking_radius.unwrap_or_else(|| default_linking_radius(pre, mid_time, units)),
        "probes.linking_radius",
    )?;
    pc.gamma = Some(gamma);
    pc.profile = Some(profile_text);
    pc.threshold_rel = Some(threshold_rel);
    pc.linking_radius = Some(linking_radius);
    pc.guard = Some(guard);
    Ok(ProbeSetup {
        probes,
        profile,
        threshold_rel,
        linking_radius,
        guard,
    })
}

fn resolve_protocol(pc: &mut ProtocolConfig, post: Option<&StateSpec>, t_f: f64, mass: f64) -> Result<ProtocolSetup> {
    let mode = pc.mode.unwrap_or_default();
    let profile_text = pc.profile.clone().unwrap_or_else(|| "point".into());
    let profile = parse_profile(&profile_text).map_err(|e| Error::validation("protocol.profile", e.to_string()))?;
    let mut crystals = Vec::with_capacity(pc.crystals.len());
    for (i, c) in pc.crystals.iter_mut().enumerate() {
        let field = format!("protocol.crystals[{i}]");
        let (x, t) = place(&field, c.x, c.t, c.t_frac, c.along, post, t_f, mass)?;
        finite(c.gamma, &format!("{field}.gamma"))?;
        c.x = Some(x);
        c.t = Some(t);
        c.t_frac = None;
        c.along = None;
        let shifted = c.phase_shifted.unwrap_or(false);
        c.phase_shifted = Some(shifted);
        let mut crystal = Crystal::new(c.id, x, t, c.gamma);
        crystal.phase_shifted = shifted;
        crystals.push(crystal);
    }
    pc.mode = Some(mode);
    pc.profile = Some(profile_text);
    ProtocolSetup::new(&crystals, mode, profile)
}

impl Scenario {
    /// The resolved configuration as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(&self.config).expect("scenario config serializes to TOML")
    }

    /// SHA-256 of [`Scenario::echo`], hex encoded.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.echo().as_bytes()))
    }

    pub fn name(&self) -> &str {
        self.config.name.as_deref().unwrap_or("unnamed")
    }

    pub fn require_post(&self) -> Result<&StateSpec> {
        self.post
            .as_ref()
            .ok_or_else(|| Error::validation("post_state", "is required for this command"))
    }

    pub fn require_probes(&self) -> Result<&ProbeSetup> {
        self.probes
            .as_ref()
            .ok_or_else(|| Error::validation("probes", "is required for this command"))
    }

    pub fn require_protocol(&self) -> Result<&ProtocolSetup> {
        self.protocol
            .as_ref()
            .ok_or_else(|| Error::validation("protocol", "is required for this command"))
    }

    /// Replaces the interaction profile of probes and crystals.
    pub fn override_profile(&mut self, profile: InteractionProfile) -> Result<()> {
        profile.validate()?;
        let name = profile_name(&profile);
        if let Some(p) = self.probes.as_mut() {
            p.profile = profile;
            for probe in &mut p.probes {
                probe.profile = profile;
            }
        }
        if let Some(pc) = self.config.probes.as_mut() {
            pc.profile = Some(name.clone());
        }
        if let Some(setup) = self.protocol.as_mut() {
            setup.profile = profile;
        }
        if let Some(pc) = self.config.protocol.as_mut() {
            pc.profile = Some(name);
        }
        Ok(())
    }

    /// Evenly spaced screen positions.
    pub fn screen_grid(&self) -> Vec<f64> {
        let s = &self.config.screen;
        linspace(
            s.center.unwrap_or(0.0),
            s.half_range.unwrap_or(1.0),
            s.points.unwrap_or(DEFAULT_SCREEN_POINTS),
        )
    }

    pub fn density_times(&self) -> Vec<f64> {
        self.config.density.times.clone().unwrap_or_default()
    }

    /// Pre-selected state for a slit configuration; single-slit scenarios
    /// only provide their own configuration.
    pub fn pre_for(&self, slits: SlitConfig) -> Result<StateSpec> {
        self.pre.restrict_config(slits)
    }

    /// Slit configurations available from the pre-selected state.
    pub fn slit_configs(&self) -> Vec<SlitConfig> {
        match self.pre.slit_config() {
            Some(SlitConfig::Both) => SlitConfig::ALL.to_vec(),
            Some(c) => vec![c],
            None => vec![],
        }
    }
}

fn linspace(center: f64, half: f64, n: usize) -> Vec<f64> {
    let lo = center - half;
    let step = 2.0 * half / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}
