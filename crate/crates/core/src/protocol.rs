//! The four-crystal photonic protocol.
//!
//! Each birefringent crystal rotates the photon polarization by
//! `gamma_a k_a^w`, where `k_a^w` is the momentum weak value at the crystal.
//! A sequence of setups (crystals added one group at a time, with
//! phase-shifters flipping selected rotations) turns the unreadable sum of
//! rotations into contrasts that can be inverted crystal by crystal. Two
//! more setups per slit, with one slit closed, give the single-slit weak
//! values needed to split `k_B` and `k_D` into per-slit path terms.
//!
//! Inversion only sees `cos(2 * total rotation)`, so it recovers rotations
//! when every accumulated total is non-negative and below `pi/2`. A global
//! sign flip of all rotations is invisible in the contrasts.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::Denominator;
use crate::qcore::{Slit, SlitConfig, StateSpec, UnitSystem};
use crate::weakval::{InteractionProfile, ProbePoint, WeakValueEngine, DEFAULT_EPS_DEN};
use crate::{Error, Execution, Result, C64};

/// Tolerance on `|C| <= 1` before a contrast is rejected.
const CONTRAST_SLACK: f64 = 1e-12;

/// Far-slit to near-slit amplitude ratio allowed at crystals A and C.
pub const SINGLE_WAVE_REACH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CrystalId {
    A,
    B,
    C,
    D,
}

impl CrystalId {
    pub const ALL: [CrystalId; 4] = [CrystalId::A, CrystalId::B, CrystalId::C, CrystalId::D];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CrystalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One value per crystal.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerCrystal<T> {
    #[serde(rename = "A")]
    pub a: T,
    #[serde(rename = "B")]
    pub b: T,
    #[serde(rename = "C")]
    pub c: T,
    #[serde(rename = "D")]
    pub d: T,
}

impl<T> PerCrystal<T> {
    pub fn from_fn(mut f: impl FnMut(CrystalId) -> T) -> Self {
        Self {
            a: f(CrystalId::A),
            b: f(CrystalId::B),
            c: f(CrystalId::C),
            d: f(CrystalId::D),
        }
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(CrystalId) -> std::result::Result<T, E>) -> std::result::Result<Self, E> {
        Ok(Self {
            a: f(CrystalId::A)?,
            b: f(CrystalId::B)?,
            c: f(CrystalId::C)?,
            d: f(CrystalId::D)?,
        })
    }

    pub fn map<U>(&self, mut f: impl FnMut(CrystalId, &T) -> U) -> PerCrystal<U> {
        PerCrystal::from_fn(|id| f(id, &self[id]))
    }
}

impl<T> Index<CrystalId> for PerCrystal<T> {
    type Output = T;
    fn index(&self, id: CrystalId) -> &T {
        match id {
            CrystalId::A => &self.a,
            CrystalId::B => &self.b,
            CrystalId::C => &self.c,
            CrystalId::D => &self.d,
        }
    }
}

impl<T> IndexMut<CrystalId> for PerCrystal<T> {
    fn index_mut(&mut self, id: CrystalId) -> &mut T {
        match id {
            CrystalId::A => &mut self.a,
            CrystalId::B => &mut self.b,
            CrystalId::C => &mut self.c,
            CrystalId::D => &mut self.d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crystal {
    pub id: CrystalId,
    pub position: f64,
    pub time: f64,
    /// `gamma_a`, chosen so that `gamma_a k` is an angle.
    pub coupling: f64,
    /// A permanently installed phase-shifter. Step definitions toggle this
    /// flag on top of the configured value.
    #[serde(default)]
    pub phase_shifted: bool,
}

impl Crystal {
    pub fn new(id: CrystalId, position: f64, time: f64, coupling: f64) -> Self {
        Self {
            id,
            position,
            time,
            coupling,
            phase_shifted: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationState {
    pub amp_h: C64,
    pub amp_v: C64,
}

impl PolarizationState {
    /// `|diag> = (|H> + |V>)/sqrt 2`.
    pub fn diagonal() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self { amp_h: s, amp_v: s }
    }

    pub fn scaled(self, z: C64) -> Self {
        Self {
            amp_h: self.amp_h * z,
            amp_v: self.amp_v * z,
        }
    }

    /// `(I_diag, I_antidiag)`, unnormalized.
    pub fn intensities(&self) -> (f64, f64) {
        let plus = (self.amp_h + self.amp_v) * FRAC_1_SQRT_2;
        let minus = (self.amp_h - self.amp_v) * FRAC_1_SQRT_2;
        (plus.norm_sqr(), minus.norm_sqr())
    }

    pub fn contrast(&self) -> Result<f64> {
        let (p, m) = self.intensities();
        let total = p + m;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Singular("polarization state has zero intensity".into()));
        }
        Ok((p - m) / total)
    }
}

/// `H -> e^{-i theta} H`, `V -> e^{+i theta} V`.
pub fn apply_crystal(pol: PolarizationState, rotation: C64) -> PolarizationState {
    let phase = C64::new(0.0, 1.0) * rotation;
    PolarizationState {
        amp_h: pol.amp_h * (-phase).exp(),
        amp_v: pol.amp_v * phase.exp(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    TwoSlit,
    SingleSlit1,
    SingleSlit2,
}

impl Scheme {
    pub fn single(slit: Slit) -> Self {
        match slit {
            Slit::One => Scheme::SingleSlit1,
            Slit::Two => Scheme::SingleSlit2,
        }
    }

    pub fn open_slit(self) -> Option<Slit> {
        match self {
            Scheme::TwoSlit => None,
            Scheme::SingleSlit1 => Some(Slit::One),
            Scheme::SingleSlit2 => Some(Slit::Two),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::TwoSlit => "two_slit",
            Scheme::SingleSlit1 => "single_slit_1",
            Scheme::SingleSlit2 => "single_slit_2",
        }
    }

    /// Valid step numbers for this scheme. Single-slit setups use the
    /// primed numbering, 1 and 2 for slit 1, 3 and 4 for slit 2.
    pub fn steps(self) -> &'static [u8] {
        match self {
            Scheme::TwoSlit => &[1, 2, 3, 4],
            Scheme::SingleSlit1 => &[1, 2],
            Scheme::SingleSlit2 => &[3, 4],
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every (scheme, step) pair of the full protocol, in report order.
pub const ALL_SCHEMES: [(Scheme, u8); 8] = [
    (Scheme::TwoSlit, 1),
    (Scheme::TwoSlit, 2),
    (Scheme::TwoSlit, 3),
    (Scheme::TwoSlit, 4),
    (Scheme::SingleSlit1, 1),
    (Scheme::SingleSlit1, 2),
    (Scheme::SingleSlit2, 3),
    (Scheme::SingleSlit2, 4),
];

/// Crystals in place for a step, with the phase-shifter toggles that step
/// applies.
pub fn placements(scheme: Scheme, step: u8) -> Result<&'static [(CrystalId, bool)]> {
    use CrystalId::*;
    let p: &'static [(CrystalId, bool)] = match (scheme, step) {
        (Scheme::TwoSlit, 1) => &[(A, false)],
        (Scheme::TwoSlit, 2) => &[(A, false), (C, false)],
        (Scheme::TwoSlit, 3) => &[(A, false), (C, false), (B, false), (D, false)],
        (Scheme::TwoSlit, 4) => &[(A, false), (C, false), (B, true), (D, false)],
        (Scheme::SingleSlit1, 1) | (Scheme::SingleSlit2, 3) => &[(B, false), (D, false)],
        (Scheme::SingleSlit1, 2) | (Scheme::SingleSlit2, 4) => &[(B, false), (D, true)],
        _ => return Err(Error::invalid("step", format!("{scheme} has no step {step}"))),
    };
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastSet {
    pub step: u8,
    pub scheme: Scheme,
    #[serde(rename = "C")]
    pub contrast: f64,
}

/// Forward model: the polarization after the crystals of one step, given
/// each crystal's rotation.
pub fn simulate_step(
    scheme: Scheme,
    step: u8,
    rotations: &PerCrystal<C64>,
    phase_shifted: &PerCrystal<bool>,
    zeta: C64,
) -> Result<(PolarizationState, ContrastSet)> {
    let mut pol = PolarizationState::diagonal().scaled(zeta);
    for &(id, toggle) in placements(scheme, step)? {
        let theta = rotations[id];
        let theta = if phase_shifted[id] ^ toggle { -theta } else { theta };
        pol = apply_crystal(pol, theta);
    }
    let contrast = pol.contrast()?;
    Ok((pol, ContrastSet { step, scheme, contrast }))
}

/// Contrasts of all eight setups for given rotations, in [`ALL_SCHEMES`]
/// order. Single-slit rotations are taken from `kappa_rotations[l]`, the
/// rotations seen with only slit `l` open.
pub fn forward_contrasts(two_slit: &PerCrystal<C64>, kappa_rotations: &[PerCrystal<C64>; 2]) -> Result<[f64; 8]> {
    let none = PerCrystal::<bool>::default();
    let mut out = [0.0; 8];
    for (i, &(scheme, step)) in ALL_SCHEMES.iter().enumerate() {
        let rot = match scheme.open_slit() {
            None => two_slit,
            Some(s) => &kappa_rotations[s.index() - 1],
        };
        out[i] = simulate_step(scheme, step, rot, &none, C64::new(1.0, 0.0))?.1.contrast;
    }
    Ok(out)
}

fn half_arccos(label: &str, c: f64) -> Result<f64> {
    if !c.is_finite() || c.abs() > 1.0 + CONTRAST_SLACK {
        return Err(Error::ContrastOutOfRange {
            label: label.to_string(),
            value: c,
        });
    }
    Ok(0.5 * c.clamp(-1.0, 1.0).acos())
}

fn guard_angles(kind: &str, angles: &[(&str, f64)]) -> Result<()> {
    for &(name, a) in angles {
        if !(a.abs() < FRAC_PI_4) {
            return Err(Error::BranchGuard(format!(
                "{kind}: recovered rotation {name} = {a} is outside (-pi/4, pi/4)"
            )));
        }
    }
    Ok(())
}

/// Recovered rotations `gamma_a k_a` for A, C, B, D from the two-slit
/// contrasts `C1..C4`.
pub fn invert_two_slit_rotations(contrasts: [f64; 4]) -> Result<PerCrystal<f64>> {
    let h1 = half_arccos("C1", contrasts[0])?;
    let h2 = half_arccos("C2", contrasts[1])?;
    let h3 = half_arccos("C3", contrasts[2])?;
    let h4 = half_arccos("C4", contrasts[3])?;
    let a = h1;
    let c = h2 - a;
    let b = 0.5 * (h3 - h4);
    let d = 0.5 * (h3 + h4) - a - c;
    guard_angles("two-slit", &[("A", a), ("B", b), ("C", c), ("D", d)])?;
    Ok(PerCrystal { a, b, c, d })
}

/// Weak values `k_A..k_D` from the two-slit contrasts and couplings.
pub fn invert_two_slit(contrasts: [f64; 4], couplings: &PerCrystal<f64>) -> Result<PerCrystal<f64>> {
    let rot = invert_two_slit_rotations(contrasts)?;
    PerCrystal::try_from_fn(|id| divide_coupling(id, rot[id], couplings[id]))
}

fn divide_coupling(id: CrystalId, angle: f64, gamma: f64) -> Result<f64> {
    if gamma == 0.0 || !gamma.is_finite() {
        return Err(Error::Singular(format!("coupling of crystal {id} is {gamma}")));
    }
    Ok(angle / gamma)
}

/// Recovered single-slit rotations `(gamma_B kappa_B^l, gamma_D kappa_D^l)`
/// for `l = 1, 2` from the primed contrasts `C1'..C4'`.
pub fn invert_single_slit_rotations(contrasts: [f64; 4]) -> Result<[(f64, f64); 2]> {
    let mut out = [(0.0, 0.0); 2];
    for (l, pair) in out.iter_mut().enumerate() {
        let hp = half_arccos(&format!("C{}'", 2 * l + 1), contrasts[2 * l])?;
        let hm = half_arccos(&format!("C{}'", 2 * l + 2), contrasts[2 * l + 1])?;
        *pair = (0.5 * (hp + hm), 0.5 * (hp - hm));
        guard_angles(
            &format!("single-slit {}", l + 1),
            &[("B", pair.0), ("D", pair.1)],
        )?;
    }
    Ok(out)
}

/// `[[kappa_B^1, kappa_D^1], [kappa_B^2, kappa_D^2]]`.
pub fn invert_single_slit(contrasts: [f64; 4], gamma_b: f64, gamma_d: f64) -> Result<[[f64; 2]; 2]> {
    let rot = invert_single_slit_rotations(contrasts)?;
    let mut out = [[0.0; 2]; 2];
    for l in 0..2 {
        out[l][0] = divide_coupling(CrystalId::B, rot[l].0, gamma_b)?;
        out[l][1] = divide_coupling(CrystalId::D, rot[l].1, gamma_d)?;
    }
    Ok(out)
}

/// Checks that real rotations are recoverable from contrasts: every
/// accumulated total must lie in `[0, pi/2]` and every rotation in
/// `(-pi/4, pi/4)`.
pub fn check_two_slit_guard(rot: &PerCrystal<f64>) -> Result<()> {
    let s = rot.a + rot.c + rot.d;
    let totals = [
        ("A", rot.a),
        ("A+C", rot.a + rot.c),
        ("A+C+B+D", s + rot.b),
        ("A+C-B+D", s - rot.b),
    ];
    for (name, v) in totals {
        if !(0.0..=FRAC_PI_2).contains(&v) {
            return Err(Error::BranchGuard(format!("two-slit total {name} = {v} is outside [0, pi/2]")));
        }
    }
    guard_angles("two-slit", &[("A", rot.a), ("B", rot.b), ("C", rot.c), ("D", rot.d)])
}

/// Single-slit counterpart of [`check_two_slit_guard`] for `(B, D)`.
pub fn check_single_slit_guard(b: f64, d: f64) -> Result<()> {
    for (name, v) in [("B+D", b + d), ("B-D", b - d)] {
        if !(0.0..=FRAC_PI_2).contains(&v) {
            return Err(Error::BranchGuard(format!("single-slit total {name} = {v} is outside [0, pi/2]")));
        }
    }
    guard_angles("single-slit", &[("B", b), ("D", d)])
}

/// Per-slit path terms of `k_B` and `k_D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathTerms {
    /// `k_B^{11}`: slit 1 reaching B.
    pub b11: C64,
    /// `k_B^{12}`: slit 2 reaching B.
    pub b12: C64,
    /// `k_D^{21}`: slit 1 reaching D.
    pub d21: C64,
    /// `k_D^{22}`: slit 2 reaching D.
    pub d22: C64,
}

impl PathTerms {
    pub fn k_b(&self) -> C64 {
        self.b11 + self.b12
    }

    pub fn k_d(&self) -> C64 {
        self.d21 + self.d22
    }
}

/// Splits `k_B`, `k_D` into path terms `kappa_a^l R_l`.
///
/// `kappa` is `[[kappa_B^1, kappa_B^2], [kappa_D^1, kappa_D^2]]` and
/// `ratios` holds `R_l = <chi|psi^l>/<chi|psi>`.
pub fn parse_paths(kappa: [[C64; 2]; 2], ratios: [C64; 2]) -> Result<PathTerms> {
    if ratios.iter().any(|r| !(r.re.is_finite() && r.im.is_finite())) {
        return Err(Error::VanishingOverlap {
            denominator: Denominator::Full,
            magnitude: 0.0,
            threshold: DEFAULT_EPS_DEN,
        });
    }
    Ok(PathTerms {
        b11: kappa[0][0] * ratios[0],
        b12: kappa[0][1] * ratios[1],
        d21: kappa[1][0] * ratios[0],
        d22: kappa[1][1] * ratios[1],
    })
}

/// Solves `k_B = sum_l kappa_B^l R_l`, `k_D = sum_l kappa_D^l R_l` for the
/// amplitude ratios, as an experiment without access to the overlaps would.
pub fn solve_ratios(k_b: C64, k_d: C64, kappa: [[C64; 2]; 2]) -> Result<[C64; 2]> {
    let det = kappa[0][0] * kappa[1][1] - kappa[0][1] * kappa[1][0];
    let scale = kappa.iter().flatten().map(|k| k.norm()).fold(0.0, f64::max);
    if !(det.norm() > 1e-12 * scale * scale) {
        return Err(Error::Singular("single-slit weak values do not determine the ratios".into()));
    }
    Ok([
        (k_b * kappa[1][1] - k_d * kappa[0][1]) / det,
        (kappa[0][0] * k_d - kappa[1][0] * k_b) / det,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMode {
    /// Real rotations `gamma Re(k)`, the regime the inversion assumes.
    #[default]
    Idealized,
    /// Complex rotations `gamma k`, non-unitary on H and V.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSetup {
    crystals: PerCrystal<Crystal>,
    pub mode: SimulationMode,
    pub profile: InteractionProfile,
    pub eps_den: f64,
}

impl ProtocolSetup {
    /// Needs one crystal per id, with A and C interacting no later than B
    /// and D.
    pub fn new(crystals: &[Crystal], mode: SimulationMode, profile: InteractionProfile) -> Result<Self> {
        let mut slots: [Option<Crystal>; 4] = [None; 4];
        for c in crystals {
            let slot = &mut slots[c.id.index()];
            if slot.is_some() {
                return Err(Error::validation("protocol.crystals", format!("crystal {} given twice", c.id)));
            }
            for (name, v) in [("position", c.position), ("time", c.time), ("coupling", c.coupling)] {
                if !v.is_finite() {
                    return Err(Error::validation("protocol.crystals", format!("crystal {} {name} is {v}", c.id)));
                }
            }
            *slot = Some(*c);
        }
        let crystals = PerCrystal::try_from_fn(|id| {
            slots[id.index()].ok_or_else(|| Error::validation("protocol.crystals", format!("crystal {id} is missing")))
        })?;
        let near = crystals.a.time.max(crystals.c.time);
        let far = crystals.b.time.min(crystals.d.time);
        if near > far {
            return Err(Error::validation(
                "protocol.crystals",
                format!("A and C must interact before B and D (t = {near} > {far})"),
            ));
        }
        profile.validate()?;
        Ok(Self {
            crystals,
            mode,
            profile,
            eps_den: DEFAULT_EPS_DEN,
        })
    }

    pub fn crystal(&self, id: CrystalId) -> &Crystal {
        &self.crystals[id]
    }

    pub fn crystals(&self) -> &PerCrystal<Crystal> {
        &self.crystals
    }

    pub fn couplings(&self) -> PerCrystal<f64> {
        self.crystals.map(|_, c| c.coupling)
    }

    fn phase_shifted(&self) -> PerCrystal<bool> {
        self.crystals.map(|_, c| c.phase_shifted)
    }

    fn engine(&self, units: &UnitSystem) -> WeakValueEngine {
        WeakValueEngine::new(*units).with_eps_den(self.eps_den)
    }

    fn probe(&self, id: CrystalId) -> ProbePoint {
        let c = self.crystal(id);
        ProbePoint::new(c.position, c.time)
    }

    /// Momentum weak value at every crystal.
    pub fn weak_values(&self, pre: &StateSpec, post: &StateSpec, units: &UnitSystem) -> Result<PerCrystal<C64>> {
        let engine = self.engine(units);
        PerCrystal::try_from_fn(|id| engine.momentum(pre, post, self.probe(id), self.profile).map(|w| w.value))
    }

    /// `kappa_a^l` at every crystal for slit `l` open alone.
    pub fn single_slit_values(
        &self,
        pre: &StateSpec,
        post: &StateSpec,
        slit: Slit,
        units: &UnitSystem,
    ) -> Result<PerCrystal<C64>> {
        let engine = self.engine(units);
        PerCrystal::try_from_fn(|id| engine.single_slit(pre, post, slit, self.probe(id), self.profile))
    }

    pub fn rotations(&self, weak_values: &PerCrystal<C64>) -> PerCrystal<C64> {
        weak_values.map(|id, k| {
            let gamma = self.crystal(id).coupling;
            match self.mode {
                SimulationMode::Idealized => C64::new(gamma * k.re, 0.0),
                SimulationMode::Exact => k * gamma,
            }
        })
    }

    /// Far-slit to near-slit amplitude ratio at A (near slit 1) and C (near
    /// slit 2).
    pub fn single_wave_reach(&self, pre: &StateSpec, units: &UnitSystem) -> Result<[f64; 2]> {
        let mut out = [0.0; 2];
        for (i, (id, near)) in [(CrystalId::A, Slit::One), (CrystalId::C, Slit::Two)].into_iter().enumerate() {
            let c = self.crystal(id);
            let own = pre.restrict(near)?.value(c.position, c.time, units)?.norm();
            let other = pre.restrict(near.other())?.value(c.position, c.time, units)?.norm();
            out[i] = if own > 0.0 { other / own } else { f64::INFINITY };
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub scheme: Scheme,
    pub step: u8,
    pub crystals: Vec<String>,
    pub zeta: C64,
    pub state: PolarizationState,
    pub intensity_diag: f64,
    pub intensity_antidiag: f64,
    pub contrast: ContrastSet,
}

impl StepOutcome {
    /// Intensities divided by their sum.
    pub fn normalized_intensities(&self) -> (f64, f64) {
        let s = self.intensity_diag + self.intensity_antidiag;
        (self.intensity_diag / s, self.intensity_antidiag / s)
    }
}

/// Simulates one setup. Single-slit schemes restrict `pre` to their open
/// slit; the two-slit scheme uses `pre` as given, so passing a restricted
/// state models the two-slit setup with a slit closed.
pub fn run_step(
    scheme: Scheme,
    step: u8,
    setup: &ProtocolSetup,
    pre: &StateSpec,
    post: &StateSpec,
    units: &UnitSystem,
) -> Result<StepOutcome> {
    let placed = placements(scheme, step)?;
    let pre = match scheme.open_slit() {
        Some(s) => pre.restrict(s)?,
        None => pre.clone(),
    };
    let engine = setup.engine(units);
    let t_f = post
        .components()
        .iter()
        .map(|c| c.packet.reference_time)
        .fold(f64::NEG_INFINITY, f64::max);
    let den = match scheme.open_slit() {
        Some(s) => Denominator::SingleSlit(s),
        None => Denominator::Full,
    };
    let overlap = engine.checked_overlap(post, &pre, t_f, den)?;
    let zeta = match scheme {
        Scheme::TwoSlit => overlap * FRAC_1_SQRT_2,
        _ => overlap,
    };

    let mut k = PerCrystal::<C64>::default();
    for &(id, _) in placed {
        k[id] = engine.momentum(&pre, post, setup.probe(id), setup.profile)?.value;
    }
    let rot = setup.rotations(&k);
    let (state, contrast) = simulate_step(scheme, step, &rot, &setup.phase_shifted(), zeta)?;
    let (ip, im) = state.intensities();
    Ok(StepOutcome {
        scheme,
        step,
        crystals: placed
            .iter()
            .map(|&(id, t)| {
                if setup.crystal(id).phase_shifted ^ t {
                    format!("-{id}")
                } else {
                    id.to_string()
                }
            })
            .collect(),
        zeta,
        state,
        intensity_diag: ip,
        intensity_antidiag: im,
        contrast,
    })
}

/// Recovered weak values of the four-step protocol run with the given
/// slits open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureRow {
    pub slits: SlitConfig,
    pub contrasts: [f64; 4],
    /// `None` when the inversion failed or the coupling is zero.
    pub recovered: PerCrystal<Option<f64>>,
    pub exact: PerCrystal<C64>,
    pub inversion_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub mode: SimulationMode,
    pub steps: Vec<StepOutcome>,
    /// Two-slit momentum weak values.
    pub weak_values: PerCrystal<C64>,
    /// `kappa[l]` holds the single-slit weak values with slit `l + 1` open.
    pub kappa: [PerCrystal<C64>; 2],
    pub ratios: [C64; 2],
    pub recovered: PerCrystal<Option<f64>>,
    /// `[[kappa_B^1, kappa_D^1], [kappa_B^2, kappa_D^2]]` from the primed
    /// contrasts.
    pub recovered_kappa: Option<[[f64; 2]; 2]>,
    pub two_slit_guard: Option<String>,
    pub single_slit_guard: [Option<String>; 2],
    /// Path terms from the exact single-slit weak values.
    pub paths: PathTerms,
    /// Path terms from the recovered single-slit weak values.
    pub paths_recovered: Option<PathTerms>,
    /// Path terms straight from their definition, summed over the
    /// post-selected components.
    pub paths_direct: PathTerms,
    pub signature: Vec<SignatureRow>,
    pub single_wave_reach: [f64; 2],
}

fn guard_message(r: Result<()>) -> Option<String> {
    r.err().map(|e| e.to_string())
}

fn signature_row(
    slits: SlitConfig,
    setup: &ProtocolSetup,
    pre: &StateSpec,
    post: &StateSpec,
    units: &UnitSystem,
) -> Result<SignatureRow> {
    let pre = pre.restrict_config(slits)?;
    let mut contrasts = [0.0; 4];
    for (i, c) in contrasts.iter_mut().enumerate() {
        *c = run_step(Scheme::TwoSlit, i as u8 + 1, setup, &pre, post, units)?.contrast.contrast;
    }
    let exact = setup.weak_values(&pre, post, units)?;
    let gammas = setup.couplings();
    let (recovered, inversion_error) = match invert_two_slit_rotations(contrasts) {
        Ok(rot) => (rot.map(|id, r| divide_coupling(id, *r, gammas[id]).ok()), None),
        Err(e) => (PerCrystal::default(), Some(e.to_string())),
    };
    Ok(SignatureRow {
        slits,
        contrasts,
        recovered,
        exact,
        inversion_error,
    })
}

/// Runs all eight setups, inverts them, splits `k_B` and `k_D` into path
/// terms and builds the slit-closure signature table.
pub fn protocol_report(
    setup: &ProtocolSetup,
    pre: &StateSpec,
    post: &StateSpec,
    units: &UnitSystem,
    execution: Execution,
) -> Result<ProtocolReport> {
    let steps = execution.try_map(&ALL_SCHEMES, |&(scheme, step)| run_step(scheme, step, setup, pre, post, units))?;
    let contrast = |i: usize| steps[i].contrast.contrast;

    let weak_values = setup.weak_values(pre, post, units)?;
    let kappa = [
        setup.single_slit_values(pre, post, Slit::One, units)?,
        setup.single_slit_values(pre, post, Slit::Two, units)?,
    ];
    let engine = setup.engine(units);
    let t_b = setup.crystal(CrystalId::B).time;
    let ratios = [
        engine.overlap_ratio(pre, post, Slit::One, t_b)?,
        engine.overlap_ratio(pre, post, Slit::Two, t_b)?,
    ];

    let gammas = setup.couplings();
    let two = [contrast(0), contrast(1), contrast(2), contrast(3)];
    let recovered = match invert_two_slit_rotations(two) {
        Ok(rot) => rot.map(|id, r| divide_coupling(id, *r, gammas[id]).ok()),
        Err(_) => PerCrystal::default(),
    };
    let primed = [contrast(4), contrast(5), contrast(6), contrast(7)];
    let recovered_kappa = invert_single_slit(primed, gammas.b, gammas.d)
        .ok()
        .map(|k| [[k[0][0], k[0][1]], [k[1][0], k[1][1]]]);

    let re_rot = |v: &PerCrystal<C64>| v.map(|id, k| gammas[id] * k.re);
    let two_slit_guard = guard_message(check_two_slit_guard(&re_rot(&weak_values)));
    let single_slit_guard = [0, 1].map(|l| {
        let r = re_rot(&kappa[l]);
        guard_message(check_single_slit_guard(r.b, r.d))
    });

    let kappa_bd = [[kappa[0].b, kappa[1].b], [kappa[0].d, kappa[1].d]];
    let paths = parse_paths(kappa_bd, ratios)?;
    let paths_recovered = match recovered_kappa {
        Some(k) => Some(parse_paths(
            [
                [C64::new(k[0][0], 0.0), C64::new(k[1][0], 0.0)],
                [C64::new(k[0][1], 0.0), C64::new(k[1][1], 0.0)],
            ],
            ratios,
        )?),
        None => None,
    };

    let direct = |id: CrystalId, slit: Slit| -> Result<C64> {
        let probe = setup.probe(id);
        (0..post.components().len())
            .map(|j| engine.path_component(pre, post, slit, j, probe, setup.profile))
            .sum()
    };
    let paths_direct = PathTerms {
        b11: direct(CrystalId::B, Slit::One)?,
        b12: direct(CrystalId::B, Slit::Two)?,
        d21: direct(CrystalId::D, Slit::One)?,
        d22: direct(CrystalId::D, Slit::Two)?,
    };

    let signature = execution.try_map(&SlitConfig::ALL, |&cfg| signature_row(cfg, setup, pre, post, units))?;
    let single_wave_reach = setup.single_wave_reach(pre, units)?;

    Ok(ProtocolReport {
        mode: setup.mode,
        steps,
        weak_values,
        kappa,
        ratios,
        recovered,
        recovered_kappa,
        two_slit_guard,
        single_slit_guard,
        paths,
        paths_recovered,
        paths_direct,
        signature,
        single_wave_reach,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(p: PerCrystal<f64>) -> PerCrystal<C64> {
        p.map(|_, v| C64::new(*v, 0.0))
    }

    #[test]
    fn quarter_turn_balances_intensities() {
        let pol = apply_crystal(PolarizationState::diagonal(), C64::new(FRAC_PI_4, 0.0));
        assert!(pol.contrast().unwrap().abs() < 1e-15);
        let same = apply_crystal(PolarizationState::diagonal(), C64::new(0.0, 0.0));
        assert_eq!(same, PolarizationState::diagonal());
    }

    #[test]
    fn step_one_contrast() {
        let rot = real(PerCrystal { a: 0.1, b: 0.0, c: 0.0, d: 0.0 });
        let (_, c) = simulate_step(Scheme::TwoSlit, 1, &rot, &PerCrystal::default(), C64::new(0.3, -2.0)).unwrap();
        assert!((c.contrast - (0.2f64).cos()).abs() < 1e-15);
        let back = invert_two_slit_rotations([c.contrast, c.contrast, c.contrast, c.contrast]).unwrap();
        assert!((back.a - 0.1).abs() < 1e-12);
    }

    #[test]
    fn two_slit_round_trip() {
        let rot = PerCrystal { a: 0.05, b: -0.03, c: 0.08, d: 0.02 };
        check_two_slit_guard(&rot).unwrap();
        let c = forward_contrasts(&real(rot), &[PerCrystal::default(); 2]).unwrap();
        let back = invert_two_slit_rotations([c[0], c[1], c[2], c[3]]).unwrap();
        for id in CrystalId::ALL {
            assert!((back[id] - rot[id]).abs() < 1e-12, "{id}");
        }
    }

    #[test]
    fn unit_contrasts_invert_to_zero() {
        let r = invert_two_slit([1.0; 4], &PerCrystal { a: 2.0, b: 2.0, c: 2.0, d: 2.0 }).unwrap();
        assert_eq!(r, PerCrystal::default());
        assert_eq!(invert_single_slit([1.0; 4], 1.0, 1.0).unwrap(), [[0.0; 2]; 2]);
    }

    #[test]
    fn contrast_outside_unit_interval_is_rejected() {
        assert!(matches!(
            invert_two_slit_rotations([1.5, 1.0, 1.0, 1.0]),
            Err(Error::ContrastOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_coupling_cannot_be_inverted() {
        assert!(matches!(
            invert_two_slit([1.0; 4], &PerCrystal { a: 0.0, b: 1.0, c: 1.0, d: 1.0 }),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn guard_rejects_negative_totals() {
        assert!(check_two_slit_guard(&PerCrystal { a: -0.01, b: 0.0, c: 0.05, d: 0.0 }).is_err());
        assert!(check_single_slit_guard(0.01, 0.02).is_err());
        assert!(check_single_slit_guard(0.02, 0.01).is_ok());
    }

    #[test]
    fn step_four_flips_b() {
        let rot = real(PerCrystal { a: 0.01, b: 0.04, c: 0.02, d: 0.03 });
        let mut flipped = rot;
        flipped.b = -flipped.b;
        let none = PerCrystal::default();
        let one = C64::new(1.0, 0.0);
        let (s4, _) = simulate_step(Scheme::TwoSlit, 4, &rot, &none, one).unwrap();
        let (s3, _) = simulate_step(Scheme::TwoSlit, 3, &flipped, &none, one).unwrap();
        assert_eq!(s3, s4);
    }

    #[test]
    fn ratios_solve_back() {
        let kappa = [
            [C64::new(1.0, 0.2), C64::new(-0.5, 0.1)],
            [C64::new(0.3, 0.0), C64::new(2.0, -0.4)],
        ];
        let r = [C64::new(0.6, 0.1), C64::new(0.4, -0.1)];
        let p = parse_paths(kappa, r).unwrap();
        let back = solve_ratios(p.k_b(), p.k_d(), kappa).unwrap();
        assert!((back[0] - r[0]).norm() < 1e-14 && (back[1] - r[1]).norm() < 1e-14);
    }

    #[test]
    fn bad_steps_are_rejected() {
        assert!(placements(Scheme::TwoSlit, 5).is_err());
        assert!(placements(Scheme::SingleSlit1, 3).is_err());
        assert!(placements(Scheme::SingleSlit2, 4).is_ok());
    }
}
