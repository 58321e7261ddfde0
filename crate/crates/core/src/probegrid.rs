//! Grids of weakly coupled pointers and the weak trajectories they trace.
//!
//! Pointers are modelled to first order only: each probe's mean shift is
//! `gamma_b Re(w)` with `w` the projector weak value at its position and
//! firing time. Probes do not back-react on the state and products of two
//! couplings are dropped.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::qcore::{Slit, StateSpec, UnitSystem};
use crate::weakval::{InteractionProfile, Operator, ProbePoint, WeakValueEngine, WeakValueRecord, DEFAULT_EPS_DEN};
use crate::{Error, Execution, Result};

pub const DEFAULT_FIRST_ORDER_GUARD: f64 = 0.3;
pub const DEFAULT_THRESHOLD_REL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub x: f64,
    /// Longitudinal position, for display only.
    pub z: f64,
    pub time: f64,
    pub coupling: f64,
    pub profile: InteractionProfile,
}

impl Probe {
    pub fn new(id: usize, x: f64, time: f64, coupling: f64, profile: InteractionProfile) -> Self {
        Self {
            id,
            name: None,
            x,
            z: 0.0,
            time,
            coupling,
            profile,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Places the probe at `z = v_z t`, the plane-wave motion along the
    /// optical axis.
    pub fn with_z_from_speed(mut self, pz_over_m: f64) -> Self {
        self.z = pz_over_m * self.time;
        self
    }

    pub fn point(&self) -> ProbePoint {
        ProbePoint::new(self.x, self.time)
    }
}

/// Rectangular `x` by `t` lattice of identical probes, ids assigned
/// row-major in time.
pub fn probe_lattice(
    x_range: (f64, f64, usize),
    t_range: (f64, f64, usize),
    coupling: f64,
    profile: InteractionProfile,
) -> Vec<Probe> {
    let axis = |(lo, hi, n): (f64, f64, usize)| -> Vec<f64> {
        match n {
            0 => vec![],
            1 => vec![lo],
            // the last node is pinned so the end point is hit exactly
            _ => (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
                .collect(),
        }
    };
    let xs = axis(x_range);
    let ts = axis(t_range);
    let mut out = Vec::with_capacity(xs.len() * ts.len());
    for &t in &ts {
        for &x in &xs {
            out.push(Probe::new(out.len(), x, t, coupling, profile));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerReadout {
    pub probe_id: usize,
    /// First-order mean shift `gamma Re(w)`, in pointer units.
    pub shift: f64,
    pub weak_value: WeakValueRecord,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Upper bound on `gamma |w|` for the first-order model.
    pub first_order_guard: f64,
    pub eps_den: f64,
    pub operator: Operator,
    pub execution: Execution,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            first_order_guard: DEFAULT_FIRST_ORDER_GUARD,
            eps_den: DEFAULT_EPS_DEN,
            operator: Operator::Projector,
            execution: Execution::default(),
        }
    }
}

/// One readout per probe, in probe order.
pub fn evaluate_grid(
    pre: &StateSpec,
    post: &StateSpec,
    probes: &[Probe],
    units: &UnitSystem,
    options: &GridOptions,
) -> Result<Vec<PointerReadout>> {
    let engine = WeakValueEngine::new(*units).with_eps_den(options.eps_den);
    options.execution.try_map(probes, |probe| {
        let w = engine.weak_value(options.operator, pre, post, probe.point(), probe.profile)?;
        let product = probe.coupling.abs() * w.value.norm();
        if !(product < options.first_order_guard) && probe.coupling != 0.0 {
            return Err(Error::FirstOrderGuard {
                probe_id: probe.id,
                product,
                limit: options.first_order_guard,
            });
        }
        Ok(PointerReadout {
            probe_id: probe.id,
            shift: probe.coupling * w.value.re,
            weak_value: w,
        })
    })
}

/// Post-selections `(x_f, p')` that catch a narrow pre-selected component:
/// the end point of each component's classical line at `t_f`, collimated
/// along its momentum.
pub fn admissible_postselections(pre: &StateSpec, t_f: f64, units: &UnitSystem) -> Vec<(f64, f64)> {
    pre.components()
        .iter()
        .map(|c| (c.packet.centroid(t_f, units), c.packet.mean_momentum))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySlice {
    pub time: f64,
    pub probe_ids: Vec<usize>,
    /// Mean position of the member probes.
    pub centroid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakTrajectory {
    pub slices: Vec<TrajectorySlice>,
    pub label: Option<String>,
}

impl WeakTrajectory {
    pub fn probe_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.slices.iter().flat_map(|s| s.probe_ids.iter().copied())
    }

    pub fn start_time(&self) -> f64 {
        self.slices.first().map_or(f64::NAN, |s| s.time)
    }

    pub fn end(&self) -> Option<&TrajectorySlice> {
        self.slices.last()
    }
}

#[derive(Debug, Clone)]
struct Cluster {
    time: f64,
    ids: Vec<usize>,
    xs: Vec<f64>,
}

impl Cluster {
    fn linked(&self, other: &Cluster, radius: f64) -> bool {
        self.xs
            .iter()
            .any(|a| other.xs.iter().any(|b| (a - b).abs() <= radius))
    }

    fn slice(&self) -> TrajectorySlice {
        TrajectorySlice {
            time: self.time,
            probe_ids: self.ids.clone(),
            centroid: self.xs.iter().sum::<f64>() / self.xs.len() as f64,
        }
    }
}

/// Links above-threshold probes into weak trajectories.
///
/// Probes with `|shift| >= threshold_rel * max|shift|` are grouped per time
/// slice into clusters (neighbours closer than `linking_radius`), then
/// chained across consecutive slices of the grid whenever two clusters hold
/// probes within `linking_radius` of each other. A cluster reached from two
/// chains extends both, and a chain reaching two clusters branches, so
/// superposed trajectories come out as separate chains sharing members.
pub fn extract_trajectories(readouts: &[PointerReadout], threshold_rel: f64, linking_radius: f64) -> Vec<WeakTrajectory> {
    let max = readouts.iter().map(|r| r.shift.abs()).fold(0.0, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let cut = threshold_rel * max;

    let mut times: Vec<f64> = readouts.iter().map(|r| r.weak_value.probe_time).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut slices: Vec<Vec<Cluster>> = Vec::with_capacity(times.len());
    for &t in &times {
        let mut members: Vec<(f64, usize)> = readouts
            .iter()
            .filter(|r| r.weak_value.probe_time == t && r.shift.abs() >= cut && r.shift != 0.0)
            .map(|r| (r.weak_value.probe_position, r.probe_id))
            .collect();
        members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut clusters: Vec<Cluster> = Vec::new();
        for (x, id) in members {
            match clusters.last_mut() {
                Some(c) if x - c.xs.last().copied().unwrap_or(x) <= linking_radius => {
                    c.xs.push(x);
                    c.ids.push(id);
                }
                _ => clusters.push(Cluster {
                    time: t,
                    ids: vec![id],
                    xs: vec![x],
                }),
            }
        }
        slices.push(clusters);
    }

    // Chains hold (slice index, cluster index) pairs.
    let mut finished: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut active: Vec<Vec<(usize, usize)>> = Vec::new();
    for (s, clusters) in slices.iter().enumerate() {
        let mut next: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut reached = vec![false; clusters.len()];
        for chain in active.drain(..) {
            let &(ps, pc) = chain.last().expect("chains are never empty");
            let tail = &slices[ps][pc];
            let links: Vec<usize> = (0..clusters.len())
                .filter(|&c| tail.linked(&clusters[c], linking_radius))
                .collect();
            if links.is_empty() {
                finished.push(chain);
                continue;
            }
            for c in links {
                reached[c] = true;
                let mut extended = chain.clone();
                extended.push((s, c));
                next.push(extended);
            }
        }
        for (c, hit) in reached.iter().enumerate() {
            if !hit {
                next.push(vec![(s, c)]);
            }
        }
        active = next;
    }
    finished.extend(active);

    let mut out: Vec<WeakTrajectory> = finished
        .into_iter()
        .map(|chain| WeakTrajectory {
            slices: chain.iter().map(|&(s, c)| slices[s][c].slice()).collect(),
            label: None,
        })
        .collect();
    out.sort_by(|a, b| {
        let key = |t: &WeakTrajectory| (t.start_time(), t.slices.first().map_or(0.0, |s| s.centroid));
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(Ordering::Equal)
    });
    out
}

/// Labels each trajectory with the slit whose classical line passes
/// closest to its first slice, when that distance is within three local
/// packet widths.
pub fn label_by_origin(trajectories: &mut [WeakTrajectory], pre: &StateSpec, units: &UnitSystem) {
    for traj in trajectories.iter_mut() {
        let Some(first) = traj.slices.first() else { continue };
        let best = pre
            .components()
            .iter()
            .filter_map(|c| {
                let slit: Slit = c.slit?;
                let d = (c.packet.centroid(first.time, units) - first.centroid).abs();
                let w = c.packet.width_at(first.time, units);
                (d <= 3.0 * w).then_some((d / w, slit))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0));
        traj.label = best.map(|(_, s)| s.to_string());
    }
}

/// Default linking radius: twice the widest pre-selected component at `t`.
pub fn default_linking_radius(pre: &StateSpec, t: f64, units: &UnitSystem) -> f64 {
    2.0 * pre.max_width(t, units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn readout(id: usize, x: f64, t: f64, shift: f64) -> PointerReadout {
        PointerReadout {
            probe_id: id,
            shift,
            weak_value: WeakValueRecord {
                value: C64::new(shift, 0.0),
                operator: Operator::Projector,
                probe_position: x,
                probe_time: t,
                slit_config: None,
            },
        }
    }

    #[test]
    fn all_zero_shifts_give_no_trajectories() {
        let rs: Vec<_> = (0..5).map(|i| readout(i, i as f64, 0.0, 0.0)).collect();
        assert!(extract_trajectories(&rs, 0.05, 1.0).is_empty());
        assert!(extract_trajectories(&[], 0.05, 1.0).is_empty());
    }

    #[test]
    fn two_lines_merging_give_two_chains() {
        // lines x = +-(3 - t) meeting at x = 0 when t = 3
        let mut rs = Vec::new();
        let mut id = 0;
        for k in 0..4 {
            let t = k as f64;
            for i in -6..=6 {
                let x = i as f64 * 0.5;
                let on = (x - (3.0 - t)).abs() < 1e-9 || (x + (3.0 - t)).abs() < 1e-9;
                rs.push(readout(id, x, t, if on { 1.0 } else { 1e-4 }));
                id += 1;
            }
        }
        let trajs = extract_trajectories(&rs, 0.05, 1.1);
        assert_eq!(trajs.len(), 2, "{trajs:#?}");
        for tr in &trajs {
            assert_eq!(tr.slices.len(), 4);
            assert!(tr.slices.windows(2).all(|w| w[0].time < w[1].time));
            assert_eq!(tr.end().unwrap().centroid, 0.0);
        }
    }

    #[test]
    fn gap_in_time_ends_a_chain() {
        let rs = vec![
            readout(0, 0.0, 0.0, 1.0),
            readout(1, 0.0, 1.0, 0.0),
            readout(2, 0.0, 2.0, 1.0),
        ];
        let trajs = extract_trajectories(&rs, 0.05, 10.0);
        assert_eq!(trajs.len(), 2);
    }

    #[test]
    fn lattice_layout() {
        let ps = probe_lattice((-1.0, 1.0, 3), (0.0, 2.0, 2), 0.1, InteractionProfile::Point);
        assert_eq!(ps.len(), 6);
        assert_eq!(ps[4].id, 4);
        assert_eq!((ps[4].x, ps[4].time), (0.0, 2.0));
        assert_eq!(ps[0].clone().with_z_from_speed(3.0).z, 0.0);
        assert_eq!(ps[5].clone().with_z_from_speed(3.0).z, 6.0);
    }
}
