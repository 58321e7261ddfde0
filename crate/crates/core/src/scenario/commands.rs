//! One function per CLI subcommand. Each returns the tables it emits.

use crate::probegrid::{evaluate_grid, extract_trajectories, label_by_origin, GridOptions};
use crate::protocol::{
    invert_single_slit, invert_two_slit_rotations, protocol_report, CrystalId, PathTerms, PerCrystal, Scheme,
};
use crate::qcore::{fraunhofer_pattern, fraunhofer_profile, slit_propagator, Slit, UnitSystem};
use crate::{Error, Execution, Result, C64};

use super::config::{profile_name, Scenario};
use super::table::{Cell, EmittedTable};

/// Unit labels for the scenario's unit system.
struct Units {
    length: &'static str,
    time: &'static str,
    inv_length: &'static str,
    momentum: &'static str,
    inv_momentum: &'static str,
}

impl Units {
    fn of(units: &UnitSystem) -> Self {
        if units.dimensionless {
            Self {
                length: "1",
                time: "1",
                inv_length: "1",
                momentum: "1",
                inv_momentum: "1",
            }
        } else {
            Self {
                length: "m",
                time: "s",
                inv_length: "1/m",
                momentum: "kg m/s",
                inv_momentum: "s/(kg m)",
            }
        }
    }
}

fn stamp(table: &mut EmittedTable, scn: &Scenario, command: &str) {
    table.meta("command", command);
    table.meta("scenario", scn.name());
    table.meta("config_hash", scn.config_hash());
    table.meta("units", if scn.units.dimensionless { "dimensionless" } else { "SI" });
}

/// Local maxima of `ys` above `floor * max`, refined by a parabola through
/// the three samples around each one.
pub fn find_peaks(xs: &[f64], ys: &[f64], floor: f64) -> Vec<(f64, f64)> {
    let top = ys.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    for i in 1..ys.len().saturating_sub(1) {
        let (a, b, c) = (ys[i - 1], ys[i], ys[i + 1]);
        if b > a && b >= c && b >= floor * top {
            let curvature = a - 2.0 * b + c;
            let h = xs[i + 1] - xs[i];
            if curvature < 0.0 {
                let shift = 0.5 * h * (a - c) / curvature;
                out.push((xs[i] + shift, b - 0.125 * (a - c) * (a - c) / curvature));
            } else {
                out.push((xs[i], b));
            }
        }
    }
    out
}

/// Maxima ordered by signed index from the central one, the maximum nearest
/// the density centroid.
pub fn indexed_peaks(xs: &[f64], ys: &[f64]) -> Vec<(i64, f64, f64)> {
    let peaks = find_peaks(xs, ys, 1e-3);
    if peaks.is_empty() {
        return Vec::new();
    }
    let mass: f64 = ys.iter().sum();
    let centroid = xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / mass;
    let centre = peaks
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 .0 - centroid).abs().total_cmp(&(b.1 .0 - centroid).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    peaks
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| (i as i64 - centre as i64, x, y))
        .collect()
}

/// Screen pattern at the final time with its far-field approximations and
/// the list of maxima.
pub fn cmd_pattern(scn: &Scenario, exec: Execution) -> Result<Vec<EmittedTable>> {
    let u = Units::of(&scn.units);
    let units = scn.units;
    let t_f = scn.final_time;
    let xs = scn.screen_grid();
    let density: Vec<f64> = exec
        .try_map(&xs, |&x| scn.pre.value(x, t_f, &units).map(|v| v.norm_sqr()))?;
    let top = density.iter().copied().fold(0.0, f64::max);

    let g = &scn.config.geometry;
    let mut columns = vec![("x_f", u.length), ("density", u.inv_length)];
    // Far-field form, scaled to the peak density.
    let far: Option<Vec<f64>> = match (&scn.slit_geometry, g.screen_distance, g.pz_over_m) {
        (Some(geo), _, _) => Some(xs.iter().map(|&x| fraunhofer_pattern(x, geo, &units)).collect()),
        (None, Some(d), Some(v)) => {
            let delta_x = std::f64::consts::SQRT_2 * scn.pre.max_width(t_f, &units);
            let x0 = g.x0.unwrap_or(0.0);
            Some(
                xs.iter()
                    .map(|&x| fraunhofer_profile(x, units.mass * v, x0, d, delta_x, &units))
                    .collect(),
            )
        }
        _ => None,
    };
    if far.is_some() {
        columns.push(("fraunhofer_scaled", u.inv_length));
    }
    let slit_model: Option<Vec<f64>> = match &scn.slit_geometry {
        Some(geo) => {
            let t = geo.final_time();
            Some(exec.try_map(&xs, |&x| {
                let k = slit_propagator(Slit::One, x, t, geo, &units)? + slit_propagator(Slit::Two, x, t, geo, &units)?;
                Ok::<f64, Error>(k.norm_sqr())
            })?)
        }
        None => None,
    };
    if slit_model.is_some() {
        columns.push(("slit_model", u.inv_length));
    }

    let mut table = EmittedTable::new("pattern", &columns);
    stamp(&mut table, scn, "pattern");
    table.meta("t_f", format!("{t_f:e}"));
    for (i, &x) in xs.iter().enumerate() {
        let mut row = vec![Cell::Num(x), Cell::Num(density[i])];
        if let Some(f) = &far {
            row.push(Cell::Num(f[i] * top));
        }
        if let Some(k) = &slit_model {
            row.push(Cell::Num(k[i]));
        }
        table.push(row);
    }

    let peaks = indexed_peaks(&xs, &density);
    let right: Vec<String> = peaks.iter().filter(|p| p.0 > 0).map(|p| format!("{:e}", p.1)).collect();
    table.meta("peaks_right", right.join(";"));
    let mut peak_table = EmittedTable::new("pattern_peaks", &[("order", "1"), ("x_f", u.length), ("density", u.inv_length)]);
    stamp(&mut peak_table, scn, "pattern");
    for (k, x, y) in peaks {
        peak_table.push(vec![Cell::Int(k), Cell::Num(x), Cell::Num(y)]);
    }
    Ok(vec![table, peak_table])
}

/// Sampling interval for a density snapshot at `t`.
fn snapshot_range(scn: &Scenario, t: f64) -> (f64, f64) {
    if let Some(h) = scn.config.density.half_range {
        return (-h, h);
    }
    let units = scn.units;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in scn.pre.components() {
        let x = c.packet.centroid(t, &units);
        let w = c.packet.width_at(t, &units);
        lo = lo.min(x - 8.0 * w);
        hi = hi.max(x + 8.0 * w);
    }
    (lo, hi)
}

/// Density snapshots at the configured times, plus per-time norms and
/// centroid tracks.
pub fn cmd_density(scn: &Scenario, exec: Execution) -> Result<Vec<EmittedTable>> {
    let u = Units::of(&scn.units);
    let units = scn.units;
    let n = scn.config.density.points.unwrap_or(super::config::DEFAULT_DENSITY_POINTS);
    let mut table = EmittedTable::new("density", &[("t", u.time), ("x", u.length), ("density", u.inv_length)]);
    stamp(&mut table, scn, "density");

    let comps = scn.pre.components();
    let mut summary_cols: Vec<(String, &str)> = vec![
        ("t".into(), u.time),
        ("norm_sampled".into(), "1"),
        ("norm_closed_form".into(), "1"),
    ];
    for c in comps {
        let tag = c.slit.map_or_else(|| "packet".to_string(), |s| s.to_string());
        summary_cols.push((format!("centroid_{tag}"), u.length));
        summary_cols.push((format!("argmax_{tag}"), u.length));
    }
    let cols: Vec<(&str, &str)> = summary_cols.iter().map(|(a, b)| (a.as_str(), *b)).collect();
    let mut summary = EmittedTable::new("density_summary", &cols);
    stamp(&mut summary, scn, "density");

    for t in scn.density_times() {
        let (lo, hi) = snapshot_range(scn, t);
        let step = (hi - lo) / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        let rho: Vec<f64> = exec.try_map(&xs, |&x| scn.pre.value(x, t, &units).map(|v| v.norm_sqr()))?;
        for (x, r) in xs.iter().zip(&rho) {
            table.push(vec![Cell::Num(t), Cell::Num(*x), Cell::Num(*r)]);
        }
        let sampled = step * (rho.iter().sum::<f64>() - 0.5 * (rho[0] + rho[n - 1]));
        let mut row = vec![
            Cell::Num(t),
            Cell::Num(sampled),
            Cell::Num(scn.pre.norm_squared(t, &units)?),
        ];
        for c in comps {
            let centre = c.packet.centroid(t, &units);
            let w = c.packet.width_at(t, &units);
            // argmax of this component's own sampled density near its track
            let near: Vec<f64> = xs.iter().copied().filter(|x| (x - centre).abs() <= w).collect();
            let own = exec.try_map(&near, |&x| c.packet.value(x, t, &units).map(|v| v.norm_sqr()))?;
            let arg = near
                .iter()
                .zip(&own)
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map_or(f64::NAN, |(x, _)| *x);
            row.push(Cell::Num(centre));
            row.push(Cell::Num(arg));
        }
        summary.push(row);
    }
    Ok(vec![table, summary])
}

/// Pointer readouts and weak trajectories for each available slit
/// configuration.
pub fn cmd_weak_grid(scn: &Scenario, exec: Execution) -> Result<Vec<EmittedTable>> {
    let u = Units::of(&scn.units);
    let units = scn.units;
    let post = scn.require_post()?;
    let setup = scn.require_probes()?;
    let speed = scn.config.geometry.pz_over_m;
    let probes: Vec<_> = setup
        .probes
        .iter()
        .cloned()
        .map(|p| match speed {
            Some(v) => p.with_z_from_speed(v),
            None => p,
        })
        .collect();
    let options = GridOptions {
        first_order_guard: setup.guard,
        execution: exec,
        ..GridOptions::default()
    };

    let mut readouts = EmittedTable::new(
        "weak_grid",
        &[
            ("slits", ""),
            ("probe_id", "1"),
            ("name", ""),
            ("x", u.length),
            ("z", u.length),
            ("t", u.time),
            ("gamma", u.length),
            ("re_w", u.inv_length),
            ("im_w", u.inv_length),
            ("shift", "1"),
            ("above_threshold", "1"),
        ],
    );
    stamp(&mut readouts, scn, "weak-grid");
    readouts.meta("profile", profile_name(&setup.profile));
    readouts.meta("threshold_rel", setup.threshold_rel);
    readouts.meta("linking_radius", format!("{:e}", setup.linking_radius));
    readouts.meta("first_order_guard", setup.guard);

    let mut trajectories = EmittedTable::new(
        "weak_trajectories",
        &[
            ("slits", ""),
            ("trajectory", "1"),
            ("label", ""),
            ("slice", "1"),
            ("t", u.time),
            ("centroid", u.length),
            ("probe_ids", ""),
        ],
    );
    stamp(&mut trajectories, scn, "weak-grid");

    for cfg in scn.slit_configs() {
        let pre = scn.pre_for(cfg)?;
        let rs = evaluate_grid(&pre, post, &probes, &units, &options)?;
        let max = rs.iter().map(|r| r.shift.abs()).fold(0.0, f64::max);
        for (probe, r) in probes.iter().zip(&rs) {
            let above = max > 0.0 && r.shift != 0.0 && r.shift.abs() >= setup.threshold_rel * max;
            readouts.push(vec![
                cfg.name().into(),
                probe.id.into(),
                probe.name.clone().unwrap_or_default().into(),
                Cell::Num(probe.x),
                Cell::Num(probe.z),
                Cell::Num(probe.time),
                Cell::Num(probe.coupling),
                Cell::Num(r.weak_value.value.re),
                Cell::Num(r.weak_value.value.im),
                Cell::Num(r.shift),
                Cell::Int(above as i64),
            ]);
        }
        let mut trajs = extract_trajectories(&rs, setup.threshold_rel, setup.linking_radius);
        label_by_origin(&mut trajs, &pre, &units);
        readouts.meta(format!("trajectories.{cfg}"), trajs.len());
        for (k, tr) in trajs.iter().enumerate() {
            for (s, slice) in tr.slices.iter().enumerate() {
                let ids: Vec<String> = slice.probe_ids.iter().map(|i| i.to_string()).collect();
                trajectories.push(vec![
                    cfg.name().into(),
                    k.into(),
                    tr.label.clone().unwrap_or_default().into(),
                    s.into(),
                    Cell::Num(slice.time),
                    Cell::Num(slice.centroid),
                    ids.join(";").into(),
                ]);
            }
        }
    }
    Ok(vec![readouts, trajectories])
}

fn long_row(table: &mut EmittedTable, record: &str, scheme: &str, step: Option<u8>, quantity: &str, unit: &str, v: C64) {
    table.push(vec![
        record.into(),
        scheme.into(),
        step.map_or(Cell::Text(String::new()), Cell::from),
        quantity.into(),
        unit.into(),
        Cell::Num(v.re),
        Cell::Num(v.im),
    ]);
}

fn real(v: Option<f64>) -> C64 {
    C64::new(v.unwrap_or(f64::NAN), 0.0)
}

fn path_rows(table: &mut EmittedTable, record: &str, p: &PathTerms, unit: &str) {
    for (q, v) in [("k_B^11", p.b11), ("k_B^12", p.b12), ("k_D^21", p.d21), ("k_D^22", p.d22)] {
        long_row(table, record, "two_slit", None, q, unit, v);
    }
}

fn protocol_table(name: &str, scn: &Scenario) -> EmittedTable {
    let mut t = EmittedTable::new(
        name,
        &[
            ("record", ""),
            ("scheme", ""),
            ("step", "1"),
            ("quantity", ""),
            ("unit", ""),
            ("re", ""),
            ("im", ""),
        ],
    );
    stamp(&mut t, scn, name);
    t
}

/// All eight protocol setups, the recovered weak values, the path split
/// and the slit-closure signature table, in long format.
pub fn cmd_protocol(scn: &Scenario, exec: Execution) -> Result<Vec<EmittedTable>> {
    let u = Units::of(&scn.units);
    let post = scn.require_post()?;
    let setup = scn.require_protocol()?;
    let report = protocol_report(setup, &scn.pre, post, &scn.units, exec)?;

    let mut t = protocol_table("protocol", scn);
    t.meta("mode", format!("{:?}", report.mode).to_lowercase());
    t.meta("profile", profile_name(&setup.profile));
    t.meta(
        "two_slit_guard",
        report.two_slit_guard.clone().unwrap_or_else(|| "ok".into()),
    );
    for (l, g) in report.single_slit_guard.iter().enumerate() {
        t.meta(format!("single_slit_{}_guard", l + 1), g.clone().unwrap_or_else(|| "ok".into()));
    }
    for s in &report.steps {
        t.meta(format!("crystals.{}.{}", s.scheme, s.step), s.crystals.join(" "));
    }

    for s in &report.steps {
        let (pn, mn) = s.normalized_intensities();
        let sc = s.scheme.name();
        for (q, v) in [
            ("I_diag", s.intensity_diag),
            ("I_antidiag", s.intensity_antidiag),
            ("I_diag_normalized", pn),
            ("I_antidiag_normalized", mn),
            ("contrast", s.contrast.contrast),
        ] {
            long_row(&mut t, "step", sc, Some(s.step), q, "1", C64::new(v, 0.0));
        }
        long_row(&mut t, "step", sc, Some(s.step), "zeta", "1", s.zeta);
    }
    for id in CrystalId::ALL {
        long_row(&mut t, "weak_value", "two_slit", None, &format!("k_{id}"), u.momentum, report.weak_values[id]);
    }
    for (l, kappa) in report.kappa.iter().enumerate() {
        let scheme = Scheme::single(if l == 0 { Slit::One } else { Slit::Two });
        for id in CrystalId::ALL {
            long_row(&mut t, "kappa", scheme.name(), None, &format!("kappa_{id}^{}", l + 1), u.momentum, kappa[id]);
        }
    }
    for (l, r) in report.ratios.iter().enumerate() {
        long_row(&mut t, "ratio", "two_slit", None, &format!("R_{}", l + 1), "1", *r);
    }
    for id in CrystalId::ALL {
        long_row(&mut t, "recovered", "two_slit", None, &format!("k_{id}"), u.momentum, real(report.recovered[id]));
    }
    if let Some(k) = report.recovered_kappa {
        for l in 0..2 {
            let scheme = Scheme::single(if l == 0 { Slit::One } else { Slit::Two }).name();
            long_row(&mut t, "recovered_kappa", scheme, None, &format!("kappa_B^{}", l + 1), u.momentum, real(Some(k[l][0])));
            long_row(&mut t, "recovered_kappa", scheme, None, &format!("kappa_D^{}", l + 1), u.momentum, real(Some(k[l][1])));
        }
    }
    path_rows(&mut t, "path", &report.paths, u.momentum);
    path_rows(&mut t, "path_direct", &report.paths_direct, u.momentum);
    if let Some(p) = &report.paths_recovered {
        path_rows(&mut t, "path_recovered", p, u.momentum);
    }
    for row in &report.signature {
        for id in CrystalId::ALL {
            long_row(&mut t, "signature", row.slits.name(), None, &format!("k_{id}"), u.momentum, real(row.recovered[id]));
            long_row(&mut t, "signature_exact", row.slits.name(), None, &format!("k_{id}"), u.momentum, row.exact[id]);
        }
        if let Some(e) = &row.inversion_error {
            t.meta(format!("signature.{}.error", row.slits), e);
        }
    }
    for (i, id) in [CrystalId::A, CrystalId::C].into_iter().enumerate() {
        long_row(&mut t, "reach", "two_slit", None, &format!("far_over_near_{id}"), "1", C64::new(report.single_wave_reach[i], 0.0));
    }
    Ok(vec![t])
}

/// Contrasts read from a table: `(scheme, step, C)`.
pub fn parse_contrasts(text: &str) -> Result<Vec<(Scheme, u8, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse(format!("contrasts: {e}")))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let scheme_col = col("scheme").ok_or_else(|| Error::Parse("contrasts: no `scheme` column".into()))?;
    let step_col = col("step").ok_or_else(|| Error::Parse("contrasts: no `step` column".into()))?;
    // Either a plain `C` column, or the long protocol table.
    let (value_col, filter) = match (col("C"), col("quantity"), col("re")) {
        (Some(c), _, _) => (c, None),
        (None, Some(q), Some(re)) => (re, Some(q)),
        _ => return Err(Error::Parse("contrasts: need a `C` column or `quantity`/`re` columns".into())),
    };
    let mut out = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("contrasts: {e}")))?;
        if let Some(q) = filter {
            if rec.get(q) != Some("contrast") {
                continue;
            }
        }
        let step_text = rec.get(step_col).unwrap_or("");
        let Ok(step) = step_text.parse::<u8>() else {
            // the units row and blank steps carry no contrast
            continue;
        };
        let scheme = match rec.get(scheme_col).unwrap_or("") {
            "two_slit" => Scheme::TwoSlit,
            "single_slit_1" => Scheme::SingleSlit1,
            "single_slit_2" => Scheme::SingleSlit2,
            other => return Err(Error::Parse(format!("contrasts row {}: unknown scheme `{other}`", line + 1))),
        };
        if !scheme.steps().contains(&step) {
            return Err(Error::Parse(format!("contrasts row {}: {scheme} has no step {step}", line + 1)));
        }
        let v = rec.get(value_col).unwrap_or("");
        let c: f64 = v
            .parse()
            .map_err(|_| Error::Parse(format!("contrasts row {}: `{v}` is not a number", line + 1)))?;
        out.push((scheme, step, c));
    }
    Ok(out)
}

/// Inverts externally supplied contrasts with the scenario's couplings.
pub fn cmd_invert(scn: &Scenario, contrasts: &str) -> Result<Vec<EmittedTable>> {
    let u = Units::of(&scn.units);
    let setup = scn.require_protocol()?;
    let gammas: PerCrystal<f64> = setup.couplings();
    let rows = parse_contrasts(contrasts)?;
    let find = |scheme: Scheme, step: u8| rows.iter().find(|r| r.0 == scheme && r.1 == step).map(|r| r.2);

    let mut t = EmittedTable::new(
        "inversion",
        &[
            ("scheme", ""),
            ("quantity", ""),
            ("rotation", "rad"),
            ("value", u.momentum),
            ("gamma", u.inv_momentum),
        ],
    );
    stamp(&mut t, scn, "invert");

    let two: Option<Vec<f64>> = (1..=4).map(|s| find(Scheme::TwoSlit, s)).collect();
    if let Some(c) = two {
        let rot = invert_two_slit_rotations([c[0], c[1], c[2], c[3]])?;
        for id in CrystalId::ALL {
            let g = gammas[id];
            t.push(vec![
                "two_slit".into(),
                format!("k_{id}").into(),
                Cell::Num(rot[id]),
                Cell::Num(if g != 0.0 { rot[id] / g } else { f64::NAN }),
                Cell::Num(g),
            ]);
        }
    }
    let primed: Option<Vec<f64>> = [(Scheme::SingleSlit1, 1), (Scheme::SingleSlit1, 2), (Scheme::SingleSlit2, 3), (Scheme::SingleSlit2, 4)]
        .iter()
        .map(|&(s, k)| find(s, k))
        .collect();
    if let Some(c) = primed {
        let k = invert_single_slit([c[0], c[1], c[2], c[3]], gammas.b, gammas.d)?;
        for l in 0..2 {
            let scheme = if l == 0 { "single_slit_1" } else { "single_slit_2" };
            for (j, (id, g)) in [(CrystalId::B, gammas.b), (CrystalId::D, gammas.d)].into_iter().enumerate() {
                t.push(vec![
                    scheme.into(),
                    format!("kappa_{id}^{}", l + 1).into(),
                    Cell::Num(k[l][j] * g),
                    Cell::Num(k[l][j]),
                    Cell::Num(g),
                ]);
            }
        }
    }
    if t.rows.is_empty() {
        return Err(Error::Parse(
            "contrasts: need C1..C4 of the two-slit scheme or all four single-slit contrasts".into(),
        ));
    }
    Ok(vec![t])
}
