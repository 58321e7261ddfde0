use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weaktraj::protocol::{
    apply_crystal, forward_contrasts, invert_single_slit, invert_single_slit_rotations, invert_two_slit,
    invert_two_slit_rotations, parse_paths, protocol_report, simulate_step, solve_ratios, Crystal, CrystalId,
    PerCrystal, PolarizationState, ProtocolReport, ProtocolSetup, Scheme, SimulationMode, ALL_SCHEMES,
};
use weaktraj::qcore::SlitConfig;
use weaktraj::scenario::load_scenario;
use weaktraj::weakval::InteractionProfile;
use weaktraj::{Error, Execution};

fn real(rot: PerCrystal<f64>) -> PerCrystal<C64> {
    rot.map(|_, r| C64::new(*r, 0.0))
}

/// Signed sum of rotations each setup accumulates, written out from the
/// step definitions.
fn expected_total(scheme: Scheme, step: u8, two: &PerCrystal<f64>, single: &[PerCrystal<f64>; 2]) -> f64 {
    match (scheme, step) {
        (Scheme::TwoSlit, 1) => two.a,
        (Scheme::TwoSlit, 2) => two.a + two.c,
        (Scheme::TwoSlit, 3) => two.a + two.c + two.b + two.d,
        (Scheme::TwoSlit, 4) => two.a + two.c - two.b + two.d,
        (Scheme::SingleSlit1, 1) => single[0].b + single[0].d,
        (Scheme::SingleSlit1, 2) => single[0].b - single[0].d,
        (Scheme::SingleSlit2, 3) => single[1].b + single[1].d,
        (Scheme::SingleSlit2, 4) => single[1].b - single[1].d,
        other => panic!("no such setup {other:?}"),
    }
}

fn random_rotations(r: &mut ChaCha8Rng, lim: f64) -> PerCrystal<f64> {
    PerCrystal::from_fn(|_| r.gen_range(-lim..lim))
}

#[test]
fn crystal_action_basics() {
    let d = PolarizationState::diagonal();
    assert_eq!(apply_crystal(d, C64::new(0.0, 0.0)), d);
    let quarter = apply_crystal(d, C64::new(std::f64::consts::FRAC_PI_4, 0.0));
    assert!(quarter.contrast().unwrap().abs() < 1e-15);
    let (t1, t2) = (C64::new(0.13, 0.02), C64::new(-0.4, 0.01));
    let twice = apply_crystal(apply_crystal(d, t1), t2);
    let once = apply_crystal(d, t1 + t2);
    assert!((twice.amp_h - once.amp_h).norm() < 1e-15 && (twice.amp_v - once.amp_v).norm() < 1e-15);
}

#[test]
fn contrast_is_cosine_of_twice_the_total_rotation() {
    let mut r = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..1000 {
        let two = random_rotations(&mut r, 1.5);
        let single = [random_rotations(&mut r, 1.5), random_rotations(&mut r, 1.5)];
        let c = forward_contrasts(&real(two), &[real(single[0]), real(single[1])]).unwrap();
        for (i, &(scheme, step)) in ALL_SCHEMES.iter().enumerate() {
            let total = expected_total(scheme, step, &two, &single);
            assert!((c[i] - (2.0 * total).cos()).abs() < 1e-12, "{scheme:?} {step}");
        }
    }
}

#[test]
fn step_four_is_step_three_with_b_negated() {
    let rot = real(PerCrystal { a: 0.1, b: 0.07, c: -0.02, d: 0.04 });
    let none = PerCrystal::<bool>::default();
    let four = simulate_step(Scheme::TwoSlit, 4, &rot, &none, C64::new(1.0, 0.0)).unwrap();
    let mut flipped = rot;
    flipped.b = -flipped.b;
    let three = simulate_step(Scheme::TwoSlit, 3, &flipped, &none, C64::new(1.0, 0.0)).unwrap();
    assert_eq!(four.0, three.0);
}

#[test]
fn contrasts_ignore_the_overall_amplitude() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    let none = PerCrystal::<bool>::default();
    for _ in 0..100 {
        let rot = PerCrystal::from_fn(|_| C64::new(r.gen_range(-0.5..0.5), r.gen_range(-0.05..0.05)));
        let zeta = C64::from_polar(r.gen_range(1e-6..1e3), r.gen_range(-3.0..3.0));
        for &(scheme, step) in &ALL_SCHEMES {
            let a = simulate_step(scheme, step, &rot, &none, C64::new(1.0, 0.0)).unwrap().1.contrast;
            let b = simulate_step(scheme, step, &rot, &none, zeta).unwrap().1.contrast;
            assert!((a - b).abs() < 1e-14);
        }
    }
}

/// Rotations inside the recoverable branch: positive near crystals and
/// far totals that stay non-negative.
fn guarded_rotations(r: &mut ChaCha8Rng) -> PerCrystal<f64> {
    loop {
        let rot = random_rotations(r, 0.1);
        if weaktraj::protocol::check_two_slit_guard(&rot).is_ok() {
            return rot;
        }
    }
}

#[test]
fn two_slit_round_trip() {
    let mut r = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let rot = guarded_rotations(&mut r);
        let gamma = PerCrystal::from_fn(|_| r.gen_range(0.5..2.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 });
        let k = PerCrystal::from_fn(|id| rot[id] / gamma[id]);
        let c = forward_contrasts(&real(rot), &[real(rot), real(rot)]).unwrap();
        let back = invert_two_slit([c[0], c[1], c[2], c[3]], &gamma).unwrap();
        for id in CrystalId::ALL {
            assert!((back[id] - k[id]).abs() < 1e-10 * (1.0 + k[id].abs()), "{id}");
        }
    }
}

#[test]
fn two_slit_round_trip_on_the_listed_angles() {
    let unit = PerCrystal::from_fn(|_| 1.0);
    let rot = PerCrystal { a: 0.05, b: -0.03, c: 0.08, d: 0.02 };
    let c = forward_contrasts(&real(rot), &[real(rot), real(rot)]).unwrap();
    let back = invert_two_slit([c[0], c[1], c[2], c[3]], &unit).unwrap();
    for id in CrystalId::ALL {
        assert!((back[id] - rot[id]).abs() < 1e-10);
    }
    // read in A, C, B, D order the same angles make A+C-B+D negative,
    // which the contrasts cannot tell from its absolute value
    let folded = PerCrystal { a: 0.05, c: -0.03, b: 0.08, d: 0.02 };
    assert!(weaktraj::protocol::check_two_slit_guard(&folded).is_err());
}

#[test]
fn single_slit_round_trip() {
    let mut r = ChaCha8Rng::seed_from_u64(23);
    let mut done = 0;
    while done < 100 {
        let s = [random_rotations(&mut r, 0.1), random_rotations(&mut r, 0.1)];
        if s.iter().any(|x| weaktraj::protocol::check_single_slit_guard(x.b, x.d).is_err()) {
            continue;
        }
        let two = PerCrystal::default();
        let c = forward_contrasts(&real(two), &[real(s[0]), real(s[1])]).unwrap();
        let (gb, gd) = (r.gen_range(0.5..2.0), -r.gen_range(0.5..2.0));
        let back = invert_single_slit([c[4], c[5], c[6], c[7]], gb, gd).unwrap();
        for l in 0..2 {
            assert!((back[l][0] - s[l].b / gb).abs() < 1e-10);
            assert!((back[l][1] - s[l].d / gd).abs() < 1e-10);
        }
        done += 1;
    }
}

#[test]
fn single_slit_sum_and_difference() {
    let (b, d): (f64, f64) = (0.07, 0.02);
    let c = [(2.0 * (b + d)).cos(), (2.0 * (b - d)).cos(), 1.0, 1.0];
    let rot = invert_single_slit_rotations(c).unwrap();
    assert!((rot[0].0 - b).abs() < 1e-12 && (rot[0].1 - d).abs() < 1e-12);
    assert_eq!(rot[1], (0.0, 0.0));
}

#[test]
fn unit_contrasts_give_zero() {
    let rot = invert_two_slit_rotations([1.0; 4]).unwrap();
    assert_eq!(rot, PerCrystal::default());
    assert_eq!(invert_single_slit_rotations([1.0; 4]).unwrap(), [(0.0, 0.0); 2]);
    let a = invert_two_slit_rotations([(0.2f64).cos(), (0.2f64).cos(), (0.2f64).cos(), (0.2f64).cos()]).unwrap();
    assert!((a.a - 0.1).abs() < 1e-12);
}

#[test]
fn inversion_errors() {
    let unit = PerCrystal::from_fn(|_| 1.0);
    assert!(matches!(
        invert_two_slit([1.0 + 1e-6, 1.0, 1.0, 1.0], &unit),
        Err(Error::ContrastOutOfRange { .. })
    ));
    let mut zero = unit;
    zero.c = 0.0;
    assert!(matches!(invert_two_slit([1.0; 4], &zero), Err(Error::Singular(_))));
    // A rotated by 0.9 rad is beyond the branch
    let c1 = (1.8f64).cos();
    assert!(matches!(invert_two_slit_rotations([c1, c1, c1, c1]), Err(Error::BranchGuard(_))));
}

#[test]
fn small_imaginary_parts_barely_move_the_inversion() {
    let mut r = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..100 {
        let re = guarded_rotations(&mut r);
        let rot = re.map(|_, x| C64::new(*x, r.gen_range(-0.01..0.01) * x.abs()));
        let c = forward_contrasts(&rot, &[rot, rot]).unwrap();
        let back = invert_two_slit_rotations([c[0], c[1], c[2], c[3]]).unwrap();
        for id in CrystalId::ALL {
            assert!((back[id] - re[id]).abs() <= 1e-3, "{id}");
        }
    }
}

#[test]
fn path_split_basics() {
    let kappa = [[C64::new(0.3, 0.1), C64::new(-0.2, 0.05)], [C64::new(0.1, -0.1), C64::new(0.4, 0.0)]];
    let ratios = [C64::new(0.6, 0.1), C64::new(0.4, -0.1)];
    let p = parse_paths(kappa, ratios).unwrap();
    let k_b = kappa[0][0] * ratios[0] + kappa[0][1] * ratios[1];
    let k_d = kappa[1][0] * ratios[0] + kappa[1][1] * ratios[1];
    assert!((p.k_b() - k_b).norm() < 1e-12 && (p.k_d() - k_d).norm() < 1e-12);
    let back = solve_ratios(k_b, k_d, kappa).unwrap();
    assert!((back[0] - ratios[0]).norm() < 1e-12 && (back[1] - ratios[1]).norm() < 1e-12);

    let blocked = parse_paths(kappa, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
    assert_eq!(blocked.b12, C64::new(0.0, 0.0));
    assert_eq!(blocked.k_b(), kappa[0][0]);
}

fn default_report(mode: SimulationMode) -> ProtocolReport {
    let scn = load_scenario("protocol_default").unwrap();
    let mut setup = scn.require_protocol().unwrap().clone();
    setup.mode = mode;
    protocol_report(&setup, &scn.pre, scn.require_post().unwrap(), &scn.units, Execution::default()).unwrap()
}

#[test]
fn bundled_protocol_inverts_cleanly() {
    let rep = default_report(SimulationMode::Idealized);
    assert!(rep.two_slit_guard.is_none(), "{:?}", rep.two_slit_guard);
    assert!(rep.single_slit_guard.iter().all(Option::is_none));
    for id in CrystalId::ALL {
        let got = rep.recovered[id].unwrap();
        assert!((got - rep.weak_values[id].re).abs() < 1e-10, "{id}");
    }
    let kappa = rep.recovered_kappa.unwrap();
    for l in 0..2 {
        assert!((kappa[l][0] - rep.kappa[l].b.re).abs() < 1e-10);
        assert!((kappa[l][1] - rep.kappa[l].d.re).abs() < 1e-10);
    }
    assert!(rep.single_wave_reach.iter().all(|&x| x < 1e-3));
}

#[test]
fn path_terms_match_their_definition() {
    let rep = default_report(SimulationMode::Idealized);
    let (p, q) = (rep.paths, rep.paths_direct);
    for (a, b) in [(p.b11, q.b11), (p.b12, q.b12), (p.d21, q.d21), (p.d22, q.d22)] {
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
    }
    assert!((p.k_b() - rep.weak_values.b).norm() < 1e-12);
    assert!((p.k_d() - rep.weak_values.d).norm() < 1e-12);
}

/// B and D sit at mirror positions and the momentum is odd under the
/// reflection, so mirrored path terms come out with opposite signs.
#[test]
fn mirrored_path_terms_are_opposite() {
    let p = default_report(SimulationMode::Idealized).paths;
    assert!((p.b11 + p.d22).norm() < 1e-8);
    assert!((p.b12 + p.d21).norm() < 1e-8);
}

#[test]
fn slit_closure_signature() {
    let rep = default_report(SimulationMode::Idealized);
    let row = |s| rep.signature.iter().find(|r| r.slits == s).unwrap();
    let open = row(SlitConfig::Both);
    let only2 = row(SlitConfig::Slit2);
    let only1 = row(SlitConfig::Slit1);
    assert!(only2.recovered.a.unwrap().abs() < 1e-8);
    assert!(only1.recovered.c.unwrap().abs() < 1e-8);
    assert!((only2.recovered.b.unwrap() - rep.kappa[1].b.re).abs() < 1e-8);
    assert!((only2.recovered.d.unwrap() - rep.kappa[1].d.re).abs() < 1e-8);
    assert!((only1.recovered.b.unwrap() - rep.kappa[0].b.re).abs() < 1e-8);
    assert!((open.recovered.b.unwrap() - only1.recovered.b.unwrap()).abs() > 1e-3);
}

#[test]
fn exact_mode_contrasts_include_the_damping() {
    let rep = default_report(SimulationMode::Exact);
    let scn = load_scenario("protocol_default").unwrap();
    let gamma = scn.require_protocol().unwrap().couplings();
    let theta = gamma.map(|id, g| rep.weak_values[id] * *g);
    let c1 = rep.steps[0].contrast.contrast;
    let expect = (2.0 * theta.a.re).cos() / (2.0 * theta.a.im).cosh();
    assert!((c1 - expect).abs() < 1e-12);
}

#[test]
fn zero_couplings_leave_the_polarization_alone() {
    let scn = load_scenario("protocol_default").unwrap();
    let crystals: Vec<Crystal> = CrystalId::ALL
        .iter()
        .map(|&id| {
            let c = scn.require_protocol().unwrap().crystal(id);
            Crystal::new(id, c.position, c.time, 0.0)
        })
        .collect();
    let setup = ProtocolSetup::new(&crystals, SimulationMode::Idealized, InteractionProfile::Point).unwrap();
    let rep = protocol_report(&setup, &scn.pre, scn.require_post().unwrap(), &scn.units, Execution::Sequential).unwrap();
    assert!(rep.steps.iter().all(|s| s.contrast.contrast == 1.0));
}

#[test]
fn setup_validation() {
    let mk = |id, t| Crystal::new(id, 0.0, t, 1.0);
    let p = InteractionProfile::Point;
    let m = SimulationMode::Idealized;
    let full = [mk(CrystalId::A, 1.0), mk(CrystalId::B, 2.0), mk(CrystalId::C, 1.0), mk(CrystalId::D, 2.0)];
    assert!(ProtocolSetup::new(&full, m, p).is_ok());
    assert!(ProtocolSetup::new(&full[..3], m, p).is_err());
    let late_a = [mk(CrystalId::A, 3.0), mk(CrystalId::B, 2.0), mk(CrystalId::C, 1.0), mk(CrystalId::D, 2.0)];
    assert!(matches!(ProtocolSetup::new(&late_a, m, p), Err(Error::Validation { .. })));
}
