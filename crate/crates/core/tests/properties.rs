use std::collections::BTreeSet;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use weaktraj::probegrid::{extract_trajectories, PointerReadout};
use weaktraj::protocol::{
    check_two_slit_guard, forward_contrasts, invert_two_slit_rotations, simulate_step, PerCrystal, ALL_SCHEMES,
};
use weaktraj::qcore::{GaussianPacket, StateSpec, UnitSystem};
use weaktraj::scenario::Cell;
use weaktraj::weakval::{InteractionProfile, Operator, WeakValueRecord};
use weaktraj::{weakval, Execution};

fn rotations(lim: f64) -> impl Strategy<Value = PerCrystal<f64>> {
    (-lim..lim, -lim..lim, -lim..lim, -lim..lim).prop_map(|(a, b, c, d)| PerCrystal { a, b, c, d })
}

fn readouts() -> impl Strategy<Value = Vec<PointerReadout>> {
    prop::collection::vec((-10.0..10.0f64, 0usize..6, -1.0..1.0f64), 1..60).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(id, (x, ti, shift))| PointerReadout {
                probe_id: id,
                shift,
                weak_value: WeakValueRecord {
                    value: C64::new(shift, 0.0),
                    operator: Operator::Projector,
                    probe_position: x,
                    probe_time: ti as f64,
                    slit_config: None,
                },
            })
            .collect()
    })
}

fn members(r: &[PointerReadout], rel: f64, radius: f64) -> BTreeSet<usize> {
    extract_trajectories(r, rel, radius).iter().flat_map(|t| t.probe_ids().collect::<Vec<_>>()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sum_rule(x0 in 1.0..3.0f64, w in 0.3..1.0f64, p1 in -1.0..1.0f64, p2 in -1.0..1.0f64,
                x_f in -2.0..2.0f64, delta in 0.5..1.5f64, t in 0.0..4.0f64) {
        let u = UnitSystem::dimensionless();
        let pre = StateSpec::two_slit(x0, w, p1, p2).unwrap();
        let post = StateSpec::screen_post(x_f, delta, 4.0, &[(C64::new(1.0, 0.0), (x_f - x0) / 4.0)]).unwrap();
        let s = weakval::projector_weak_value_sum_rule(&pre, &post, t, &u).unwrap();
        prop_assert!((s - 1.0).norm() < 1e-6);
    }

    #[test]
    fn packet_norm_is_one(c in -5.0..5.0f64, w in 0.1..3.0f64, p in -3.0..3.0f64, t in 0.0..20.0f64) {
        let u = UnitSystem::dimensionless();
        let pre = StateSpec::new(
            weaktraj::qcore::Role::Pre,
            vec![weaktraj::qcore::Component {
                weight: C64::new(1.0, 0.0),
                packet: GaussianPacket::forward(c, w, p, 0.0).unwrap(),
                slit: None,
            }],
        ).unwrap();
        prop_assert!((pre.norm_squared(t, &u).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contrast_identity(two in rotations(1.5), s1 in rotations(1.5), s2 in rotations(1.5)) {
        let r = |p: PerCrystal<f64>| p.map(|_, x| C64::new(*x, 0.0));
        let c = forward_contrasts(&r(two), &[r(s1), r(s2)]).unwrap();
        prop_assert!((c[0] - (2.0 * two.a).cos()).abs() < 1e-12);
        prop_assert!((c[2] - (2.0 * (two.a + two.c + two.b + two.d)).cos()).abs() < 1e-12);
        prop_assert!((c[5] - (2.0 * (s1.b - s1.d)).cos()).abs() < 1e-12);
        prop_assert!((c[6] - (2.0 * (s2.b + s2.d)).cos()).abs() < 1e-12);
    }

    #[test]
    fn zeta_never_changes_contrasts(rot in rotations(1.0), m in 1e-8..1e8f64, arg in -3.1..3.1f64) {
        let rot = rot.map(|_, x| C64::new(*x, 0.1 * x));
        let none = PerCrystal::<bool>::default();
        for &(scheme, step) in &ALL_SCHEMES {
            let a = simulate_step(scheme, step, &rot, &none, C64::new(1.0, 0.0)).unwrap().1.contrast;
            let b = simulate_step(scheme, step, &rot, &none, C64::from_polar(m, arg)).unwrap().1.contrast;
            prop_assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn guarded_round_trip(rot in rotations(0.1)) {
        prop_assume!(check_two_slit_guard(&rot).is_ok());
        let r = rot.map(|_, x| C64::new(*x, 0.0));
        let c = forward_contrasts(&r, &[r, r]).unwrap();
        let back = invert_two_slit_rotations([c[0], c[1], c[2], c[3]]).unwrap();
        prop_assert!((back.a - rot.a).abs() < 1e-10);
        prop_assert!((back.b - rot.b).abs() < 1e-10);
        prop_assert!((back.c - rot.c).abs() < 1e-10);
        prop_assert!((back.d - rot.d).abs() < 1e-10);
    }

    #[test]
    fn threshold_monotone(r in readouts(), lo in 0.0..1.0f64, hi in 0.0..1.0f64, radius in 0.1..5.0f64) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        prop_assert!(members(&r, hi, radius).is_subset(&members(&r, lo, radius)));
    }

    #[test]
    fn trajectories_run_forward_in_time(r in readouts(), radius in 0.1..5.0f64) {
        for t in extract_trajectories(&r, 0.05, radius) {
            prop_assert!(t.slices.windows(2).all(|w| w[0].time < w[1].time));
        }
    }

    #[test]
    fn map_preserves_order(v in prop::collection::vec(-1e6..1e6f64, 0..200)) {
        let a = Execution::Parallel.map(&v, |x| x * 3.0 + 1.0);
        let b = Execution::Sequential.map(&v, |x| x * 3.0 + 1.0);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn rendered_numbers_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let back: f64 = Cell::Num(x).render().parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn gaussian_profile_tends_to_point(x in -1.0..1.0f64, t in 0.5..3.0f64) {
        let u = UnitSystem::dimensionless();
        let pre = StateSpec::two_slit(1.5, 0.6, 0.3, -0.3).unwrap();
        let post = StateSpec::screen_post(0.0, 0.8, 4.0, &[(C64::new(1.0, 0.0), -1.5 / 4.0)]).unwrap();
        let probe = weakval::ProbePoint::new(x, t);
        let point = weakval::projector_weak_value(&pre, &post, probe, InteractionProfile::Point, &u).unwrap().value;
        let narrow = weakval::projector_weak_value(&pre, &post, probe, InteractionProfile::gaussian(1e-4).unwrap(), &u).unwrap().value;
        prop_assert!((point - narrow).norm() < 1e-5 * point.norm().max(1e-3));
    }
}
