use proptest::prelude::*;
use relosc_core::angle::Angle;
use relosc_core::coefficients::Coefficients;
use relosc_core::experiments::*;
use relosc_core::floquet::monodromy;
use relosc_core::problem::{BoundaryCondition, SLProblem};
use relosc_core::prufer::PruferTrajectory;
use relosc_core::spectra::{count_below, shooting_angle};
use relosc_core::wronskian::{count_from_deltas, delta_angle, flip_count, wronskian_value, Psi, SolutionSpec};
use std::f64::consts::PI;

fn angle() -> impl Strategy<Value = Angle> {
    prop_oneof![
        4 => (-80.0..80.0f64).prop_map(Angle::from_radians),
        1 => (-30i64..30).prop_map(|k| Angle::new(k, 0.0)),
    ]
}

fn potential(len: f64) -> impl Strategy<Value = Coefficients> {
    (1usize..=8)
        .prop_flat_map(move |n| (prop::collection::vec(0.0..len, n - 1), prop::collection::vec(-25.0..25.0f64, n)))
        .prop_map(|(mut cuts, q)| {
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let q = q[..=cuts.len()].to_vec();
            Coefficients::piecewise_potential(cuts, q)
        })
}

fn problem(len: f64) -> impl Strategy<Value = SLProblem> {
    (potential(len), 0.0..PI, 0.0..PI).prop_map(move |(c, a, b)| {
        SLProblem::new(c, 0.0, len, BoundaryCondition::Angle(a), BoundaryCondition::Angle(PI - b)).unwrap()
    })
}

fn minus(p: &SLProblem, lambda: f64) -> PruferTrajectory {
    SolutionSpec::new(p, lambda, Psi::Minus).trajectory(p.a(), p.b(), 1e-10).unwrap()
}

fn plus(p: &SLProblem, lambda: f64) -> PruferTrajectory {
    SolutionSpec::new(p, lambda, Psi::Plus).trajectory(p.a(), p.b(), 1e-10).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn anti_symmetry_identity(dc in angle(), dd in angle()) {
        let sum = count_from_deltas(dc, dd) + count_from_deltas(Angle::ZERO - dc, Angle::ZERO - dd);
        let off = |a: Angle| i64::from(a.residual() != 0.0);
        prop_assert_eq!(sum, off(dd) + off(dc) - 2);
    }

    #[test]
    fn count_is_shift_invariant(dc in angle(), dd in angle(), m in -50i64..50) {
        prop_assert_eq!(
            count_from_deltas(dc, dd),
            count_from_deltas(dc.shift_half_turns(m), dd.shift_half_turns(m))
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_matches_raw_ceil_floor(p0 in problem(2.0), p1 in problem(2.0), l0 in -30.0..30.0f64, l1 in -30.0..30.0f64,
                                    c in 0.0..1.0f64, w in 0.01..1.0f64) {
        let p1 = p0.with_coefficients(p1.coefficients).unwrap();
        let (u, v) = (minus(&p0, l0), plus(&p1, l1));
        let d = (c + w).min(2.0);
        let fc = flip_count(&u, &v, c, d, 1e-7).unwrap();
        let (ac, ad) = (delta_angle(&u, &v, c).unwrap(), delta_angle(&u, &v, d).unwrap());
        prop_assume!(((ac / PI) - (ac / PI).round()).abs() > 1e-9 && ((ad / PI) - (ad / PI).round()).abs() > 1e-9);
        let raw = (ad / PI).ceil() as i64 - (ac / PI).floor() as i64 - 1;
        prop_assert_eq!(fc.count_on_interval, raw);
    }

    #[test]
    fn shifted_trajectory_keeps_count(p in problem(1.5), l0 in -30.0..30.0f64, l1 in -30.0..30.0f64, m in -6i64..6) {
        let (u, v) = (minus(&p, l0), plus(&p, l1));
        let a = flip_count(&u, &v, 0.0, 1.5, 1e-7).unwrap().count_on_interval;
        let b = flip_count(&u.shifted(2 * m), &v, 0.0, 1.5, 1e-7).unwrap().count_on_interval;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn triangle_and_solution_change(seed in any::<u64>()) {
        let t = triple_trial(seed, 0).unwrap();
        let len = t.problems[0].b();
        let u: Vec<_> = t.problems.iter().map(|p| minus(p, t.lambda)).collect();
        let v: Vec<_> = t.problems.iter().map(|p| plus(p, t.lambda)).collect();
        let (c, d) = t.window;
        prop_assert!(triangle_check(&u[0], &u[1], &u[2], c, d).unwrap().pass);
        prop_assert!(triangle_check(&u[0], &v[1], &u[2], 0.0, len).unwrap().pass);
        prop_assert!(solution_change_bound(&u[0], &u[1], &v[0], &v[1], c, d).unwrap() <= 4);
    }

    #[test]
    fn comparison_interlacing(seed in any::<u64>()) {
        let t = triple_trial(seed, 1).unwrap();
        let len = t.problems[0].b();
        let u: Vec<_> = t.problems.iter().map(|p| minus(p, t.lambda)).collect();
        let r = comparison_check(&u[0], &u[1], &u[2], 0.0, len, 1024).unwrap();
        prop_assert!(r.pass, "{:?}", r.violations);
    }

    #[test]
    fn ordered_count_equals_sampled_sign_changes(seed in any::<u64>()) {
        // q0 ≥ q1: every zero of W(u0, u1) is a sign flip
        let t = triple_trial(seed, 2).unwrap();
        let len = t.problems[0].b();
        let (u0, u1) = (minus(&t.problems[0], t.lambda), minus(&t.problems[1], t.lambda));
        let (c, d) = (0.05 * len, 0.95 * len);
        let n = count_from_deltas(
            relosc_core::wronskian::delta(&u0, &u1, c).unwrap(),
            relosc_core::wronskian::delta(&u0, &u1, d).unwrap(),
        );
        let samples = 4000;
        let mut changes = 0;
        let mut prev = wronskian_value(&u0, &u1, c).unwrap();
        for i in 1..=samples {
            let x = c + (d - c) * i as f64 / samples as f64;
            let w = wronskian_value(&u0, &u1, x).unwrap();
            if w != 0.0 && prev != 0.0 && w.signum() != prev.signum() {
                changes += 1;
            }
            if w != 0.0 {
                prev = w;
            }
        }
        prop_assert_eq!(n, changes);
    }

    #[test]
    fn count_below_is_monotone_in_lambda(p in problem(1.0), l in -30.0..30.0f64, dl in 0.0..20.0f64) {
        let a = count_below(&p, l, 1e-10).unwrap().count_strictly_below;
        let b = count_below(&p, l + dl, 1e-10).unwrap().count_strictly_below;
        prop_assert!(a <= b);
    }

    #[test]
    fn theta_minus_increases_with_lambda(p in problem(1.0), l in -30.0..30.0f64, dl in 0.01..20.0f64) {
        let a = shooting_angle(&p, l, 1e-11).unwrap().to_radians();
        let b = shooting_angle(&p, l + dl, 1e-11).unwrap().to_radians();
        prop_assert!(b > a, "{a} {b}");
    }

    #[test]
    fn regular_equality_holds(seed in any::<u64>()) {
        let t = regular_trial(seed, 0).unwrap();
        let r = verify_regular_equality(&t.problem0, &t.problem1, t.lambda0, t.lambda1, &CheckOptions::default()).unwrap();
        prop_assert!(r.pass);
        prop_assert_eq!(r.matched_order, ArgumentOrder::First);
    }

    #[test]
    fn monodromy_is_unimodular(c in potential(1.0), l in -20.0..60.0f64) {
        let cell = Coefficients::Periodic { period: 1.0, cell: Box::new(c) };
        let m = monodromy(&cell, 1.0, l, 1e-12).unwrap();
        prop_assert!((m.det() - 1.0).abs() < 1e-8 * (1.0 + m.d.abs().powi(2)));
    }
}
