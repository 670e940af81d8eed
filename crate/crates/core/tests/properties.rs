use curvdecay::model::{avr_radii, ball_volume, bishop_gromov_ratio, ricci_decay_check, sphere_area, ModelManifold};
use curvdecay::ode::{fundamental_pair, psi_pair, solve_linear_second_order, solve_shifted, FnCoefficient};
use curvdecay::profiles::{profile_invariants, random_profile, scale_profile, CurvatureProfile, TailModel};
use curvdecay::quadrature::{geometric_grid, integrate, QuadTolerance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn any_profile() -> impl Strategy<Value = CurvatureProfile> {
    any::<u64>().prop_map(|seed| random_profile(&mut ChaCha8Rng::seed_from_u64(seed)))
}

const TOL: f64 = 1e-11;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scaled_profile_mass_is_at_most_twice_b1(p in any_profile(), speed in 0.0f64..=1.0, center in 0.0f64..10.0) {
        let b1 = profile_invariants(&p, 1e3, TailModel::Exact).unwrap().b1;
        let s = scale_profile(&p, speed, center).unwrap();
        let mass = integrate(|t| s.eval(t), 0.0, 1e3, &s.kinks(), QuadTolerance::new(1e-13, 1e-11)).unwrap();
        prop_assert!(mass.value <= 2.0 * b1 + 1e-9, "{} > 2·{}", mass.value, b1);
    }

    #[test]
    fn b1_is_monotone_in_the_profile(b0 in 0.0f64..3.0, d in 0.0f64..1.0) {
        for (lo, hi) in [
            (CurvatureProfile::rational(b0).unwrap(), CurvatureProfile::rational(b0 + d).unwrap()),
            (CurvatureProfile::euler(b0).unwrap(), CurvatureProfile::euler(b0 + d).unwrap()),
            (CurvatureProfile::piecewise_min(b0).unwrap(), CurvatureProfile::piecewise_min(b0 + d).unwrap()),
        ] {
            let a = profile_invariants(&lo, 1e3, TailModel::Exact).unwrap().b1;
            let b = profile_invariants(&hi, 1e3, TailModel::Exact).unwrap().b1;
            prop_assert!(a <= b + 1e-12);
        }
    }

    #[test]
    fn sturm_comparison(p in any_profile(), k in 0.0f64..1.0) {
        let smaller = FnCoefficient::new(|t: f64| k * p.eval(t), p.kinks());
        let (lo, _) = fundamental_pair(&smaller, 20.0, TOL).unwrap();
        let (hi, _) = fundamental_pair(&p, 20.0, TOL).unwrap();
        for t in geometric_grid(1e-3, 20.0, 120) {
            let (a, b) = (lo.value(t), hi.value(t));
            prop_assert!(a <= b * (1.0 + 1e-9), "t = {t}: {a} > {b}");
        }
    }

    #[test]
    fn scaling_identity(p in any_profile(), c in 0.05f64..=1.0, center in 0.0f64..3.0) {
        // c·ψ₁(t/c) against the scaled profile solves the shifted problem.
        let horizon = 10.0;
        let s = scale_profile(&p, c, center).unwrap();
        let (psi1, _) = psi_pair(&s, horizon / c, TOL).unwrap();
        let f = solve_shifted(&p, center.min(horizon), horizon, TOL).unwrap();
        for t in geometric_grid(1e-3, horizon, 60) {
            let lhs = c * psi1.value(t / c);
            let rhs = f.value(t);
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0), "t = {t}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn sub_solutions_have_smaller_log_derivative(p in any_profile(), k in 0.0f64..1.0, g0 in 0.0f64..2.0) {
        let smaller = FnCoefficient::new(|t: f64| k * p.eval(t), p.kinks());
        let phi = solve_linear_second_order(&smaller, 1.0, g0, 15.0, TOL).unwrap();
        let psi = solve_linear_second_order(&p, 1.0, g0, 15.0, TOL).unwrap();
        for t in geometric_grid(1e-3, 15.0, 80) {
            let (a, da) = phi.value_and_deriv(t);
            let (b, db) = psi.value_and_deriv(t);
            prop_assert!(da / a <= db / b + 1e-9, "t = {t}");
        }
    }

    #[test]
    fn bishop_gromov_is_monotone_below_one(b0 in 0.05f64..2.0, k in 0.0f64..=1.0, n in 2usize..4) {
        let p = CurvatureProfile::rational(b0).unwrap();
        let warp = CurvatureProfile::rational(k * b0).unwrap();
        let m = ModelManifold::comparison(n, &warp, 200.0).unwrap();
        prop_assert!(ricci_decay_check(&m, &p, 200.0).unwrap().pass);
        let bg = bishop_gromov_ratio(&m, &p, &avr_radii(200.0)).unwrap();
        prop_assert!(bg.avr.monotone_violation <= 1e-10);
        prop_assert!(bg.avr.theta <= 1.0 + 1e-10);
    }

    #[test]
    fn sphere_area_is_derivative_of_volume(p in any_profile(), r in 0.2f64..5.0) {
        let m = ModelManifold::comparison(3, &p, 6.0).unwrap();
        let h = 1e-4;
        let dv = (ball_volume(&m, r + h).unwrap() - ball_volume(&m, r - h).unwrap()) / (2.0 * h);
        let area = sphere_area(&m, r).unwrap();
        prop_assert!((dv - area).abs() <= 1e-6 * area, "{dv} vs {area}");
    }
}

#[test]
fn flat_solutions_are_exact() {
    let (h1, h2) = fundamental_pair(&CurvatureProfile::zero(), 1e3, TOL).unwrap();
    for t in geometric_grid(1e-3, 1e3, 50) {
        assert!((h1.value(t) - t).abs() <= 1e-12 * t);
        assert!((h2.value(t) - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn rational_b_is_its_parameter() {
    for b0 in [0.0, 0.3, 1.0, 7.5] {
        let inv = profile_invariants(&CurvatureProfile::rational(b0).unwrap(), 1e3, TailModel::Exact).unwrap();
        assert_eq!(inv.b, b0);
    }
}
