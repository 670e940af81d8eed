use curvdecay::inequality::*;
use curvdecay::model::ModelManifold;
use curvdecay::profiles::CurvatureProfile;
use curvdecay::report::Status;
use proptest::prelude::*;

#[test]
fn isoperimetric_on_less_curved_rational_model() {
    let warp = CurvatureProfile::rational(0.5).unwrap();
    let p = CurvatureProfile::rational(1.0).unwrap();
    let m = ModelManifold::comparison(2, &warp, 1e3).unwrap();
    let rep = isoperimetric_check(&m, &p, 1.0).unwrap();
    assert_eq!(rep.status, Status::Pass, "{rep:?}");
    assert!(rep.get("theta").unwrap() < 1.0);
    assert!(rep.get("margin").unwrap() >= 0.0);
}

#[test]
fn sobolev_on_own_euler_model() {
    let p = CurvatureProfile::euler(2.0).unwrap();
    let m = ModelManifold::comparison(2, &p, 1e3).unwrap();
    let rep = sobolev_check_domain(&m, &p, 1.0, &RadialTestFunction::Constant { value: 1.0 }).unwrap();
    assert_eq!(rep.status, Status::Pass, "{rep:?}");
    assert!((rep.get("theta").unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn ricci_precondition_is_enforced() {
    // Model more curved than the profile allows.
    let m = ModelManifold::comparison(2, &CurvatureProfile::euler(2.0).unwrap(), 50.0).unwrap();
    let p = CurvatureProfile::euler(1.0).unwrap();
    assert!(matches!(isoperimetric_check(&m, &p, 1.0), Err(curvdecay::Error::Precondition(_))));
}

#[test]
fn flat_equality_for_every_radius() {
    for n in [2, 3, 4] {
        let m = ModelManifold::euclidean(n).unwrap();
        for r in [0.1, 1.0, 2.0, 7.5] {
            let rep =
                sobolev_check_domain(&m, &CurvatureProfile::zero(), r, &RadialTestFunction::Constant { value: 3.0 })
                    .unwrap();
            let rel = rep.get("margin").unwrap() / rep.get("rhs").unwrap();
            assert!(rel.abs() < 1e-9, "n={n} r={r} rel={rel}");
        }
    }
}

#[test]
fn submanifold_constant_continuous_at_zero_b1() {
    let base = InequalityParams { n: 3, p: 2, theta: 1.0, b: 0.0, b1: 0.0, r0: 1.0 };
    let a = sobolev_constant_submanifold(&base).unwrap();
    let b = sobolev_constant_submanifold(&InequalityParams { b1: 1e-13, ..base }).unwrap();
    let c = sobolev_constant_submanifold(&InequalityParams { b1: 2e-12, ..base }).unwrap();
    assert!((a - b).abs() < 1e-9 && (a - c).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sobolev_sides_are_homogeneous(s in 0.1f64..10.0, amp in 0.0f64..2.0, width in 0.2f64..2.0) {
        let m = ModelManifold::euclidean(3).unwrap();
        let zero = CurvatureProfile::zero();
        let f = RadialTestFunction::Bump { base: 1.0, amplitude: amp, width };
        let a = sobolev_check_domain(&m, &zero, 1.5, &f).unwrap();
        let b = sobolev_check_domain(&m, &zero, 1.5, &f.scaled(s)).unwrap();
        for key in ["lhs", "rhs", "margin"] {
            let (x, y) = (a.get(key).unwrap(), b.get(key).unwrap());
            prop_assert!((y - s * x).abs() <= 1e-10 * (1.0 + s * x.abs()), "{key}: {y} vs {s}·{x}");
        }
    }

    #[test]
    fn domain_constant_monotone(
        n in 2usize..6,
        theta in 0.05f64..1.0,
        b in 0.0f64..5.0,
        b1 in 0.0f64..3.0,
        r0 in 0.0f64..3.0,
        d in 1e-3f64..0.5,
    ) {
        let q = InequalityParams { n, p: 2, theta, b, b1, r0 };
        let c = sobolev_constant_domain(&q).unwrap();
        let with = |q2: InequalityParams| sobolev_constant_domain(&q2).unwrap();
        let (cb, cb1, cr0) = (with(InequalityParams { b: b + d, ..q }), with(InequalityParams { b1: b1 + d, ..q }), with(InequalityParams { r0: r0 + d, ..q }));
        prop_assert!(cb <= c && cb1 <= c && cr0 <= c);
        let up = (theta + d).min(1.0);
        if up > theta {
            let ct = with(InequalityParams { theta: up, ..q });
            prop_assert!(ct > c);
        }
    }
}
