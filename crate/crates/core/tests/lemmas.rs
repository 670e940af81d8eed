use curvdecay::comparison::*;
use curvdecay::model::ModelManifold;
use curvdecay::profiles::CurvatureProfile;

#[test]
fn rational_growth_exponent_near_golden_ratio() {
    let p = CurvatureProfile::rational(1.0).unwrap();
    let res = check_growth_exponent(&p, 1e4).unwrap();
    let golden = 0.5 * (1.0 + 5f64.sqrt());
    assert!(res.pass);
    assert!((res.observed - golden).abs() < 0.01 * golden, "{}", res.observed);
}

#[test]
fn rational_shift_ratio_negative_shift() {
    let p = CurvatureProfile::rational(1.0).unwrap();
    let res = check_shift_ratio(&p, -2.0, 1e3).unwrap();
    assert!(res.pass);
    assert!(res.observed < 1e-2);
}

#[test]
fn euler_h2_over_h1_below_b1() {
    let p = CurvatureProfile::euler(2.0).unwrap();
    let res = check_psi_ratio(&p, 1.0, 0.0, 1e3).unwrap();
    assert!(res.pass, "{res:?}");
    let limit = check_h2h1_limit(&p, 1e3).unwrap();
    assert!(limit.pass);
}

#[test]
fn rational_psi_ratio_off_center() {
    let p = CurvatureProfile::rational(1.0).unwrap();
    assert!(check_psi_ratio(&p, 0.5, 2.0, 100.0).unwrap().pass);
}

#[test]
fn det_bound_curved_model_has_room() {
    // Model curvature −0.5/(1+r)² sits strictly above −λ = −1/(1+r)².
    let p = CurvatureProfile::euler(1.0).unwrap();
    let m = ModelManifold::comparison(3, &CurvatureProfile::euler(0.5).unwrap(), 10.0).unwrap();
    let setup = DetBoundSetup { start: 3.0, speed: 1.0, q0: vec![0.0, 0.0, 0.0] };
    let res = check_det_bound(&m, &p, &setup, 5.0).unwrap();
    assert!(res.pass && res.worst_slack >= 0.0, "{res:?}");
    assert!(res.bound > res.observed || res.location == 0.0);
}

#[test]
fn det_bound_on_own_comparison_model_is_tight() {
    let p = CurvatureProfile::euler(1.0).unwrap();
    let m = ModelManifold::comparison(3, &p, 10.0).unwrap();
    let setup = DetBoundSetup { start: 3.0, speed: 1.0, q0: vec![0.0, 0.0, 0.0] };
    let res = check_det_bound(&m, &p, &setup, 5.0).unwrap();
    assert!(res.pass);
    assert!(res.worst_slack.abs() < 1e-8 * res.bound.max(1.0), "{res:?}");
}

#[test]
fn det_bound_flat_random_diagonal_two_dims() {
    let m = ModelManifold::euclidean(2).unwrap();
    for q in [-0.2, 0.0, 0.13, 0.5] {
        let setup = DetBoundSetup { start: 1.0, speed: 0.5, q0: vec![q, 0.3] };
        let res = check_det_bound(&m, &CurvatureProfile::zero(), &setup, 3.0).unwrap();
        assert!(res.worst_slack.abs() < 1e-9, "{res:?}");
    }
}

#[test]
fn random_batch_passes_and_is_reproducible() {
    let a = random_lemma_batch(7, 20);
    let b = random_lemma_batch(7, 20);
    for (x, y) in a.iter().zip(&b) {
        let rx = x.results.as_ref().unwrap();
        let ry = y.results.as_ref().unwrap();
        assert_eq!(rx.len(), 5);
        for (u, v) in rx.iter().zip(ry) {
            assert!(u.pass, "{:?} {:?} {u:?}", x.profile, x.params);
            assert_eq!(u.worst_slack.to_bits(), v.worst_slack.to_bits());
        }
    }
}
