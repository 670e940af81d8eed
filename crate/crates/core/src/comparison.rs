//! Comparison lemmas as falsifiable numerical predicates.
//!
//! Every check reports the worst `RHS − LHS` over a sampling grid; a check
//! passes when that slack is no worse than `−tolerance`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelManifold;
use crate::ode::{fundamental_pair, psi_pair, solve_jacobi_matrix, solve_shifted, MatrixCoefficient};
use crate::profiles::{profile_invariants, random_profile, scale_profile, CurvatureProfile, TailModel};
use crate::quadrature::geometric_grid;

/// Solver tolerance used by the lemma checks.
pub const LEMMA_ODE_TOL: f64 = 1e-11;
/// Absolute slack tolerance for non-asymptotic checks.
pub const LEMMA_SLACK_TOL: f64 = 1e-8;
/// Relative tolerance for limit statements checked at a finite horizon.
pub const ASYMPTOTIC_RTOL: f64 = 0.01;
/// Envelope safety factor for the shift-ratio check.
pub const SHIFT_RATIO_SAFETY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    ShiftedBound,
    GrowthExponent,
    ShiftRatio,
    PsiRatio,
    H2h1Limit,
    DetBound,
}

impl LemmaId {
    pub fn as_str(self) -> &'static str {
        match self {
            LemmaId::ShiftedBound => "shifted_bound",
            LemmaId::GrowthExponent => "growth_exponent",
            LemmaId::ShiftRatio => "shift_ratio",
            LemmaId::PsiRatio => "psi_ratio",
            LemmaId::H2h1Limit => "h2h1_limit",
            LemmaId::DetBound => "det_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheckResult {
    pub lemma_id: LemmaId,
    /// Minimum of `RHS − LHS` over the grid.
    pub worst_slack: f64,
    /// Where the minimum occurs.
    pub location: f64,
    /// Left-hand side at `location`.
    pub observed: f64,
    /// Right-hand side at `location`.
    pub bound: f64,
    pub pass: bool,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Running minimum of `bound − observed`.
struct Worst {
    slack: f64,
    location: f64,
    observed: f64,
    bound: f64,
}

impl Worst {
    fn new() -> Self {
        Self { slack: f64::INFINITY, location: 0.0, observed: f64::NAN, bound: f64::NAN }
    }

    fn push(&mut self, t: f64, observed: f64, bound: f64) -> Result<()> {
        let slack = bound - observed;
        if !slack.is_finite() {
            return Err(Error::numerical(format!("non-finite slack at t = {t}")));
        }
        if slack < self.slack {
            *self = Self { slack, location: t, observed, bound };
        }
        Ok(())
    }

    fn finish(self, lemma_id: LemmaId, tolerance: f64) -> LemmaCheckResult {
        LemmaCheckResult {
            lemma_id,
            worst_slack: self.slack,
            location: self.location,
            observed: self.observed,
            bound: self.bound,
            pass: self.slack >= -tolerance,
            tolerance,
            warning: None,
        }
    }
}

/// `(e^{r₀b₁} − 1)/b₁`, with the removable singularity at `b₁ = 0` handled
/// by its series.
pub fn growth_coefficient(b1: f64, r0: f64) -> f64 {
    let x = r0 * b1;
    if b1 < 1e-12 {
        r0 * (1.0 + x / 2.0 + x * x / 6.0)
    } else {
        x.exp_m1() / b1
    }
}

/// Growth exponent `(1 + √(1 + 4B))/2`.
pub fn growth_exponent(b: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * b).sqrt())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Grid on `[0, T]`: the origin, a geometric sweep and the supplied extra points.
fn lemma_grid(horizon: f64, extra: &[f64]) -> Vec<f64> {
    let start = (1e-3f64).min(horizon / 1e3);
    let mut g = vec![0.0];
    g.extend(geometric_grid(start, horizon, 400));
    g.extend(extra.iter().copied().filter(|&t| t > 0.0 && t < horizon));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// `f ≤ k·h₂ + e^{r₀b₁}·h₁` where `f'' = λ(|t − r|)f`, `f(0)=0`, `f'(0)=1`.
pub fn check_shifted_bound(p: &CurvatureProfile, r: f64, r0: f64, horizon: f64) -> Result<LemmaCheckResult> {
    positive("horizon", horizon)?;
    if !(0.0 <= r && r <= r0 && r0.is_finite()) {
        return Err(Error::invalid(format!("shift must satisfy 0 ≤ r ≤ r0, got r = {r}, r0 = {r0}")));
    }
    if r > horizon {
        return Err(Error::invalid(format!("shift r = {r} exceeds the horizon {horizon}")));
    }
    let b1 = profile_invariants(p, horizon, TailModel::Exact)?.b1;
    let k = growth_coefficient(b1, r0);
    let e = (r0 * b1).exp();
    let f = solve_shifted(p, r, horizon, LEMMA_ODE_TOL)?;
    let (h1, h2) = fundamental_pair(p, horizon, LEMMA_ODE_TOL)?;

    let mut extra = vec![r];
    extra.extend(p.kinks().iter().flat_map(|&c| [c, r + c, r - c]));
    let mut worst = Worst::new();
    for t in lemma_grid(horizon, &extra) {
        worst.push(t, f.value(t), k * h2.value(t) + e * h1.value(t))?;
    }
    Ok(worst.finish(LemmaId::ShiftedBound, LEMMA_SLACK_TOL))
}

/// `sup_{[T/2, T]} t·h₁′/h₁` against `(1 + √(1 + 4B))/2`.
pub fn check_growth_exponent(p: &CurvatureProfile, horizon: f64) -> Result<LemmaCheckResult> {
    if !(horizon >= 1e3 && horizon.is_finite()) {
        return Err(Error::invalid(format!("growth check needs a horizon of at least 1e3, got {horizon}")));
    }
    let b = profile_invariants(p, horizon, TailModel::Exact)?.b;
    let target = growth_exponent(b);
    let (h1, _) = fundamental_pair(p, horizon, LEMMA_ODE_TOL)?;
    let log_slope = |t: f64| {
        let (v, d) = h1.value_and_deriv(t);
        t * d / v
    };

    let mut worst = Worst::new();
    for t in geometric_grid(0.5 * horizon, horizon, 200) {
        worst.push(t, log_slope(t), target)?;
    }
    let mut res = worst.finish(LemmaId::GrowthExponent, ASYMPTOTIC_RTOL * target);
    let drift = (log_slope(horizon) - log_slope(0.5 * horizon)).abs() / target;
    if drift > ASYMPTOTIC_RTOL {
        res.warning = Some(format!("t·h₁′/h₁ has not stabilized: relative drift {drift:.3e} over [T/2, T]"));
    }
    Ok(res)
}

/// `|1 − h(t − c)/h(t)| ≤ safety·|c|·C₁/t` for `t ∈ [T/2, T]`, where `C₁`
/// bounds `t·h′/h` there.
pub fn check_shift_ratio(p: &CurvatureProfile, c: f64, horizon: f64) -> Result<LemmaCheckResult> {
    positive("horizon", horizon)?;
    if !(horizon > 10.0 * c.abs()) {
        return Err(Error::invalid(format!("shift ratio needs T > 10|c|, got T = {horizon}, c = {c}")));
    }
    let reach = horizon + c.abs();
    let (h, _) = fundamental_pair(p, reach, LEMMA_ODE_TOL)?;
    let grid = geometric_grid(0.5 * horizon, horizon, 100);
    let c1 = grid
        .iter()
        .map(|&t| {
            let (v, d) = h.value_and_deriv(t);
            t * d / v
        })
        .fold(0.0f64, f64::max);

    let mut worst = Worst::new();
    for &t in &grid {
        let dev = (1.0 - h.value(t - c) / h.value(t)).abs();
        worst.push(t, dev, SHIFT_RATIO_SAFETY * c.abs() * c1 / t)?;
    }
    Ok(worst.finish(LemmaId::ShiftRatio, LEMMA_SLACK_TOL))
}

fn ratio_grid(r: f64) -> Vec<f64> {
    geometric_grid((1e-2 * r).min(1.0).min(0.5 * r), r, 200)
}

/// `h₂/h₁(t) ≤ b₁ + 1/t` on `(0, r]`.
pub fn check_h2h1_limit(p: &CurvatureProfile, r: f64) -> Result<LemmaCheckResult> {
    positive("r", r)?;
    let b1 = profile_invariants(p, r, TailModel::Exact)?.b1;
    let (h1, h2) = fundamental_pair(p, r, LEMMA_ODE_TOL)?;
    let mut worst = Worst::new();
    for t in ratio_grid(r) {
        worst.push(t, h2.value(t) / h1.value(t), b1 + 1.0 / t)?;
    }
    Ok(worst.finish(LemmaId::H2h1Limit, LEMMA_SLACK_TOL))
}

/// `ψ₂/ψ₁(t) ≤ 2b₁·speed + 1/t` on `(0, r]`, with `ψ` solved against the
/// scaled profile; the `h₂/h₁` limit bound is folded into the same result.
pub fn check_psi_ratio(p: &CurvatureProfile, speed: f64, center: f64, r: f64) -> Result<LemmaCheckResult> {
    positive("r", r)?;
    let scaled = scale_profile(p, speed, center)?;
    let b1 = profile_invariants(p, r, TailModel::Exact)?.b1;
    let (psi1, psi2) = psi_pair(&scaled, r, LEMMA_ODE_TOL)?;
    let mut worst = Worst::new();
    for t in ratio_grid(r) {
        worst.push(t, psi2.value(t) / psi1.value(t), 2.0 * b1 * speed + 1.0 / t)?;
    }
    let res = worst.finish(LemmaId::PsiRatio, LEMMA_SLACK_TOL);
    let limit = check_h2h1_limit(p, r)?;
    if limit.worst_slack < res.worst_slack {
        return Ok(LemmaCheckResult {
            lemma_id: LemmaId::PsiRatio,
            warning: Some("h₂/h₁ bound is the binding one".into()),
            ..limit
        });
    }
    Ok(res)
}

/// Curvature operator along a radial geodesic of a model manifold that starts
/// at distance `start` from the base point and moves at `speed`, inwards
/// (through the base point) or outwards: `S = diag(0, v²K, …, v²K)` with
/// `K = −φ″/φ` at the current distance.
#[derive(Debug, Clone)]
pub struct RadialGeodesicCurvature<'a> {
    pub manifold: &'a ModelManifold,
    pub start: f64,
    pub speed: f64,
    pub outward: bool,
}

impl RadialGeodesicCurvature<'_> {
    fn distance(&self, t: f64) -> f64 {
        if self.outward {
            self.start + self.speed * t
        } else {
            (self.start - self.speed * t).abs()
        }
    }
}

impl MatrixCoefficient for RadialGeodesicCurvature<'_> {
    fn dim(&self) -> usize {
        self.manifold.dimension()
    }

    fn eval(&self, t: f64, out: &mut DMatrix<f64>) {
        out.fill(0.0);
        let k = self.speed * self.speed * self.manifold.radial_curvature(self.distance(t));
        for i in 1..out.nrows() {
            out[(i, i)] = k;
        }
    }

    fn kinks(&self) -> Vec<f64> {
        if self.speed == 0.0 {
            return vec![];
        }
        let v = self.speed;
        let mut out = Vec::new();
        if self.outward {
            out.extend(self.manifold.kinks().into_iter().map(|k| (k - self.start) / v));
        } else {
            out.push(self.start / v);
            for k in self.manifold.kinks() {
                out.push((self.start + k) / v);
                out.push((self.start - k) / v);
            }
        }
        out.retain(|&t| t > 0.0);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Initial data for the determinant check: `P(0) = I`, `P′(0) = diag(q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetBoundSetup {
    pub start: f64,
    pub speed: f64,
    /// Diagonal of `Q(0)`; entry 0 is the radial `Q₁₁(0)`.
    pub q0: Vec<f64>,
}

/// `det P(t) ≤ (1 + t·Q₁₁(0))·ψ(t)^{n−1}` on `[0, r]`, where
/// `ψ = ψ₂ + g·ψ₁` and `g` is the mean transverse entry of `Q(0)`.
pub fn check_det_bound(
    m: &ModelManifold,
    p: &CurvatureProfile,
    setup: &DetBoundSetup,
    r: f64,
) -> Result<LemmaCheckResult> {
    positive("r", r)?;
    let n = m.dimension();
    if setup.q0.len() != n {
        return Err(Error::invalid(format!("Q(0) needs {n} diagonal entries, got {}", setup.q0.len())));
    }
    let reach = setup.start.max((setup.start - setup.speed * r).abs());
    if reach > m.r_max() {
        return Err(Error::invalid(format!("geodesic leaves the model's domain (needs radius {reach})")));
    }
    let s = RadialGeodesicCurvature { manifold: m, start: setup.start, speed: setup.speed, outward: false };
    let p0 = DMatrix::identity(n, n);
    let dp0 = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&setup.q0));
    let sol = solve_jacobi_matrix(&s, &p0, &dp0, r, LEMMA_ODE_TOL)?;
    if let Some(tc) = sol.conjugate_time {
        return Err(Error::Precondition(format!("conjugate point: det P vanishes at t = {tc:.6e} < r = {r}")));
    }

    let scaled = scale_profile(p, setup.speed, setup.start)?;
    let (psi1, psi2) = psi_pair(&scaled, r, LEMMA_ODE_TOL)?;
    let q11 = setup.q0[0];
    let g = setup.q0[1..].iter().sum::<f64>() / (n - 1) as f64;
    let mut worst = Worst::new();
    let mut scale = 1.0f64;
    for smp in &sol.samples {
        let t = smp.t;
        let psi = psi2.value(t) + g * psi1.value(t);
        let bound = (1.0 + t * q11) * psi.powi(n as i32 - 1);
        scale = scale.max(bound.abs());
        worst.push(t, smp.det, bound)?;
    }
    // Both sides grow like ψ^{n−1}; the tolerance follows their size.
    Ok(worst.finish(LemmaId::DetBound, LEMMA_SLACK_TOL * scale))
}

/// Parameters for one run of the five lemma checks on a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteParams {
    pub shift_r: f64,
    pub shift_r0: f64,
    pub shift_horizon: f64,
    pub growth_horizon: f64,
    pub ratio_shift: f64,
    pub ratio_horizon: f64,
    pub psi_speed: f64,
    pub psi_center: f64,
    pub psi_r: f64,
    pub det_dim: usize,
    pub det: DetBoundSetup,
    pub det_r: f64,
}

impl Default for LemmaSuiteParams {
    fn default() -> Self {
        Self {
            shift_r: 1.0,
            shift_r0: 1.0,
            shift_horizon: 10.0,
            growth_horizon: 1e4,
            ratio_shift: 1.0,
            ratio_horizon: 1e3,
            psi_speed: 0.5,
            psi_center: 2.0,
            psi_r: 100.0,
            det_dim: 3,
            det: DetBoundSetup { start: 2.0, speed: 1.0, q0: vec![0.0, 0.0, 0.0] },
            det_r: 4.0,
        }
    }
}

impl LemmaSuiteParams {
    /// Draw check parameters suitable for a random profile.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let shift_r0 = rng.gen_range(0.2..3.0);
        let det_dim = rng.gen_range(2..=4);
        Self {
            shift_r: rng.gen_range(0.0..=shift_r0),
            shift_r0,
            shift_horizon: rng.gen_range(5.0..30.0),
            growth_horizon: 1e4,
            ratio_shift: rng.gen_range(-3.0..3.0),
            ratio_horizon: 1e3,
            psi_speed: rng.gen_range(0.0..=1.0),
            psi_center: rng.gen_range(0.0..4.0),
            psi_r: rng.gen_range(1.0..200.0),
            det_dim,
            det: DetBoundSetup {
                start: rng.gen_range(0.0..3.0),
                speed: rng.gen_range(0.05..=1.0),
                q0: (0..det_dim).map(|_| rng.gen_range(0.0..0.5)).collect(),
            },
            det_r: rng.gen_range(1.0..6.0),
        }
    }
}

/// Shifted bound, growth exponent, shift ratio, ψ ratio and determinant
/// bound for one profile. The determinant check runs on the profile's own
/// comparison model.
pub fn run_lemma_suite(p: &CurvatureProfile, params: &LemmaSuiteParams) -> Result<Vec<LemmaCheckResult>> {
    let det_reach = params.det.start.max((params.det.start - params.det.speed * params.det_r).abs());
    let model = ModelManifold::comparison(params.det_dim, p, det_reach + 1.0)?;
    Ok(vec![
        check_shifted_bound(p, params.shift_r, params.shift_r0, params.shift_horizon)?,
        check_growth_exponent(p, params.growth_horizon)?,
        check_shift_ratio(p, params.ratio_shift, params.ratio_horizon)?,
        check_psi_ratio(p, params.psi_speed, params.psi_center, params.psi_r)?,
        check_det_bound(&model, p, &params.det, params.det_r)?,
    ])
}

/// One profile of a randomized batch with its check results.
#[derive(Debug)]
pub struct BatchEntry {
    pub profile: CurvatureProfile,
    pub params: LemmaSuiteParams,
    pub results: Result<Vec<LemmaCheckResult>>,
}

/// Run the lemma suite on `count` random profiles drawn from `seed`.
/// Profiles and parameters are drawn sequentially, so the batch does not
/// depend on how the checks are scheduled.
pub fn random_lemma_batch(seed: u64, count: usize) -> Vec<BatchEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(CurvatureProfile, LemmaSuiteParams)> = (0..count)
        .map(|_| {
            let p = random_profile(&mut rng);
            let params = LemmaSuiteParams::random(&mut rng);
            (p, params)
        })
        .collect();
    draws
        .into_par_iter()
        .map(|(profile, params)| {
            let results = run_lemma_suite(&profile, &params);
            BatchEntry { profile, params, results }
        })
        .collect()
}
