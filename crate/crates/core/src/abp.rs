//! Radially symmetric reduction of the transport (ABP) argument on a
//! geodesic ball about the base point of a model manifold.
//!
//! Pipeline: rescale the test function, solve the radial Neumann problem,
//! transport the ball along `exp(r·Du)`, test the contact condition, check
//! that the images cover the target annulus, and compare the transport
//! Jacobian with its comparison bounds and their integrals.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::comparison::{growth_coefficient, RadialGeodesicCurvature};
use crate::error::{Error, Result};
use crate::inequality::RadialTestFunction;
use crate::model::{unit_ball_volume, ModelManifold, Warp};
use crate::ode::{fundamental_pair, psi_pair, solve_jacobi_matrix_sampled};
use crate::profiles::{profile_invariants, scale_profile, CurvatureProfile, TailModel};
use crate::quadrature::{integrate, uniform_grid, QuadTolerance};
use crate::report::VerificationReport;

/// Cells of the Neumann grid on `[0, a]`.
pub const NEUMANN_CELLS: usize = 1024;
/// Allowed `|u′(a) − 1|`.
pub const COMPATIBILITY_TOL: f64 = 1e-8;
/// The set `U` is sampled on `[ε, a)` with `ε = U_EPSILON_FRACTION·a`.
pub const U_EPSILON_FRACTION: f64 = 1e-3;
/// Cells of the source grid on `[ε, a]`.
pub const SOURCE_CELLS: usize = 400;
/// Competitor radii for the contact test before local refinement.
pub const COMPETITOR_CELLS: usize = 2000;
/// Time samples per geodesic in the Jacobian check.
pub const GEODESIC_TIME_SAMPLES: usize = 41;
/// Geodesics re-integrated with the matrix Jacobi equation.
pub const MATRIX_CROSSCHECK_GEODESICS: usize = 5;
/// Absolute slack tolerance for the pointwise checks.
pub const SLACK_TOL: f64 = 1e-8;
/// Relative tolerance for each link of the integral chain.
pub const CHAIN_RTOL: f64 = 1e-6;

const ODE_TOL: f64 = 1e-11;
const QUAD: QuadTolerance = QuadTolerance::new(1e-15, 1e-13);

/// Radial solution of `div(f Du) = n f^{n/(n−1)} − 2(n−1)b₁f − |Df|` with
/// `∂u/∂ν = 1` on the sphere of radius `a`.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    model: ModelManifold,
    /// The rescaled test function.
    pub f: RadialTestFunction,
    pub ball_radius: f64,
    /// Factor applied to the input test function.
    pub f_scale: f64,
    pub b1: f64,
    pub radii: Vec<f64>,
    pub u_prime: Vec<f64>,
    pub u: Vec<f64>,
    /// `∫₀^{rᵢ} (source)·φ^{n−1}` at the grid radii.
    flux: Vec<f64>,
    /// `u′(a) − 1`.
    pub boundary_defect: f64,
    /// Relative mismatch of the normalization identity after rescaling.
    pub normalization_defect: f64,
}

impl NeumannSolution {
    pub fn model(&self) -> &ModelManifold {
        &self.model
    }

    pub fn dimension(&self) -> usize {
        self.model.dimension()
    }

    fn weight(&self, r: f64) -> f64 {
        self.model.phi(r).powi(self.dimension() as i32 - 1)
    }

    /// Right-hand side of the Neumann equation.
    pub fn source(&self, r: f64) -> f64 {
        source_term(&self.f, self.dimension(), self.b1, r)
    }

    fn flux_at(&self, r: f64) -> Result<f64> {
        let h = self.ball_radius / NEUMANN_CELLS as f64;
        let i = ((r / h).floor() as usize).min(NEUMANN_CELLS);
        let base = self.radii[i];
        if r == base {
            return Ok(self.flux[i]);
        }
        let piece = integrate(|t| self.source(t) * self.weight(t), base, r, &[], QUAD)?;
        Ok(self.flux[i] + piece.value)
    }

    pub fn u_prime_at(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.flux_at(r)? / (self.weight(r) * self.f.eval(r)))
    }

    /// `Δu = (source − f′u′)/f`, differentiated analytically.
    pub fn laplacian_at(&self, r: f64) -> Result<f64> {
        let up = self.u_prime_at(r)?;
        Ok((self.source(r) - self.f.deriv(r) * up) / self.f.eval(r))
    }

    /// `u″ = Δu − (n−1)(φ′/φ)u′`; at the center every direction is radial.
    pub fn u_second_at(&self, r: f64) -> Result<f64> {
        let lap = self.laplacian_at(r)?;
        if r <= 0.0 {
            return Ok(lap / self.dimension() as f64);
        }
        let (phi, dphi, _) = self.model.warp_jet(r);
        Ok(lap - (self.dimension() - 1) as f64 * dphi / phi * self.u_prime_at(r)?)
    }

    /// `u(r)` from the cubic Hermite interpolant of the grid values.
    pub fn u_at(&self, r: f64) -> f64 {
        let h = self.ball_radius / NEUMANN_CELLS as f64;
        let i = ((r / h).floor() as usize).min(NEUMANN_CELLS - 1);
        let x = (r - self.radii[i]) / h;
        let (y0, y1) = (self.u[i], self.u[i + 1]);
        let (d0, d1) = (self.u_prime[i] * h, self.u_prime[i + 1] * h);
        let x2 = x * x;
        let x3 = x2 * x;
        (2.0 * x3 - 3.0 * x2 + 1.0) * y0 + (x3 - 2.0 * x2 + x) * d0 + (-2.0 * x3 + 3.0 * x2) * y1 + (x3 - x2) * d1
    }
}

fn source_term(f: &RadialTestFunction, n: usize, b1: f64, r: f64) -> f64 {
    let nf = n as f64;
    let v = f.eval(r);
    nf * v.powf(nf / (nf - 1.0)) - 2.0 * (nf - 1.0) * b1 * v - f.deriv(r).abs()
}

/// Both sides of the normalization identity, per unit sphere area:
/// `f(a)φ(a)^{n−1} + ∫|f′|φ^{n−1} + 2(n−1)b₁∫fφ^{n−1}` and `n∫f^{n/(n−1)}φ^{n−1}`.
fn normalization_sides(m: &ModelManifold, f: &RadialTestFunction, b1: f64, a: f64) -> Result<(f64, f64)> {
    let n = m.dimension() as f64;
    let k = m.dimension() as i32 - 1;
    let kinks = m.kinks();
    let w = |r: f64| m.phi(r).powi(k);
    let grad = integrate(|r| f.deriv(r).abs() * w(r), 0.0, a, &kinks, QUAD)?.value;
    let mass = integrate(|r| f.eval(r) * w(r), 0.0, a, &kinks, QUAD)?.value;
    let power = integrate(|r| f.eval(r).powf(n / (n - 1.0)) * w(r), 0.0, a, &kinks, QUAD)?.value;
    let lhs = f.eval(a) * w(a) + grad + 2.0 * (n - 1.0) * b1 * mass;
    Ok((lhs, n * power))
}

/// Rescale `f`, then solve the radial Neumann problem on the ball of radius `a`.
pub fn solve_neumann_radial(
    m: &ModelManifold,
    p: &CurvatureProfile,
    a: f64,
    f: &RadialTestFunction,
) -> Result<NeumannSolution> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("ball radius must be positive, got {a}")));
    }
    m.check_radius(a)?;
    f.check_positive(a)?;
    let n = m.dimension();
    let b1 = profile_invariants(p, a, TailModel::Exact)?.b1;

    // L·s = R·s^{n/(n−1)} fixes the scale s.
    let (lhs, rhs) = normalization_sides(m, f, b1, a)?;
    let f_scale = (lhs / rhs).powi(n as i32 - 1);
    let fs = f.scaled(f_scale);
    let (ls, rs) = normalization_sides(m, &fs, b1, a)?;

    let radii = uniform_grid(0.0, a, NEUMANN_CELLS + 1);
    let mut sol = NeumannSolution {
        model: m.clone(),
        f: fs,
        ball_radius: a,
        f_scale,
        b1,
        radii: radii.clone(),
        u_prime: Vec::new(),
        u: Vec::new(),
        flux: vec![0.0; radii.len()],
        boundary_defect: f64::NAN,
        normalization_defect: (ls - rs) / rs,
    };
    let kinks = m.kinks();
    for i in 1..radii.len() {
        let piece = integrate(|t| sol.source(t) * sol.weight(t), radii[i - 1], radii[i], &kinks, QUAD)?;
        sol.flux[i] = sol.flux[i - 1] + piece.value;
    }
    sol.u_prime = radii.iter().map(|&r| sol.u_prime_at(r)).collect::<Result<_>>()?;
    let mut u = vec![0.0; radii.len()];
    for i in 1..radii.len() {
        let piece = integrate(|t| sol.u_prime_at(t).unwrap_or(f64::NAN), radii[i - 1], radii[i], &[], QUAD)?;
        u[i] = u[i - 1] + piece.value;
    }
    sol.u = u;
    sol.boundary_defect = sol.u_prime[NEUMANN_CELLS] - 1.0;
    if !(sol.boundary_defect.abs() <= COMPATIBILITY_TOL) {
        return Err(Error::numerical(format!("Neumann compatibility failed: u′(a) − 1 = {:.3e}", sol.boundary_defect)));
    }
    Ok(sol)
}

/// Worst slack of a pointwise inequality over a set of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlackSummary {
    pub worst_slack: f64,
    pub location: f64,
    pub samples: usize,
    pub pass: bool,
    pub tolerance: f64,
}

/// `Δu/n ≤ f^{1/(n−1)} − 2(n−1)b₁/n` at the grid radii where `0 < u′ < 1`.
pub fn hessian_bound_check(sol: &NeumannSolution) -> Result<SlackSummary> {
    let n = sol.dimension() as f64;
    let (mut worst, mut loc, mut count) = (f64::INFINITY, f64::NAN, 0usize);
    for (&r, &up) in sol.radii.iter().zip(&sol.u_prime) {
        if !(up > 0.0 && up < 1.0) || r >= sol.ball_radius {
            continue;
        }
        let bound = sol.f.eval(r).powf(1.0 / (n - 1.0)) - 2.0 * (n - 1.0) / n * sol.b1;
        let slack = bound - sol.laplacian_at(r)? / n;
        count += 1;
        if slack < worst {
            worst = slack;
            loc = r;
        }
    }
    if count == 0 {
        return Err(Error::Precondition("no sample of the ball has 0 < u′ < 1".into()));
    }
    Ok(SlackSummary {
        worst_slack: worst,
        location: loc,
        samples: count,
        pass: worst >= -SLACK_TOL,
        tolerance: SLACK_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportSample {
    pub s: f64,
    pub u_prime: f64,
    pub u_second: f64,
    pub laplacian: f64,
    /// Distance of `exp_s(r·Du)` from the base point.
    pub image_radius: f64,
    /// `0 < u′ < 1` at an interior point.
    pub in_u: bool,
    /// The contact inequality holds at `s`.
    pub contact: bool,
    /// Minimum over competitors minus the contact value (≈ 0 on contact).
    pub contact_defect: f64,
    /// `det DΦ_r = (1 + r u″)·(φ(ρ)/φ(s))^{n−1}`.
    pub jacobian: f64,
}

/// Transport of the sampled ball at time `r`. Samples run over `[ε, a]`;
/// the last one sits on the boundary and is never in `U`.
#[derive(Debug, Clone, Serialize)]
pub struct TransportState {
    pub r: f64,
    pub ball_radius: f64,
    pub epsilon: f64,
    pub step: f64,
    pub samples: Vec<TransportSample>,
}

impl TransportState {
    pub fn source_samples(&self) -> Vec<f64> {
        self.samples.iter().filter(|x| x.in_u).map(|x| x.s).collect()
    }

    pub fn image_radii(&self) -> Vec<f64> {
        self.samples.iter().filter(|x| x.in_u).map(|x| x.image_radius).collect()
    }

    pub fn contact_flags(&self) -> Vec<bool> {
        self.samples.iter().filter(|x| x.in_u).map(|x| x.contact).collect()
    }

    pub fn jacobians(&self) -> Vec<f64> {
        self.samples.iter().filter(|x| x.contact).map(|x| x.jacobian).collect()
    }
}

/// Minimize `t ↦ r·u(t) + ½(ρ − t)²` over `[0, a]`: grid search, then
/// golden-section refinement around the best grid point.
fn competitor_minimum(sol: &NeumannSolution, grid: &[f64], u_grid: &[f64], r: f64, rho: f64) -> f64 {
    let cost = |t: f64, ut: f64| r * ut + 0.5 * (rho - t) * (rho - t);
    let (mut k, mut best) = (0usize, f64::INFINITY);
    for (i, (&t, &ut)) in grid.iter().zip(u_grid).enumerate() {
        let c = cost(t, ut);
        if c < best {
            best = c;
            k = i;
        }
    }
    let (mut lo, mut hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |t: f64| cost(t, sol.u_at(t));
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = eval(x2);
        }
    }
    best.min(f1).min(f2)
}

/// Transport the ball along `t ↦ exp_s(t·Du(s))` up to time `r`.
pub fn transport_radial(sol: &NeumannSolution, r: f64) -> Result<TransportState> {
    let a = sol.ball_radius;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("transport time must be positive, got {r}")));
    }
    let m = sol.model();
    m.check_radius(a + r)?;
    let n = sol.dimension() as i32;
    let epsilon = U_EPSILON_FRACTION * a;
    let sources = uniform_grid(epsilon, a, SOURCE_CELLS + 1);
    let competitors = uniform_grid(0.0, a, COMPETITOR_CELLS + 1);
    let u_comp: Vec<f64> = competitors.iter().map(|&t| sol.u_at(t)).collect();

    let samples = sources
        .par_iter()
        .map(|&s| {
            let v = sol.u_prime_at(s)?;
            if v < 0.0 {
                return Err(Error::Unsupported(format!(
                    "u′({s:.6}) = {v:.3e} < 0: transport through the base point is not handled"
                )));
            }
            let u2 = sol.u_second_at(s)?;
            let lap = sol.laplacian_at(s)?;
            let rho = s + r * v;
            let jacobian = (1.0 + r * u2) * (m.phi(rho) / m.phi(s)).powi(n - 1);
            let in_u = v > 0.0 && v < 1.0 && s < a;
            let target = r * sol.u_at(s) + 0.5 * (r * v) * (r * v);
            let defect = competitor_minimum(sol, &competitors, &u_comp, r, rho) - target;
            let contact = in_u && defect >= -1e-10 * target.abs().max(1.0);
            Ok(TransportSample {
                s,
                u_prime: v,
                u_second: u2,
                laplacian: lap,
                image_radius: rho,
                in_u,
                contact,
                contact_defect: defect,
                jacobian,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransportState { r, ball_radius: a, epsilon, step: (a - epsilon) / SOURCE_CELLS as f64, samples })
}

/// `count` interior radii of the target annulus `(a, r − a)`; empty when
/// `r ≤ 2a`.
pub fn annulus_targets(a: f64, r: f64, count: usize) -> Vec<f64> {
    if r <= 2.0 * a || count == 0 {
        return Vec::new();
    }
    let h = (r - 2.0 * a) / (count + 1) as f64;
    (1..=count).map(|i| a + h * i as f64).collect()
}

/// Targets not reached by the contact images: a target counts as covered
/// when it lies between the images of two adjacent contact samples or
/// within one target cell of a contact image.
pub fn covering_check(ts: &TransportState, targets: &[f64]) -> Vec<f64> {
    let cell = if targets.len() >= 2 { (targets[1] - targets[0]).abs() } else { ts.step * ts.r };
    let mut segments = Vec::new();
    for w in ts.samples.windows(2) {
        if w[0].contact && w[1].contact {
            let (lo, hi) = (w[0].image_radius.min(w[1].image_radius), w[0].image_radius.max(w[1].image_radius));
            segments.push((lo, hi));
        }
    }
    let images: Vec<f64> = ts.samples.iter().filter(|x| x.contact).map(|x| x.image_radius).collect();
    targets
        .iter()
        .copied()
        .filter(|&t| {
            let in_segment = segments.iter().any(|&(lo, hi)| lo <= t && t <= hi);
            let near = images.iter().any(|&rho| (rho - t).abs() <= cell);
            !(in_segment || near)
        })
        .collect()
}

/// Comparison data along the geodesic from one source sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicBound {
    pub s: f64,
    /// `1 + t·u″(s)` vanishes before `r`.
    pub conjugate: bool,
    pub worst_slack: f64,
    pub worst_time: f64,
    /// `det DΦ_r` at `t = r`.
    pub det: f64,
    /// `(1 + r u″)·ψ^{n−1}(r)`.
    pub bound: f64,
    /// Arithmetic–geometric mean form of the bound.
    pub amgm: f64,
    /// The AM–GM form with `ψ₁(r)` replaced by `k·h₂(r) + e^{a b₁}·h₁(r)`.
    pub final_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobianBoundCheck {
    pub worst_slack: f64,
    pub worst_source: f64,
    pub worst_time: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub conjugate_geodesics: usize,
    /// Largest relative gap between the warp formula for `det DΦ_r` and a
    /// matrix Jacobi integration on a few geodesics.
    pub matrix_crosscheck: f64,
    /// Per-sample data, aligned with `TransportState::samples`; `None`
    /// outside the integration set.
    pub geodesics: Vec<Option<GeodesicBound>>,
}

/// Samples entering the Jacobian integrals: contact samples plus the
/// boundary sample when it closes a run of contact samples.
fn integration_set(ts: &TransportState) -> Vec<bool> {
    let mut set: Vec<bool> = ts.samples.iter().map(|x| x.contact).collect();
    let k = ts.samples.len() - 1;
    let last = &ts.samples[k];
    if k > 0 && set[k - 1] && (last.u_prime - 1.0).abs() <= COMPATIBILITY_TOL {
        set[k] = true;
    }
    set
}

fn geodesic_bound(
    sol: &NeumannSolution,
    p: &CurvatureProfile,
    x: &TransportSample,
    r: f64,
    final_factor: f64,
) -> Result<GeodesicBound> {
    let m = sol.model();
    let n = sol.dimension();
    let k = n as i32 - 1;
    let nf = n as f64;
    let (phi_s, dphi_s, _) = m.warp_jet(x.s);
    let g0 = dphi_s / phi_s * x.u_prime;
    let radial = |t: f64| 1.0 + t * x.u_second;
    if radial(r) <= 0.0 {
        return Ok(GeodesicBound {
            s: x.s,
            conjugate: true,
            worst_slack: f64::NAN,
            worst_time: f64::NAN,
            det: x.jacobian,
            bound: f64::NAN,
            amgm: f64::NAN,
            final_bound: f64::NAN,
        });
    }
    let scaled = scale_profile(p, x.u_prime.min(1.0), x.s)?;
    let (psi1, psi2) = psi_pair(&scaled, r, ODE_TOL)?;
    let (mut worst, mut when) = (f64::INFINITY, 0.0);
    for t in uniform_grid(0.0, r, GEODESIC_TIME_SAMPLES) {
        let det = radial(t) * (m.phi(x.s + t * x.u_prime) / phi_s).powi(k);
        let bound = radial(t) * (psi2.value(t) + g0 * psi1.value(t)).powi(k);
        let slack = (bound - det) / bound.abs().max(1.0);
        if slack < worst {
            worst = slack;
            when = t;
        }
    }
    let (p1, p2) = (psi1.value(r), psi2.value(r));
    let mean = 1.0 / (nf * r) + (nf - 1.0) / nf * p2 / p1 + x.laplacian / nf;
    let mean_n = mean.powi(n as i32);
    Ok(GeodesicBound {
        s: x.s,
        conjugate: false,
        worst_slack: worst,
        worst_time: when,
        det: x.jacobian,
        bound: radial(r) * (p2 + g0 * p1).powi(k),
        amgm: mean_n * r * p1.powi(k),
        final_bound: mean_n * r * final_factor,
    })
}

/// `det DΦ_t ≤ (1 + t·u″(s))·ψ^{n−1}(t)` along every geodesic of the
/// integration set, with `ψ = ψ₂ + g(0)ψ₁` against the scaled profile of
/// speed `u′(s)` centred at `s`. Slacks are relative to `max(1, bound)`.
pub fn jacobian_bound_check(
    ts: &TransportState,
    p: &CurvatureProfile,
    sol: &NeumannSolution,
) -> Result<JacobianBoundCheck> {
    let set = integration_set(ts);
    if !set.iter().any(|&b| b) {
        return Err(Error::Precondition("contact set is empty".into()));
    }
    let r = ts.r;
    let n = sol.dimension();
    let k = n as i32 - 1;
    // ψ₁(r) ≤ k·h₂(r) + e^{a b₁}·h₁(r), with the ball radius as r₀.
    let (h1, h2) = fundamental_pair(p, r, ODE_TOL)?;
    let coef = growth_coefficient(sol.b1, sol.ball_radius);
    let final_factor = (coef * h2.value(r) + (sol.ball_radius * sol.b1).exp() * h1.value(r)).powi(k);

    let geodesics = ts
        .samples
        .par_iter()
        .zip(set.par_iter())
        .map(|(x, &inside)| if inside { geodesic_bound(sol, p, x, r, final_factor).map(Some) } else { Ok(None) })
        .collect::<Result<Vec<_>>>()?;

    let (mut worst, mut source, mut time, mut conjugate) = (f64::INFINITY, f64::NAN, f64::NAN, 0usize);
    for g in geodesics.iter().flatten() {
        if g.conjugate {
            conjugate += 1;
        } else if g.worst_slack < worst {
            worst = g.worst_slack;
            source = g.s;
            time = g.worst_time;
        }
    }

    // Independent determinant along a few geodesics from the matrix equation.
    let m = sol.model();
    let chosen: Vec<&TransportSample> = {
        let idx: Vec<usize> = (0..ts.samples.len()).filter(|&i| ts.samples[i].contact).collect();
        let stride = (idx.len() / MATRIX_CROSSCHECK_GEODESICS).max(1);
        idx.iter().step_by(stride).take(MATRIX_CROSSCHECK_GEODESICS).map(|&i| &ts.samples[i]).collect()
    };
    let mut crosscheck = 0.0f64;
    for x in chosen {
        if 1.0 + r * x.u_second <= 0.0 {
            continue;
        }
        let (phi_s, dphi_s, _) = m.warp_jet(x.s);
        let mut diag = vec![dphi_s / phi_s * x.u_prime; n];
        diag[0] = x.u_second;
        let curv = RadialGeodesicCurvature { manifold: m, start: x.s, speed: x.u_prime, outward: true };
        let jac = solve_jacobi_matrix_sampled(
            &curv,
            &DMatrix::identity(n, n),
            &DMatrix::from_diagonal(&DVector::from_vec(diag)),
            r,
            ODE_TOL,
            2,
        )?;
        crosscheck = crosscheck.max((jac.det(r) - x.jacobian).abs() / x.jacobian.abs().max(1.0));
    }

    Ok(JacobianBoundCheck {
        worst_slack: worst,
        worst_source: source,
        worst_time: time,
        tolerance: SLACK_TOL,
        pass: worst >= -SLACK_TOL,
        conjugate_geodesics: conjugate,
        matrix_crosscheck: crosscheck,
        geodesics,
    })
}

/// Composite Simpson rule on equally spaced values, closing an odd number
/// of intervals with the 3/8 rule.
fn simpson(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        len => {
            let intervals = len - 1;
            let (even_end, tail) = if intervals % 2 == 0 { (len - 1, None) } else { (len - 4, Some(len - 4)) };
            let mut acc = 0.0;
            let mut i = 0;
            while i + 2 <= even_end {
                acc += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
                i += 2;
            }
            if let Some(j) = tail {
                acc += 3.0 * h / 8.0 * (values[j] + 3.0 * values[j + 1] + 3.0 * values[j + 2] + values[j + 3]);
            }
            acc
        }
    }
}

/// The integral chain
/// `|annulus| ≤ ∫det DΦ_r ≤ ∫(1 + r u″)ψ^{n−1} ≤ ∫AM–GM ≤ ∫final`,
/// integrals over the contact set against the Riemannian volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DInteChain {
    pub annulus_volume: f64,
    pub det_integral: f64,
    pub bound_integral: f64,
    pub amgm_integral: f64,
    pub final_integral: f64,
    /// Volume of `B(ε)` relative to the ball: the part of `Ω` left unsampled.
    pub epsilon_volume_fraction: f64,
}

impl DInteChain {
    /// Relative margins of the four links, each of which should be `≥ 0`.
    pub fn margins(&self) -> [(&'static str, f64); 4] {
        let rel = |hi: f64, lo: f64| (hi - lo) / hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE);
        [
            ("chain_det_vs_annulus", rel(self.det_integral, self.annulus_volume)),
            ("chain_bound_vs_det", rel(self.bound_integral, self.det_integral)),
            ("chain_amgm_vs_bound", rel(self.amgm_integral, self.bound_integral)),
            ("chain_final_vs_amgm", rel(self.final_integral, self.amgm_integral)),
        ]
    }
}

pub fn dinte_chain(ts: &TransportState, jb: &JacobianBoundCheck, sol: &NeumannSolution) -> Result<DInteChain> {
    let m = sol.model();
    let n = sol.dimension();
    let k = n as i32 - 1;
    let omega = n as f64 * unit_ball_volume(n);
    let (a, r) = (ts.ball_radius, ts.r);
    let annulus = if r > 2.0 * a { omega * (m.warp_moment(r - a)? - m.warp_moment(a)?) } else { 0.0 };

    let mut totals = [0.0; 4];
    let mut run: Vec<(f64, GeodesicBound)> = Vec::new();
    let mut flush = |run: &mut Vec<(f64, GeodesicBound)>| {
        if run.iter().all(|(_, g)| !g.conjugate) {
            let pick = |f: fn(&GeodesicBound) -> f64| run.iter().map(|(w, g)| w * f(g)).collect::<Vec<_>>();
            totals[0] += simpson(&pick(|g| g.det), ts.step);
            totals[1] += simpson(&pick(|g| g.bound), ts.step);
            totals[2] += simpson(&pick(|g| g.amgm), ts.step);
            totals[3] += simpson(&pick(|g| g.final_bound), ts.step);
        }
        run.clear();
    };
    for (x, g) in ts.samples.iter().zip(&jb.geodesics) {
        match g {
            Some(g) if !g.conjugate => run.push((omega * m.phi(x.s).powi(k), *g)),
            _ => flush(&mut run),
        }
    }
    flush(&mut run);

    Ok(DInteChain {
        annulus_volume: annulus,
        det_integral: totals[0],
        bound_integral: totals[1],
        amgm_integral: totals[2],
        final_integral: totals[3],
        epsilon_volume_fraction: m.warp_moment(ts.epsilon)? / m.warp_moment(a)?,
    })
}

/// Every stage of the pipeline in one value.
#[derive(Debug, Clone)]
pub struct AbpOutcome {
    pub neumann: NeumannSolution,
    pub hessian: SlackSummary,
    pub transport: TransportState,
    pub uncovered: Vec<f64>,
    pub jacobian: JacobianBoundCheck,
    pub chain: DInteChain,
}

/// Number of annulus targets tested by [`run_abp`].
pub const COVERING_TARGETS: usize = 400;

pub fn run_abp(m: &ModelManifold, p: &CurvatureProfile, a: f64, f: &RadialTestFunction, r: f64) -> Result<AbpOutcome> {
    let neumann = solve_neumann_radial(m, p, a, f)?;
    let hessian = hessian_bound_check(&neumann)?;
    let transport = transport_radial(&neumann, r)?;
    let uncovered = covering_check(&transport, &annulus_targets(a, r, COVERING_TARGETS));
    let jacobian = jacobian_bound_check(&transport, p, &neumann)?;
    let chain = dinte_chain(&transport, &jacobian, &neumann)?;
    Ok(AbpOutcome { neumann, hessian, transport, uncovered, jacobian, chain })
}

/// Run the pipeline and summarize it as a report.
pub fn abp_report(
    m: &ModelManifold,
    p: &CurvatureProfile,
    a: f64,
    f: &RadialTestFunction,
    r: f64,
) -> Result<VerificationReport> {
    let out = run_abp(m, p, a, f, r)?;
    let mut rep = VerificationReport::new("abp");
    let nu = out.transport.samples.iter().filter(|x| x.in_u).count();
    let nc = out.transport.samples.iter().filter(|x| x.contact).count();
    rep.record("f_scale", out.neumann.f_scale)
        .record("b1", out.neumann.b1)
        .record("r0", a)
        .record("transport_time", r)
        .require_close("boundary_defect", out.neumann.boundary_defect, 0.0, COMPATIBILITY_TOL)
        .require_close("normalization_defect", out.neumann.normalization_defect, 0.0, COMPATIBILITY_TOL)
        .require_nonnegative("hessian_worst_slack", out.hessian.worst_slack, SLACK_TOL)
        .record("u_samples", nu as f64)
        .record("contact_samples", nc as f64)
        .record("uncovered_targets", out.uncovered.len() as f64)
        .require_nonnegative("jacobian_worst_slack", out.jacobian.worst_slack, SLACK_TOL)
        .record("conjugate_geodesics", out.jacobian.conjugate_geodesics as f64)
        .require_close("matrix_crosscheck", out.jacobian.matrix_crosscheck, 0.0, CHAIN_RTOL)
        .record("annulus_volume", out.chain.annulus_volume)
        .record("det_integral", out.chain.det_integral)
        .record("bound_integral", out.chain.bound_integral)
        .record("amgm_integral", out.chain.amgm_integral)
        .record("final_integral", out.chain.final_integral)
        .record("epsilon_volume_fraction", out.chain.epsilon_volume_fraction);
    for (key, v) in out.chain.margins() {
        rep.require_nonnegative(key, v, CHAIN_RTOL);
    }
    if matches!(m.warp(), Warp::Euclidean) && matches!(f, RadialTestFunction::Constant { .. }) {
        record_flat_defects(&mut rep, &out, a, r);
    }
    if !out.uncovered.is_empty() {
        rep.fail(format!(
            "{} annulus targets not covered, first at radius {:.6}",
            out.uncovered.len(),
            out.uncovered[0]
        ));
    }
    rep.tolerance("slack", SLACK_TOL).tolerance("compatibility", COMPATIBILITY_TOL).tolerance("chain_rel", CHAIN_RTOL);
    Ok(rep)
}

/// Flat space with constant `f`: `u = s²/(2a)`, `ρ = (1 + r/a)s` and
/// `det DΦ_r = (1 + r/a)ⁿ`.
fn record_flat_defects(rep: &mut VerificationReport, out: &AbpOutcome, a: f64, r: f64) {
    let sol = &out.neumann;
    let u = sol.radii.iter().zip(&sol.u).map(|(&s, &u)| (u - 0.5 * s * s / a).abs()).fold(0.0, f64::max);
    let stretch = 1.0 + r / a;
    let det = stretch.powi(sol.dimension() as i32);
    let (mut image, mut jac) = (0.0f64, 0.0f64);
    for x in out.transport.samples.iter().filter(|x| x.in_u) {
        image = image.max((x.image_radius - stretch * x.s).abs());
        jac = jac.max((x.jacobian - det).abs() / det);
    }
    rep.require_close("flat_u_defect", u, 0.0, SLACK_TOL)
        .require_close("flat_image_defect", image, 0.0, SLACK_TOL)
        .require_close("flat_jacobian_defect", jac, 0.0, SLACK_TOL);
}
