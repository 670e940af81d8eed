//! Rotationally symmetric model manifolds `dr² + φ(r)²·g_{S^{n−1}}`.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{solve_linear_second_order, OdeSolution, SolutionRole};
use crate::profiles::{parse_two_columns, CurvatureProfile};
use crate::quadrature::{geometric_grid, integrate, uniform_grid, QuadTolerance};

/// Tolerance on `φ(0) = 0` and `φ′(0) = 1`.
pub const WARP_ORIGIN_TOL: f64 = 1e-10;
/// Looser `φ′(0)` tolerance for tabulated warps, whose derivative comes
/// from a one-sided stencil.
pub const TABULATED_SLOPE_TOL: f64 = 1e-6;
/// Tolerance used when solving comparison warps.
pub const WARP_SOLVER_TOL: f64 = 1e-12;

/// `|Bⁿ| = π^{n/2} / Γ(n/2 + 1)`, by the two-step recurrence.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// `|Sⁿ| = (n + 1)·|B^{n+1}|`.
pub fn unit_sphere_area(n: usize) -> f64 {
    (n + 1) as f64 * unit_ball_volume(n + 1)
}

#[derive(Debug, Clone)]
pub struct TabulatedWarp {
    step: f64,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    ddphi: Vec<f64>,
}

impl TabulatedWarp {
    fn new(rs: &[f64], phi: Vec<f64>) -> Result<Self> {
        let n = rs.len();
        if n != phi.len() {
            return Err(Error::invalid("tabulated warp: r and φ columns differ in length"));
        }
        if n < 6 {
            return Err(Error::invalid("tabulated warp needs at least 6 rows"));
        }
        if rs[0] != 0.0 {
            return Err(Error::invalid("tabulated warp must start at r = 0"));
        }
        let h = rs[1] - rs[0];
        if !(h > 0.0) || rs.iter().enumerate().any(|(i, &r)| (r - i as f64 * h).abs() > 1e-9 * h.max(r)) {
            return Err(Error::invalid("tabulated warp must be sampled on a uniform grid"));
        }
        let f = &phi;
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        for i in 2..n - 2 {
            d1[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
            d2[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h);
        }
        // One-sided fourth-order stencils at both ends.
        let fwd1 =
            |g: &dyn Fn(usize) -> f64| (-25.0 * g(0) + 48.0 * g(1) - 36.0 * g(2) + 16.0 * g(3) - 3.0 * g(4)) / 12.0;
        let fwd1b = |g: &dyn Fn(usize) -> f64| (-3.0 * g(0) - 10.0 * g(1) + 18.0 * g(2) - 6.0 * g(3) + g(4)) / 12.0;
        let fwd2 = |g: &dyn Fn(usize) -> f64| {
            (45.0 * g(0) - 154.0 * g(1) + 214.0 * g(2) - 156.0 * g(3) + 61.0 * g(4) - 10.0 * g(5)) / 12.0
        };
        let fwd2b = |g: &dyn Fn(usize) -> f64| {
            (10.0 * g(0) - 15.0 * g(1) - 4.0 * g(2) + 14.0 * g(3) - 6.0 * g(4) + g(5)) / 12.0
        };
        let head = |k: usize| f[k];
        let tail = |k: usize| f[n - 1 - k];
        d1[0] = fwd1(&head) / h;
        d1[1] = fwd1b(&head) / h;
        d1[n - 1] = -fwd1(&tail) / h;
        d1[n - 2] = -fwd1b(&tail) / h;
        d2[0] = fwd2(&head) / (h * h);
        d2[1] = fwd2b(&head) / (h * h);
        d2[n - 1] = fwd2(&tail) / (h * h);
        d2[n - 2] = fwd2b(&tail) / (h * h);
        Ok(Self { step: h, phi, dphi: d1, ddphi: d2 })
    }

    fn r_max(&self) -> f64 {
        self.step * (self.phi.len() - 1) as f64
    }

    fn cell(&self, r: f64) -> (usize, f64) {
        let n = self.phi.len();
        let x = (r / self.step).clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n - 2);
        (i, x - i as f64)
    }

    // Cubic Hermite on (φ, φ′).
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let (i, s) = self.cell(r);
        let h = self.step;
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (m0, m1) = (self.dphi[i] * h, self.dphi[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v =
            (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1;
        let dv = ((6.0 * s2 - 6.0 * s) * p0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * p1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        let ddv = self.ddphi[i] * (1.0 - s) + self.ddphi[i + 1] * s;
        (v, dv, ddv)
    }
}

#[derive(Debug, Clone)]
pub enum Warp {
    /// `φ(r) = r`
    Euclidean,
    /// `φ = h₁` of a profile, solved once up to the working radius.
    Comparison {
        profile: CurvatureProfile,
        h1: OdeSolution,
    },
    Tabulated(TabulatedWarp),
}

/// Rotationally symmetric manifold with base point at `r = 0`.
#[derive(Debug, Clone)]
pub struct ModelManifold {
    dim: usize,
    warp: Warp,
    r_max: f64,
}

impl ModelManifold {
    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, warp: Warp::Euclidean, r_max: f64::INFINITY })
    }

    /// Warp `φ = h₁(profile)` on `[0, r_max]`.
    pub fn comparison(dim: usize, profile: &CurvatureProfile, r_max: f64) -> Result<Self> {
        check_dim(dim)?;
        let h1 = solve_linear_second_order(profile, 0.0, 1.0, r_max, WARP_SOLVER_TOL)?.with_role(SolutionRole::H1);
        Ok(Self { dim, warp: Warp::Comparison { profile: profile.clone(), h1 }, r_max })
    }

    /// Warp sampled on a uniform grid starting at `r = 0`.
    pub fn tabulated(dim: usize, rs: &[f64], phi: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        let tab = TabulatedWarp::new(rs, phi)?;
        if tab.phi[0].abs() > WARP_ORIGIN_TOL {
            return Err(Error::invalid(format!("tabulated warp has φ(0) = {} ≠ 0", tab.phi[0])));
        }
        if (tab.dphi[0] - 1.0).abs() > TABULATED_SLOPE_TOL {
            return Err(Error::invalid(format!("tabulated warp has φ′(0) = {} ≠ 1", tab.dphi[0])));
        }
        if let Some(i) = tab.phi.iter().skip(1).position(|&v| v <= 0.0) {
            return Err(Error::invalid(format!("tabulated warp vanishes at r = {}", rs[i + 1])));
        }
        let r_max = tab.r_max();
        Ok(Self { dim, warp: Warp::Tabulated(tab), r_max })
    }

    /// Load a two-column `(r, φ)` table.
    pub fn load_warp(dim: usize, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let (rs, phi) = parse_two_columns(&text, path)?;
        Self::tabulated(dim, &rs, phi)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn warp(&self) -> &Warp {
        &self.warp
    }

    /// Largest radius where the warp is defined.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// The profile whose `h₁` is the warp, if this is a comparison model.
    pub fn comparison_profile(&self) -> Option<&CurvatureProfile> {
        match &self.warp {
            Warp::Comparison { profile, .. } => Some(profile),
            _ => None,
        }
    }

    /// `(φ, φ′, φ″)` at `r`.
    pub fn warp_jet(&self, r: f64) -> (f64, f64, f64) {
        match &self.warp {
            Warp::Euclidean => (r, 1.0, 0.0),
            Warp::Comparison { profile, h1 } => {
                let (v, d) = h1.value_and_deriv(r);
                (v, d, profile.eval(r) * v)
            }
            Warp::Tabulated(t) => t.eval(r),
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.warp_jet(r).0
    }

    /// `−φ″/φ`: sectional curvature of planes containing `∂r`.
    pub fn radial_curvature(&self, r: f64) -> f64 {
        match &self.warp {
            Warp::Euclidean => 0.0,
            // φ″ = λφ exactly, so skip the division (and the 0/0 at the origin).
            Warp::Comparison { profile, .. } => -profile.eval(r),
            Warp::Tabulated(t) => {
                let (v, _, dd) = t.eval(r.max(1e-3 * t.step));
                -dd / v
            }
        }
    }

    /// `(1 − φ′²)/φ²`: sectional curvature of planes tangent to the spheres.
    pub fn spherical_curvature(&self, r: f64) -> f64 {
        let (v, d, _) = self.warp_jet(r);
        (1.0 - d * d) / (v * v)
    }

    /// Kinks of the warp's second derivative, used as quadrature breaks.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.warp {
            Warp::Euclidean => vec![],
            Warp::Comparison { profile, .. } => profile.kinks(),
            Warp::Tabulated(t) => (1..t.phi.len() - 1).map(|i| i as f64 * t.step).collect(),
        }
    }

    /// Curvature tolerance appropriate to how `φ″` is obtained.
    pub fn curvature_tolerance(&self) -> f64 {
        match &self.warp {
            Warp::Tabulated(t) => 1e-10 + 10.0 * t.step * t.step,
            _ => 1e-10,
        }
    }

    pub(crate) fn check_radius(&self, r: f64) -> Result<()> {
        if !(r >= 0.0 && r <= self.r_max * (1.0 + 1e-12)) {
            return Err(Error::invalid(format!("radius {r} outside the working domain [0, {}]", self.r_max)));
        }
        Ok(())
    }

    /// `∫₀^r φ^{n−1}`.
    pub fn warp_moment(&self, r: f64) -> Result<f64> {
        self.warp_moment_between(0.0, r)
    }

    pub(crate) fn warp_moment_between(&self, a: f64, b: f64) -> Result<f64> {
        self.check_radius(b)?;
        let k = (self.dim - 1) as i32;
        if let Warp::Euclidean = self.warp {
            let n = self.dim as f64;
            return Ok((b.powi(self.dim as i32) - a.powi(self.dim as i32)) / n);
        }
        Ok(integrate(|t| self.phi(t).powi(k), a, b, &self.kinks(), QuadTolerance::new(0.0, 1e-12))?.value)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::invalid(format!("model dimension must be at least 2, got {dim}")));
    }
    Ok(())
}

/// Outcome of a curvature-decay check: `margin(r) = K(r) + λ(r)` for the
/// checked curvature families; the condition is `margin ≥ 0`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayCheck {
    pub pass: bool,
    pub worst_margin: f64,
    pub worst_radius: f64,
    pub first_violation: Option<f64>,
    pub tolerance: f64,
}

fn decay_grid(r: f64) -> Vec<f64> {
    let mut g = uniform_grid(0.0, r, 2001);
    g.remove(0);
    g.extend(geometric_grid(1e-4 * r, r, 200));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn run_decay_check<F: Fn(f64) -> f64>(m: &ModelManifold, r: f64, margin: F) -> Result<DecayCheck> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("decay check radius must be positive, got {r}")));
    }
    m.check_radius(r)?;
    let tol = m.curvature_tolerance();
    let mut worst = (f64::INFINITY, 0.0);
    let mut first = None;
    for t in decay_grid(r) {
        let v = margin(t);
        if !v.is_finite() {
            return Err(Error::numerical(format!("curvature is not finite at r = {t}")));
        }
        if v < worst.0 {
            worst = (v, t);
        }
        if first.is_none() && v < -tol {
            first = Some(t);
        }
    }
    Ok(DecayCheck {
        pass: first.is_none(),
        worst_margin: worst.0,
        worst_radius: worst.1,
        first_violation: first,
        tolerance: tol,
    })
}

/// Radial Ricci decay `φ″ ≤ λ·φ` on `(0, R]`.
pub fn ricci_decay_check(m: &ModelManifold, p: &CurvatureProfile, r: f64) -> Result<DecayCheck> {
    run_decay_check(m, r, |t| m.radial_curvature(t) + p.eval(t))
}

/// Sectional decay: both the radial and the spherical families `≥ −λ`.
pub fn sectional_decay_check(m: &ModelManifold, p: &CurvatureProfile, r: f64) -> Result<DecayCheck> {
    run_decay_check(m, r, |t| {
        let lam = p.eval(t);
        (m.radial_curvature(t) + lam).min(m.spherical_curvature(t) + lam)
    })
}

pub fn ball_volume(m: &ModelManifold, r: f64) -> Result<f64> {
    let n = m.dimension();
    Ok(n as f64 * unit_ball_volume(n) * m.warp_moment(r)?)
}

pub fn sphere_area(m: &ModelManifold, r: f64) -> Result<f64> {
    m.check_radius(r)?;
    let n = m.dimension();
    Ok(n as f64 * unit_ball_volume(n) * m.phi(r).powi(n as i32 - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AvrEstimate {
    /// Ratio at the horizon; an upper bound for the limit.
    pub theta: f64,
    pub horizon: f64,
    /// Largest increase of the ratio between consecutive radii.
    pub monotone_violation: f64,
    /// Ratio at `horizon / 10` minus ratio at the horizon.
    pub drift: f64,
}

#[derive(Debug, Clone)]
pub struct BishopGromov {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub avr: AvrEstimate,
}

/// Log-spaced radii for volume-ratio sweeps.
pub fn avr_radii(horizon: f64) -> Vec<f64> {
    geometric_grid((1e-3f64).min(horizon / 10.0), horizon, 400)
}

/// `|B(r)| / (n|Bⁿ| ∫₀^r h₁^{n−1})` on increasing `radii`, with `h₁` from `p`.
pub fn bishop_gromov_ratio(m: &ModelManifold, p: &CurvatureProfile, radii: &[f64]) -> Result<BishopGromov> {
    if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("radii must be positive and strictly increasing"));
    }
    let horizon = *radii.last().expect("nonempty");
    m.check_radius(horizon)?;

    // The comparison model of `p` itself is its own denominator.
    let same = m.comparison_profile() == Some(p);
    let denom_model = if same { m.clone() } else { ModelManifold::comparison(m.dimension(), p, horizon)? };

    let mut ratios = Vec::with_capacity(radii.len());
    let (mut num, mut den, mut prev) = (0.0, 0.0, 0.0);
    for &r in radii {
        num += m.warp_moment_between(prev, r)?;
        den += if same { m.warp_moment_between(prev, r)? } else { denom_model.warp_moment_between(prev, r)? };
        prev = r;
        ratios.push(num / den);
    }
    if ratios.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("volume ratio is not finite"));
    }
    let monotone_violation = ratios.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let theta = *ratios.last().expect("nonempty");
    let decade = radii.partition_point(|&r| r < horizon / 10.0).min(radii.len() - 1);
    Ok(BishopGromov {
        radii: radii.to_vec(),
        avr: AvrEstimate { theta, horizon, monotone_violation, drift: ratios[decade] - theta },
        ratios,
    })
}
