//! Sobolev and isoperimetric constants and their verification on model
//! geometries.

use serde::{Deserialize, Serialize};

use crate::comparison::growth_exponent;
use crate::error::{Error, Result};
use crate::model::{
    avr_radii, ball_volume, bishop_gromov_ratio, ricci_decay_check, sphere_area, unit_ball_volume, unit_sphere_area,
    ModelManifold,
};
use crate::profiles::{profile_invariants, CurvatureProfile, TailModel};
use crate::quadrature::{integrate, QuadTolerance};
use crate::report::VerificationReport;

/// Volume-ratio horizon used when the model has no finite working domain.
pub const DEFAULT_AVR_HORIZON: f64 = 1e3;
/// Relative tolerance on inequality margins.
pub const MARGIN_RTOL: f64 = 1e-9;

const QUAD: QuadTolerance = QuadTolerance::new(1e-14, 1e-12);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityParams {
    pub n: usize,
    /// Codimension; only used by the submanifold constant.
    pub p: usize,
    pub theta: f64,
    pub b: f64,
    pub b1: f64,
    pub r0: f64,
}

impl InequalityParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("dimension n must be at least 2, got {}", self.n)));
        }
        // Volume ratios computed by quadrature may overshoot 1 by rounding.
        if !(self.theta >= 0.0 && self.theta <= 1.0 + 1e-9) {
            return Err(Error::invalid(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        for (name, v) in [("B", self.b), ("b1", self.b1), ("r0", self.r0)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Constant of the Sobolev inequality on compact domains.
pub fn sobolev_constant_domain(q: &InequalityParams) -> Result<f64> {
    q.validate()?;
    let n = q.n as f64;
    let spread = 2.0 * (q.r0 * q.b1).exp() - 1.0;
    let inner = unit_ball_volume(q.n) * q.theta / (growth_exponent(q.b) * spread.powi(q.n as i32 - 1));
    Ok(n * inner.powf(1.0 / n))
}

/// `2b₁/(e^{2b₁} − 1)`, equal to 1 in the limit `b₁ → 0`.
fn damping_factor(b1: f64) -> f64 {
    let x = 2.0 * b1;
    if b1 < 1e-12 {
        1.0 - x / 2.0 + x * x / 12.0
    } else {
        x / x.exp_m1()
    }
}

/// Constant of the Sobolev inequality for submanifolds of codimension `p ≥ 2`.
pub fn sobolev_constant_submanifold(q: &InequalityParams) -> Result<f64> {
    q.validate()?;
    if q.p < 2 {
        return Err(Error::invalid(format!("codimension p must be at least 2, got {}", q.p)));
    }
    let (n, p) = (q.n, q.p);
    let spread = 2.0 * (q.r0 * q.b1).exp() - 1.0;
    let num = damping_factor(q.b1) * (n + p) as f64 * unit_ball_volume(n + p) * q.theta;
    let den = p as f64 * unit_ball_volume(p) * spread.powi((n + p - 1) as i32) * growth_exponent(q.b);
    Ok(n as f64 * (num / den).powf(1.0 / n as f64))
}

/// Positive radial test function `f(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialTestFunction {
    Constant {
        value: f64,
    },
    /// `a − b·r`
    Affine {
        a: f64,
        b: f64,
    },
    /// `base + amplitude·exp(−(r/width)²)`
    Bump {
        base: f64,
        amplitude: f64,
        width: f64,
    },
}

impl RadialTestFunction {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Affine { a, b } => a - b * r,
            Self::Bump { base, amplitude, width } => base + amplitude * (-(r / width).powi(2)).exp(),
        }
    }

    pub fn deriv(&self, r: f64) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Affine { b, .. } => -b,
            Self::Bump { amplitude, width, .. } => {
                let s = r / width;
                -2.0 * amplitude * s / width * (-s * s).exp()
            }
        }
    }

    /// Multiply by `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            Self::Constant { value } => Self::Constant { value: s * value },
            Self::Affine { a, b } => Self::Affine { a: s * a, b: s * b },
            Self::Bump { base, amplitude, width } => Self::Bump { base: s * base, amplitude: s * amplitude, width },
        }
    }

    /// Reject functions that are not strictly positive on `[0, radius]`.
    pub fn check_positive(&self, radius: f64) -> Result<()> {
        let min = match *self {
            Self::Constant { value } => value,
            Self::Affine { a, b } => a.min(a - b * radius),
            Self::Bump { base, amplitude, width } => {
                if !(width > 0.0) {
                    return Err(Error::invalid(format!("bump width must be positive, got {width}")));
                }
                base + amplitude.min(0.0)
            }
        };
        if !(min > 0.0 && min.is_finite()) {
            return Err(Error::invalid(format!("test function is not positive on the ball (minimum {min})")));
        }
        Ok(())
    }
}

/// Curvature data shared by the domain checks: precondition, θ, B, b₁.
struct DomainSetup {
    theta: f64,
    b: f64,
    b1: f64,
    ricci_margin: f64,
}

fn domain_setup(m: &ModelManifold, p: &CurvatureProfile, radius: f64) -> Result<DomainSetup> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
    }
    let horizon = if m.r_max().is_finite() { m.r_max() } else { DEFAULT_AVR_HORIZON.max(radius) };
    if radius > horizon {
        return Err(Error::invalid(format!("ball radius {radius} exceeds the model's domain {horizon}")));
    }
    let decay = ricci_decay_check(m, p, horizon)?;
    if !decay.pass {
        return Err(Error::Precondition(format!(
            "Ricci decay fails: margin {:.3e} at r = {:.6}",
            decay.worst_margin, decay.worst_radius
        )));
    }
    let theta = bishop_gromov_ratio(m, p, &avr_radii(horizon))?.avr.theta;
    let inv = profile_invariants(p, horizon, TailModel::Exact)?;
    Ok(DomainSetup { theta, b: inv.b, b1: inv.b1, ricci_margin: decay.worst_margin })
}

fn record_setup(rep: &mut VerificationReport, s: &DomainSetup, c: f64, radius: f64) {
    rep.record("theta", s.theta)
        .record("B", s.b)
        .record("b1", s.b1)
        .record("r0", radius)
        .record("C", c)
        .record("ricci_worst_margin", s.ricci_margin);
}

fn params_for(m: &ModelManifold, s: &DomainSetup, radius: f64) -> InequalityParams {
    InequalityParams { n: m.dimension(), p: 2, theta: s.theta, b: s.b, b1: s.b1, r0: radius }
}

/// `|∂Ω| ≥ (C − 2(n−1)b₁|Ω|^{1/n})·|Ω|^{(n−1)/n}` on the geodesic ball of
/// radius `ball_radius` about the base point.
pub fn isoperimetric_check(m: &ModelManifold, p: &CurvatureProfile, ball_radius: f64) -> Result<VerificationReport> {
    let setup = domain_setup(m, p, ball_radius)?;
    let c = sobolev_constant_domain(&params_for(m, &setup, ball_radius))?;
    let n = m.dimension() as f64;
    let vol = ball_volume(m, ball_radius)?;
    let area = sphere_area(m, ball_radius)?;
    let rhs = (c - 2.0 * (n - 1.0) * setup.b1 * vol.powf(1.0 / n)) * vol.powf((n - 1.0) / n);

    let mut rep = VerificationReport::new("isoperimetric");
    record_setup(&mut rep, &setup, c, ball_radius);
    let tol = MARGIN_RTOL * area.abs().max(rhs.abs()).max(1.0);
    rep.record("volume", vol)
        .record("area", area)
        .record("lhs", area)
        .record("rhs", rhs)
        .require_nonnegative("margin", area - rhs, tol)
        .tolerance("margin", tol);
    Ok(rep)
}

/// Functional Sobolev inequality for a radial `f` on a geodesic ball.
pub fn sobolev_check_domain(
    m: &ModelManifold,
    p: &CurvatureProfile,
    ball_radius: f64,
    f: &RadialTestFunction,
) -> Result<VerificationReport> {
    f.check_positive(ball_radius)?;
    let setup = domain_setup(m, p, ball_radius)?;
    let c = sobolev_constant_domain(&params_for(m, &setup, ball_radius))?;
    let dim = m.dimension();
    let n = dim as f64;
    let k = dim as i32 - 1;
    let omega = n * unit_ball_volume(dim);
    let kinks = m.kinks();
    let weighted = |g: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(omega * integrate(|r| g(r) * m.phi(r).powi(k), 0.0, ball_radius, &kinks, QUAD)?.value)
    };

    let boundary = f.eval(ball_radius) * sphere_area(m, ball_radius)?;
    let gradient = weighted(&|r| f.deriv(r).abs())?;
    let mass = weighted(&|r| f.eval(r))?;
    let power = weighted(&|r| f.eval(r).powf(n / (n - 1.0)))?;
    let lhs = boundary + gradient + 2.0 * (n - 1.0) * setup.b1 * mass;
    let rhs = c * power.powf((n - 1.0) / n);

    let mut rep = VerificationReport::new("sobolev");
    record_setup(&mut rep, &setup, c, ball_radius);
    let tol = MARGIN_RTOL * lhs.abs().max(rhs.abs()).max(1.0);
    rep.record("boundary_term", boundary)
        .record("gradient_term", gradient)
        .record("mass_term", mass)
        .record("lhs", lhs)
        .record("rhs", rhs)
        .require_nonnegative("margin", lhs - rhs, tol)
        .tolerance("margin", tol);
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmanifoldKind {
    /// Unit `n`-disk in a flat `ℝ^{n+p}`.
    FlatDisk,
    /// Unit `n`-sphere in a flat `ℝ^{n+p}`.
    RoundSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmanifoldSpec {
    pub kind: SubmanifoldKind,
    pub n: usize,
    pub p: usize,
}

impl SubmanifoldSpec {
    /// `|Σ|`
    pub fn area(&self) -> f64 {
        match self.kind {
            SubmanifoldKind::FlatDisk => unit_ball_volume(self.n),
            SubmanifoldKind::RoundSphere => unit_sphere_area(self.n),
        }
    }

    /// `|∂Σ|`
    pub fn boundary_area(&self) -> f64 {
        match self.kind {
            SubmanifoldKind::FlatDisk => unit_sphere_area(self.n - 1),
            SubmanifoldKind::RoundSphere => 0.0,
        }
    }

    /// `|H|`
    pub fn mean_curvature(&self) -> f64 {
        match self.kind {
            SubmanifoldKind::FlatDisk => 0.0,
            SubmanifoldKind::RoundSphere => self.n as f64,
        }
    }
}

/// Submanifold inequality for constant `f` on a unit object at the base
/// point of flat space, where `B = b₁ = 0` and `θ = 1`.
pub fn submanifold_check_flat(s: &SubmanifoldSpec, f_const: f64) -> Result<VerificationReport> {
    if !(f_const > 0.0 && f_const.is_finite()) {
        return Err(Error::invalid(format!("test function value must be positive, got {f_const}")));
    }
    let q = InequalityParams { n: s.n, p: s.p, theta: 1.0, b: 0.0, b1: 0.0, r0: 1.0 };
    let c = sobolev_constant_submanifold(&q)?;
    let n = s.n as f64;
    let area = s.area();
    let lhs = f_const * (s.boundary_area() + s.mean_curvature() * area + area);
    let rhs = c * (f_const.powf(n / (n - 1.0)) * area).powf((n - 1.0) / n);

    let mut rep = VerificationReport::new("submanifold");
    let tol = MARGIN_RTOL * lhs.max(rhs).max(1.0);
    rep.record("C", c)
        .record("area", area)
        .record("boundary_area", s.boundary_area())
        .record("mean_curvature", s.mean_curvature())
        .record("lhs", lhs)
        .record("rhs", rhs)
        .require_nonnegative("margin", lhs - rhs, tol)
        .tolerance("margin", tol);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Status;
    use std::f64::consts::PI;

    fn flat(n: usize) -> InequalityParams {
        InequalityParams { n, p: 2, theta: 1.0, b: 0.0, b1: 0.0, r0: 3.0 }
    }

    #[test]
    fn flat_domain_constants() {
        assert!((sobolev_constant_domain(&flat(2)).unwrap() - 2.0 * PI.sqrt()).abs() < 1e-14);
        let c3 = 3.0 * (4.0 * PI / 3.0).powf(1.0 / 3.0);
        assert!((sobolev_constant_domain(&flat(3)).unwrap() - c3).abs() < 1e-13);
    }

    #[test]
    fn curved_domain_constant() {
        let q = InequalityParams { n: 2, p: 2, theta: 0.5, b: 2.0, b1: 2.0, r0: 1.0 };
        let c = sobolev_constant_domain(&q).unwrap();
        let expect = 2.0 * (PI * 0.5 / (2.0 * (2.0 * 2f64.exp() - 1.0))).sqrt();
        assert!((c - expect).abs() < 1e-14);
        assert!((c - 0.47750).abs() < 5e-5);
    }

    #[test]
    fn submanifold_constants_at_flat_point() {
        let c22 = sobolev_constant_submanifold(&flat(2)).unwrap();
        assert!((c22 - 2.0 * PI.sqrt()).abs() < 1e-13);
        let c32 = sobolev_constant_submanifold(&flat(3)).unwrap();
        assert!((c32 - 3.0 * (4.0 * PI / 3.0).powf(1.0 / 3.0)).abs() < 1e-13);
        let curved = sobolev_constant_submanifold(&InequalityParams { b1: 0.1, r0: 1.0, ..flat(2) }).unwrap();
        assert!(curved < c22);
        let mut q = flat(2);
        q.p = 1;
        assert!(sobolev_constant_submanifold(&q).is_err());
    }

    #[test]
    fn damping_series_is_continuous() {
        let series = damping_factor(1e-13);
        let direct = 2e-13 / (2e-13f64).exp_m1();
        assert!((series - direct).abs() < 1e-9);
        assert_eq!(damping_factor(0.0), 1.0);
    }

    #[test]
    fn params_validation() {
        assert!(sobolev_constant_domain(&InequalityParams { theta: 1.5, ..flat(2) }).is_err());
        assert!(sobolev_constant_domain(&InequalityParams { b1: -1.0, ..flat(2) }).is_err());
        assert!(sobolev_constant_domain(&InequalityParams { n: 1, ..flat(2) }).is_err());
    }

    #[test]
    fn flat_isoperimetric_equality() {
        let m = ModelManifold::euclidean(2).unwrap();
        let rep = isoperimetric_check(&m, &CurvatureProfile::zero(), 1.0).unwrap();
        assert_eq!(rep.status, Status::Pass);
        assert!(rep.get("margin").unwrap().abs() < 1e-9);
        assert!((rep.get("area").unwrap() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn flat_sobolev_constant_and_affine() {
        let m = ModelManifold::euclidean(2).unwrap();
        let zero = CurvatureProfile::zero();
        let one = sobolev_check_domain(&m, &zero, 1.0, &RadialTestFunction::Constant { value: 1.0 }).unwrap();
        assert!(one.get("margin").unwrap().abs() < 1e-9);
        assert!((one.get("lhs").unwrap() - 2.0 * PI).abs() < 1e-10);
        let aff = sobolev_check_domain(&m, &zero, 1.0, &RadialTestFunction::Affine { a: 2.0, b: 1.0 }).unwrap();
        assert!(aff.get("margin").unwrap() > 1e-3);
        assert_eq!(aff.status, Status::Pass);
    }

    #[test]
    fn rejects_nonpositive_test_function() {
        let m = ModelManifold::euclidean(2).unwrap();
        let f = RadialTestFunction::Affine { a: 1.0, b: 2.0 };
        assert!(sobolev_check_domain(&m, &CurvatureProfile::zero(), 1.0, &f).is_err());
    }

    #[test]
    fn submanifold_examples() {
        let disk = SubmanifoldSpec { kind: SubmanifoldKind::FlatDisk, n: 2, p: 2 };
        let rep = submanifold_check_flat(&disk, 1.0).unwrap();
        assert!((rep.get("lhs").unwrap() - 3.0 * PI).abs() < 1e-12);
        assert!((rep.get("rhs").unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((rep.get("margin").unwrap() - PI).abs() < 1e-12);
        let sphere = SubmanifoldSpec { kind: SubmanifoldKind::RoundSphere, n: 2, p: 2 };
        let rep = submanifold_check_flat(&sphere, 1.0).unwrap();
        assert!((rep.get("lhs").unwrap() - 12.0 * PI).abs() < 1e-11);
        assert!((rep.get("rhs").unwrap() - 4.0 * PI).abs() < 1e-11);
        let disk3 = SubmanifoldSpec { kind: SubmanifoldKind::FlatDisk, n: 2, p: 3 };
        assert_eq!(submanifold_check_flat(&disk3, 1.0).unwrap().status, Status::Pass);
    }
}
