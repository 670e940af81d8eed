//! Integrators for the scalar comparison equations `y'' = c(t)·y` and the
//! matrix Jacobi system `P'' = −P·S(t)`.
//!
//! Both run on an adaptive Dormand–Prince 5(4) pair with its fourth-order
//! continuous extension. Coefficients declare their kinks; every kink is a
//! forced step boundary so the method keeps its order on each smooth piece.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::profiles::{CurvatureProfile, ScaledProfile};
use crate::quadrature::geometric_grid;

/// A scalar coefficient function `c(t) ≥ 0`.
pub trait Coefficient: Sync {
    fn eval(&self, t: f64) -> f64;

    /// Points where `c` is only continuous.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl Coefficient for CurvatureProfile {
    fn eval(&self, t: f64) -> f64 {
        CurvatureProfile::eval(self, t)
    }
    fn kinks(&self) -> Vec<f64> {
        CurvatureProfile::kinks(self)
    }
}

impl Coefficient for ScaledProfile {
    fn eval(&self, t: f64) -> f64 {
        ScaledProfile::eval(self, t)
    }
    fn kinks(&self) -> Vec<f64> {
        ScaledProfile::kinks(self)
    }
}

/// `c(t) ≡ value`.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Coefficient for Constant {
    fn eval(&self, _t: f64) -> f64 {
        self.0
    }
}

/// Closure-backed coefficient with explicit kink locations.
pub struct FnCoefficient<F> {
    f: F,
    kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> FnCoefficient<F> {
    pub fn new(f: F, kinks: Vec<f64>) -> Self {
        Self { f, kinks }
    }
}

impl<F: Fn(f64) -> f64 + Sync> Coefficient for FnCoefficient<F> {
    fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }
    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 2_000_000;

/// Piecewise-polynomial dense trajectory of a first-order system.
#[derive(Debug, Clone)]
pub(crate) struct Trajectory {
    dim: usize,
    /// Step boundaries; `knots.len() == steps + 1`.
    knots: Vec<f64>,
    /// State at every knot, flattened.
    states: Vec<f64>,
    /// Five continuous-extension coefficient vectors per step, flattened.
    cont: Vec<f64>,
}

impl Trajectory {
    fn steps(&self) -> usize {
        self.knots.len() - 1
    }

    pub(crate) fn horizon(&self) -> f64 {
        *self.knots.last().expect("trajectory has at least one knot")
    }

    pub(crate) fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub(crate) fn state_at_knot(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let start = self.knots[0];
        let end = self.horizon();
        let slack = 1e-12 * end.abs().max(1.0);
        assert!(t >= start - slack && t <= end + slack, "t = {t} outside the integrated interval [{start}, {end}]");
        if self.steps() == 0 {
            return (usize::MAX, 0.0);
        }
        let i = self.knots.partition_point(|&k| k <= t).clamp(1, self.steps()) - 1;
        let h = self.knots[i + 1] - self.knots[i];
        (i, (t - self.knots[i]) / h)
    }

    pub(crate) fn eval(&self, t: f64, out: &mut [f64]) {
        let (i, th) = self.locate(t);
        if i == usize::MAX {
            out.copy_from_slice(self.state_at_knot(0));
            return;
        }
        let th1 = 1.0 - th;
        let d = self.dim;
        let base = i * 5 * d;
        for (j, o) in out.iter_mut().enumerate() {
            let r = |k: usize| self.cont[base + k * d + j];
            *o = r(0) + th * (r(1) + th1 * (r(2) + th * (r(3) + th1 * r(4))));
        }
    }

    /// Time derivative of the continuous extension.
    pub(crate) fn eval_derivative(&self, t: f64, out: &mut [f64]) {
        let (i, th) = self.locate(t);
        if i == usize::MAX {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let h = self.knots[i + 1] - self.knots[i];
        let th1 = 1.0 - th;
        let d = self.dim;
        let base = i * 5 * d;
        for (j, o) in out.iter_mut().enumerate() {
            let r = |k: usize| self.cont[base + k * d + j];
            let a = r(3) + th1 * r(4);
            let b = r(2) + th * a;
            let db = a - th * r(4);
            let dc = -b + th1 * db;
            let c = th1 * b;
            *o = (r(1) + c + th * dc) / h;
        }
    }
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t_end` with forced step
/// boundaries at `breaks`.
pub(crate) fn integrate_system<F>(
    mut rhs: F,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if !(t_end > t0 && t_end.is_finite()) {
        return Err(Error::invalid(format!("integration interval [{t0}, {t_end}] is empty or infinite")));
    }
    let dim = y0.len();
    let mut segments: Vec<f64> = breaks.iter().copied().filter(|&b| b > t0 && b < t_end).collect();
    segments.sort_by(f64::total_cmp);
    segments.dedup();
    segments.push(t_end);

    let mut traj = Trajectory { dim, knots: vec![t0], states: y0.to_vec(), cont: Vec::new() };

    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let mut steps = 0usize;

    for &seg_end in &segments {
        let seg_len = seg_end - t;
        let mut h = initial_step(&mut rhs, t, &y, seg_len, tol, &mut k[0]);
        while t < seg_end {
            if steps >= MAX_STEPS {
                return Err(Error::numerical(format!("step budget exhausted at t = {t}")));
            }
            let last = t + h >= seg_end - 1e-14 * seg_end.abs().max(1.0);
            if last {
                h = seg_end - t;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::numerical(format!("step size underflow at t = {t} (h = {h:e})")));
            }

            dp_stages(&mut rhs, t, h, &y, &mut k, &mut tmp, &mut y_new);
            for j in 0..dim {
                err[j] = h * (E1 * k[0][j] + E3 * k[2][j] + E4 * k[3][j] + E5 * k[4][j] + E6 * k[5][j] + E7 * k[6][j]);
            }
            let norm = (err
                .iter()
                .enumerate()
                .map(|(j, e)| {
                    let sc = tol + tol * y[j].abs().max(y_new[j].abs());
                    (e / sc).powi(2)
                })
                .sum::<f64>()
                / dim as f64)
                .sqrt();
            if !norm.is_finite() {
                return Err(Error::numerical(format!("non-finite state near t = {t}")));
            }

            if norm <= 1.0 {
                steps += 1;
                // Continuous-extension vectors, laid out as five blocks of `dim`.
                let mut block = vec![0.0; 5 * dim];
                for j in 0..dim {
                    let ydiff = y_new[j] - y[j];
                    let bspl = h * k[0][j] - ydiff;
                    block[j] = y[j];
                    block[dim + j] = ydiff;
                    block[2 * dim + j] = bspl;
                    block[3 * dim + j] = ydiff - h * k[6][j] - bspl;
                    block[4 * dim + j] =
                        h * (D1 * k[0][j] + D3 * k[2][j] + D4 * k[3][j] + D5 * k[4][j] + D6 * k[5][j] + D7 * k[6][j]);
                }
                traj.cont.extend_from_slice(&block);
                t = if last { seg_end } else { t + h };
                y.copy_from_slice(&y_new);
                traj.knots.push(t);
                traj.states.extend_from_slice(&y);
                // FSAL: the last stage is the derivative at the new point.
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                let fac = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                h *= fac;
            } else {
                h *= (0.9 * norm.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
    }
    Ok(traj)
}

fn dp_stages<F>(rhs: &mut F, t: f64, h: f64, y: &[f64], k: &mut [Vec<f64>], tmp: &mut [f64], y_new: &mut [f64])
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y.len();
    for j in 0..dim {
        tmp[j] = y[j] + h * A21 * k[0][j];
    }
    rhs(t + C2 * h, tmp, &mut k[1]);
    for j in 0..dim {
        tmp[j] = y[j] + h * (A31 * k[0][j] + A32 * k[1][j]);
    }
    rhs(t + C3 * h, tmp, &mut k[2]);
    for j in 0..dim {
        tmp[j] = y[j] + h * (A41 * k[0][j] + A42 * k[1][j] + A43 * k[2][j]);
    }
    rhs(t + C4 * h, tmp, &mut k[3]);
    for j in 0..dim {
        tmp[j] = y[j] + h * (A51 * k[0][j] + A52 * k[1][j] + A53 * k[2][j] + A54 * k[3][j]);
    }
    rhs(t + C5 * h, tmp, &mut k[4]);
    for j in 0..dim {
        tmp[j] = y[j] + h * (A61 * k[0][j] + A62 * k[1][j] + A63 * k[2][j] + A64 * k[3][j] + A65 * k[4][j]);
    }
    rhs(t + h, tmp, &mut k[5]);
    for j in 0..dim {
        y_new[j] = y[j] + h * (A71 * k[0][j] + A73 * k[2][j] + A74 * k[3][j] + A75 * k[4][j] + A76 * k[5][j]);
    }
    rhs(t + h, y_new, &mut k[6]);
}

fn initial_step<F>(rhs: &mut F, t: f64, y: &[f64], seg_len: f64, tol: f64, f0: &mut [f64]) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    rhs(t, y, f0);
    let dim = y.len() as f64;
    let d0 = (y.iter().map(|v| (v / (tol + tol * v.abs())).powi(2)).sum::<f64>() / dim).sqrt();
    let d1 = (y.iter().zip(f0.iter()).map(|(v, f)| (f / (tol + tol * v.abs())).powi(2)).sum::<f64>() / dim).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(seg_len).max(1e-12 * seg_len)
}

/// What a scalar solution represents; carried for reporting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionRole {
    H1,
    H2,
    Psi1,
    Psi2,
    ShiftedF,
    Generic,
}

/// Dense-output solution of `y'' = c(t)·y` on `[0, T]`.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    role: SolutionRole,
    traj: Trajectory,
}

impl OdeSolution {
    pub fn role(&self) -> SolutionRole {
        self.role
    }

    pub(crate) fn with_role(mut self, role: SolutionRole) -> Self {
        self.role = role;
        self
    }

    /// Right end of the integrated interval.
    pub fn horizon(&self) -> f64 {
        self.traj.horizon()
    }

    /// Accepted step boundaries.
    pub fn grid(&self) -> &[f64] {
        self.traj.knots()
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.traj.knots.len()).map(|i| self.traj.state_at_knot(i)[0]).collect()
    }

    pub fn derivs(&self) -> Vec<f64> {
        (0..self.traj.knots.len()).map(|i| self.traj.state_at_knot(i)[1]).collect()
    }

    pub fn value(&self, t: f64) -> f64 {
        let mut out = [0.0; 2];
        self.traj.eval(t, &mut out);
        out[0]
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let mut out = [0.0; 2];
        self.traj.eval(t, &mut out);
        out[1]
    }

    pub fn value_and_deriv(&self, t: f64) -> (f64, f64) {
        let mut out = [0.0; 2];
        self.traj.eval(t, &mut out);
        (out[0], out[1])
    }

    /// `(t, y, y')` on a log-spaced grid from `t_min` to the horizon.
    pub fn sample_log(&self, t_min: f64, n: usize) -> Vec<(f64, f64, f64)> {
        geometric_grid(t_min, self.horizon(), n)
            .into_iter()
            .map(|t| {
                let (v, d) = self.value_and_deriv(t);
                (t, v, d)
            })
            .collect()
    }
}

/// Solve `y'' = coeff(t)·y`, `y(0) = v0`, `y'(0) = d0` on `[0, horizon]`.
pub fn solve_linear_second_order<C: Coefficient + ?Sized>(
    coeff: &C,
    v0: f64,
    d0: f64,
    horizon: f64,
    tol: f64,
) -> Result<OdeSolution> {
    let kinks = coeff.kinks();
    let traj = integrate_system(
        |t, y, dy| {
            dy[0] = y[1];
            dy[1] = coeff.eval(t) * y[0];
        },
        &[v0, d0],
        0.0,
        horizon,
        &kinks,
        tol,
    )?;
    Ok(OdeSolution { role: SolutionRole::Generic, traj })
}

/// `h₁` and `h₂` of a coefficient: initial data `(0, 1)` and `(1, 0)`.
pub fn fundamental_pair<C: Coefficient + ?Sized>(
    coeff: &C,
    horizon: f64,
    tol: f64,
) -> Result<(OdeSolution, OdeSolution)> {
    let h1 = solve_linear_second_order(coeff, 0.0, 1.0, horizon, tol)?.with_role(SolutionRole::H1);
    let h2 = solve_linear_second_order(coeff, 1.0, 0.0, horizon, tol)?.with_role(SolutionRole::H2);
    Ok((h1, h2))
}

/// `ψ₁`, `ψ₂` against a scaled profile.
pub fn psi_pair(coeff: &ScaledProfile, horizon: f64, tol: f64) -> Result<(OdeSolution, OdeSolution)> {
    let (a, b) = fundamental_pair(coeff, horizon, tol)?;
    Ok((a.with_role(SolutionRole::Psi1), b.with_role(SolutionRole::Psi2)))
}

/// Solve `f'' = λ(|t − r|)·f`, `f(0) = 0`, `f'(0) = 1`, restarting at `t = r`.
pub fn solve_shifted(p: &CurvatureProfile, r: f64, horizon: f64, tol: f64) -> Result<OdeSolution> {
    if !(0.0..=horizon).contains(&r) {
        return Err(Error::invalid(format!("shift r = {r} must lie in [0, {horizon}]")));
    }
    let coeff = ScaledProfile { base: p.clone(), speed: 1.0, center: r };
    Ok(solve_linear_second_order(&coeff, 0.0, 1.0, horizon, tol)?.with_role(SolutionRole::ShiftedF))
}

/// `h₁′h₂ − h₂′h₁`; equals 1 at `t = 0` for the fundamental pair and is
/// conserved by the exact flow.
pub fn wronskian(h1: &OdeSolution, h2: &OdeSolution, t: f64) -> f64 {
    let (a, da) = h1.value_and_deriv(t);
    let (b, db) = h2.value_and_deriv(t);
    da * b - db * a
}

/// A symmetric-matrix-valued curvature `S(t)`.
pub trait MatrixCoefficient: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, out: &mut DMatrix<f64>);
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone)]
pub struct ConstantMatrix(pub DMatrix<f64>);

impl MatrixCoefficient for ConstantMatrix {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn eval(&self, _t: f64, out: &mut DMatrix<f64>) {
        out.copy_from(&self.0);
    }
}

/// Relative floor on `|det P|` below which `Q = P⁻¹P′` is not formed.
pub const DET_CONDITIONING_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct JacobiSample {
    pub t: f64,
    pub p: DMatrix<f64>,
    pub dp: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub det: f64,
    /// `P⁻¹P′`, present where `P` is well conditioned.
    pub q: Option<DMatrix<f64>>,
}

/// Matrix solution of `P'' = −P·S` sampled on a uniform grid, with dense
/// access through [`JacobiMatrixSolution::at`].
#[derive(Debug, Clone)]
pub struct JacobiMatrixSolution {
    dim: usize,
    traj: Trajectory,
    pub samples: Vec<JacobiSample>,
    /// First `t > 0` with `det P ≤ 0`, if any.
    pub conjugate_time: Option<f64>,
}

fn unpack(dim: usize, state: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = dim * dim;
    (DMatrix::from_row_slice(dim, dim, &state[..m]), DMatrix::from_row_slice(dim, dim, &state[m..2 * m]))
}

impl JacobiMatrixSolution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.traj.horizon()
    }

    /// `(P(t), P′(t))` from the dense output.
    pub fn at(&self, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut buf = vec![0.0; 2 * self.dim * self.dim];
        self.traj.eval(t, &mut buf);
        unpack(self.dim, &buf)
    }

    pub fn det(&self, t: f64) -> f64 {
        self.at(t).0.determinant()
    }

    /// `P″(t)` from the derivative of the continuous extension, which does
    /// not consult `S`.
    fn second_derivative(&self, t: f64) -> DMatrix<f64> {
        let mut buf = vec![0.0; 2 * self.dim * self.dim];
        self.traj.eval_derivative(t, &mut buf);
        unpack(self.dim, &buf).1
    }
}

/// Solve `P'' = −P·S(t)` with `P(0) = p0`, `P′(0) = dp0` on `[0, horizon]`,
/// sampled at `samples` uniform points.
pub fn solve_jacobi_matrix_sampled<S: MatrixCoefficient + ?Sized>(
    s: &S,
    p0: &DMatrix<f64>,
    dp0: &DMatrix<f64>,
    horizon: f64,
    tol: f64,
    samples: usize,
) -> Result<JacobiMatrixSolution> {
    let dim = s.dim();
    if p0.shape() != (dim, dim) || dp0.shape() != (dim, dim) {
        return Err(Error::invalid(format!(
            "initial data shapes {:?}, {:?} do not match S of dimension {dim}",
            p0.shape(),
            dp0.shape()
        )));
    }
    let m = dim * dim;
    let mut y0 = Vec::with_capacity(2 * m);
    y0.extend(p0.transpose().iter());
    y0.extend(dp0.transpose().iter());

    let mut s_buf = DMatrix::zeros(dim, dim);
    let traj = integrate_system(
        |t, y, dy| {
            s.eval(t, &mut s_buf);
            dy[..m].copy_from_slice(&y[m..]);
            // (P S)_{ij} = Σ_k P_{ik} S_{kj}, row-major.
            for i in 0..dim {
                for j in 0..dim {
                    let mut acc = 0.0;
                    for k in 0..dim {
                        acc += y[i * dim + k] * s_buf[(k, j)];
                    }
                    dy[m + i * dim + j] = -acc;
                }
            }
        },
        &y0,
        0.0,
        horizon,
        &s.kinks(),
        tol,
    )?;

    let mut sol = JacobiMatrixSolution { dim, traj, samples: Vec::new(), conjugate_time: None };

    // Conjugate points: first sign change of det P across step knots, then bisection.
    let mut prev: Option<(f64, f64)> = None;
    for (i, &t) in sol.traj.knots().iter().enumerate() {
        let (p, _) = unpack(dim, sol.traj.state_at_knot(i));
        let d = p.determinant();
        if t > 0.0 && d <= 0.0 {
            let (mut lo, mut hi) = prev.map(|(tp, _)| (tp, t)).unwrap_or((0.0, t));
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if sol.det(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            sol.conjugate_time = Some(hi);
            break;
        }
        prev = Some((t, d));
    }

    let n = samples.max(2);
    let mut raw = Vec::with_capacity(n);
    for i in 0..n {
        let t = horizon * i as f64 / (n - 1) as f64;
        let (p, dp) = sol.at(t);
        let det = p.determinant();
        let mut sm = DMatrix::zeros(dim, dim);
        s.eval(t, &mut sm);
        raw.push((t, p, dp, sm, det));
    }
    let max_det = raw.iter().fold(0.0f64, |m, r| m.max(r.4.abs()));
    sol.samples = raw
        .into_iter()
        .map(|(t, p, dp, s, det)| {
            let q = if det.abs() >= DET_CONDITIONING_FLOOR * max_det && det.abs() > 0.0 {
                p.clone().lu().solve(&dp)
            } else {
                None
            };
            JacobiSample { t, p, dp, s, det, q }
        })
        .collect();
    Ok(sol)
}

/// [`solve_jacobi_matrix_sampled`] with 201 samples.
pub fn solve_jacobi_matrix<S: MatrixCoefficient + ?Sized>(
    s: &S,
    p0: &DMatrix<f64>,
    dp0: &DMatrix<f64>,
    horizon: f64,
    tol: f64,
) -> Result<JacobiMatrixSolution> {
    solve_jacobi_matrix_sampled(s, p0, dp0, horizon, tol, 201)
}

/// Largest entry of `Q′ + Q² + S` over the samples where `Q` is defined,
/// with `Q′` built from the interpolant's own derivative.
pub fn riccati_residual(sol: &JacobiMatrixSolution) -> f64 {
    sol.samples
        .iter()
        .filter_map(|smp| {
            let q = smp.q.as_ref()?;
            let p_inv = smp.p.clone().try_inverse()?;
            // Q' = P⁻¹P'' − Q², so Q' + Q² + S = P⁻¹P'' + S.
            let dq = &p_inv * sol.second_derivative(smp.t) - q * q;
            let r = dq + q * q + &smp.s;
            Some(r.amax())
        })
        .fold(0.0, f64::max)
}

/// Largest `|Q − Qᵀ|` entry over the samples.
pub fn q_symmetry_defect(sol: &JacobiMatrixSolution) -> f64 {
    sol.samples.iter().filter_map(|s| s.q.as_ref().map(|q| (q - q.transpose()).amax())).fold(0.0, f64::max)
}
