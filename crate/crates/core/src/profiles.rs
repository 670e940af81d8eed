//! Curvature-decay profiles `λ(t)` and their invariants.
//!
//! A profile is a nonnegative, nonincreasing, continuous function on
//! `[0, ∞)` whose quadratic decay constant `B = limsup t²λ(t)` and
//! integral `b₁ = ∫λ` are both finite.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{geometric_grid, integrate, QuadTolerance};

/// Relative slack allowed when testing monotonicity on a grid.
pub const MONOTONE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Zero,
    /// `B₀ / (1 + t²)`
    Rational,
    /// `c / (1 + t)²`
    Euler,
    /// `max(0, a − b·t)`
    LinearBump,
    /// `min(c, c / t²)`
    PiecewiseMin,
    /// Piecewise-linear table with a fitted `C / t²` tail.
    Tabulated,
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProfileKind::Zero => "zero",
            ProfileKind::Rational => "rational",
            ProfileKind::Euler => "euler",
            ProfileKind::LinearBump => "linear-bump",
            ProfileKind::PiecewiseMin => "piecewise-min",
            ProfileKind::Tabulated => "tabulated",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    ts: Vec<f64>,
    values: Vec<f64>,
    /// Tail constant `C` so that `λ(t) = C / t²` beyond the last node.
    tail: f64,
}

impl Table {
    fn eval(&self, t: f64) -> f64 {
        let last = *self.ts.last().expect("table is nonempty");
        if t >= last {
            return if self.tail == 0.0 { 0.0 } else { self.tail / (t * t) };
        }
        let i = self.ts.partition_point(|&x| x <= t).saturating_sub(1);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let w = (t - t0) / (t1 - t0);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    fn table_integral(&self) -> f64 {
        self.ts.windows(2).zip(self.values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Zero,
    Rational { b0: f64 },
    Euler { c: f64 },
    LinearBump { a: f64, b: f64 },
    PiecewiseMin { c: f64 },
    Tabulated(Table),
}

/// An immutable curvature-decay profile.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    repr: Repr,
}

fn check_param(name: &str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::invalid(format!("{name} must be finite, got {value}")));
    }
    if value < 0.0 {
        return Err(Error::invalid(format!("{name} must be nonnegative, got {value}")));
    }
    Ok(value)
}

impl CurvatureProfile {
    pub fn zero() -> Self {
        Self { repr: Repr::Zero }
    }

    pub fn rational(b0: f64) -> Result<Self> {
        Ok(Self { repr: Repr::Rational { b0: check_param("rational B0", b0)? } })
    }

    pub fn euler(c: f64) -> Result<Self> {
        Ok(Self { repr: Repr::Euler { c: check_param("euler c", c)? } })
    }

    pub fn linear_bump(a: f64, b: f64) -> Result<Self> {
        let a = check_param("linear-bump a", a)?;
        let b = check_param("linear-bump b", b)?;
        if a > 0.0 && b == 0.0 {
            return Err(Error::invalid("linear-bump with b = 0 and a > 0 is not integrable"));
        }
        Ok(Self { repr: Repr::LinearBump { a, b } })
    }

    pub fn piecewise_min(c: f64) -> Result<Self> {
        Ok(Self { repr: Repr::PiecewiseMin { c: check_param("piecewise-min c", c)? } })
    }

    /// Tabulated profile; rejects tables that increase anywhere beyond
    /// [`MONOTONE_RTOL`].
    pub fn tabulated(ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let p = Self::tabulated_unchecked(ts, values)?;
        if let Some(v) = p.table_violations().first() {
            return Err(Error::invalid(format!(
                "tabulated profile violates its hypotheses at node {} (t = {}): {}",
                v.index, v.t, v.kind
            )));
        }
        Ok(p)
    }

    /// Tabulated profile with only structural checks (shape of the table).
    /// Monotonicity and sign are left to [`validate_profile`].
    pub fn tabulated_unchecked(ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ts.len() != values.len() {
            return Err(Error::invalid("tabulated profile: t and λ columns differ in length"));
        }
        if ts.len() < 2 {
            return Err(Error::invalid("tabulated profile needs at least two rows"));
        }
        if ts[0] != 0.0 {
            return Err(Error::invalid("tabulated profile must start at t = 0"));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("tabulated profile: t must be strictly increasing"));
        }
        if ts.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("tabulated profile contains non-finite entries"));
        }
        let last_t = ts[ts.len() - 1];
        let tail = values[values.len() - 1].max(0.0) * last_t * last_t;
        Ok(Self { repr: Repr::Tabulated(Table { ts, values, tail }) })
    }

    /// Load a two-column `(t, λ)` text table. Blank lines and `#` comments
    /// are skipped; columns may be separated by whitespace or commas.
    pub fn load_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let (ts, values) = parse_two_columns(&text, path)?;
        Self::tabulated(ts, values)
    }

    pub fn kind(&self) -> ProfileKind {
        match self.repr {
            Repr::Zero => ProfileKind::Zero,
            Repr::Rational { .. } => ProfileKind::Rational,
            Repr::Euler { .. } => ProfileKind::Euler,
            Repr::LinearBump { .. } => ProfileKind::LinearBump,
            Repr::PiecewiseMin { .. } => ProfileKind::PiecewiseMin,
            Repr::Tabulated(_) => ProfileKind::Tabulated,
        }
    }

    /// Scalar parameters; for tabulated profiles this is empty.
    pub fn params(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Zero | Repr::Tabulated(_) => vec![],
            Repr::Rational { b0 } => vec![*b0],
            Repr::Euler { c } | Repr::PiecewiseMin { c } => vec![*c],
            Repr::LinearBump { a, b } => vec![*a, *b],
        }
    }

    /// Last table node for tabulated profiles.
    pub fn domain_cap(&self) -> Option<f64> {
        match &self.repr {
            Repr::Tabulated(t) => t.ts.last().copied(),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0 || t.is_nan());
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::Rational { b0 } => b0 / (1.0 + t * t),
            Repr::Euler { c } => c / ((1.0 + t) * (1.0 + t)),
            Repr::LinearBump { a, b } => (a - b * t).max(0.0),
            Repr::PiecewiseMin { c } => {
                if t <= 1.0 {
                    *c
                } else {
                    c / (t * t)
                }
            }
            Repr::Tabulated(table) => table.eval(t),
        }
    }

    /// Points where `λ` fails to be smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.repr {
            Repr::LinearBump { a, b } if *a > 0.0 => vec![a / b],
            Repr::PiecewiseMin { c } if *c > 0.0 => vec![1.0],
            Repr::Tabulated(t) => t.ts[1..].to_vec(),
            _ => vec![],
        }
    }

    /// True when `λ ≡ 0`.
    pub fn is_flat(&self) -> bool {
        match &self.repr {
            Repr::Zero => true,
            Repr::Rational { b0 } => *b0 == 0.0,
            Repr::Euler { c } | Repr::PiecewiseMin { c } => *c == 0.0,
            Repr::LinearBump { a, .. } => *a == 0.0,
            Repr::Tabulated(t) => t.values.iter().all(|&v| v == 0.0),
        }
    }

    fn table_violations(&self) -> Vec<Violation> {
        let Repr::Tabulated(table) = &self.repr else {
            return vec![];
        };
        let mut out = Vec::new();
        for (i, (&t, &v)) in table.ts.iter().zip(&table.values).enumerate() {
            if v < 0.0 {
                out.push(Violation { index: i, t, kind: ViolationKind::Negative });
            }
            if i > 0 {
                let prev = table.values[i - 1];
                if v > prev + MONOTONE_RTOL * prev.abs() {
                    out.push(Violation { index: i, t, kind: ViolationKind::Increasing });
                }
            }
        }
        out
    }
}

/// Construct a profile from a kind tag and its parameter list.
pub fn make_profile(kind: ProfileKind, params: &[f64]) -> Result<CurvatureProfile> {
    let expect = |n: usize| -> Result<()> {
        if params.len() == n {
            Ok(())
        } else {
            Err(Error::invalid(format!("{kind} profile takes {n} parameter(s), got {}", params.len())))
        }
    };
    match kind {
        ProfileKind::Zero => {
            expect(0)?;
            Ok(CurvatureProfile::zero())
        }
        ProfileKind::Rational => {
            expect(1)?;
            CurvatureProfile::rational(params[0])
        }
        ProfileKind::Euler => {
            expect(1)?;
            CurvatureProfile::euler(params[0])
        }
        ProfileKind::LinearBump => {
            expect(2)?;
            CurvatureProfile::linear_bump(params[0], params[1])
        }
        ProfileKind::PiecewiseMin => {
            expect(1)?;
            CurvatureProfile::piecewise_min(params[0])
        }
        ProfileKind::Tabulated => {
            // Inline tables are flattened as t0, λ0, t1, λ1, ...
            if params.len() < 4 || !params.len().is_multiple_of(2) {
                return Err(Error::invalid(
                    "inline tabulated profile takes an even number (>= 4) of values t0, λ0, t1, λ1, ...",
                ));
            }
            let ts = params.iter().step_by(2).copied().collect();
            let vs = params.iter().skip(1).step_by(2).copied().collect();
            CurvatureProfile::tabulated(ts, vs)
        }
    }
}

pub(crate) fn parse_two_columns(text: &str, path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), line: lineno + 1, message };
        if fields.len() != 2 {
            return Err(parse_err(format!("expected 2 columns, found {}", fields.len())));
        }
        let x: f64 = fields[0].parse().map_err(|e| parse_err(format!("{e}: {:?}", fields[0])))?;
        let y: f64 = fields[1].parse().map_err(|e| parse_err(format!("{e}: {:?}", fields[1])))?;
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Negative,
    Increasing,
    Jump,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Negative => "negative value",
            ViolationKind::Increasing => "increases",
            ViolationKind::Jump => "jump discontinuity",
        })
    }
}

/// A hypothesis violation found by [`validate_profile`]. `index` is the
/// table row for tabulated profiles and the grid index otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    pub kind: ViolationKind,
}

/// Check nonnegativity, monotonicity and continuity on a uniform grid of
/// spacing `step` over `[0, horizon]`. Tabulated profiles are checked on
/// their own nodes.
pub fn validate_profile(p: &CurvatureProfile, step: f64, horizon: f64) -> Vec<Violation> {
    if matches!(p.repr, Repr::Tabulated(_)) {
        return p.table_violations();
    }
    assert!(step > 0.0 && horizon > 0.0, "validate_profile needs step, horizon > 0");
    let n = (horizon / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(horizon)).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| p.eval(t)).collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = Vec::new();
    for i in 0..vals.len() {
        if vals[i] < 0.0 || !vals[i].is_finite() {
            out.push(Violation { index: i, t: grid[i], kind: ViolationKind::Negative });
        }
        if i == 0 {
            continue;
        }
        let (prev, cur) = (vals[i - 1], vals[i]);
        if cur > prev + MONOTONE_RTOL * prev.abs() {
            out.push(Violation { index: i, t: grid[i], kind: ViolationKind::Increasing });
        }
        let gap = (cur - prev).abs();
        if gap > 1e-3 * scale && has_jump(p, grid[i - 1], grid[i], gap) {
            out.push(Violation { index: i, t: grid[i], kind: ViolationKind::Jump });
        }
    }
    out
}

/// Bisect toward the largest increment; a continuous function's increment
/// shrinks with the bracket, a jump's does not.
fn has_jump(p: &CurvatureProfile, mut lo: f64, mut hi: f64, gap: f64) -> bool {
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let left = (p.eval(mid) - p.eval(lo)).abs();
        let right = (p.eval(hi) - p.eval(mid)).abs();
        if left >= right {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (p.eval(hi) - p.eval(lo)).abs() > 0.5 * gap
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TailModel {
    /// Closed forms where the kind allows them.
    #[default]
    Exact,
    /// Sample `t²λ` near the horizon and integrate a fitted `C / t²` tail.
    PowerLawFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileInvariants {
    /// `limsup t²λ(t)`
    pub b: f64,
    /// `∫₀^∞ λ`
    pub b1: f64,
    /// Contribution of the fitted tail to `b1`.
    pub tail_estimate_error: f64,
}

/// Compute `B` and `b₁`.
pub fn profile_invariants(p: &CurvatureProfile, horizon: f64, tail_model: TailModel) -> Result<ProfileInvariants> {
    if tail_model == TailModel::Exact {
        let (b, b1, tail) = match &p.repr {
            Repr::Zero => (0.0, 0.0, 0.0),
            Repr::Rational { b0 } => (*b0, b0 * std::f64::consts::FRAC_PI_2, 0.0),
            Repr::Euler { c } => (*c, *c, 0.0),
            Repr::LinearBump { a, b } => (0.0, if *a == 0.0 { 0.0 } else { a * a / (2.0 * b) }, 0.0),
            Repr::PiecewiseMin { c } => (*c, 2.0 * c, 0.0),
            Repr::Tabulated(table) => {
                let last = *table.ts.last().expect("nonempty");
                let tail = if table.tail == 0.0 { 0.0 } else { table.tail / last };
                (table.tail, table.table_integral() + tail, tail)
            }
        };
        return Ok(ProfileInvariants { b, b1, tail_estimate_error: tail });
    }

    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    let sup = geometric_grid(0.5 * horizon, horizon, 201).into_iter().map(|t| t * t * p.eval(t)).fold(0.0f64, f64::max);
    let fit = horizon * horizon * p.eval(horizon);
    let body = integrate(|t| p.eval(t), 0.0, horizon, &p.kinks(), QuadTolerance::new(1e-14, 1e-12))?;
    let tail = fit / horizon;
    Ok(ProfileInvariants { b: sup.max(fit), b1: body.value + tail, tail_estimate_error: tail + body.error })
}

/// `t ↦ c²·λ(|d₀ − c·t|)`: the profile seen along a geodesic of speed `c`
/// starting at distance `d₀` from the base point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledProfile {
    pub base: CurvatureProfile,
    pub speed: f64,
    pub center: f64,
}

impl ScaledProfile {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.speed * self.speed * self.base.eval((self.center - self.speed * t).abs())
    }

    /// Parameter values where the composed function may have a kink.
    pub fn kinks(&self) -> Vec<f64> {
        if self.speed == 0.0 {
            return vec![];
        }
        let mut out = vec![self.center / self.speed];
        for k in self.base.kinks() {
            out.push((self.center + k) / self.speed);
            if self.center >= k {
                out.push((self.center - k) / self.speed);
            }
        }
        out.retain(|&t| t > 0.0);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

pub fn scale_profile(p: &CurvatureProfile, speed: f64, center: f64) -> Result<ScaledProfile> {
    if !(0.0..=1.0).contains(&speed) {
        return Err(Error::invalid(format!("speed must lie in [0, 1], got {speed}")));
    }
    if !(center >= 0.0 && center.is_finite()) {
        return Err(Error::invalid(format!("center must be nonnegative, got {center}")));
    }
    Ok(ScaledProfile { base: p.clone(), speed, center })
}

/// Draw a profile of a random built-in kind. Parameter ranges keep every
/// draw's support and decay constant moderate so long-horizon checks stay
/// cheap.
pub fn random_profile<R: Rng + ?Sized>(rng: &mut R) -> CurvatureProfile {
    let draw = match rng.gen_range(0..5) {
        0 => CurvatureProfile::rational(rng.gen_range(0.05..2.0)),
        1 => CurvatureProfile::euler(rng.gen_range(0.05..3.0)),
        2 => CurvatureProfile::linear_bump(rng.gen_range(0.1..2.0), rng.gen_range(0.3..2.0)),
        3 => CurvatureProfile::piecewise_min(rng.gen_range(0.05..1.5)),
        _ => {
            // Monotone table on [0, 4]: cumulative random decrements.
            let ts: Vec<f64> = (0..9).map(|i| 0.5 * i as f64).collect();
            let mut v = rng.gen_range(0.2..1.5);
            let mut vals = Vec::with_capacity(ts.len());
            for _ in &ts {
                vals.push(v);
                v *= rng.gen_range(0.5..1.0);
            }
            CurvatureProfile::tabulated(ts, vals)
        }
    };
    draw.expect("random draws stay inside the accepted parameter ranges")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn make_profile_examples() {
        let z = make_profile(ProfileKind::Zero, &[]).unwrap();
        assert_eq!(z.eval(5.0), 0.0);
        let r = make_profile(ProfileKind::Rational, &[1.0]).unwrap();
        assert_eq!(r.eval(1.0), 0.5);
        let e = make_profile(ProfileKind::Euler, &[2.0]).unwrap();
        assert_eq!(e.eval(0.0), 2.0);
        assert_eq!(e.eval(1.0), 0.5);
    }

    #[test]
    fn make_profile_rejects_bad_input() {
        assert!(make_profile(ProfileKind::Rational, &[-1.0]).is_err());
        assert!(make_profile(ProfileKind::Euler, &[]).is_err());
        assert!(make_profile(ProfileKind::LinearBump, &[1.0, 0.0]).is_err());
        assert!(make_profile(ProfileKind::Tabulated, &[0.0, 1.0, 1.0, 2.0]).is_err());
        assert!(make_profile(ProfileKind::Tabulated, &[0.0, 1.0, 1.0, 0.5]).is_ok());
        assert!(CurvatureProfile::tabulated(vec![0.5, 1.0], vec![1.0, 0.5]).is_err());
        assert!(CurvatureProfile::tabulated(vec![0.0, 0.0], vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn validate_examples() {
        assert!(validate_profile(&CurvatureProfile::zero(), 0.1, 10.0).is_empty());
        assert!(validate_profile(&CurvatureProfile::rational(1.0).unwrap(), 0.01, 50.0).is_empty());
        let bad = CurvatureProfile::tabulated_unchecked(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        let v = validate_profile(&bad, 0.1, 3.0);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, 1);
        assert_eq!(v[0].kind, ViolationKind::Increasing);
    }

    #[test]
    fn builtins_are_continuous_on_refined_grids() {
        for p in [
            CurvatureProfile::linear_bump(2.0, 0.7).unwrap(),
            CurvatureProfile::piecewise_min(1.3).unwrap(),
            CurvatureProfile::euler(3.0).unwrap(),
        ] {
            for step in [0.5, 0.05, 0.005] {
                assert!(validate_profile(&p, step, 20.0).is_empty(), "{p:?} at step {step}");
            }
        }
    }

    #[test]
    fn invariants_exact() {
        let z = profile_invariants(&CurvatureProfile::zero(), 1e4, TailModel::Exact).unwrap();
        assert_eq!((z.b, z.b1), (0.0, 0.0));
        let r = profile_invariants(&CurvatureProfile::rational(1.0).unwrap(), 1e4, TailModel::Exact).unwrap();
        assert_eq!(r.b, 1.0);
        assert!((r.b1 - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let e = profile_invariants(&CurvatureProfile::euler(2.0).unwrap(), 1e4, TailModel::Exact).unwrap();
        assert_eq!((e.b, e.b1), (2.0, 2.0));
    }

    #[test]
    fn invariants_power_law_fit_agree_with_closed_forms() {
        let cases = [
            (CurvatureProfile::rational(1.0).unwrap(), 1.0, FRAC_PI_2),
            (CurvatureProfile::euler(2.0).unwrap(), 2.0, 2.0),
            (CurvatureProfile::piecewise_min(0.7).unwrap(), 0.7, 1.4),
            (CurvatureProfile::linear_bump(1.0, 0.5).unwrap(), 0.0, 1.0),
        ];
        for (p, b, b1) in cases {
            let fit = profile_invariants(&p, 1e4, TailModel::PowerLawFit).unwrap();
            assert!((fit.b - b).abs() < 1e-3 * b.max(1.0), "{p:?}: B {}", fit.b);
            assert!((fit.b1 - b1).abs() < 1e-3, "{p:?}: b1 {}", fit.b1);
        }
    }

    #[test]
    fn tabulated_tail_is_reported() {
        let p = CurvatureProfile::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.25]).unwrap();
        let inv = profile_invariants(&p, 0.0, TailModel::Exact).unwrap();
        // Body: 0.75 + 0.375; tail C / 2 with C = 0.25 * 4.
        assert!((inv.b1 - (1.125 + 0.5)).abs() < 1e-15);
        assert_eq!(inv.b, 1.0);
        assert_eq!(inv.tail_estimate_error, 0.5);
        assert!((p.eval(4.0) - 1.0 / 16.0).abs() < 1e-15);
        assert!((p.eval(1.5) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn b1_zero_iff_flat() {
        for p in [CurvatureProfile::zero(), CurvatureProfile::rational(0.0).unwrap()] {
            assert!(p.is_flat());
            assert_eq!(profile_invariants(&p, 1e3, TailModel::Exact).unwrap().b1, 0.0);
        }
        let p = CurvatureProfile::linear_bump(0.1, 1.0).unwrap();
        assert!(!p.is_flat());
        assert!(profile_invariants(&p, 1e3, TailModel::Exact).unwrap().b1 > 0.0);
    }

    #[test]
    fn scale_examples() {
        let z = scale_profile(&CurvatureProfile::zero(), 0.5, 3.0).unwrap();
        assert!((0..50).all(|i| z.eval(i as f64 * 0.3) == 0.0));
        let base = CurvatureProfile::rational(1.0).unwrap();
        let id = scale_profile(&base, 1.0, 0.0).unwrap();
        for i in 0..50 {
            let t = i as f64 * 0.37;
            assert_eq!(id.eval(t), base.eval(t));
        }
        let e = scale_profile(&CurvatureProfile::euler(2.0).unwrap(), 0.5, 1.0).unwrap();
        assert_eq!(e.eval(2.0), 0.5);
        assert!(scale_profile(&base, 1.5, 0.0).is_err());
        assert!(scale_profile(&base, -0.1, 0.0).is_err());
    }

    #[test]
    fn scaled_kinks_map_through_the_reflection() {
        let p = CurvatureProfile::piecewise_min(1.0).unwrap();
        let s = scale_profile(&p, 0.5, 3.0).unwrap();
        // |3 - t/2| = 1 at t = 4 and t = 8; the reflection point is t = 6.
        assert_eq!(s.kinks(), vec![4.0, 6.0, 8.0]);
    }

    #[test]
    fn table_loader_parses_comments_and_commas() {
        let dir = std::env::temp_dir().join(format!("curvdecay-prof-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.txt");
        std::fs::write(&path, "# t lambda\n0, 1.0\n1 0.5\n\n2 0.25 # tail\n").unwrap();
        let p = CurvatureProfile::load_table(&path).unwrap();
        assert_eq!(p.kind(), ProfileKind::Tabulated);
        assert_eq!(p.domain_cap(), Some(2.0));
        std::fs::write(&path, "0 1\n1 x\n").unwrap();
        assert!(matches!(CurvatureProfile::load_table(&path), Err(Error::Parse { line: 2, .. })));
        std::fs::remove_dir_all(&dir).ok();
    }
}
