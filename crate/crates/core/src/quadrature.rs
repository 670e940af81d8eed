//! Adaptive Gauss–Kronrod quadrature and sampling grids.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const MAX_INTERVALS: usize = 4000;

/// Requested accuracy: the estimate is accepted once the error bound
/// drops below `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTolerance {
    pub abs: f64,
    pub rel: f64,
}

impl QuadTolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self::new(1e-13, 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let sum = f(center - dx) + f(center + dx);
        kronrod += w * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over `[a, b]`, splitting first at every breakpoint that
/// lies strictly inside the interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: QuadTolerance) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("integration bounds must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, intervals: 0 });
    }
    if b < a {
        let r = integrate(f, b, a, breaks, tol)?;
        return Ok(Integral { value: -r.value, ..r });
    }

    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(a);
    nodes.extend(cuts);
    nodes.push(b);

    let mut heap = BinaryHeap::new();
    let (mut total, mut total_err) = (0.0, 0.0);
    for w in nodes.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        total += value;
        total_err += error;
        heap.push(Segment { a: w[0], b: w[1], value, error });
    }

    loop {
        let target = tol.abs.max(tol.rel * total.abs()).max(50.0 * f64::EPSILON * total.abs());
        if total_err <= target {
            break;
        }
        if !total.is_finite() {
            return Err(Error::numerical("integrand produced a non-finite value"));
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::numerical(format!(
                "quadrature on [{a}, {b}] did not converge: error {total_err:.3e} > {target:.3e}"
            )));
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Segment can no longer be split in floating point; accept it.
            total_err -= worst.error;
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }

    // Re-sum to shed the drift accumulated by incremental updates.
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(Integral { value, error, intervals: heap.len() })
}

/// `n` points from `start` to `end` (both included), geometrically spaced.
pub fn geometric_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    assert!(start > 0.0 && end > start && n >= 2, "geometric grid needs 0 < start < end, n >= 2");
    let ratio = (end / start).ln() / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| start * (ratio * i as f64).exp()).collect();
    grid[n - 1] = end;
    grid
}

/// `n` points from `start` to `end` (both included), evenly spaced.
pub fn uniform_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "uniform grid needs n >= 2");
    let h = (end - start) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| start + h * i as f64).collect();
    grid[n - 1] = end;
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_low_degree_polynomials() {
        for k in 0..=20 {
            let exact = 1.0 / (k as f64 + 1.0);
            let (v, _) = gk15(&|x: f64| x.powi(k), 0.0, 1.0);
            assert!((v - exact).abs() < 1e-15, "degree {k}: {v} vs {exact}");
        }
    }

    #[test]
    fn arctan_antiderivative() {
        let r = integrate(|t| 1.0 / (1.0 + t * t), 0.0, 50.0, &[], QuadTolerance::default()).unwrap();
        assert!((r.value - 50f64.atan()).abs() < 1e-12);
    }

    #[test]
    fn kinked_integrand_with_breakpoint() {
        let f = |t: f64| (2.0 - t).max(0.0);
        let r = integrate(f, 0.0, 5.0, &[2.0], QuadTolerance::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
        assert_eq!(r.intervals, 2);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate(|t| t, 1.0, 0.0, &[], QuadTolerance::default()).unwrap();
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = integrate(|_| f64::NAN, 0.0, 1.0, &[], QuadTolerance::default());
        assert!(matches!(r, Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn grids_hit_endpoints() {
        let g = geometric_grid(1e-3, 1e4, 50);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[49], 1e4);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let u = uniform_grid(0.0, 1.0, 11);
        assert_eq!(u[10], 1.0);
        assert!((u[3] - 0.3).abs() < 1e-15);
    }
}
