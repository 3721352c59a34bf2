//! Grid sizes, tolerances and small numerical helpers shared by the modules.

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

/// Grid densities and tolerances. Every field has a default, so a JSON
/// override may name only the knobs it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Numerics {
    /// Points per axis for assumption validation and closed-form checks.
    pub validation_grid: usize,
    /// Gauss-Legendre nodes per smooth segment.
    pub quad_nodes: usize,
    /// θ-grid for sampled certificate multipliers.
    pub certificate_grid: usize,
    /// θ-grid for the quasiconcavity and log-concavity checks.
    pub shape_grid: usize,
    /// θ-grid for the peak-range check and the full-disclosure-only scan.
    pub peak_grid: usize,
    /// Profit tie tolerance in best responses.
    pub tie_tol: f64,
    /// Tolerance on the FOC residual and the Q conditions.
    pub foc_tol: f64,
    /// Tolerance on multiplier monotonicity.
    pub monotone_tol: f64,
    /// Tolerance on complementary slackness.
    pub slackness_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            validation_grid: 101,
            quad_nodes: 32,
            certificate_grid: 801,
            shape_grid: 801,
            peak_grid: 401,
            tie_tol: 1e-12,
            foc_tol: 1e-7,
            monotone_tol: 1e-8,
            slackness_tol: 1e-6,
        }
    }
}

/// `n` evenly spaced points from `a` to `b`, both ends exact.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| a + i as f64 * step).collect();
            v[n - 1] = b;
            v
        }
    }
}

/// Fixed-order Gauss-Legendre rule, reused across many segments.
#[derive(Debug, Clone)]
pub struct Quadrature {
    nodes: Vec<(f64, f64)>,
}

impl Quadrature {
    pub fn new(n: usize) -> Self {
        let n = n.max(2);
        let rule = GaussLegendre::new(n.try_into().expect("n >= 2"));
        let nodes = rule.iter().map(|(x, w)| (*x, *w)).collect();
        Self { nodes }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `∫_a^b g`; zero on empty or reversed intervals.
    pub fn integrate(&self, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .map(|&(x, w)| w * g(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// Smallest point of `[lo, hi]` where the monotone predicate turns true,
/// assuming `pred(hi)` holds. Stops once the bracket is below `tol`.
pub fn bisect_predicate(mut lo: f64, mut hi: f64, tol: f64, mut pred: impl FnMut(f64) -> bool) -> f64 {
    if pred(lo) {
        return lo;
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Root of `g` on `[lo, hi]` with `g(lo) < 0 <= g(hi)` for an increasing `g`.
pub fn bisect_increasing(lo: f64, hi: f64, tol: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
    bisect_predicate(lo, hi, tol, |x| g(x) >= 0.0)
}

/// Golden-section maximisation of a unimodal function on `[lo, hi]`.
/// Returns `(argmax, value)`.
pub fn golden_max(lo: f64, hi: f64, tol: f64, mut g: impl FnMut(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    while b - a > tol {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
    }
    // the endpoints are candidates too, golden section never samples them
    let mut best = if gc >= gd { (c, gc) } else { (d, gd) };
    for x in [lo, hi] {
        let v = g(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}
