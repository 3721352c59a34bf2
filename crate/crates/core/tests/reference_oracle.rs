//! The uniform quadratic reference instance (π₀(e) = −e²/2, ē = 1, θ uniform
//! on [0.6, 0.95]) has closed forms for everything; they are written out
//! here independently of the library and compared against it.

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use disclosure_core::frontier::{full_disclosure_point, no_disclosure_point};
use disclosure_core::threshold::{
    alpha_for_threshold, boundaries, optimize_threshold, threshold_outcome, welfare, welfare_derivative, Side,
};
use disclosure_core::{CanonicalInstance, ModelInstance};

const LO: f64 = 0.6;
const HI: f64 = 0.95;
const WIDTH: f64 = HI - LO;

fn qref() -> CanonicalInstance {
    ModelInstance::quadratic_reference().canonicalize().unwrap()
}

/// ∫_a^b of the polynomial with the given coefficients.
fn poly_integral(coeffs: &[f64], a: f64, b: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k as f64 + 1.0))
        .sum()
}

/// (θ̂, θ*) by hand: ê(θ) = θ and e_(θ) = 2θ − 1.
fn closed_boundaries(e: f64) -> (f64, f64) {
    let hat = e.clamp(LO, HI);
    let star = ((1.0 + e) / 2.0).clamp(LO, HI);
    (hat, star)
}

/// (Γ, Π) of the threshold by piecewise integration of polynomials.
fn closed_outcome(e: f64) -> (f64, f64) {
    let (hat, star) = closed_boundaries(e);
    // θ < θ̂ plays θ with profit θ²/2; pooled types play e with profit θe − e²/2;
    // the rest take the cap with profit θ − 1/2
    let gamma = poly_integral(&[0.0, 1.0], LO, hat) + e * (star - hat) + (HI - star);
    let pi = poly_integral(&[0.0, 0.0, 0.5], LO, hat)
        + poly_integral(&[-0.5 * e * e, e], hat, star)
        + poly_integral(&[-0.5, 1.0], star, HI);
    (gamma / WIDTH, pi / WIDTH)
}

fn closed_welfare(e: f64, alpha: f64) -> f64 {
    let (g, p) = closed_outcome(e);
    -alpha * g + (1.0 - alpha) * p
}

/// Interior optimum for small weights, from −α·mass + (1−α)·marginal = 0.
fn closed_optimum(alpha: f64) -> f64 {
    (0.95 - 2.0 * alpha / (1.0 - alpha)).max(0.9)
}

#[test]
fn frozen_reference_values() {
    let (g, p) = closed_outcome(0.95);
    assert_abs_diff_eq!(g, 0.775, epsilon = 1e-12);
    assert_abs_diff_eq!(p, 0.3054167, epsilon = 1e-7);
    let (g, p) = closed_outcome(0.7);
    assert_abs_diff_eq!(g, 0.7714286, epsilon = 1e-7);
    assert_abs_diff_eq!(p, 0.3022619, epsilon = 1e-7);
    let (g, p) = closed_outcome(0.9);
    assert_abs_diff_eq!(g, 0.7714286, epsilon = 1e-7);
    assert_abs_diff_eq!(p, 0.3053571, epsilon = 1e-7);
    assert_abs_diff_eq!(closed_welfare(0.9, 0.5), -0.2330357, epsilon = 1e-7);
    assert_abs_diff_eq!(closed_optimum(0.01), 0.9297980, epsilon = 1e-7);
}

#[test]
fn library_matches_frozen_values() {
    let c = qref();
    let fd = full_disclosure_point(&c);
    assert_abs_diff_eq!(fd.gamma, 0.775, epsilon = 1e-10);
    assert_abs_diff_eq!(fd.pi, 0.3054167, epsilon = 1e-7);
    let nd = no_disclosure_point(&c);
    assert_eq!(nd.gamma, 1.0);
    assert_abs_diff_eq!(nd.pi, 0.275, epsilon = 1e-12);
    let o = threshold_outcome(&c, 0.7).unwrap();
    assert_abs_diff_eq!(o.gamma, 0.7714286, epsilon = 1e-7);
    assert_abs_diff_eq!(o.pi, 0.3022619, epsilon = 1e-7);
    assert_abs_diff_eq!(welfare(&c, 0.9, 0.5).unwrap(), -0.2330357, epsilon = 1e-7);
    assert_abs_diff_eq!(welfare_derivative(&c, 0.9, 0.5, Side::Left).unwrap(), 0.0017857, epsilon = 1e-7);
    assert_abs_diff_eq!(welfare_derivative(&c, 0.9, 0.5, Side::Right).unwrap(), -0.0696429, epsilon = 1e-7);
}

#[test]
fn kink_weight_interval() {
    let s = alpha_for_threshold(&qref(), 0.9).unwrap();
    // W′(0.9−; α) ≥ 0 for all α and W′(0.9+; α) ≤ 0 iff α ≥ 1/41
    assert_abs_diff_eq!(s.lower, 1.0 / 41.0, epsilon = 1e-9);
    assert_abs_diff_eq!(s.upper, 1.0, epsilon = 1e-12);
    let s = alpha_for_threshold(&qref(), 0.93).unwrap();
    assert_abs_diff_eq!(s.alpha, 0.02 / 2.02, epsilon = 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outcomes_match_closed_form(e in 0.2f64..1.0) {
        let c = qref();
        let o = threshold_outcome(&c, e).unwrap();
        let (g, p) = closed_outcome(e.min(0.95));
        prop_assert!((o.gamma - g).abs() <= 1e-10, "gamma {} vs {}", o.gamma, g);
        prop_assert!((o.pi - p).abs() <= 1e-10, "pi {} vs {}", o.pi, p);
        let b = boundaries(&c, e).unwrap();
        let (hat, star) = closed_boundaries(e);
        prop_assert!((b.theta_hat - hat).abs() <= 1e-12 && (b.theta_star - star).abs() <= 1e-12);
    }

    #[test]
    fn derivative_matches_closed_form(e in 0.21f64..0.94, alpha in 0.0f64..1.0) {
        prop_assume!((e - 0.9).abs() > 1e-3 && (e - 0.6).abs() > 1e-3);
        let c = qref();
        let h = 1e-6;
        let fd = (closed_welfare(e + h, alpha) - closed_welfare(e - h, alpha)) / (2.0 * h);
        let w = welfare_derivative(&c, e, alpha, Side::Right).unwrap();
        prop_assert!((w - fd).abs() <= 1e-7, "W′ {} vs {}", w, fd);
    }

    #[test]
    fn optimizer_matches_closed_form(alpha in 0.001f64..0.999) {
        let c = qref();
        let p = optimize_threshold(&c, alpha).unwrap();
        prop_assert!((p.e_star - closed_optimum(alpha)).abs() <= 1e-7, "e* {} at alpha {}", p.e_star, alpha);
        prop_assert!((p.w - closed_welfare(p.e_star, alpha)).abs() <= 1e-8);
    }

    #[test]
    fn weight_inversion_round_trip(e in 0.9005f64..0.9495) {
        let c = qref();
        let s = alpha_for_threshold(&c, e).unwrap();
        // inverse of e* = 0.95 − 2α/(1−α)
        let d = 0.95 - e;
        prop_assert!((s.alpha - d / (2.0 + d)).abs() <= 1e-9);
        let p = optimize_threshold(&c, s.alpha).unwrap();
        prop_assert!((p.e_star - e).abs() <= 1e-7);
    }
}
