//! Threshold policies: transparent below `e*`, pooled above.
//!
//! With `θ̂` the type whose peak is `e*` and `θ*` the type indifferent between
//! `e*` and the cap, the induced scheme follows the peak on `[θ_, θ̂]`, sits at
//! `e*` on `(θ̂, θ*]` and at the cap on `(θ*, θ̄]`.

use serde::{Deserialize, Serialize};

use crate::certify::quasiconcavity_check;
use crate::error::{Error, Result};
use crate::model::{CanonicalInstance, TypeDistribution};
use crate::numerics::{bisect_predicate, golden_max, linspace};
use crate::policy::{
    belief_compatible_menu, best_response, expected_outcomes, DisclosurePolicy, EmissionScheme,
    Outcome, Rule, Segment,
};

/// Which branch of a boundary definition applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCase {
    /// `e*` below the range of the map; the boundary is `θ_`.
    BelowRange,
    /// `e*` inside the range; the boundary is the inverse image.
    Inverse,
    /// `e*` above the range; the boundary is `θ̄`.
    AboveRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBoundaries {
    pub e_star: f64,
    pub theta_hat: f64,
    pub theta_star: f64,
    pub hat_case: BoundaryCase,
    pub star_case: BoundaryCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Position of `e*` relative to `e_(θ̄)`, which decides the first-order condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FocCase {
    /// `e* < e_(θ̄)`: equality with the boundary term.
    BelowKink,
    /// `e* = e_(θ̄) = ē`.
    KinkAtCap,
    /// `e* = e_(θ̄) < ē`: the integral lies in an interval.
    Kink,
    /// `e* > e_(θ̄)`: the integral vanishes.
    AboveKink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarizedPoint {
    pub alpha: f64,
    /// Smallest optimal threshold found.
    pub e_star: f64,
    /// Largest threshold with the same optimal value (end of a flat stretch).
    pub plateau_top: f64,
    pub w: f64,
    pub gamma: f64,
    pub pi: f64,
    /// One-sided derivatives; absent for atom-only type distributions.
    pub left_derivative: Option<f64>,
    pub right_derivative: Option<f64>,
    pub foc_case: Option<FocCase>,
    pub method: SearchMethod,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    /// `α = 0`: every threshold at or above `ê(θ̄)` is optimal.
    Analytic,
    /// Bisection on the sign of the right derivative.
    DerivativeBisection,
    /// Golden section from several starts.
    Multistart,
    /// Golden section on each piece between atom breakpoints.
    Piecewise,
}

/// Boundary types for a threshold. Uses the closed-form inverses of the
/// canonical family: `ê⁻¹(e) = −π₀′(e)` and `e_⁻¹(e) = (π₀(e) − π₀(ē))/(ē − e)`.
pub fn boundaries(inst: &CanonicalInstance, e_star: f64) -> Result<ThresholdBoundaries> {
    let cap = inst.cap();
    if !(e_star >= 0.0 && e_star <= cap) {
        return Err(Error::OutOfDomain {
            what: "threshold",
            value: e_star,
            lower: 0.0,
            upper: cap,
        });
    }
    let (lo, hi) = (inst.lower(), inst.upper());
    let (hat_case, theta_hat) = if e_star > inst.peak_emission(hi) {
        (BoundaryCase::AboveRange, hi)
    } else if e_star < inst.peak_emission(lo) {
        (BoundaryCase::BelowRange, lo)
    } else {
        (BoundaryCase::Inverse, snap_to_support(-inst.dpi0(e_star), lo, hi))
    };
    let (star_case, theta_star) = if e_star > inst.participation_floor(hi) {
        (BoundaryCase::AboveRange, hi)
    } else if e_star < inst.participation_floor(lo) {
        (BoundaryCase::BelowRange, lo)
    } else {
        let t = if e_star < cap {
            (inst.pi0().eval(e_star) - inst.pi0().eval(cap)) / (cap - e_star)
        } else {
            -inst.dpi0(cap)
        };
        (BoundaryCase::Inverse, snap_to_support(t, lo, hi))
    };
    Ok(ThresholdBoundaries {
        e_star,
        theta_hat,
        theta_star,
        hat_case,
        star_case,
    })
}

/// Clamps to `[lo, hi]` and absorbs rounding next to the ends, so a type
/// boundary that should sit on `θ̄` does not leave a sliver segment.
fn snap_to_support(t: f64, lo: f64, hi: f64) -> f64 {
    let tol = 1e-13 * lo.abs().max(hi.abs()).max(1.0);
    if t <= lo + tol {
        lo
    } else if t >= hi - tol {
        hi
    } else {
        t
    }
}

/// Equilibrium scheme of the threshold policy, built from its boundaries.
pub fn threshold_scheme(inst: &CanonicalInstance, e_star: f64) -> Result<EmissionScheme> {
    let b = boundaries(inst, e_star)?;
    let (lo, hi) = (inst.lower(), inst.upper());
    if lo == hi {
        let menu = belief_compatible_menu(&DisclosurePolicy::threshold(e_star, inst.cap())?);
        return Ok(EmissionScheme::constant(lo, hi, best_response(inst, lo, &menu)));
    }
    EmissionScheme::new(vec![
        Segment {
            lo,
            hi: b.theta_hat,
            rule: Rule::FollowPeak,
        },
        Segment {
            lo: b.theta_hat,
            hi: b.theta_star,
            rule: Rule::Constant(e_star),
        },
        Segment {
            lo: b.theta_star,
            hi,
            rule: Rule::Constant(inst.cap()),
        },
    ])
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfDomain {
            what: "alpha",
            value: alpha,
            lower: 0.0,
            upper: 1.0,
        });
    }
    Ok(())
}

/// `(Γ, Π)` of a threshold policy.
pub fn threshold_outcome(inst: &CanonicalInstance, e_star: f64) -> Result<Outcome> {
    Ok(expected_outcomes(inst, &threshold_scheme(inst, e_star)?))
}

/// `W(e*; α) = −αΓ + (1−α)Π`, with Π in original units.
pub fn welfare(inst: &CanonicalInstance, e_star: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let o = threshold_outcome(inst, e_star)?;
    Ok(scalarize(o, alpha))
}

pub fn scalarize(o: Outcome, alpha: f64) -> f64 {
    -alpha * o.gamma + (1.0 - alpha) * o.pi
}

/// The pieces of `W′` that do not depend on `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeTerms {
    /// `f(θ*)·π_e(θ*, e*)`, the boundary term per unit `α`.
    pub boundary: f64,
    /// `F(θ*) − F(θ̂)`.
    pub mass: f64,
    /// `∫_{θ̂}^{θ*} π_e(θ, e*) dF`.
    pub marginal: f64,
    /// Whether `θ*` moves with `e*` from the left / right.
    pub binding_left: bool,
    pub binding_right: bool,
}

impl DerivativeTerms {
    /// `W′(e*±; α) = α·boundary·[binding] − α·mass + (1−α)·marginal`.
    pub fn derivative(&self, alpha: f64, side: Side) -> f64 {
        let (k, b) = self.affine(side);
        k * alpha + b
    }

    /// Slope and intercept of `W′(e*±; α)` as an affine function of `α`.
    pub fn affine(&self, side: Side) -> (f64, f64) {
        let binding = match side {
            Side::Left => self.binding_left,
            Side::Right => self.binding_right,
        };
        let boundary = if binding { self.boundary } else { 0.0 };
        (boundary - self.mass - self.marginal, self.marginal)
    }

    /// `−∫_{θ̂}^{θ*} [−α + (1−α)π_e] dF`.
    pub fn foc_integral(&self, alpha: f64) -> f64 {
        alpha * self.mass - (1.0 - alpha) * self.marginal
    }
}

/// Derivative building blocks at `e*`; requires a continuous type density.
pub fn derivative_terms(inst: &CanonicalInstance, e_star: f64) -> Result<DerivativeTerms> {
    let d = inst.types().density()?;
    let b = boundaries(inst, e_star)?;
    let kink = inst.participation_floor(inst.upper());
    let mass = d.cdf(b.theta_star) - d.cdf(b.theta_hat);
    let slope = inst.dpi0(e_star);
    let marginal = inst.integrate_density(b.theta_hat, b.theta_star, |t| slope + t)?;
    Ok(DerivativeTerms {
        boundary: d.pdf(b.theta_star) * inst.pi_e(b.theta_star, e_star),
        mass,
        marginal,
        binding_left: e_star <= kink + KINK_TOL,
        binding_right: e_star < kink - KINK_TOL,
    })
}

/// One-sided derivative of `W` in the threshold.
pub fn welfare_derivative(inst: &CanonicalInstance, e_star: f64, alpha: f64, side: Side) -> Result<f64> {
    check_alpha(alpha)?;
    let lo = inst.participation_floor(inst.lower());
    let cap = inst.cap();
    if !(e_star > lo && e_star < cap) {
        return Err(Error::OutOfDomain {
            what: "threshold",
            value: e_star,
            lower: lo,
            upper: cap,
        });
    }
    Ok(derivative_terms(inst, e_star)?.derivative(alpha, side))
}

/// Distance of `|e* − e_(θ̄)|` below which `e*` counts as the kink.
pub const KINK_TOL: f64 = 1e-9;

/// First-order condition case and residual (0 when it holds exactly).
pub fn foc_residual(inst: &CanonicalInstance, e_star: f64, alpha: f64) -> Result<(FocCase, f64)> {
    check_alpha(alpha)?;
    let lo = inst.participation_floor(inst.lower());
    let cap = inst.cap();
    if !(e_star > lo && e_star <= cap) {
        return Err(Error::OutOfDomain {
            what: "threshold",
            value: e_star,
            lower: lo,
            upper: cap,
        });
    }
    let terms = derivative_terms(inst, e_star)?;
    let kink = inst.participation_floor(inst.upper());
    let integral = terms.foc_integral(alpha);
    let bound = alpha * terms.boundary;
    if (e_star - kink).abs() <= KINK_TOL {
        let case = if kink >= cap { FocCase::KinkAtCap } else { FocCase::Kink };
        let residual = if integral < 0.0 {
            integral
        } else if integral > bound {
            integral - bound
        } else {
            0.0
        };
        Ok((case, residual))
    } else if e_star < kink {
        Ok((FocCase::BelowKink, integral - bound))
    } else {
        Ok((FocCase::AboveKink, integral))
    }
}

/// Search interval `[e_(θ_), ê(θ̄)]`; thresholds above it induce full disclosure.
pub fn search_domain(inst: &CanonicalInstance) -> (f64, f64) {
    let lo = inst.participation_floor(inst.lower());
    let hi = inst.peak_emission(inst.upper());
    (lo, hi.max(lo))
}

const SIGN_TOL: f64 = 1e-11;
const BISECT_TOL: f64 = 1e-13;
const MULTISTARTS: usize = 16;
const SCAN_POINTS: usize = 64;

/// Maximises `W(·; α)` over thresholds.
pub fn optimize_threshold(inst: &CanonicalInstance, alpha: f64) -> Result<ScalarizedPoint> {
    check_alpha(alpha)?;
    let (lo, hi) = search_domain(inst);
    if !inst.types().is_continuous() {
        return optimize_piecewise(inst, alpha, lo, hi);
    }
    if alpha == 0.0 || hi <= lo {
        return finish(inst, alpha, hi, hi, SearchMethod::Analytic, Vec::new());
    }
    let shape = quasiconcavity_check(inst, alpha)?;
    if shape.quasiconcave {
        let right = |e: f64| welfare_derivative(inst, e, alpha, Side::Right).unwrap_or(f64::NAN);
        let left = |e: f64| welfare_derivative(inst, e, alpha, Side::Left).unwrap_or(f64::NAN);
        let inner_lo = lo + BISECT_TOL;
        let mut e = if right(hi.min(inst.cap() - BISECT_TOL)) > SIGN_TOL {
            hi
        } else {
            bisect_predicate(inner_lo, hi, BISECT_TOL, |x| !(right(x) > SIGN_TOL))
        };
        let kink = inst.participation_floor(inst.upper());
        if (e - kink).abs() <= KINK_TOL && kink > lo && kink < inst.cap() {
            if left(kink) >= -SIGN_TOL && right(kink) <= SIGN_TOL {
                e = kink;
            }
        }
        let top = if e >= hi {
            hi
        } else {
            let start = if e > lo { e } else { inner_lo };
            let w_e = welfare(inst, e, alpha)?;
            // W′ fades near ê(θ̄) as the pool empties, so compare levels there
            if welfare(inst, hi, alpha)? >= w_e - 1e-12 * w_e.abs().max(1.0) {
                hi
            } else {
                let t = bisect_predicate(start, hi, BISECT_TOL, |x| left(x) < -SIGN_TOL);
                // the last point of the plateau, not the first point past it
                if (t - kink).abs() <= 2.0 * KINK_TOL { kink } else { t.max(e) }
            }
        };
        let w_found = welfare(inst, e, alpha)?;
        let scan_best = linspace(lo, hi, SCAN_POINTS)
            .into_iter()
            .map(|x| welfare(inst, x, alpha).unwrap_or(f64::NEG_INFINITY))
            .fold(f64::NEG_INFINITY, f64::max);
        if scan_best <= w_found + 1e-9 {
            return finish(inst, alpha, e, top.max(e), SearchMethod::DerivativeBisection, Vec::new());
        }
        let mut warnings = vec![format!(
            "derivative search at alpha = {alpha} was beaten by a grid scan; fell back to multistart"
        )];
        let (e, top, mut more) = multistart(inst, alpha, lo, hi)?;
        warnings.append(&mut more);
        return finish(inst, alpha, e, top, SearchMethod::Multistart, warnings);
    }
    let mut warnings = vec![format!(
        "(1-alpha)F + alpha f is not quasiconcave at alpha = {alpha}; using multistart golden section"
    )];
    let (e, top, mut more) = multistart(inst, alpha, lo, hi)?;
    warnings.append(&mut more);
    finish(inst, alpha, e, top, SearchMethod::Multistart, warnings)
}

/// Golden section on 16 subintervals; returns the best point, the largest
/// point tying with it, and warnings about competing local maxima.
fn multistart(inst: &CanonicalInstance, alpha: f64, lo: f64, hi: f64) -> Result<(f64, f64, Vec<String>)> {
    let w = |e: f64| welfare(inst, e, alpha).unwrap_or(f64::NEG_INFINITY);
    let edges = linspace(lo, hi, MULTISTARTS + 1);
    let width = (hi - lo) / MULTISTARTS as f64;
    let mut candidates: Vec<(f64, f64, bool)> = Vec::new();
    for (i, pair) in edges.windows(2).enumerate() {
        let (x, v) = golden_max(pair[0], pair[1], 1e-10 * (hi - lo).max(1e-300), w);
        let at_inner_edge = (i > 0 && x - pair[0] <= 1e-8 * width)
            || (i + 1 < MULTISTARTS && pair[1] - x <= 1e-8 * width);
        candidates.push((x, v, !at_inner_edge));
    }
    let best_w = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-12 * best_w.abs().max(1.0);
    let ties: Vec<f64> = candidates.iter().filter(|c| c.1 >= best_w - tie).map(|c| c.0).collect();
    let e = ties.iter().copied().fold(f64::INFINITY, f64::min);
    let top = ties.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut warnings = Vec::new();
    let locals: Vec<&(f64, f64, bool)> = candidates.iter().filter(|c| c.2).collect();
    if let Some(worst) = locals.iter().map(|c| c.1).reduce(f64::min) {
        if best_w - worst > 1e-6 {
            warnings.push(format!(
                "W is not quasiconcave at alpha = {alpha}: local maxima differ by {:.3e}",
                best_w - worst
            ));
        }
    }
    Ok((e, top, warnings))
}

/// Atom-only types: `W` is concave between consecutive breakpoints
/// `ê(θᵢ)`, `e_(θᵢ)`, so golden section on each piece is exact.
fn optimize_piecewise(inst: &CanonicalInstance, alpha: f64, lo: f64, hi: f64) -> Result<ScalarizedPoint> {
    let points = match inst.types() {
        TypeDistribution::Discrete { points, .. } => points.clone(),
        TypeDistribution::Continuous(_) => unreachable!("continuous types use the derivative path"),
    };
    if alpha == 0.0 || hi <= lo {
        return finish(inst, alpha, hi, hi, SearchMethod::Analytic, Vec::new());
    }
    let mut cuts = vec![lo, hi];
    for &t in &points {
        for e in [inst.peak_emission(t), inst.participation_floor(t)] {
            if e > lo && e < hi {
                cuts.push(e);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let w = |e: f64| welfare(inst, e, alpha).unwrap_or(f64::NEG_INFINITY);
    let mut best: Vec<(f64, f64)> = Vec::new();
    for pair in cuts.windows(2) {
        best.push(golden_max(pair[0], pair[1], 1e-12, w));
    }
    let best_w = best.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-12 * best_w.abs().max(1.0);
    let ties: Vec<f64> = best.iter().filter(|c| c.1 >= best_w - tie).map(|c| c.0).collect();
    let e = ties.iter().copied().fold(f64::INFINITY, f64::min);
    let top = ties.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    finish(inst, alpha, e, top, SearchMethod::Piecewise, Vec::new())
}

fn finish(
    inst: &CanonicalInstance,
    alpha: f64,
    e_star: f64,
    plateau_top: f64,
    method: SearchMethod,
    warnings: Vec<String>,
) -> Result<ScalarizedPoint> {
    let o = threshold_outcome(inst, e_star)?;
    let (left, right, case) = if inst.types().is_continuous()
        && e_star > inst.participation_floor(inst.lower())
        && e_star < inst.cap()
    {
        (
            Some(welfare_derivative(inst, e_star, alpha, Side::Left)?),
            Some(welfare_derivative(inst, e_star, alpha, Side::Right)?),
            Some(foc_residual(inst, e_star, alpha)?.0),
        )
    } else {
        (None, None, None)
    };
    Ok(ScalarizedPoint {
        alpha,
        e_star,
        plateau_top,
        w: scalarize(o, alpha),
        gamma: o.gamma,
        pi: o.pi,
        left_derivative: left,
        right_derivative: right,
        foc_case: case,
        method,
        warnings,
    })
}

/// Weights for which a threshold is optimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportingWeight {
    /// The reported weight: the midpoint of `[lower, upper]`.
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Recovers a weight under which `e*` is an optimal threshold. `W′(e*±; α)`
/// is affine in `α`; away from the kink the weight is the root of the right
/// derivative, at the kink every weight with `W′(e*−) ≥ 0 ≥ W′(e*+)` works.
pub fn alpha_for_threshold(inst: &CanonicalInstance, e_star: f64) -> Result<SupportingWeight> {
    let e_one = optimize_threshold(inst, 1.0)?.e_star;
    if e_star < e_one - 1e-9 {
        return Err(Error::NoSupportingWeight { e_star, e_one });
    }
    let (lo, hi) = search_domain(inst);
    if e_star >= hi - 1e-12 {
        // full disclosure is optimal only without weight on emissions when
        // thresholds below it exist
        let upper = if hi > lo { 0.0 } else { 1.0 };
        return Ok(SupportingWeight {
            alpha: 0.5 * upper,
            lower: 0.0,
            upper,
        });
    }
    let terms = derivative_terms(inst, e_star)?;
    let kink = inst.participation_floor(inst.upper());
    let (lower, upper) = if (e_star - kink).abs() <= KINK_TOL {
        let (kl, bl) = terms.affine(Side::Left);
        let (kr, br) = terms.affine(Side::Right);
        let mut range = (0.0f64, 1.0f64);
        for (k, b, sign) in [(kl, bl, 1.0), (kr, br, -1.0)] {
            // require sign·(k α + b) ≥ 0
            let (k, b) = (sign * k, sign * b);
            if k.abs() <= 1e-15 {
                continue;
            }
            let root = -b / k;
            if k > 0.0 {
                range.0 = range.0.max(root);
            } else {
                range.1 = range.1.min(root);
            }
        }
        if range.0 > range.1 {
            let m = 0.5 * (range.0 + range.1);
            (m, m)
        } else {
            (range.0.clamp(0.0, 1.0), range.1.clamp(0.0, 1.0))
        }
    } else {
        let (k, b) = terms.affine(Side::Right);
        let a = if k.abs() <= 1e-15 && b.abs() <= 1e-15 {
            0.0
        } else {
            (-b / k).clamp(0.0, 1.0)
        };
        (a, a)
    };
    Ok(SupportingWeight {
        alpha: 0.5 * (lower + upper),
        lower,
        upper,
    })
}
