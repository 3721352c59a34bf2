//! Global optimality certificates for threshold policies and the shape
//! conditions on the type density they rely on.
//!
//! The certificate is a pair of cumulative multipliers `Λ`, `Ψ` (IC and IR)
//! built in closed form from `(α, e*)`. The scheme is optimal when
//! `Ψ` and `Λ₁ = (1−α)F + Λ + Ψ` are nondecreasing, the function
//! `Q(θ) = ∫_θ^θ̄ [−αf + Λ] ds + ∫_[θ,θ̄] π_e(s, e(s)) dΛ₁(s)` peaks at `θ̂`
//! with the two boundary equalities, and complementary slackness holds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CanonicalInstance;
use crate::numerics::linspace;
use crate::policy::EmissionScheme;
use crate::threshold::{boundaries, foc_residual, threshold_scheme, welfare_derivative, Side, KINK_TOL};

/// `h_α = (1−α)F + αf` on an even grid.
fn h_profile(inst: &CanonicalInstance, alpha: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = inst.types().density()?;
    let grid = linspace(inst.lower(), inst.upper(), n.max(2));
    let h = grid.iter().map(|&t| (1.0 - alpha) * d.cdf(t) + alpha * d.pdf(t)).collect();
    Ok((grid, h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiconcavityReport {
    pub alpha: f64,
    pub quasiconcave: bool,
    /// No flat stretches either.
    pub strict: bool,
    /// Grid interval of maximisers `Θ▲` (within the tolerance of the maximum).
    pub peak_set: (f64, f64),
    pub max_value: f64,
    /// Largest rise after a fall; zero when quasiconcave.
    pub max_violation: f64,
    pub location: Option<f64>,
}

const SHAPE_TOL: f64 = 1e-10;

/// Quasiconcavity of `h_α` on the shape grid: differences may not rise
/// again once they have fallen.
pub fn quasiconcavity_check(inst: &CanonicalInstance, alpha: f64) -> Result<QuasiconcavityReport> {
    quasiconcavity_on_grid(inst, alpha, inst.numerics().shape_grid)
}

pub fn quasiconcavity_on_grid(inst: &CanonicalInstance, alpha: f64, n: usize) -> Result<QuasiconcavityReport> {
    let (grid, h) = h_profile(inst, alpha, n)?;
    let mut fallen = false;
    let mut flat = false;
    let mut violation = 0.0f64;
    let mut location = None;
    for i in 0..h.len() - 1 {
        let diff = h[i + 1] - h[i];
        if diff.abs() <= SHAPE_TOL {
            flat = true;
        } else if diff < 0.0 {
            fallen = true;
        } else if fallen && diff > violation {
            violation = diff;
            location = Some(grid[i]);
        }
    }
    let max_value = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first = h.iter().position(|&v| v >= max_value - SHAPE_TOL).unwrap();
    let last = h.iter().rposition(|&v| v >= max_value - SHAPE_TOL).unwrap();
    Ok(QuasiconcavityReport {
        alpha,
        quasiconcave: location.is_none(),
        strict: location.is_none() && !flat,
        peak_set: (grid[first], grid[last]),
        max_value,
        max_violation: violation,
        location,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogConcavityReport {
    pub log_concave: bool,
    pub strict: bool,
    /// Largest `(ln f)″` found.
    pub max_second_derivative: f64,
    pub location: f64,
    /// Analytic derivative or finite differences.
    pub analytic: bool,
}

/// `(ln f)″ ≤ 0` on the interior of the support.
pub fn log_concavity_check(inst: &CanonicalInstance) -> Result<LogConcavityReport> {
    let d = inst.types().density()?;
    let (lo, hi) = (inst.lower(), inst.upper());
    let n = inst.numerics().shape_grid.max(3);
    let analytic = d.log_pdf_second_derivative(0.5 * (lo + hi)).is_some();
    let step = (hi - lo) / 400.0;
    let points: Vec<f64> = if analytic {
        linspace(lo, hi, n)[1..n - 1].to_vec()
    } else {
        linspace(lo + step, hi - step, n)
    };
    let mut worst = (f64::NEG_INFINITY, lo);
    for &t in &points {
        let v = match d.log_pdf_second_derivative(t) {
            Some(v) => v,
            None => {
                let (a, b, c) = (d.pdf(t - step), d.pdf(t), d.pdf(t + step));
                if a <= 0.0 || b <= 0.0 || c <= 0.0 {
                    f64::INFINITY
                } else {
                    (a.ln() - 2.0 * b.ln() + c.ln()) / (step * step)
                }
            }
        };
        if v > worst.0 {
            worst = (v, t);
        }
    }
    const LOG_TOL: f64 = 1e-8;
    Ok(LogConcavityReport {
        log_concave: worst.0 <= LOG_TOL,
        strict: worst.0 < -LOG_TOL,
        max_second_derivative: worst.0,
        location: worst.1,
        analytic,
    })
}

/// `c + k_cdf·F + k_pdf·f` on an open piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub c: f64,
    pub k_cdf: f64,
    pub k_pdf: f64,
}

impl Affine {
    fn add(self, o: Affine) -> Affine {
        Affine {
            c: self.c + o.c,
            k_cdf: self.k_cdf + o.k_cdf,
            k_pdf: self.k_pdf + o.k_pdf,
        }
    }
}

/// Cumulative multiplier: explicit values at the breaks, smooth in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub breaks: Vec<f64>,
    /// Value at each break.
    pub at_breaks: Vec<f64>,
    /// Form on `(breaks[i], breaks[i+1])`.
    pub pieces: Vec<Affine>,
}

const BREAK_TOL: f64 = 1e-14;

impl Multiplier {
    fn eval_piece(inst: &CanonicalInstance, p: Affine, t: f64) -> f64 {
        let d = inst.types().density().expect("certificates need a density");
        p.c + p.k_cdf * d.cdf(t) + p.k_pdf * d.pdf(t)
    }

    fn slope_piece(inst: &CanonicalInstance, p: Affine, t: f64) -> f64 {
        let d = inst.types().density().expect("certificates need a density");
        p.k_cdf * d.pdf(t) + p.k_pdf * d.pdf_derivative(t)
    }

    pub fn value(&self, inst: &CanonicalInstance, t: f64) -> f64 {
        if let Some(i) = self.breaks.iter().position(|&b| (b - t).abs() <= BREAK_TOL) {
            return self.at_breaks[i];
        }
        let i = self
            .breaks
            .windows(2)
            .position(|w| t > w[0] && t < w[1])
            .unwrap_or(if t < self.breaks[0] { 0 } else { self.pieces.len() - 1 });
        Self::eval_piece(inst, self.pieces[i], t)
    }

    /// `M(b_i−)`; the value itself at the first break.
    fn left_limit(&self, inst: &CanonicalInstance, i: usize) -> f64 {
        if i == 0 {
            self.at_breaks[0]
        } else {
            Self::eval_piece(inst, self.pieces[i - 1], self.breaks[i])
        }
    }

    /// `M(b_i+)`; the value itself at the last break.
    fn right_limit(&self, inst: &CanonicalInstance, i: usize) -> f64 {
        if i + 1 == self.breaks.len() {
            self.at_breaks[i]
        } else {
            Self::eval_piece(inst, self.pieces[i], self.breaks[i])
        }
    }

    /// `M(θ+) − M(θ−)` at a break.
    pub fn jump_at(&self, inst: &CanonicalInstance, t: f64) -> Option<f64> {
        let i = self.breaks.iter().position(|&b| (b - t).abs() <= BREAK_TOL)?;
        Some(self.right_limit(inst, i) - self.left_limit(inst, i))
    }

    fn plus(&self, o: &Multiplier) -> Multiplier {
        debug_assert_eq!(self.breaks, o.breaks);
        Multiplier {
            breaks: self.breaks.clone(),
            at_breaks: self.at_breaks.iter().zip(&o.at_breaks).map(|(a, b)| a + b).collect(),
            pieces: self.pieces.iter().zip(&o.pieces).map(|(a, b)| a.add(*b)).collect(),
        }
    }

    /// `∫_[a,b] g dM`: smooth parts by quadrature plus atoms at the breaks.
    /// At the lower end only the jump to the right of `a` counts, at the
    /// upper end only the jump from the left.
    pub fn stieltjes(&self, inst: &CanonicalInstance, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (i, p) in self.pieces.iter().enumerate() {
            let lo = self.breaks[i].max(a);
            let hi = self.breaks[i + 1].min(b);
            if hi > lo {
                total += inst.integrate(lo, hi, |s| g(s) * Self::slope_piece(inst, *p, s));
            }
        }
        for (i, &x) in self.breaks.iter().enumerate() {
            if x < a - BREAK_TOL || x > b + BREAK_TOL {
                continue;
            }
            let mut atom = 0.0;
            if x > a + BREAK_TOL {
                atom += self.at_breaks[i] - self.left_limit(inst, i);
            }
            if x < b - BREAK_TOL {
                atom += self.right_limit(inst, i) - self.at_breaks[i];
            }
            if atom != 0.0 {
                total += g(x) * atom;
            }
        }
        total
    }

    /// `∫_a^b M(s) ds` (point values do not matter).
    pub fn integral(&self, inst: &CanonicalInstance, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for (i, p) in self.pieces.iter().enumerate() {
            let lo = self.breaks[i].max(a);
            let hi = self.breaks[i + 1].min(b);
            if hi > lo {
                total += inst.integrate(lo, hi, |s| Self::eval_piece(inst, *p, s));
            }
        }
        total
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub alpha: f64,
    pub e_star: f64,
    pub theta_hat: f64,
    pub theta_star: f64,
    /// Weight on the top-type IC at `θ̄`.
    pub a: f64,
    pub lambda: Multiplier,
    pub psi: Multiplier,
    pub scheme: EmissionScheme,
    pub grid_size: usize,
}

/// Sampled multipliers and `Q` for export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateSamples {
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub psi: Vec<f64>,
    pub lambda1: Vec<f64>,
    /// `Q` on the grid points inside `[θ̂, θ̄]`.
    pub q_theta: Vec<f64>,
    pub q: Vec<f64>,
}

const PRECONDITION_TOL: f64 = 1e-6;

/// Builds the multiplier certificate for `(α, e*)`. Thresholds above `ê(θ̄)`
/// induce the same scheme as `ê(θ̄)` and are certified there.
pub fn build_certificate(inst: &CanonicalInstance, alpha: f64, e_star: f64) -> Result<Certificate> {
    let d = inst.types().density()?;
    let (_, residual) = foc_residual(inst, e_star, alpha)?;
    if residual.abs() > PRECONDITION_TOL {
        return Err(Error::FocPrecondition {
            alpha,
            e_star,
            residual,
        });
    }
    let e_star = e_star.min(inst.peak_emission(inst.upper()));
    let b = boundaries(inst, e_star)?;
    let (lo, hi) = (inst.lower(), inst.upper());
    // closed-form boundaries can miss the support ends by rounding
    let snap = |t: f64| {
        if (t - lo).abs() <= BREAK_TOL {
            lo
        } else if (t - hi).abs() <= BREAK_TOL {
            hi
        } else {
            t
        }
    };
    let (th, ts) = (snap(b.theta_hat), snap(b.theta_star));
    let f_star = d.pdf(ts);
    let c1 = (1.0 - alpha) * d.cdf(ts) + alpha * f_star;
    let pe_star = inst.pi_e(ts, e_star);
    let a = if pe_star != 0.0 {
        let slope = inst.dpi0(e_star);
        let integral = inst.integrate_density(th, ts, |t| -alpha + (1.0 - alpha) * (slope + t))?;
        -integral / pe_star
    } else {
        0.0
    };

    let mut breaks = vec![lo, th, ts, hi];
    breaks.dedup_by(|x, y| (*x - *y).abs() <= BREAK_TOL);
    let alpha_f = Affine {
        c: 0.0,
        k_cdf: 0.0,
        k_pdf: alpha,
    };
    let middle = Affine {
        c: c1,
        k_cdf: -(1.0 - alpha),
        k_pdf: 0.0,
    };
    let zero = Affine {
        c: 0.0,
        k_cdf: 0.0,
        k_pdf: 0.0,
    };
    let psi_top = Affine {
        c: c1,
        k_cdf: -(1.0 - alpha),
        k_pdf: -alpha,
    };
    let mut lambda_pieces = Vec::new();
    let mut psi_pieces = Vec::new();
    for w in breaks.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        lambda_pieces.push(if m < th {
            alpha_f
        } else if m < ts {
            middle
        } else {
            alpha_f
        });
        psi_pieces.push(if m < ts { zero } else { psi_top });
    }
    let near = |t: f64, x: f64| (t - x).abs() <= BREAK_TOL;
    let lambda_points = breaks
        .iter()
        .map(|&t| {
            if near(t, lo) {
                0.0
            } else if near(t, hi) {
                alpha * f_star - a
            } else if near(t, ts) || t > ts {
                alpha * d.pdf(t)
            } else if near(t, th) || t > th {
                c1 - (1.0 - alpha) * d.cdf(t)
            } else {
                alpha * d.pdf(t)
            }
        })
        .collect();
    let psi_points = breaks
        .iter()
        .map(|&t| {
            if near(t, hi) {
                (1.0 - alpha) * d.cdf(ts) - (1.0 - alpha) * d.cdf(hi) + a
            } else if near(t, ts) || t > ts {
                c1 - (1.0 - alpha) * d.cdf(t) - alpha * d.pdf(t)
            } else {
                0.0
            }
        })
        .collect();

    Ok(Certificate {
        alpha,
        e_star,
        theta_hat: th,
        theta_star: ts,
        a,
        lambda: Multiplier {
            breaks: breaks.clone(),
            at_breaks: lambda_points,
            pieces: lambda_pieces,
        },
        psi: Multiplier {
            breaks,
            at_breaks: psi_points,
            pieces: psi_pieces,
        },
        scheme: threshold_scheme(inst, e_star)?,
        grid_size: inst.numerics().certificate_grid,
    })
}

impl Certificate {
    fn base(&self, inst: &CanonicalInstance) -> Multiplier {
        let n = self.lambda.breaks.len();
        let d = inst.types().density().expect("certificates need a density");
        let k = 1.0 - self.alpha;
        Multiplier {
            breaks: self.lambda.breaks.clone(),
            at_breaks: self.lambda.breaks.iter().map(|&t| k * d.cdf(t)).collect(),
            pieces: vec![
                Affine {
                    c: 0.0,
                    k_cdf: k,
                    k_pdf: 0.0,
                };
                n - 1
            ],
        }
    }

    /// `Λ₁ = (1−α)F + Λ + Ψ`.
    pub fn lambda1(&self, inst: &CanonicalInstance) -> Multiplier {
        self.base(inst).plus(&self.lambda).plus(&self.psi)
    }

    /// `Q(θ)` for `θ ∈ [θ̂, θ̄]`.
    pub fn q(&self, inst: &CanonicalInstance, theta: f64) -> f64 {
        let d = inst.types().density().expect("certificates need a density");
        let hi = inst.upper();
        let smooth = -self.alpha * (d.cdf(hi) - d.cdf(theta)) + self.lambda.integral(inst, theta, hi);
        let l1 = self.lambda1(inst);
        let stieltjes = l1.stieltjes(inst, theta, hi, |s| inst.pi_e(s, self.scheme.emission(inst, s)));
        smooth + stieltjes
    }

    pub fn samples(&self, inst: &CanonicalInstance) -> CertificateSamples {
        let theta = linspace(inst.lower(), inst.upper(), self.grid_size.max(2));
        let l1 = self.lambda1(inst);
        let lambda = theta.iter().map(|&t| self.lambda.value(inst, t)).collect();
        let psi = theta.iter().map(|&t| self.psi.value(inst, t)).collect();
        let lambda1 = theta.iter().map(|&t| l1.value(inst, t)).collect();
        let mut q_theta: Vec<f64> = vec![self.theta_hat];
        q_theta.extend(theta.iter().copied().filter(|&t| t > self.theta_hat + BREAK_TOL));
        let q = q_theta.iter().map(|&t| self.q(inst, t)).collect();
        CertificateSamples {
            theta,
            lambda,
            psi,
            lambda1,
            q_theta,
            q,
        }
    }
}

/// One verified condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub max_violation: f64,
    pub location: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub alpha: f64,
    pub e_star: f64,
    pub theta_hat: f64,
    pub theta_star: f64,
    pub a: f64,
    pub checks: Vec<CheckResult>,
}

impl CertificateReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, violation: f64, location: Option<f64>, tol: f64) -> CheckResult {
    let v = violation.max(0.0);
    CheckResult {
        name: name.into(),
        pass: v <= tol,
        max_violation: v,
        location,
    }
}

/// Largest drop between consecutive samples.
fn worst_drop(theta: &[f64], values: &[f64]) -> (f64, Option<f64>) {
    let mut worst = (0.0, None);
    for i in 0..values.len() - 1 {
        let drop = values[i] - values[i + 1];
        if drop > worst.0 {
            worst = (drop, Some(theta[i + 1]));
        }
    }
    worst
}

/// Verifies every checkable condition of the certificate.
pub fn verify_certificate(inst: &CanonicalInstance, cert: &Certificate) -> Result<CertificateReport> {
    let d = inst.types().density()?;
    let tol = inst.numerics();
    let (lo, hi) = (inst.lower(), inst.upper());
    let samples = cert.samples(inst);
    let mut checks = Vec::new();

    let (drop, at) = worst_drop(&samples.theta, &samples.psi);
    checks.push(check("psi-monotone", drop, at, tol.monotone_tol));
    let (drop, at) = worst_drop(&samples.theta, &samples.lambda1);
    checks.push(check("lambda1-monotone", drop, at, tol.monotone_tol));

    let l1 = cert.lambda1(inst);
    let jump = l1.jump_at(inst, cert.theta_hat).unwrap_or(0.0);
    checks.push(check("lambda1-jump-at-theta-hat", -jump, Some(cert.theta_hat), tol.monotone_tol));

    let f_star = d.pdf(cert.theta_star);
    let upper = cert.alpha * f_star;
    let a_violation = if cert.theta_star < hi - BREAK_TOL {
        (cert.a - upper).abs()
    } else {
        (-cert.a).max(cert.a - upper)
    };
    checks.push(check("a-range", a_violation, Some(cert.theta_star), tol.foc_tol));

    let q_star = cert.q(inst, cert.theta_star);
    checks.push(check("q-zero-at-theta-star", q_star.abs(), Some(cert.theta_star), tol.foc_tol));

    let q_hat = samples.q[0];
    let e_hat = cert.scheme.emission(inst, cert.theta_hat);
    let e_top = cert.scheme.emission(inst, hi);
    let rhs = cert.lambda.value(inst, hi) * inst.pi_e(hi, e_top) * e_top;
    checks.push(check(
        "q-theta-hat-equality",
        (q_hat * e_hat - rhs).abs(),
        Some(cert.theta_hat),
        tol.foc_tol,
    ));

    let mut worst = (0.0f64, None);
    for (&t, &q) in samples.q_theta.iter().zip(&samples.q) {
        if q - q_hat > worst.0 {
            worst = (q - q_hat, Some(t));
        }
    }
    checks.push(check("q-maximal-at-theta-hat", worst.0, worst.1, tol.foc_tol));

    let cap = inst.cap();
    let ir = cert.psi.stieltjes(inst, lo, hi, |t| {
        inst.pi(t, cert.scheme.emission(inst, t)) - inst.pi(t, cap)
    });
    checks.push(check("ir-slackness", ir.abs(), None, tol.slackness_tol));

    let bracket = |t: f64| {
        let tail: f64 = cert
            .scheme
            .segments()
            .iter()
            .map(|s| {
                let a = s.lo.max(t);
                if s.hi > a {
                    inst.integrate(a, s.hi, |x| cert.scheme.emission(inst, x))
                } else {
                    0.0
                }
            })
            .sum();
        tail + inst.pi(t, cert.scheme.emission(inst, t)) - inst.pi(hi, e_top)
    };
    let ic = cert.lambda.stieltjes(inst, lo, hi, bracket);
    checks.push(check("ic-slackness", ic.abs(), None, tol.slackness_tol));

    Ok(CertificateReport {
        alpha: cert.alpha,
        e_star: cert.e_star,
        theta_hat: cert.theta_hat,
        theta_star: cert.theta_star,
        a: cert.a,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub peak_set: (f64, f64),
    /// `[θ̂, θ*]` meets the maximisers of `h_α`.
    pub peak_range: CheckResult,
    /// `h(θ*) ≥ h(θ̂) + αf(θ*)·indicator` where a one-sided derivative vanishes.
    pub boundary_relation: Option<CheckResult>,
}

const ZERO_DERIVATIVE: f64 = 1e-9;

/// Peak-range and peak-boundary relations at a candidate optimum.
pub fn peak_checks(inst: &CanonicalInstance, alpha: f64, e_star: f64) -> Result<PeakReport> {
    let d = inst.types().density()?;
    let n = inst.numerics().peak_grid;
    let shape = quasiconcavity_on_grid(inst, alpha, n)?;
    let e_eval = e_star.min(inst.peak_emission(inst.upper()));
    let b = boundaries(inst, e_eval)?;
    let spacing = (inst.upper() - inst.lower()) / (n.max(2) - 1) as f64;
    let (p_lo, p_hi) = shape.peak_set;
    let gap = (p_lo - b.theta_star).max(b.theta_hat - p_hi).max(0.0);
    let peak_range = check("peak-range", gap, Some(b.theta_hat), spacing);

    let h = |t: f64| (1.0 - alpha) * d.cdf(t) + alpha * d.pdf(t);
    let kink = inst.participation_floor(inst.upper());
    let interior = e_eval > inst.peak_emission(inst.lower()) && e_eval < inst.peak_emission(inst.upper());
    let mut boundary_relation = None;
    if interior {
        for side in [Side::Left, Side::Right] {
            let w = welfare_derivative(inst, e_eval, alpha, side)?;
            if w.abs() > ZERO_DERIVATIVE {
                continue;
            }
            let indicator = match side {
                Side::Left => e_eval > kink + KINK_TOL,
                Side::Right => e_eval >= kink - KINK_TOL,
            };
            let rhs = h(b.theta_hat) + if indicator { alpha * d.pdf(b.theta_star) } else { 0.0 };
            let result = check("peak-boundary", rhs - h(b.theta_star), Some(b.theta_star), 1e-8);
            let keep = match &boundary_relation {
                Some(CheckResult { max_violation, .. }) => result.max_violation > *max_violation,
                None => true,
            };
            if keep {
                boundary_relation = Some(result);
            }
        }
    }
    Ok(PeakReport {
        peak_set: shape.peak_set,
        peak_range,
        boundary_relation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensitySpec;
    use crate::model::ModelInstance;
    use crate::threshold::optimize_threshold;
    use approx::assert_abs_diff_eq;

    fn qref() -> CanonicalInstance {
        ModelInstance::quadratic_reference().canonicalize().unwrap()
    }

    fn with_density(spec: DensitySpec) -> CanonicalInstance {
        let mut m = ModelInstance::quadratic_reference();
        m.types.density = spec;
        m.canonicalize().unwrap()
    }

    #[test]
    fn quasiconcavity_examples() {
        let c = qref();
        let r = quasiconcavity_check(&c, 0.5).unwrap();
        assert!(r.quasiconcave && r.strict);
        assert_eq!(r.peak_set, (0.95, 0.95));
        let r = quasiconcavity_check(&c, 1.0).unwrap();
        assert!(r.quasiconcave && !r.strict);
        assert_eq!(r.peak_set, (0.6, 0.95));
        let bimodal = with_density(DensitySpec::PiecewiseLinearTable {
            points: vec![[0.6, 0.2], [0.7, 2.0], [0.775, 0.3], [0.85, 2.0], [0.95, 0.2]],
        });
        let r = quasiconcavity_check(&bimodal, 1.0).unwrap();
        assert!(!r.quasiconcave);
        assert!(r.max_violation > 0.0);
    }

    #[test]
    fn log_concavity_examples() {
        let r = log_concavity_check(&qref()).unwrap();
        assert!(r.log_concave && !r.strict);
        let normal = with_density(DensitySpec::TruncatedNormal { mean: 0.775, sd: 0.1 });
        let r = log_concavity_check(&normal).unwrap();
        assert!(r.log_concave && r.strict);
        assert_abs_diff_eq!(r.max_second_derivative, -100.0, epsilon = 1e-9);
        let tent = with_density(DensitySpec::PiecewiseLinearTable {
            points: vec![[0.6, 0.5], [0.8, 2.0], [0.95, 0.5]],
        });
        assert!(log_concavity_check(&tent).unwrap().log_concave);
        let dip = with_density(DensitySpec::PiecewiseLinearTable {
            points: vec![[0.6, 2.0], [0.8, 0.5], [0.95, 2.0]],
        });
        assert!(!log_concavity_check(&dip).unwrap().log_concave);
    }

    #[test]
    fn certificate_at_interior_optimum() {
        let c = qref();
        let e = 0.95 - 0.02 / 0.99;
        let cert = build_certificate(&c, 0.01, e).unwrap();
        // θ* = θ̄ and the FOC integral vanishes, so no weight sits on the top IC
        assert_eq!(cert.theta_star, 0.95);
        assert_abs_diff_eq!(cert.a, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(cert.lambda.value(&c, 0.95), 0.01 / 0.35, epsilon = 1e-9);
        let report = verify_certificate(&c, &cert).unwrap();
        assert!(report.all_pass(), "{report:#?}");
    }

    #[test]
    fn certificate_at_kink() {
        let c = qref();
        let cert = build_certificate(&c, 0.5, 0.9).unwrap();
        assert_eq!(cert.theta_star, 0.95);
        // A = −(1/π_e)·I with I = −0.0696429 and π_e(θ̄, 0.9) = 0.05
        assert_abs_diff_eq!(cert.a, 0.0696429 / 0.05, epsilon = 1e-5);
        assert!(cert.a >= 0.0 && cert.a <= 0.5 / 0.35);
        let report = verify_certificate(&c, &cert).unwrap();
        assert!(report.all_pass(), "{report:#?}");
    }

    #[test]
    fn certificate_without_emission_weight() {
        let c = qref();
        let cert = build_certificate(&c, 0.0, 0.95).unwrap();
        assert_eq!(cert.a, 0.0);
        let report = verify_certificate(&c, &cert).unwrap();
        assert!(report.all_pass(), "{report:#?}");
    }

    #[test]
    fn precondition_and_tampering() {
        let c = qref();
        assert!(matches!(
            build_certificate(&c, 0.5, 0.7),
            Err(Error::FocPrecondition { .. })
        ));
        let mut cert = build_certificate(&c, 0.01, 0.95 - 0.02 / 0.99).unwrap();
        let last = cert.psi.at_breaks.len() - 1;
        cert.psi.at_breaks[last] -= 0.5;
        let report = verify_certificate(&c, &cert).unwrap();
        assert!(!report.check("psi-monotone").unwrap().pass);
    }

    #[test]
    fn peak_check_examples() {
        let c = qref();
        let e = 0.95 - 0.02 / 0.99;
        let r = peak_checks(&c, 0.01, e).unwrap();
        assert_eq!(r.peak_set, (0.95, 0.95));
        assert!(r.peak_range.pass);
        assert!(r.boundary_relation.unwrap().pass);
        let r = peak_checks(&c, 0.5, 0.9).unwrap();
        assert!(r.peak_range.pass);
        let p = optimize_threshold(&c, 1.0).unwrap();
        let r = peak_checks(&c, 1.0, p.e_star).unwrap();
        assert_eq!(r.peak_set, (0.6, 0.95));
        assert!(r.peak_range.pass);
    }
}
