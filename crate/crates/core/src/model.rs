//! The economy: profit family, emission cap and type distribution.
//!
//! Profits take the form `π(θ, e) = π₀(e) − θ·(a·e + b)`. Analysis happens
//! on the canonical form `π(θ′, e) = π₀(e) + θ′·e` obtained with `θ′ = −a·θ`;
//! the dropped `−b·θ` term is a policy-independent constant added back when
//! expected profit is reported.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::{Density, DensitySpec, TypeDensity};
use crate::error::{Error, Result};
use crate::numerics::{bisect_increasing, linspace, Numerics, Quadrature};
use crate::poly::{Polynomial, MAX_DEGREE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeSpec {
    pub lower: f64,
    pub upper: f64,
    pub density: DensitySpec,
}

/// An instance as read from JSON, in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInstance {
    pub emission_cap: f64,
    pub pi0: Polynomial,
    #[serde(rename = "a")]
    pub slope_a: f64,
    #[serde(rename = "b")]
    pub intercept_b: f64,
    pub types: TypeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerics: Option<Numerics>,
}

/// One pass/fail line of [`ModelInstance::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    /// Whether ê is strictly inside `(0, ē)` at the lower and upper canonical type.
    pub peak_interior: Option<[bool; 2]>,
    /// Whether e_ is strictly inside `(0, ē)` at the lower and upper canonical type.
    pub floor_interior: Option<[bool; 2]>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&AssumptionCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

impl ModelInstance {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// The quadratic reference economy used throughout the tests and docs.
    pub fn quadratic_reference() -> Self {
        Self {
            emission_cap: 1.0,
            pi0: Polynomial::new(vec![0.0, 0.0, -0.5]),
            slope_a: -1.0,
            intercept_b: 0.0,
            types: TypeSpec {
                lower: 0.6,
                upper: 0.95,
                density: DensitySpec::Uniform,
            },
            numerics: None,
        }
    }

    pub fn numerics(&self) -> Numerics {
        self.numerics.clone().unwrap_or_default()
    }

    /// Profit in original units, with domain checks on both arguments.
    pub fn profit(&self, theta: f64, e: f64) -> Result<f64> {
        check_domain("theta", theta, self.types.lower, self.types.upper)?;
        check_domain("e", e, 0.0, self.emission_cap)?;
        Ok(self.pi0.eval(e) - theta * (self.slope_a * e + self.intercept_b))
    }

    fn is_degenerate(&self) -> bool {
        self.types.density.is_point() || self.slope_a == 0.0
    }

    /// Checks every modelling assumption on fixed grids. Never fails; the
    /// report carries the failures.
    pub fn validate(&self) -> AssumptionReport {
        let numerics = self.numerics();
        let n = numerics.validation_grid.max(2);
        let mut checks = Vec::new();
        let cap = self.emission_cap;

        let cap_ok = cap.is_finite() && cap > 0.0;
        checks.push(AssumptionCheck {
            name: "emission-cap".into(),
            pass: cap_ok,
            detail: format!("emission cap {cap} must be finite and positive"),
        });

        let (lo, hi) = (self.types.lower, self.types.upper);
        let point = self.types.density.is_point();
        let support_ok = lo.is_finite()
            && hi.is_finite()
            && if point { lo == hi } else { lo < hi };
        checks.push(AssumptionCheck {
            name: "type-support".into(),
            pass: support_ok,
            detail: if point {
                format!("point type needs lower == upper (got [{lo}, {hi}])")
            } else {
                format!("type support [{lo}, {hi}] needs lower < upper")
            },
        });

        let coeffs_ok = self.pi0.coeffs().iter().all(|c| c.is_finite())
            && self.pi0.degree() <= MAX_DEGREE
            && self.slope_a.is_finite()
            && self.intercept_b.is_finite();
        checks.push(AssumptionCheck {
            name: "profit-family".into(),
            pass: coeffs_ok,
            detail: format!(
                "pi0 has degree {} (max {MAX_DEGREE}); coefficients, a and b must be finite",
                self.pi0.degree()
            ),
        });

        if !point && support_ok {
            let (pass, detail) = match Density::new(self.types.density.clone(), lo, hi) {
                Err(e) => (false, e.to_string()),
                Ok(d) => {
                    let mass_err = (d.cdf(hi) - 1.0).abs().max(d.cdf(lo).abs());
                    let grid = linspace(lo, hi, n);
                    let bad = grid[1..n - 1].iter().find(|&&t| !(d.pdf(t) > 0.0));
                    match bad {
                        Some(t) => (false, format!("density vanishes at interior type {t}")),
                        None if mass_err > 1e-10 => {
                            (false, format!("cdf endpoint error {mass_err:e} exceeds 1e-10"))
                        }
                        None => (true, "positive on the interior, unit mass".into()),
                    }
                }
            };
            checks.push(AssumptionCheck {
                name: "density".into(),
                pass,
                detail,
            });
        }

        if cap_ok && coeffs_ok {
            let d2 = self.pi0.derivative().derivative();
            let worst = linspace(0.0, cap, n)
                .into_iter()
                .map(|e| (e, d2.eval(e)))
                .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            checks.push(AssumptionCheck {
                name: "strict-concavity".into(),
                pass: worst.1 < 0.0,
                detail: format!(
                    "largest second derivative of pi0 on [0, {cap}] is {} at e = {}",
                    worst.1, worst.0
                ),
            });
        }

        if cap_ok && coeffs_ok && support_ok {
            let thetas = if point { vec![lo] } else { linspace(lo, hi, n) };
            let failing: Vec<f64> = thetas
                .iter()
                .copied()
                .filter(|&t| {
                    let at_zero = self.pi0.eval(0.0) - t * self.intercept_b;
                    let at_cap = self.pi0.eval(cap) - t * (self.slope_a * cap + self.intercept_b);
                    !(at_zero < at_cap)
                })
                .collect();
            let detail = if failing.is_empty() {
                "every type strictly prefers the cap to zero emission".into()
            } else {
                format!(
                    "zero emission weakly preferred to the cap for {} grid types in [{}, {}]",
                    failing.len(),
                    failing[0],
                    failing[failing.len() - 1]
                )
            };
            checks.push(AssumptionCheck {
                name: "cap-preferred-to-zero".into(),
                pass: failing.is_empty(),
                detail,
            });
        }

        let mut report = AssumptionReport {
            checks,
            peak_interior: None,
            floor_interior: None,
        };
        if report.all_pass() {
            let s = -self.slope_a;
            let (c_lo, c_hi) = if self.is_degenerate() {
                let t = s * lo;
                (t, t)
            } else {
                ((s * lo).min(s * hi), (s * lo).max(s * hi))
            };
            let dpi0 = self.pi0.derivative();
            let interior = |e: f64| e > 0.0 && e < cap;
            report.peak_interior = Some([
                interior(peak_of(&dpi0, cap, c_lo)),
                interior(peak_of(&dpi0, cap, c_hi)),
            ]);
            report.floor_interior = Some([
                interior(floor_of(&self.pi0, &dpi0, cap, c_lo)),
                interior(floor_of(&self.pi0, &dpi0, cap, c_hi)),
            ]);
        }
        report
    }

    /// Validates and maps the instance to canonical form.
    pub fn canonicalize(&self) -> Result<CanonicalInstance> {
        let report = self.validate();
        if !report.all_pass() {
            let msg = report
                .failures()
                .iter()
                .map(|c| format!("{}: {}", c.name, c.detail))
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::Assumption(msg));
        }
        let numerics = self.numerics();
        let quad = Quadrature::new(numerics.quad_nodes);
        let scale = -self.slope_a;
        let (lo, hi) = (self.types.lower, self.types.upper);

        let (types, mean_original) = if self.types.density.is_point() {
            (TypeDistribution::atom(scale * lo), lo)
        } else {
            let density = Density::new(self.types.density.clone(), lo, hi)?;
            let mean = quad.integrate(lo, hi, |t| t * density.pdf(t));
            if scale == 0.0 {
                (TypeDistribution::atom(0.0), mean)
            } else {
                (
                    TypeDistribution::Continuous(TypeDensity::new(density, scale)),
                    mean,
                )
            }
        };

        let dpi0 = self.pi0.derivative();
        Ok(CanonicalInstance {
            original: self.clone(),
            cap: self.emission_cap,
            d2pi0: dpi0.derivative(),
            dpi0,
            pi0: self.pi0.clone(),
            scale,
            profit_shift: -self.intercept_b * mean_original,
            types,
            quad,
            numerics,
        })
    }
}

fn check_domain(what: &'static str, value: f64, lower: f64, upper: f64) -> Result<()> {
    let slack = 1e-12 * (1.0 + lower.abs().max(upper.abs()));
    if !value.is_finite() || value < lower - slack || value > upper + slack {
        return Err(Error::OutOfDomain {
            what,
            value,
            lower,
            upper,
        });
    }
    Ok(())
}

/// Maximiser of `π₀(e) + θe` over `[0, cap]` for strictly concave `π₀`.
fn peak_of(dpi0: &Polynomial, cap: f64, theta: f64) -> f64 {
    let marginal = |e: f64| dpi0.eval(e) + theta;
    if marginal(0.0) <= 0.0 {
        return 0.0;
    }
    if marginal(cap) >= 0.0 {
        return cap;
    }
    // safeguarded Newton: marginal profit is strictly decreasing in e
    let d2pi0 = dpi0.derivative();
    let (mut a, mut b) = (0.0, cap);
    let mut e = 0.5 * cap;
    for _ in 0..100 {
        let m = marginal(e);
        if m > 0.0 {
            a = e;
        } else if m < 0.0 {
            b = e;
        } else {
            return e;
        }
        let slope = d2pi0.eval(e);
        let mut next = if slope < 0.0 { e - m / slope } else { f64::NAN };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if (next - e).abs() <= 1e-15 * cap.max(1.0) || b - a <= 1e-15 * cap.max(1.0) {
            return next;
        }
        e = next;
    }
    e
}

/// Smallest `e` with `π(θ, e) ≥ π(θ, cap)`.
fn floor_of(pi0: &Polynomial, dpi0: &Polynomial, cap: f64, theta: f64) -> f64 {
    let peak = peak_of(dpi0, cap, theta);
    let top = pi0.eval(cap) + theta * cap;
    let gap = |e: f64| pi0.eval(e) + theta * e - top;
    if gap(0.0) >= 0.0 {
        return 0.0;
    }
    if peak >= cap {
        // π(θ,·) is increasing on all of E, so only the cap itself qualifies
        return cap;
    }
    bisect_increasing(0.0, peak, 1e-15 * cap.max(1.0), gap)
}

/// Canonical type distribution: a pushed-forward density or finitely many atoms.
#[derive(Debug, Clone)]
pub enum TypeDistribution {
    Continuous(TypeDensity),
    Discrete { points: Vec<f64>, weights: Vec<f64> },
}

impl TypeDistribution {
    pub fn atom(theta: f64) -> Self {
        TypeDistribution::Discrete {
            points: vec![theta],
            weights: vec![1.0],
        }
    }

    /// Atoms sorted by location; weights must be positive and sum to one.
    pub fn discrete(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidInput(
                "discrete types need matching nonempty points and weights".into(),
            ));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("atoms must be strictly increasing".into()));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "atom weights must be positive and sum to 1 (sum {total})"
            )));
        }
        Ok(TypeDistribution::Discrete { points, weights })
    }

    pub fn lower(&self) -> f64 {
        match self {
            TypeDistribution::Continuous(d) => d.lower(),
            TypeDistribution::Discrete { points, .. } => points[0],
        }
    }

    pub fn upper(&self) -> f64 {
        match self {
            TypeDistribution::Continuous(d) => d.upper(),
            TypeDistribution::Discrete { points, .. } => points[points.len() - 1],
        }
    }

    pub fn density(&self) -> Result<&TypeDensity> {
        match self {
            TypeDistribution::Continuous(d) => Ok(d),
            TypeDistribution::Discrete { .. } => Err(Error::NeedsDensity),
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, TypeDistribution::Continuous(_))
    }
}

/// Canonical instance: `π(θ, e) = π₀(e) + θ·e` on `Θ′ = −a·Θ`.
#[derive(Debug, Clone)]
pub struct CanonicalInstance {
    original: ModelInstance,
    cap: f64,
    pi0: Polynomial,
    dpi0: Polynomial,
    d2pi0: Polynomial,
    scale: f64,
    profit_shift: f64,
    types: TypeDistribution,
    quad: Quadrature,
    numerics: Numerics,
}

impl CanonicalInstance {
    pub fn original(&self) -> &ModelInstance {
        &self.original
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn pi0(&self) -> &Polynomial {
        &self.pi0
    }

    /// `−a`, the factor in `θ′ = −a·θ` (zero for the degenerate `a = 0` case).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `−b·E[θ]` in original units: add to canonical expected profit.
    pub fn profit_shift(&self) -> f64 {
        self.profit_shift
    }

    pub fn types(&self) -> &TypeDistribution {
        &self.types
    }

    pub fn lower(&self) -> f64 {
        self.types.lower()
    }

    pub fn upper(&self) -> f64 {
        self.types.upper()
    }

    pub fn numerics(&self) -> &Numerics {
        &self.numerics
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    pub fn is_single_type(&self) -> bool {
        matches!(&self.types, TypeDistribution::Discrete { points, .. } if points.len() == 1)
    }

    /// Same economy with the type distribution replaced by atoms. Used to
    /// evaluate threshold policies on discretised types.
    pub fn with_discrete_types(&self, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let types = TypeDistribution::discrete(points, weights)?;
        Ok(Self {
            types,
            ..self.clone()
        })
    }

    pub fn with_numerics(&self, numerics: Numerics) -> Self {
        Self {
            quad: Quadrature::new(numerics.quad_nodes),
            numerics,
            ..self.clone()
        }
    }

    /// `[lo, hi]` split at the density's interior kinks.
    pub fn smooth_pieces(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut cuts = vec![lo];
        if let TypeDistribution::Continuous(d) = &self.types {
            cuts.extend(d.knots().into_iter().filter(|&k| k > lo && k < hi));
        }
        cuts.push(hi);
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// `∫_lo^hi g(θ) dθ` by Gauss-Legendre on each smooth piece.
    pub fn integrate(&self, lo: f64, hi: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.smooth_pieces(lo, hi)
            .into_iter()
            .map(|(a, b)| self.quad.integrate(a, b, &mut g))
            .sum()
    }

    /// `∫_lo^hi g(θ) dF(θ)` for a continuous type density.
    pub fn integrate_density(&self, lo: f64, hi: f64, mut g: impl FnMut(f64) -> f64) -> Result<f64> {
        let d = self.types.density()?;
        Ok(self.integrate(lo, hi, |t| g(t) * d.pdf(t)))
    }

    /// Canonical type of an original type.
    pub fn to_canonical_type(&self, theta: f64) -> f64 {
        self.scale * theta
    }

    /// Original type of a canonical type (`a ≠ 0`).
    pub fn to_original_type(&self, theta: f64) -> f64 {
        theta / self.scale
    }

    /// Canonical profit with domain checks.
    pub fn profit(&self, theta: f64, e: f64) -> Result<f64> {
        check_domain("theta", theta, self.lower(), self.upper())?;
        check_domain("e", e, 0.0, self.cap)?;
        Ok(self.pi(theta, e))
    }

    /// Canonical profit without domain checks.
    #[inline]
    pub fn pi(&self, theta: f64, e: f64) -> f64 {
        self.pi0.eval(e) + theta * e
    }

    /// `∂π/∂e`.
    #[inline]
    pub fn pi_e(&self, theta: f64, e: f64) -> f64 {
        self.dpi0.eval(e) + theta
    }

    /// `π₀′`.
    pub fn dpi0(&self, e: f64) -> f64 {
        self.dpi0.eval(e)
    }

    /// `π₀″`.
    pub fn d2pi0(&self, e: f64) -> f64 {
        self.d2pi0.eval(e)
    }

    /// ê(θ): the unconstrained profit-maximising emission, clamped to E.
    pub fn peak_emission(&self, theta: f64) -> f64 {
        peak_of(&self.dpi0, self.cap, theta)
    }

    /// e_(θ): lowest emission the type weakly prefers to the cap.
    pub fn participation_floor(&self, theta: f64) -> f64 {
        floor_of(&self.pi0, &self.dpi0, self.cap, theta)
    }

    /// The canonical instance written back as a model instance with `a = −1`,
    /// `b = 0`. Canonicalising it again yields the same economy.
    pub fn to_model_instance(&self) -> ModelInstance {
        let (lower, upper, density) = match &self.types {
            TypeDistribution::Discrete { points, .. } => (points[0], points[0], DensitySpec::Point),
            TypeDistribution::Continuous(d) => {
                let s = d.scale();
                let spec = match d.base().spec().clone() {
                    DensitySpec::Uniform => DensitySpec::Uniform,
                    DensitySpec::TruncatedNormal { mean, sd } => DensitySpec::TruncatedNormal {
                        mean: s * mean,
                        sd: sd * s.abs(),
                    },
                    DensitySpec::TruncatedExponential { rate } => {
                        DensitySpec::TruncatedExponential { rate: rate / s }
                    }
                    DensitySpec::PiecewiseLinearTable { points } => {
                        let mut mapped: Vec<[f64; 2]> =
                            points.iter().map(|p| [s * p[0], p[1]]).collect();
                        mapped.sort_by(|x, y| x[0].partial_cmp(&y[0]).unwrap());
                        DensitySpec::PiecewiseLinearTable { points: mapped }
                    }
                    DensitySpec::Point => DensitySpec::Point,
                };
                (d.lower(), d.upper(), spec)
            }
        };
        ModelInstance {
            emission_cap: self.cap,
            pi0: self.pi0.clone(),
            slope_a: -1.0,
            intercept_b: 0.0,
            types: TypeSpec {
                lower,
                upper,
                density,
            },
            numerics: self.original.numerics.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn qref() -> CanonicalInstance {
        ModelInstance::quadratic_reference().canonicalize().unwrap()
    }

    #[test]
    fn parses_reference_json() {
        let json = r#"{"emission_cap": 1.0, "pi0": [0.0, 0.0, -0.5], "a": -1.0, "b": 0.0,
            "types": {"lower": 0.6, "upper": 0.95, "density": {"kind": "uniform"}}}"#;
        let m = ModelInstance::from_json_str(json).unwrap();
        assert_eq!(m, ModelInstance::quadratic_reference());
    }

    #[test]
    fn profit_values() {
        let m = ModelInstance::quadratic_reference();
        assert_abs_diff_eq!(m.profit(0.8, 0.5).unwrap(), 0.275, epsilon = 1e-15);
        assert_eq!(m.profit(0.8, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(m.profit(0.6, 1.0).unwrap(), 0.1, epsilon = 1e-15);
        assert!(m.profit(0.5, 0.5).is_err());
        assert!(m.profit(0.8, 1.5).is_err());
        assert!(qref().profit(0.8, -0.1).is_err());
    }

    #[test]
    fn peak_and_floor_closed_forms() {
        let c = qref();
        assert_abs_diff_eq!(c.peak_emission(0.8), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(c.peak_emission(0.95), 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(c.participation_floor(0.8), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(c.participation_floor(0.95), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(c.participation_floor(0.6), 0.2, epsilon = 1e-12);
        assert!(c.pi_e(0.8, c.peak_emission(0.8)).abs() <= 1e-10);

        let mut m = ModelInstance::quadratic_reference();
        m.pi0 = Polynomial::new(vec![0.0, 1.0, -0.5]);
        let c = m.canonicalize().unwrap();
        assert_eq!(c.peak_emission(0.6), 1.0);
        assert_eq!(c.participation_floor(0.6), 1.0);
    }

    #[test]
    fn validation_failures() {
        assert!(ModelInstance::quadratic_reference().validate().all_pass());

        let mut convex = ModelInstance::quadratic_reference();
        convex.pi0 = Polynomial::new(vec![0.0, 0.0, 1.0]);
        let r = convex.validate();
        assert_eq!(
            r.failures().iter().map(|c| c.name.as_str()).collect::<Vec<_>>(),
            vec!["strict-concavity"]
        );
        assert!(matches!(convex.canonicalize(), Err(Error::Assumption(_))));

        let mut low = ModelInstance::quadratic_reference();
        low.types.lower = 0.1;
        low.types.upper = 0.4;
        let r = low.validate();
        let names: Vec<_> = r.failures().iter().map(|c| c.name.clone()).collect();
        assert_eq!(names, vec!["cap-preferred-to-zero".to_string()]);
        let err = low.canonicalize().unwrap_err().to_string();
        assert!(err.contains("cap-preferred-to-zero"), "{err}");

        let mut high_degree = ModelInstance::quadratic_reference();
        high_degree.pi0 = Polynomial::new(vec![0.0, 0.0, -0.5, 0.0, 0.0, 0.0, 0.0, -1.0]);
        assert!(!high_degree.validate().all_pass());
    }

    #[test]
    fn interior_flags() {
        let r = ModelInstance::quadratic_reference().validate();
        assert_eq!(r.peak_interior, Some([true, true]));
        assert_eq!(r.floor_interior, Some([true, true]));
    }

    #[test]
    fn reflected_instance_matches_reference() {
        let mut m = ModelInstance::quadratic_reference();
        m.slope_a = 1.0;
        m.types.lower = -0.95;
        m.types.upper = -0.6;
        let c = m.canonicalize().unwrap();
        assert_abs_diff_eq!(c.lower(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(c.upper(), 0.95, epsilon = 1e-15);
        let d = c.types().density().unwrap();
        assert_abs_diff_eq!(d.cdf(0.7), (0.7 - 0.6) / 0.35, epsilon = 1e-12);
    }

    #[test]
    fn round_trip_profit_with_intercept() {
        let mut m = ModelInstance::quadratic_reference();
        m.slope_a = -2.0;
        m.intercept_b = 0.3;
        m.types.lower = 0.3;
        m.types.upper = 0.475;
        let c = m.canonicalize().unwrap();
        assert_abs_diff_eq!(c.lower(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(c.upper(), 0.95, epsilon = 1e-15);
        for &t in &[0.3, 0.35, 0.41, 0.475] {
            for &e in &[0.0, 0.25, 0.9, 1.0] {
                let canon = c.pi(c.to_canonical_type(t), e);
                let orig = m.profit(t, e).unwrap();
                assert_abs_diff_eq!(orig, canon - m.intercept_b * t, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(c.profit_shift(), -0.3 * 0.3875, epsilon = 1e-12);
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let mut m = ModelInstance::quadratic_reference();
        m.slope_a = 2.0;
        m.types.lower = -0.475;
        m.types.upper = -0.3;
        m.types.density = DensitySpec::TruncatedExponential { rate: 3.0 };
        let c = m.canonicalize().unwrap();
        let back = c.to_model_instance();
        let c2 = back.canonicalize().unwrap();
        assert_eq!(c2.to_model_instance(), back);
        let d1 = c.types().density().unwrap();
        let d2 = c2.types().density().unwrap();
        for &t in &[0.61, 0.7, 0.8, 0.94] {
            assert_abs_diff_eq!(d1.pdf(t), d2.pdf(t), epsilon = 1e-9);
            assert_abs_diff_eq!(d1.cdf(t), d2.cdf(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_instances_become_atoms() {
        let mut m = ModelInstance::quadratic_reference();
        m.types = TypeSpec {
            lower: 0.8,
            upper: 0.8,
            density: DensitySpec::Point,
        };
        let c = m.canonicalize().unwrap();
        assert!(c.is_single_type());
        assert_eq!(c.lower(), 0.8);
        assert!(matches!(c.types().density(), Err(Error::NeedsDensity)));

        let mut flat = ModelInstance::quadratic_reference();
        flat.slope_a = 0.0;
        flat.pi0 = Polynomial::new(vec![0.0, 1.0, -0.5]);
        flat.intercept_b = 0.2;
        let c = flat.canonicalize().unwrap();
        assert!(c.is_single_type());
        assert_eq!(c.lower(), 0.0);
        assert_abs_diff_eq!(c.profit_shift(), -0.2 * 0.775, epsilon = 1e-12);
    }
}
