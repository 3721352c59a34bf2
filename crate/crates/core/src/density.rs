//! Type densities on a bounded support and their affine push-forwards.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// User-facing description of the type density. The support comes from the
/// enclosing instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensitySpec {
    Uniform,
    TruncatedNormal {
        mean: f64,
        sd: f64,
    },
    /// Density proportional to `exp(rate * θ)`; a positive rate is increasing.
    TruncatedExponential {
        rate: f64,
    },
    /// Linear interpolation of `(θ, weight)` knots spanning the support,
    /// normalised to unit mass.
    PiecewiseLinearTable {
        points: Vec<[f64; 2]>,
    },
    /// All mass on a single type; requires `lower == upper`.
    Point,
}

impl DensitySpec {
    pub fn is_point(&self) -> bool {
        matches!(self, DensitySpec::Point)
    }
}

/// A normalised continuous density on `[lower, upper]`.
#[derive(Debug, Clone)]
pub struct Density {
    spec: DensitySpec,
    lower: f64,
    upper: f64,
    kernel: Kernel,
}

#[derive(Debug, Clone)]
enum Kernel {
    Uniform {
        height: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
        cdf_lower: f64,
        mass: f64,
    },
    Exponential {
        rate: f64,
        norm: f64,
    },
    Table {
        xs: Vec<f64>,
        ys: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl Density {
    pub fn new(spec: DensitySpec, lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
            return Err(Error::InvalidInput(format!(
                "density support [{lower}, {upper}] must be a nonempty bounded interval"
            )));
        }
        let width = upper - lower;
        let kernel = match &spec {
            DensitySpec::Uniform => Kernel::Uniform {
                height: 1.0 / width,
            },
            DensitySpec::TruncatedNormal { mean, sd } => {
                if !(*sd > 0.0) || !mean.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "truncated normal needs finite mean and sd > 0 (got {mean}, {sd})"
                    )));
                }
                let cdf_lower = std_normal_cdf((lower - mean) / sd);
                let mass = std_normal_cdf((upper - mean) / sd) - cdf_lower;
                if !(mass > 1e-300) {
                    return Err(Error::InvalidInput(
                        "truncated normal has no mass on the support".into(),
                    ));
                }
                Kernel::Normal {
                    mean: *mean,
                    sd: *sd,
                    cdf_lower,
                    mass,
                }
            }
            DensitySpec::TruncatedExponential { rate } => {
                if !rate.is_finite() {
                    return Err(Error::InvalidInput("exponential rate must be finite".into()));
                }
                let norm = if rate.abs() < 1e-12 {
                    width
                } else {
                    (rate * width).exp_m1() / rate
                };
                Kernel::Exponential { rate: *rate, norm }
            }
            DensitySpec::PiecewiseLinearTable { points } => table_kernel(points, lower, upper)?,
            DensitySpec::Point => {
                return Err(Error::InvalidInput(
                    "a point mass has no density; use a discrete type distribution".into(),
                ))
            }
        };
        Ok(Self {
            spec,
            lower,
            upper,
            kernel,
        })
    }

    pub fn spec(&self) -> &DensitySpec {
        &self.spec
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lower || x > self.upper {
            return 0.0;
        }
        match &self.kernel {
            Kernel::Uniform { height } => *height,
            Kernel::Normal { mean, sd, mass, .. } => std_normal_pdf((x - mean) / sd) / (sd * mass),
            Kernel::Exponential { rate, norm } => (rate * (x - self.lower)).exp() / norm,
            Kernel::Table { xs, ys, .. } => {
                let i = segment_index(xs, x);
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if x >= self.upper {
            return 1.0;
        }
        match &self.kernel {
            Kernel::Uniform { height } => (x - self.lower) * height,
            Kernel::Normal {
                mean,
                sd,
                cdf_lower,
                mass,
            } => ((std_normal_cdf((x - mean) / sd) - cdf_lower) / mass).clamp(0.0, 1.0),
            Kernel::Exponential { rate, norm } => {
                if rate.abs() < 1e-12 {
                    (x - self.lower) / norm
                } else {
                    (rate * (x - self.lower)).exp_m1() / rate / norm
                }
            }
            Kernel::Table { xs, ys, cumulative } => {
                let i = segment_index(xs, x);
                let dx = x - xs[i];
                let slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
                cumulative[i] + dx * ys[i] + 0.5 * slope * dx * dx
            }
        }
    }

    /// `f′`: analytic for the built-in families, central difference for tables.
    pub fn pdf_derivative(&self, x: f64) -> f64 {
        match &self.kernel {
            Kernel::Uniform { .. } => 0.0,
            Kernel::Normal { mean, sd, .. } => -(x - mean) / (sd * sd) * self.pdf(x),
            Kernel::Exponential { rate, .. } => rate * self.pdf(x),
            Kernel::Table { .. } => {
                let h = (self.upper - self.lower) * 1e-6;
                let a = (x - h).max(self.lower);
                let b = (x + h).min(self.upper);
                (self.pdf(b) - self.pdf(a)) / (b - a)
            }
        }
    }

    /// Analytic `(ln f)″` where the family provides one; `None` for tables.
    pub fn log_pdf_second_derivative(&self, _x: f64) -> Option<f64> {
        match &self.kernel {
            Kernel::Uniform { .. } | Kernel::Exponential { .. } => Some(0.0),
            Kernel::Normal { sd, .. } => Some(-1.0 / (sd * sd)),
            Kernel::Table { .. } => None,
        }
    }
}

fn segment_index(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    match xs.binary_search_by(|probe| probe.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    }
}

fn table_kernel(points: &[[f64; 2]], lower: f64, upper: f64) -> Result<Kernel> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(
            "piecewise-linear table needs at least two knots".into(),
        ));
    }
    let tol = 1e-9 * (upper - lower).max(1.0);
    if (points[0][0] - lower).abs() > tol || (points[points.len() - 1][0] - upper).abs() > tol {
        return Err(Error::InvalidInput(format!(
            "table knots must span the support [{lower}, {upper}]"
        )));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
    xs[0] = lower;
    *xs.last_mut().unwrap() = upper;
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "table knots must be strictly increasing".into(),
        ));
    }
    let raw: Vec<f64> = points.iter().map(|p| p[1]).collect();
    if raw.iter().any(|&y| !(y >= 0.0) || !y.is_finite()) {
        return Err(Error::InvalidInput("table weights must be nonnegative".into()));
    }
    if raw[1..raw.len() - 1].iter().any(|&y| y <= 0.0) {
        return Err(Error::InvalidInput(
            "table density must be positive on the interior".into(),
        ));
    }
    let area: f64 = xs
        .windows(2)
        .zip(raw.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum();
    if !(area > 0.0) {
        return Err(Error::InvalidInput("table has zero mass".into()));
    }
    let ys: Vec<f64> = raw.iter().map(|y| y / area).collect();
    let mut cumulative = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for i in 0..xs.len() - 1 {
        acc += 0.5 * (xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]);
        cumulative.push(acc);
    }
    Ok(Kernel::Table { xs, ys, cumulative })
}

/// Push-forward of a density under `θ′ = scale · θ` (scale ≠ 0).
#[derive(Debug, Clone)]
pub struct TypeDensity {
    base: Density,
    scale: f64,
}

impl TypeDensity {
    pub fn new(base: Density, scale: f64) -> Self {
        assert!(scale != 0.0 && scale.is_finite(), "scale must be nonzero");
        Self { base, scale }
    }

    pub fn base(&self) -> &Density {
        &self.base
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn lower(&self) -> f64 {
        (self.scale * self.base.lower).min(self.scale * self.base.upper)
    }

    pub fn upper(&self) -> f64 {
        (self.scale * self.base.lower).max(self.scale * self.base.upper)
    }

    fn pull(&self, x: f64) -> f64 {
        x / self.scale
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.base.pdf(self.pull(x)) / self.scale.abs()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower() {
            return 0.0;
        }
        if x >= self.upper() {
            return 1.0;
        }
        let c = self.base.cdf(self.pull(x));
        if self.scale > 0.0 {
            c
        } else {
            1.0 - c
        }
    }

    pub fn pdf_derivative(&self, x: f64) -> f64 {
        self.base.pdf_derivative(self.pull(x)) / (self.scale * self.scale.abs())
    }

    pub fn log_pdf_second_derivative(&self, x: f64) -> Option<f64> {
        self.base
            .log_pdf_second_derivative(self.pull(x))
            .map(|v| v / (self.scale * self.scale))
    }

    pub fn is_table(&self) -> bool {
        matches!(self.base.kernel, Kernel::Table { .. })
    }

    /// Interior kinks of the density (table knots), ascending.
    pub fn knots(&self) -> Vec<f64> {
        match &self.base.kernel {
            Kernel::Table { xs, .. } => {
                let mut k: Vec<f64> = xs[1..xs.len() - 1].iter().map(|x| self.scale * x).collect();
                k.sort_by(|a, b| a.partial_cmp(b).unwrap());
                k
            }
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + i as f64 * h);
        }
        s * h
    }

    fn specs() -> Vec<DensitySpec> {
        vec![
            DensitySpec::Uniform,
            DensitySpec::TruncatedNormal { mean: 0.775, sd: 0.1 },
            DensitySpec::TruncatedExponential { rate: 2.0 },
            DensitySpec::TruncatedExponential { rate: -3.0 },
            DensitySpec::PiecewiseLinearTable {
                points: vec![[0.6, 0.5], [0.7, 2.0], [0.95, 1.0]],
            },
        ]
    }

    #[test]
    fn cdf_endpoints_and_mass() {
        for spec in specs() {
            let d = Density::new(spec.clone(), 0.6, 0.95).unwrap();
            assert_abs_diff_eq!(d.cdf(0.6), 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(d.cdf(0.95), 1.0, epsilon = 1e-10);
            let mass = trapezoid(|x| d.pdf(x), 0.6, 0.95, 20_000);
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-7);
            // F is the integral of f
            let partial = trapezoid(|x| d.pdf(x), 0.6, 0.8, 20_000);
            assert_abs_diff_eq!(d.cdf(0.8), partial, epsilon = 1e-7);
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for spec in specs() {
            let d = Density::new(spec, 0.6, 0.95).unwrap();
            for &x in &[0.65, 0.72, 0.9] {
                let h = 1e-6;
                let fd = (d.pdf(x + h) - d.pdf(x - h)) / (2.0 * h);
                assert_abs_diff_eq!(d.pdf_derivative(x), fd, epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn normal_log_curvature() {
        let d = Density::new(DensitySpec::TruncatedNormal { mean: 0.775, sd: 0.1 }, 0.6, 0.95)
            .unwrap();
        assert_abs_diff_eq!(d.log_pdf_second_derivative(0.7).unwrap(), -100.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_tables() {
        let bad = DensitySpec::PiecewiseLinearTable {
            points: vec![[0.6, 1.0], [0.7, 0.0], [0.95, 1.0]],
        };
        assert!(Density::new(bad, 0.6, 0.95).is_err());
        let short = DensitySpec::PiecewiseLinearTable {
            points: vec![[0.6, 1.0], [0.9, 1.0]],
        };
        assert!(Density::new(short, 0.6, 0.95).is_err());
        assert!(Density::new(DensitySpec::Uniform, 1.0, 1.0).is_err());
    }

    #[test]
    fn reflected_pushforward() {
        let base = Density::new(
            DensitySpec::TruncatedExponential { rate: 2.0 },
            -0.95,
            -0.6,
        )
        .unwrap();
        let t = TypeDensity::new(base.clone(), -1.0);
        assert_abs_diff_eq!(t.lower(), 0.6);
        assert_abs_diff_eq!(t.upper(), 0.95);
        for &x in &[0.61, 0.7, 0.83, 0.94] {
            assert_abs_diff_eq!(t.pdf(x), base.pdf(-x), epsilon = 1e-14);
            assert_abs_diff_eq!(t.cdf(x), 1.0 - base.cdf(-x), epsilon = 1e-14);
            assert_abs_diff_eq!(t.pdf_derivative(x), -base.pdf_derivative(-x), epsilon = 1e-12);
        }
        let scaled = TypeDensity::new(Density::new(DensitySpec::Uniform, 0.3, 0.475).unwrap(), 2.0);
        assert_abs_diff_eq!(scaled.pdf(0.8), 1.0 / 0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(scaled.cdf(0.775), 0.5, epsilon = 1e-12);
    }
}
