//! Emission–profit Pareto frontier traced by sweeping the weight `α` over
//! threshold policies, plus the named extreme points.

use serde::{Deserialize, Serialize};

use crate::certify::{log_concavity_check, LogConcavityReport};
use crate::error::{Error, Result};
use crate::model::{CanonicalInstance, TypeDistribution};
use crate::numerics::{bisect_predicate, linspace};
use crate::policy::{expected_outcomes, EmissionScheme};
use crate::threshold::{optimize_threshold, scalarize, search_domain, threshold_outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub alpha: f64,
    pub e_star: f64,
    pub gamma: f64,
    pub pi: f64,
    pub w: f64,
    #[serde(default)]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Frontier {
    /// Sorted by `Γ`.
    pub points: Vec<FrontierPoint>,
    /// Threshold policies are not known to span the frontier here.
    pub heuristic: bool,
    pub log_concavity: Option<LogConcavityReport>,
    pub warnings: Vec<String>,
}

const DEDUP_TOL: f64 = 1e-7;
const PARETO_TOL: f64 = 1e-9;

/// Optimal thresholds on an even grid of `alpha_count` weights in `[0, 1]`.
/// Where `W` is flat the upper end of the plateau is kept, since `Π` does
/// not fall along it.
pub fn trace_frontier(inst: &CanonicalInstance, alpha_count: usize) -> Result<Frontier> {
    if alpha_count < 2 {
        return Err(Error::InvalidInput(format!(
            "alpha_count must be at least 2 (got {alpha_count})"
        )));
    }
    let (log_concavity, heuristic) = match inst.types() {
        TypeDistribution::Continuous(_) => {
            let r = log_concavity_check(inst)?;
            let h = !r.log_concave;
            (Some(r), h)
        }
        TypeDistribution::Discrete { points, .. } => (None, points.len() > 1),
    };
    let mut warnings = Vec::new();
    if heuristic {
        warnings.push("type density is not log-concave; threshold frontier is heuristic".to_string());
    }
    let mut raw = Vec::with_capacity(alpha_count);
    for alpha in linspace(0.0, 1.0, alpha_count) {
        let opt = optimize_threshold(inst, alpha)?;
        let e = opt.plateau_top;
        let o = threshold_outcome(inst, e)?;
        let mut flags = Vec::new();
        if heuristic {
            flags.push("heuristic".to_string());
        }
        if !opt.warnings.is_empty() {
            flags.push("multimodal".to_string());
            for w in &opt.warnings {
                log::warn!("{w}");
            }
            warnings.extend(opt.warnings.iter().cloned());
        }
        raw.push(FrontierPoint {
            alpha,
            e_star: e,
            gamma: o.gamma,
            pi: o.pi,
            w: scalarize(o, alpha),
            flags,
        });
    }
    warnings.dedup();
    let mut points: Vec<FrontierPoint> = Vec::new();
    for p in raw {
        let dup = points
            .iter()
            .any(|q| (q.gamma - p.gamma).abs() <= DEDUP_TOL && (q.pi - p.pi).abs() <= DEDUP_TOL);
        if !dup {
            points.push(p);
        }
    }
    Ok(Frontier {
        points: pareto_filter(points),
        heuristic,
        log_concavity,
        warnings,
    })
}

/// `(Γ, Π)` of full disclosure; `α` is recorded as 0.
pub fn full_disclosure_point(inst: &CanonicalInstance) -> FrontierPoint {
    let scheme = EmissionScheme::follow_peak(inst.lower(), inst.upper());
    let o = expected_outcomes(inst, &scheme);
    FrontierPoint {
        alpha: 0.0,
        e_star: search_domain(inst).1,
        gamma: o.gamma,
        pi: o.pi,
        w: o.pi,
        flags: vec!["full-disclosure".to_string()],
    }
}

/// `(ē, E[π(θ, ē)])`: every type at the cap. `α` is recorded as 0.
pub fn no_disclosure_point(inst: &CanonicalInstance) -> FrontierPoint {
    let scheme = EmissionScheme::constant(inst.lower(), inst.upper(), inst.cap());
    let o = expected_outcomes(inst, &scheme);
    FrontierPoint {
        alpha: 0.0,
        e_star: 0.0,
        gamma: inst.cap(),
        pi: o.pi,
        w: o.pi,
        flags: vec!["no-disclosure".to_string()],
    }
}

/// Indices of the `(Γ, Π)` pairs not weakly dominated by another pair,
/// sorted by `Γ`.
pub fn pareto_indices(points: &[(f64, f64)], tol: f64) -> Vec<usize> {
    let dominated = |i: usize| {
        let (g, p) = points[i];
        points.iter().enumerate().any(|(j, &(g2, p2))| {
            j != i && g2 <= g + tol && p2 >= p - tol && (g2 < g - tol || p2 > p + tol)
        })
    };
    let mut keep: Vec<usize> = (0..points.len()).filter(|&i| !dominated(i)).collect();
    keep.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0));
    keep
}

/// Drops weakly dominated points (tolerance 1e-9) and sorts by `Γ`.
pub fn pareto_filter(points: Vec<FrontierPoint>) -> Vec<FrontierPoint> {
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.gamma, p.pi)).collect();
    let keep = pareto_indices(&pairs, PARETO_TOL);
    let mut slots: Vec<Option<FrontierPoint>> = points.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().unwrap()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullDisclosureOnly {
    pub holds: bool,
    /// `θ▲` with `e_(θ) = ē` on `[θ▲, θ̄]` and `f` nondecreasing on `[θ_, θ▲]`.
    pub theta_triangle: Option<f64>,
    pub grid_size: usize,
    /// Why the conditions fail, when they do.
    pub detail: String,
}

const CAP_TOL: f64 = 1e-8;

/// Grid test of the sufficient condition for full disclosure being the only
/// efficient policy. Only as fine as the grid.
pub fn full_disclosure_only(inst: &CanonicalInstance) -> Result<FullDisclosureOnly> {
    let d = inst.types().density()?;
    let n = inst.numerics().peak_grid.max(2);
    let grid = linspace(inst.lower(), inst.upper(), n);
    let cap = inst.cap();
    let at_cap = |t: f64| inst.participation_floor(t) >= cap - CAP_TOL;
    let Some(k) = (0..n).rev().take_while(|&i| at_cap(grid[i])).last() else {
        return Ok(FullDisclosureOnly {
            holds: false,
            theta_triangle: None,
            grid_size: n,
            detail: format!("participation floor stays below the cap at the top type {}", grid[n - 1]),
        });
    };
    // e_ is increasing, so the switch point between grid nodes is a bisection
    let witness = if k == 0 {
        grid[0]
    } else {
        bisect_predicate(grid[k - 1], grid[k], 1e-13, at_cap)
    };
    let mut nodes: Vec<f64> = grid.iter().copied().filter(|&t| t < witness).collect();
    nodes.push(witness);
    let scale = nodes.iter().map(|&t| d.pdf(t)).fold(1.0, f64::max);
    let drop = nodes
        .windows(2)
        .map(|w| (w[0], d.pdf(w[0]) - d.pdf(w[1])))
        .find(|&(_, fall)| fall > 1e-12 * scale);
    Ok(match drop {
        None => FullDisclosureOnly {
            holds: true,
            theta_triangle: Some(witness),
            grid_size: n,
            detail: "floor at the cap above the witness; density nondecreasing below it".into(),
        },
        Some((t, _)) => FullDisclosureOnly {
            holds: false,
            theta_triangle: None,
            grid_size: n,
            detail: format!("density decreases near {t}, below the smallest candidate {witness}"),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensitySpec;
    use crate::model::ModelInstance;
    use approx::assert_abs_diff_eq;

    fn qref() -> CanonicalInstance {
        ModelInstance::quadratic_reference().canonicalize().unwrap()
    }

    fn point(g: f64, p: f64) -> FrontierPoint {
        FrontierPoint {
            alpha: 0.0,
            e_star: 0.0,
            gamma: g,
            pi: p,
            w: 0.0,
            flags: Vec::new(),
        }
    }

    #[test]
    fn named_points() {
        let c = qref();
        let f = full_disclosure_point(&c);
        assert_abs_diff_eq!(f.gamma, 0.775, epsilon = 1e-12);
        assert_abs_diff_eq!(f.pi, 0.3054167, epsilon = 1e-7);
        let n = no_disclosure_point(&c);
        assert_eq!(n.gamma, 1.0);
        assert_abs_diff_eq!(n.pi, 0.275, epsilon = 1e-12);

        let mut m = ModelInstance::quadratic_reference();
        m.intercept_b = 0.3;
        let shifted = full_disclosure_point(&m.canonicalize().unwrap());
        assert_abs_diff_eq!(shifted.pi, f.pi - 0.3 * 0.775, epsilon = 1e-12);

        let mut m = ModelInstance::quadratic_reference();
        m.types = crate::model::TypeSpec {
            lower: 0.8,
            upper: 0.8,
            density: DensitySpec::Point,
        };
        let single = m.canonicalize().unwrap();
        let f = full_disclosure_point(&single);
        assert_abs_diff_eq!(f.gamma, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(f.pi, 0.32, epsilon = 1e-12);
        let n = no_disclosure_point(&single);
        assert_abs_diff_eq!(n.pi, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn pareto_examples() {
        let kept = pareto_filter(vec![point(1.0, 0.275), point(0.775, 0.3054)]);
        assert_eq!(kept, vec![point(0.775, 0.3054)]);
        assert_eq!(pareto_filter(vec![point(1.0, 1.0)]).len(), 1);
        let both = pareto_filter(vec![point(0.9, 0.31), point(0.8, 0.30)]);
        assert_eq!(both, vec![point(0.8, 0.30), point(0.9, 0.31)]);
    }

    #[test]
    fn qref_frontier_endpoints() {
        let c = qref();
        let fr = trace_frontier(&c, 2).unwrap();
        assert!(!fr.heuristic);
        assert_eq!(fr.points.len(), 2);
        assert_abs_diff_eq!(fr.points[0].e_star, 0.9, epsilon = 1e-9);
        assert_abs_diff_eq!(fr.points[0].gamma, 0.7714286, epsilon = 1e-7);
        assert_abs_diff_eq!(fr.points[0].pi, 0.3053571, epsilon = 1e-7);
        assert_abs_diff_eq!(fr.points[1].gamma, 0.775, epsilon = 1e-9);
        assert_abs_diff_eq!(fr.points[1].pi, 0.3054167, epsilon = 1e-7);

        let fr = trace_frontier(&c, 101).unwrap();
        let first = &fr.points[0];
        let last = fr.points.last().unwrap();
        assert_abs_diff_eq!(first.gamma, 0.7714286, epsilon = 1e-7);
        assert_abs_diff_eq!(last.gamma, 0.775, epsilon = 1e-9);
        for w in fr.points.windows(2) {
            assert!(w[0].gamma < w[1].gamma && w[0].pi < w[1].pi);
        }
        assert!(trace_frontier(&c, 1).is_err());
    }

    #[test]
    fn heuristic_flag_for_bimodal_density() {
        let mut m = ModelInstance::quadratic_reference();
        m.types.density = DensitySpec::PiecewiseLinearTable {
            points: vec![[0.6, 0.2], [0.7, 2.0], [0.775, 0.3], [0.85, 2.0], [0.95, 0.2]],
        };
        let fr = trace_frontier(&m.canonicalize().unwrap(), 5).unwrap();
        assert!(fr.heuristic);
        assert!(fr.points.iter().all(|p| p.flags.contains(&"heuristic".to_string())));
    }

    #[test]
    fn full_disclosure_only_examples() {
        assert!(!full_disclosure_only(&qref()).unwrap().holds);
        let mut m = ModelInstance::quadratic_reference();
        m.types = crate::model::TypeSpec {
            lower: 0.9,
            upper: 1.2,
            density: DensitySpec::TruncatedExponential { rate: 2.0 },
        };
        let r = full_disclosure_only(&m.canonicalize().unwrap()).unwrap();
        assert!(r.holds);
        assert_abs_diff_eq!(r.theta_triangle.unwrap(), 1.0, epsilon = 1e-8);
        m.types.density = DensitySpec::TruncatedExponential { rate: -2.0 };
        assert!(!full_disclosure_only(&m.canonicalize().unwrap()).unwrap().holds);
    }
}
