//! Finite-region disclosure policies, their menus and equilibrium schemes.
//!
//! Regions are listed bottom-up and share endpoints; a shared endpoint
//! belongs to the lower region. A pooled cell reveals only its supremum, so
//! it contributes that single point to the menu.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CanonicalInstance, TypeDistribution};
use crate::numerics::linspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionMode {
    Transparent,
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
    pub mode: RegionMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosurePolicy {
    regions: Vec<Region>,
}

const JOIN_TOL: f64 = 1e-12;

impl DisclosurePolicy {
    /// Checks that the regions tile `[0, cap]` in order.
    pub fn new(regions: Vec<Region>, cap: f64) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::InvalidInput("policy has no regions".into()));
        }
        let tol = JOIN_TOL * cap.max(1.0);
        if regions[0].lo.abs() > tol {
            return Err(Error::InvalidInput(format!(
                "first region must start at 0 (starts at {})",
                regions[0].lo
            )));
        }
        let last = regions[regions.len() - 1].hi;
        if (last - cap).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "last region must end at the cap {cap} (ends at {last})"
            )));
        }
        for r in &regions {
            if !(r.lo.is_finite() && r.hi.is_finite()) || r.hi < r.lo {
                return Err(Error::InvalidInput(format!(
                    "region [{}, {}] is not an interval",
                    r.lo, r.hi
                )));
            }
        }
        for w in regions.windows(2) {
            if (w[0].hi - w[1].lo).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "regions must be contiguous: gap or overlap between {} and {}",
                    w[0].hi, w[1].lo
                )));
            }
        }
        let mut regions = regions;
        regions[0].lo = 0.0;
        let n = regions.len();
        regions[n - 1].hi = cap;
        for i in 1..n {
            regions[i].lo = regions[i - 1].hi;
        }
        Ok(Self { regions })
    }

    pub fn from_json_str(s: &str, cap: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            regions: Vec<Region>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        Self::new(raw.regions, cap)
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn cap(&self) -> f64 {
        self.regions[self.regions.len() - 1].hi
    }

    pub fn full_disclosure(cap: f64) -> Self {
        Self {
            regions: vec![Region {
                lo: 0.0,
                hi: cap,
                mode: RegionMode::Transparent,
            }],
        }
    }

    pub fn no_disclosure(cap: f64) -> Self {
        Self {
            regions: vec![Region {
                lo: 0.0,
                hi: cap,
                mode: RegionMode::Pooled,
            }],
        }
    }

    /// Transparent on `[0, e*]`, pooled on `(e*, cap]`.
    pub fn threshold(e_star: f64, cap: f64) -> Result<Self> {
        if !(0.0..=cap).contains(&e_star) {
            return Err(Error::OutOfDomain {
                what: "threshold",
                value: e_star,
                lower: 0.0,
                upper: cap,
            });
        }
        if e_star >= cap {
            return Ok(Self::full_disclosure(cap));
        }
        Self::new(
            vec![
                Region {
                    lo: 0.0,
                    hi: e_star,
                    mode: RegionMode::Transparent,
                },
                Region {
                    lo: e_star,
                    hi: cap,
                    mode: RegionMode::Pooled,
                },
            ],
            cap,
        )
    }

    /// Pooled cells with more than one point, as `(lo, hi, closed_at_lo)`.
    fn pooled_cells(&self) -> Vec<(f64, f64, bool)> {
        self.regions
            .iter()
            .enumerate()
            .filter(|(_, r)| r.mode == RegionMode::Pooled && r.hi > r.lo)
            .map(|(i, r)| (r.lo, r.hi, i == 0))
            .collect()
    }
}

/// Sorted, disjoint closed intervals; degenerate intervals are points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Menu {
    intervals: Vec<[f64; 2]>,
}

impl Menu {
    /// Sorts and merges overlapping or touching intervals.
    pub fn new(mut intervals: Vec<[f64; 2]>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidInput("menu is empty".into()));
        }
        if intervals.iter().any(|iv| !(iv[0] <= iv[1])) {
            return Err(Error::InvalidInput("menu interval with lo > hi".into()));
        }
        intervals.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        let mut merged: Vec<[f64; 2]> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv[0] <= last[1] + JOIN_TOL => last[1] = last[1].max(iv[1]),
                _ => merged.push(iv),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn contains(&self, e: f64) -> bool {
        self.intervals
            .iter()
            .any(|iv| e >= iv[0] - JOIN_TOL && e <= iv[1] + JOIN_TOL)
    }
}

/// Emissions sustainable under the policy's beliefs.
pub fn belief_compatible_menu(policy: &DisclosurePolicy) -> Menu {
    let pieces = policy
        .regions
        .iter()
        .map(|r| match r.mode {
            RegionMode::Transparent => [r.lo, r.hi],
            RegionMode::Pooled => [r.hi, r.hi],
        })
        .collect();
    Menu::new(pieces).expect("a valid policy has regions")
}

/// Candidate in each menu interval, and the winning interval index.
fn best_in_menu(inst: &CanonicalInstance, theta: f64, menu: &Menu) -> (usize, f64) {
    let tol = inst.numerics().tie_tol;
    let peak = inst.peak_emission(theta);
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, iv) in menu.intervals.iter().enumerate() {
        let e = peak.clamp(iv[0], iv[1]);
        let p = inst.pi(theta, e);
        match best {
            Some((_, _, bp)) if p <= bp + tol => {}
            _ => best = Some((j, e, p)),
        }
    }
    let (j, e, _) = best.expect("menu is nonempty");
    (j, e)
}

/// Type θ's profit-maximising emission in the menu; ties go to the lowest.
pub fn best_response(inst: &CanonicalInstance, theta: f64, menu: &Menu) -> f64 {
    best_in_menu(inst, theta, menu).1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "kebab-case")]
pub enum Rule {
    FollowPeak,
    Constant(f64),
}

/// Types in `[lo, hi]` (first segment) or `(lo, hi]` (later segments).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub rule: Rule,
}

/// Piecewise map from canonical types to equilibrium emissions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionScheme {
    segments: Vec<Segment>,
}

impl EmissionScheme {
    /// Drops degenerate segments (unless nothing else is left) and merges
    /// equal neighbours.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidInput("scheme has no segments".into()));
        }
        if segments.iter().any(|s| s.hi < s.lo) {
            return Err(Error::InvalidInput("segment with hi < lo".into()));
        }
        let lower = segments[0].lo;
        let mut kept: Vec<Segment> = segments.iter().copied().filter(|s| s.hi > s.lo).collect();
        if kept.is_empty() {
            kept.push(segments[0]);
        }
        kept[0].lo = lower;
        let mut out: Vec<Segment> = Vec::with_capacity(kept.len());
        for s in kept {
            match out.last_mut() {
                Some(last) if last.rule == s.rule => last.hi = s.hi,
                _ => out.push(s),
            }
        }
        Ok(Self { segments: out })
    }

    pub fn constant(lo: f64, hi: f64, e: f64) -> Self {
        Self {
            segments: vec![Segment {
                lo,
                hi,
                rule: Rule::Constant(e),
            }],
        }
    }

    pub fn follow_peak(lo: f64, hi: f64) -> Self {
        Self {
            segments: vec![Segment {
                lo,
                hi,
                rule: Rule::FollowPeak,
            }],
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn lower(&self) -> f64 {
        self.segments[0].lo
    }

    pub fn upper(&self) -> f64 {
        self.segments[self.segments.len() - 1].hi
    }

    fn segment_for(&self, theta: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| theta <= s.hi)
            .unwrap_or(&self.segments[self.segments.len() - 1])
    }

    pub fn emission(&self, inst: &CanonicalInstance, theta: f64) -> f64 {
        match self.segment_for(theta).rule {
            Rule::FollowPeak => inst.peak_emission(theta),
            Rule::Constant(e) => e,
        }
    }

    /// `(θ, e(θ), π(θ, e(θ)))` on `n` evenly spaced canonical types.
    pub fn sample(&self, inst: &CanonicalInstance, n: usize) -> Vec<(f64, f64, f64)> {
        linspace(self.lower(), self.upper(), n)
            .into_iter()
            .map(|t| {
                let e = self.emission(inst, t);
                (t, e, inst.pi(t, e))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    LowClamp,
    Peak,
    HighClamp,
}

fn label(inst: &CanonicalInstance, theta: f64, menu: &Menu) -> (usize, Kind) {
    let (j, e) = best_in_menu(inst, theta, menu);
    let iv = menu.intervals[j];
    if iv[0] == iv[1] || e <= iv[0] {
        (j, Kind::LowClamp)
    } else if e >= iv[1] {
        (j, Kind::HighClamp)
    } else {
        (j, Kind::Peak)
    }
}

fn rule_of(menu: &Menu, l: (usize, Kind)) -> Rule {
    let iv = menu.intervals[l.0];
    match l.1 {
        Kind::LowClamp => Rule::Constant(iv[0]),
        Kind::HighClamp => Rule::Constant(iv[1]),
        Kind::Peak => Rule::FollowPeak,
    }
}

const SCAN_POINTS: usize = 257;

/// Equilibrium emission scheme of a policy. Types are labelled by the menu
/// interval they pick and whether they sit at its ends or at their peak; the
/// label is monotone in θ, so boundaries are found by bisection.
pub fn equilibrium_scheme(inst: &CanonicalInstance, policy: &DisclosurePolicy) -> EmissionScheme {
    let menu = belief_compatible_menu(policy);
    scheme_for_menu(inst, &menu)
}

pub fn scheme_for_menu(inst: &CanonicalInstance, menu: &Menu) -> EmissionScheme {
    let (lo, hi) = (inst.lower(), inst.upper());
    if lo == hi {
        let e = best_response(inst, lo, menu);
        return EmissionScheme::constant(lo, hi, e);
    }
    let tol = 1e-13 * (hi - lo).max(1.0);
    let grid = linspace(lo, hi, SCAN_POINTS);
    let mut segments = Vec::new();
    let mut start = lo;
    let mut current = label(inst, lo, menu);
    let mut from = lo;
    for &t in &grid[1..] {
        let target = label(inst, t, menu);
        while target != current {
            // bracket the last type that keeps the current label
            let (mut a, mut b) = (from, t);
            while b - a > tol {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if label(inst, mid, menu) == current {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            segments.push(Segment {
                lo: start,
                hi: a,
                rule: rule_of(menu, current),
            });
            start = a;
            from = b;
            current = label(inst, b, menu);
        }
        from = t;
    }
    segments.push(Segment {
        lo: start,
        hi,
        rule: rule_of(menu, current),
    });
    EmissionScheme::new(segments).expect("scan yields at least one segment")
}

/// Expected emission Γ and expected profit Π (original units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub gamma: f64,
    pub pi: f64,
}

pub fn expected_outcomes(inst: &CanonicalInstance, scheme: &EmissionScheme) -> Outcome {
    let (gamma, pi) = match inst.types() {
        TypeDistribution::Discrete { points, weights } => {
            points
                .iter()
                .zip(weights)
                .fold((0.0, 0.0), |(g, p), (&t, &w)| {
                    let e = scheme.emission(inst, t);
                    (g + w * e, p + w * inst.pi(t, e))
                })
        }
        TypeDistribution::Continuous(d) => {
            let mut g = 0.0;
            let mut p = 0.0;
            for s in scheme.segments() {
                let e_of = |t: f64| match s.rule {
                    Rule::FollowPeak => inst.peak_emission(t),
                    Rule::Constant(e) => e,
                };
                g += inst.integrate(s.lo, s.hi, |t| e_of(t) * d.pdf(t));
                p += inst.integrate(s.lo, s.hi, |t| inst.pi(t, e_of(t)) * d.pdf(t));
            }
            (g, p)
        }
    };
    Outcome {
        gamma,
        pi: pi + inst.profit_shift(),
    }
}

/// Whether every cell of `d1` lies inside a cell of `d2`.
pub fn is_finer(d1: &DisclosurePolicy, d2: &DisclosurePolicy) -> bool {
    let cells2 = d2.pooled_cells();
    d1.pooled_cells().iter().all(|&(l1, h1, closed1)| {
        cells2.iter().any(|&(l2, h2, closed2)| {
            let top = h1 <= h2 + JOIN_TOL;
            let bottom = if closed2 {
                l1 >= l2 - JOIN_TOL
            } else if closed1 {
                l1 > l2 + JOIN_TOL
            } else {
                l1 >= l2 - JOIN_TOL
            };
            top && bottom
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Ic,
    Ir,
}

/// The worst violated constraint found on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub theta: f64,
    /// The mimicked type for IC; absent for IR.
    pub theta_prime: Option<f64>,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplementabilityReport {
    pub implementable: bool,
    pub witness: Option<Violation>,
}

const IMPLEMENTABLE_TOL: f64 = 1e-9;

/// IC on all grid pairs and IR at all grid types.
pub fn check_implementable(
    inst: &CanonicalInstance,
    scheme: &EmissionScheme,
    grid_size: usize,
) -> Result<ImplementabilityReport> {
    if grid_size < 2 {
        return Err(Error::InvalidInput("implementability grid needs at least 2 points".into()));
    }
    let thetas = match inst.types() {
        TypeDistribution::Discrete { points, .. } => points.clone(),
        TypeDistribution::Continuous(_) => linspace(inst.lower(), inst.upper(), grid_size),
    };
    let emissions: Vec<f64> = thetas.iter().map(|&t| scheme.emission(inst, t)).collect();
    let cap = inst.cap();
    let mut worst: Option<Violation> = None;
    let mut note = |v: Violation| {
        if v.amount > IMPLEMENTABLE_TOL && worst.map_or(true, |w| v.amount > w.amount) {
            worst = Some(v);
        }
    };
    for (i, &t) in thetas.iter().enumerate() {
        let own = inst.pi(t, emissions[i]);
        note(Violation {
            kind: ConstraintKind::Ir,
            theta: t,
            theta_prime: None,
            amount: inst.pi(t, cap) - own,
        });
        for (k, &tp) in thetas.iter().enumerate() {
            note(Violation {
                kind: ConstraintKind::Ic,
                theta: t,
                theta_prime: Some(tp),
                amount: inst.pi(t, emissions[k]) - own,
            });
        }
    }
    Ok(ImplementabilityReport {
        implementable: worst.is_none(),
        witness: worst,
    })
}
