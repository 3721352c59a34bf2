//! Brute force on discretised economies: every menu of grid emissions that
//! contains the cap, the induced equilibria and the exact discrete frontier.
//!
//! A menu is a bitmask over the emission grid with the top bit (the cap)
//! always set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify::log_concavity_check;
use crate::error::{Error, Result};
use crate::frontier::pareto_indices;
use crate::model::{CanonicalInstance, TypeDistribution};
use crate::numerics::{golden_max, linspace};
use crate::threshold::{search_domain, threshold_outcome};

pub const MAX_ENUMERATED_EMISSIONS: usize = 16;
pub const MAX_TYPES: usize = 201;
/// Bitmask width.
pub const MAX_EMISSIONS: usize = 32;

/// Finite economy: canonical types with masses, an emission grid ending at
/// the cap and the profit of every (type, emission) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteInstance {
    pub type_grid: Vec<f64>,
    pub weights: Vec<f64>,
    pub emission_grid: Vec<f64>,
    /// `profit[i][j] = π(θᵢ, eⱼ)`.
    pub profit: Vec<Vec<f64>>,
    /// Constant added to expected profit (original-unit intercept).
    #[serde(default)]
    pub pi_shift: f64,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

impl DiscreteInstance {
    pub fn new(type_grid: Vec<f64>, weights: Vec<f64>, emission_grid: Vec<f64>, profit: Vec<Vec<f64>>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if type_grid.is_empty() || emission_grid.is_empty() {
            return bad("type and emission grids must be nonempty".into());
        }
        if emission_grid.len() > MAX_EMISSIONS {
            return bad(format!("at most {MAX_EMISSIONS} emission levels"));
        }
        if weights.len() != type_grid.len() || profit.len() != type_grid.len() {
            return bad("weights and profit rows must match the type grid".into());
        }
        if profit.iter().any(|row| row.len() != emission_grid.len()) {
            return bad("profit rows must match the emission grid".into());
        }
        if type_grid.windows(2).any(|w| !(w[0] < w[1])) || emission_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("grids must be strictly increasing".into());
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return bad("weights must be nonnegative and sum to one".into());
        }
        Ok(Self {
            type_grid,
            weights,
            emission_grid,
            profit,
            pi_shift: 0.0,
            labels: None,
        })
    }

    pub fn n_types(&self) -> usize {
        self.type_grid.len()
    }

    pub fn n_emissions(&self) -> usize {
        self.emission_grid.len()
    }

    /// The menu offering every grid point.
    pub fn full_menu(&self) -> u32 {
        low_bits(self.n_emissions())
    }

    /// The menu offering only the cap.
    pub fn cap_menu(&self) -> u32 {
        1 << (self.n_emissions() - 1)
    }

    pub fn menu_points(&self, menu: u32) -> Vec<f64> {
        (0..self.n_emissions()).filter(|&j| menu >> j & 1 == 1).map(|j| self.emission_grid[j]).collect()
    }

    /// Labels of the menu's points, or their values.
    pub fn menu_names(&self, menu: u32) -> Vec<String> {
        (0..self.n_emissions())
            .filter(|&j| menu >> j & 1 == 1)
            .map(|j| match &self.labels {
                Some(l) => l[j].clone(),
                None => format!("{}", self.emission_grid[j]),
            })
            .collect()
    }
}

fn low_bits(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Uniform grids: `n_theta` equal-width cells of the canonical type range,
/// each represented by its midpoint and weighted by its probability, and
/// `n_e` evenly spaced emissions from 0 to the cap.
pub fn discretize(inst: &CanonicalInstance, n_theta: usize, n_e: usize) -> Result<DiscreteInstance> {
    if n_e > MAX_ENUMERATED_EMISSIONS {
        return Err(Error::GridCap(format!(
            "emission grid {n_e} exceeds the enumeration cap {MAX_ENUMERATED_EMISSIONS}"
        )));
    }
    discretize_unchecked(inst, n_theta, n_e)
}

/// As [`discretize`] but allows up to 32 emission levels, for sampled menus.
pub fn discretize_for_sampling(inst: &CanonicalInstance, n_theta: usize, n_e: usize) -> Result<DiscreteInstance> {
    if n_e > MAX_EMISSIONS {
        return Err(Error::GridCap(format!("emission grid {n_e} exceeds {MAX_EMISSIONS}")));
    }
    discretize_unchecked(inst, n_theta, n_e)
}

fn discretize_unchecked(inst: &CanonicalInstance, n_theta: usize, n_e: usize) -> Result<DiscreteInstance> {
    if n_theta > MAX_TYPES {
        return Err(Error::GridCap(format!("type grid {n_theta} exceeds the cap {MAX_TYPES}")));
    }
    if n_theta == 0 || n_e < 2 {
        return Err(Error::InvalidInput("need at least one type and two emission levels".into()));
    }
    let (types, weights) = match inst.types() {
        TypeDistribution::Discrete { points, weights } => (points.clone(), weights.clone()),
        TypeDistribution::Continuous(d) => {
            let edges = linspace(inst.lower(), inst.upper(), n_theta + 1);
            let types = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            let mass: Vec<f64> = edges.windows(2).map(|w| d.cdf(w[1]) - d.cdf(w[0])).collect();
            let total: f64 = mass.iter().sum();
            (types, mass.into_iter().map(|m| m / total).collect())
        }
    };
    let emissions = linspace(0.0, inst.cap(), n_e);
    let profit = types
        .iter()
        .map(|&t| emissions.iter().map(|&e| inst.pi(t, e)).collect())
        .collect();
    let mut d = DiscreteInstance::new(types, weights, emissions, profit)?;
    d.pi_shift = inst.profit_shift();
    Ok(d)
}

/// One type choosing among LOW, MID and HIGH with profits `R − C` of
/// 2, 3 and 1.
pub fn intro_fixture() -> DiscreteInstance {
    let revenue = [3.0, 5.0, 6.0];
    let cost = [1.0, 2.0, 5.0];
    let row = revenue.iter().zip(cost).map(|(r, c)| r - c).collect();
    let mut d = DiscreteInstance::new(vec![0.0], vec![1.0], vec![1.0, 2.0, 3.0], vec![row])
        .expect("fixture is well formed");
    d.labels = Some(vec!["LOW".into(), "MID".into(), "HIGH".into()]);
    d
}

/// Every menu containing the cap, in increasing bitmask order.
pub fn enumerate_menus(d: &DiscreteInstance) -> Result<impl Iterator<Item = u32>> {
    let n = d.n_emissions();
    if n > MAX_ENUMERATED_EMISSIONS {
        return Err(Error::GridCap(format!(
            "enumerating {n} emission levels exceeds the cap {MAX_ENUMERATED_EMISSIONS}"
        )));
    }
    let top = d.cap_menu();
    Ok((0..1u32 << (n - 1)).map(move |m| m | top))
}

/// `count` uniformly drawn menus (with repetition), reproducible from `seed`.
pub fn sample_menus(d: &DiscreteInstance, count: usize, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free = low_bits(d.n_emissions() - 1);
    (0..count).map(|_| (rng.random::<u32>() & free) | d.cap_menu()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteOutcome {
    pub menu: u32,
    /// Chosen emission index per type.
    pub assignments: Vec<usize>,
    pub gamma: f64,
    pub pi: f64,
}

const TIE_TOL: f64 = 1e-12;

fn choose(row: &[f64], menu: u32) -> usize {
    let mut best: Option<usize> = None;
    for (j, &p) in row.iter().enumerate() {
        if menu >> j & 1 == 0 {
            continue;
        }
        if best.is_none_or(|b| p > row[b] + TIE_TOL) {
            best = Some(j);
        }
    }
    best.expect("menu contains the cap")
}

/// Each type's best menu item, ties to the lower emission.
pub fn discrete_equilibrium(d: &DiscreteInstance, menu: u32) -> Result<DiscreteOutcome> {
    if menu & d.cap_menu() == 0 || menu & !d.full_menu() != 0 {
        return Err(Error::InvalidInput(format!(
            "menu {menu:#b} must contain the cap and only grid points"
        )));
    }
    let assignments: Vec<usize> = d.profit.iter().map(|row| choose(row, menu)).collect();
    let mut gamma = 0.0;
    let mut pi = 0.0;
    for (i, &j) in assignments.iter().enumerate() {
        gamma += d.weights[i] * d.emission_grid[j];
        pi += d.weights[i] * d.profit[i][j];
    }
    Ok(DiscreteOutcome {
        menu,
        assignments,
        gamma,
        pi: pi + d.pi_shift,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFrontierPoint {
    pub menu: u32,
    pub gamma: f64,
    pub pi: f64,
}

const OUTCOME_TOL: f64 = 1e-12;

fn frontier_of(d: &DiscreteInstance, menus: impl Iterator<Item = u32>) -> Result<Vec<DiscreteFrontierPoint>> {
    // one representative per outcome: the largest mask, so the full menu
    // stands for its own outcome class
    let mut outcomes: Vec<DiscreteFrontierPoint> = Vec::new();
    for m in menus {
        let o = discrete_equilibrium(d, m)?;
        match outcomes
            .iter_mut()
            .find(|p| (p.gamma - o.gamma).abs() <= OUTCOME_TOL && (p.pi - o.pi).abs() <= OUTCOME_TOL)
        {
            Some(p) => p.menu = p.menu.max(m),
            None => outcomes.push(DiscreteFrontierPoint {
                menu: m,
                gamma: o.gamma,
                pi: o.pi,
            }),
        }
    }
    let pairs: Vec<(f64, f64)> = outcomes.iter().map(|p| (p.gamma, p.pi)).collect();
    Ok(pareto_indices(&pairs, OUTCOME_TOL)
        .into_iter()
        .map(|i| outcomes[i].clone())
        .collect())
}

/// Exact Pareto set over all menus, sorted by `Γ`.
pub fn discrete_pareto_frontier(d: &DiscreteInstance) -> Result<Vec<DiscreteFrontierPoint>> {
    frontier_of(d, enumerate_menus(d)?)
}

/// Pareto set over sampled menus plus the full and cap-only menus.
pub fn sampled_pareto_frontier(d: &DiscreteInstance, count: usize, seed: u64) -> Result<Vec<DiscreteFrontierPoint>> {
    let mut menus = sample_menus(d, count, seed);
    menus.push(d.full_menu());
    menus.push(d.cap_menu());
    menus.sort_unstable();
    menus.dedup();
    frontier_of(d, menus.into_iter())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMatch {
    pub menu: u32,
    pub gamma: f64,
    pub pi: f64,
    /// Best matching threshold.
    pub e_star: f64,
    pub threshold_gamma: f64,
    pub threshold_pi: f64,
    /// `max(Γ_T − Γ, Π − Π_T)` at the match; nonpositive means dominated.
    pub gap: f64,
    pub within_bounds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n_theta: usize,
    pub n_e: usize,
    pub emission_spacing: f64,
    pub pi_bound: f64,
    /// Log-concave density, so thresholds should span the frontier.
    pub guarantee_applies: bool,
    pub matches: Vec<PointMatch>,
    /// Largest signed gap against thresholds evaluated on the discretised
    /// types; negative when thresholds strictly dominate every menu.
    pub worst_gap: f64,
    /// Largest `|gap|`: distance between the two frontiers.
    pub worst_distance: f64,
    /// Largest signed gap against thresholds evaluated on the continuous
    /// types (includes type discretisation error; informational).
    pub continuum_worst_gap: f64,
    pub red_flag: bool,
}

pub const PI_MATCH_BOUND: f64 = 5e-3;
const SCAN_POINTS: usize = 401;

/// Threshold minimising `max(Γ_T − Γ, Π − Π_T)`: golden section on each
/// piece between breakpoints `ê(θᵢ)`, `e_(θᵢ)` after a coarse scan.
fn best_threshold(inst: &CanonicalInstance, gamma: f64, pi: f64, cuts: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let gap = |e: f64| match threshold_outcome(inst, e) {
        Ok(o) => (o.gamma - gamma).max(pi - o.pi),
        Err(_) => f64::INFINITY,
    };
    let mut best = (f64::INFINITY, cuts[0]);
    for w in cuts.windows(2) {
        let (x, v) = golden_max(w[0], w[1], 1e-12, |e| -gap(e));
        if -v < best.0 {
            best = (-v, x);
        }
    }
    let o = threshold_outcome(inst, best.1)?;
    Ok((best.1, o.gamma, o.pi, best.0))
}

fn threshold_cuts(inst: &CanonicalInstance, types: &[f64]) -> Vec<f64> {
    let (lo, hi) = search_domain(inst);
    let mut cuts = linspace(lo, hi, SCAN_POINTS);
    for &t in types {
        for e in [inst.peak_emission(t), inst.participation_floor(t)] {
            if e > lo && e < hi {
                cuts.push(e);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// Discrete frontier of the discretised instance against threshold
/// policies. Each frontier menu is matched with the threshold minimising
/// `max(ΔΓ, −ΔΠ)`; a match is within bounds when `ΔΓ` is at most one
/// emission spacing and `−ΔΠ` at most 5e-3.
pub fn oracle_vs_threshold(inst: &CanonicalInstance, n_theta: usize, n_e: usize) -> Result<OracleReport> {
    let d = discretize(inst, n_theta, n_e)?;
    let frontier = discrete_pareto_frontier(&d)?;
    let guarantee_applies = match inst.types() {
        TypeDistribution::Continuous(_) => log_concavity_check(inst)?.log_concave,
        TypeDistribution::Discrete { points, .. } => points.len() == 1,
    };
    let atoms = inst.with_discrete_types(d.type_grid.clone(), d.weights.clone())?;
    let spacing = inst.cap() / (n_e - 1) as f64;
    let cuts = threshold_cuts(&atoms, &d.type_grid);
    let continuum_cuts = threshold_cuts(inst, &[]);
    let mut matches = Vec::with_capacity(frontier.len());
    let mut continuum_worst = f64::NEG_INFINITY;
    for p in &frontier {
        let (e, g, pi, gap) = best_threshold(&atoms, p.gamma, p.pi, &cuts)?;
        let within = g - p.gamma <= spacing && p.pi - pi <= PI_MATCH_BOUND;
        matches.push(PointMatch {
            menu: p.menu,
            gamma: p.gamma,
            pi: p.pi,
            e_star: e,
            threshold_gamma: g,
            threshold_pi: pi,
            gap,
            within_bounds: within,
        });
        let (_, _, _, cgap) = best_threshold(inst, p.gamma, p.pi, &continuum_cuts)?;
        continuum_worst = continuum_worst.max(cgap);
    }
    let worst = matches.iter().map(|m| m.gap).fold(f64::NEG_INFINITY, f64::max);
    let distance = matches.iter().map(|m| m.gap.abs()).fold(0.0, f64::max);
    let red_flag = matches.iter().any(|m| !m.within_bounds);
    if red_flag {
        log::warn!("oracle gap exceeds the grid-resolution bound at {n_theta}x{n_e}");
    }
    Ok(OracleReport {
        n_theta,
        n_e,
        emission_spacing: spacing,
        pi_bound: PI_MATCH_BOUND,
        guarantee_applies,
        matches,
        worst_gap: worst,
        worst_distance: distance,
        continuum_worst_gap: continuum_worst,
        red_flag,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub menus: usize,
    pub full_menu_max_pi: bool,
    pub cap_menu_max_gamma: bool,
    pub cap_menu_min_pi: bool,
    pub refinement_pairs: usize,
    pub refinement_violations: usize,
    pub monotone_assignment_violations: usize,
}

impl OrderingReport {
    pub fn all_hold(&self) -> bool {
        self.full_menu_max_pi
            && self.cap_menu_max_gamma
            && self.cap_menu_min_pi
            && self.refinement_violations == 0
            && self.monotone_assignment_violations == 0
    }
}

/// Checks the ordering laws over every menu: the full menu maximises `Π`,
/// the cap-only menu maximises `Γ` and minimises `Π`, assignments are
/// nondecreasing in the type, and adding items never lowers any type's
/// profit (on `pairs` random menu pairs).
pub fn ordering_laws(d: &DiscreteInstance, pairs: usize, seed: u64) -> Result<OrderingReport> {
    let outcomes: Vec<DiscreteOutcome> = enumerate_menus(d)?
        .map(|m| discrete_equilibrium(d, m))
        .collect::<Result<_>>()?;
    let find = |m: u32| outcomes.iter().find(|o| o.menu == m).expect("menu enumerated");
    let full = find(d.full_menu());
    let cap = find(d.cap_menu());
    let max_pi = outcomes.iter().map(|o| o.pi).fold(f64::NEG_INFINITY, f64::max);
    let min_pi = outcomes.iter().map(|o| o.pi).fold(f64::INFINITY, f64::min);
    let max_gamma = outcomes.iter().map(|o| o.gamma).fold(f64::NEG_INFINITY, f64::max);
    let monotone = outcomes
        .iter()
        .filter(|o| o.assignments.windows(2).any(|w| w[0] > w[1]))
        .count();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free = low_bits(d.n_emissions() - 1);
    let mut violations = 0;
    for _ in 0..pairs {
        let small = (rng.random::<u32>() & free) | d.cap_menu();
        let big = small | (rng.random::<u32>() & free);
        let a = discrete_equilibrium(d, small)?;
        let b = discrete_equilibrium(d, big)?;
        let worse = (0..d.n_types()).any(|i| d.profit[i][b.assignments[i]] < d.profit[i][a.assignments[i]]);
        if worse {
            violations += 1;
        }
    }
    Ok(OrderingReport {
        menus: outcomes.len(),
        full_menu_max_pi: full.pi >= max_pi,
        cap_menu_max_gamma: cap.gamma >= max_gamma,
        cap_menu_min_pi: cap.pi <= min_pi,
        refinement_pairs: pairs,
        refinement_violations: violations,
        monotone_assignment_violations: monotone,
    })
}
