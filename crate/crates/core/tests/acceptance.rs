//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines are
//! always printed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use disclosure_core::certify::{build_certificate, verify_certificate};
use disclosure_core::density::DensitySpec;
use disclosure_core::frontier::{full_disclosure_only, full_disclosure_point};
use disclosure_core::model::TypeSpec;
use disclosure_core::numerics::linspace;
use disclosure_core::oracle::{discrete_equilibrium, discretize, intro_fixture, oracle_vs_threshold, ordering_laws};
use disclosure_core::threshold::{
    boundaries, optimize_threshold, search_domain, welfare, welfare_derivative, Side,
};
use disclosure_core::{CanonicalInstance, Error, ModelInstance};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn qref() -> CanonicalInstance {
    ModelInstance::quadratic_reference().canonicalize().unwrap()
}

fn qref_normal() -> CanonicalInstance {
    let mut m = ModelInstance::quadratic_reference();
    m.types.density = DensitySpec::TruncatedNormal { mean: 0.775, sd: 0.1 };
    m.canonicalize().unwrap()
}

fn intro_example() -> Outcome {
    let d = intro_fixture();
    let profit = |menu: u32| discrete_equilibrium(&d, menu).map(|o| o.pi).unwrap_or(f64::NAN);
    // bit 0 LOW, bit 1 MID, bit 2 HIGH
    let high = profit(0b100);
    let full = profit(0b111);
    let low_high = profit(0b101);
    outcome(
        high == 1.0 && full == 3.0 && low_high == 2.0,
        format!("{{HIGH}} -> {high}, full -> {full}, {{LOW, HIGH}} -> {low_high}"),
    )
}

fn closed_forms() -> Outcome {
    let c = qref();
    let mut worst: f64 = 0.0;
    for t in linspace(0.6, 0.95, 101) {
        worst = worst.max((c.peak_emission(t) - t).abs());
        worst = worst.max((c.participation_floor(t) - (2.0 * t - 1.0)).abs());
    }
    let b = boundaries(&c, 0.7).unwrap();
    let berr = (b.theta_hat - 0.7).abs().max((b.theta_star - 0.85).abs());
    outcome(
        worst <= 1e-9 && berr <= 1e-9,
        format!("max |ê − θ|, |e_ − (2θ−1)| = {worst:.2e}; boundaries(0.7) = ({:.10}, {:.10})", b.theta_hat, b.theta_star),
    )
}

fn frontier_endpoints() -> Outcome {
    let c = qref();
    let fd = full_disclosure_point(&c);
    let half = optimize_threshold(&c, 0.5).unwrap();
    let small = optimize_threshold(&c, 0.01).unwrap();
    let expected_small = 0.95 - 2.0 * 0.01 / 0.99;
    let ok = (fd.gamma - 0.775).abs() <= 1e-6
        && (fd.pi - 0.3054167).abs() <= 1e-6
        && (half.e_star - 0.9).abs() <= 1e-6
        && (half.w - -0.2330357).abs() <= 1e-6
        && (small.e_star - 0.9297980).abs() <= 1e-5
        && (small.e_star - expected_small).abs() <= 1e-5;
    outcome(
        ok,
        format!(
            "full disclosure ({:.7}, {:.7}); alpha 0.5: e* {:.7}, W {:.7}; alpha 0.01: e* {:.7}",
            fd.gamma, fd.pi, half.e_star, half.w, small.e_star
        ),
    )
}

fn derivative_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_401);
    let step = 1e-5;
    let mut worst = (0.0f64, 0.0, 0.0);
    let mut count = 0;
    for inst in [qref(), qref_normal()] {
        let (lo, hi) = search_domain(&inst);
        let kink = inst.participation_floor(inst.upper());
        let mut taken = 0;
        while taken < 25 {
            let e = rng.random_range(lo + 0.01..hi - 0.01);
            if (e - kink).abs() < 0.01 {
                continue;
            }
            let alpha = rng.random_range(0.0..1.0);
            let analytic = welfare_derivative(&inst, e, alpha, Side::Right).unwrap();
            let fd = (welfare(&inst, e + step, alpha).unwrap() - welfare(&inst, e - step, alpha).unwrap()) / (2.0 * step);
            let rel = (analytic - fd).abs() / analytic.abs().max(1e-8);
            if rel > worst.0 {
                worst = (rel, e, alpha);
            }
            taken += 1;
        }
        count += taken;
    }
    outcome(
        worst.0 <= 1e-5,
        format!("{count} points, worst relative error {:.2e} at e* {:.4}, alpha {:.3}", worst.0, worst.1, worst.2),
    )
}

fn certificate_suite() -> Outcome {
    let mut failures = Vec::new();
    let mut certified = 0;
    let mut controls = 0;
    for (name, inst) in [("uniform", qref()), ("normal", qref_normal())] {
        let (lo, hi) = search_domain(&inst);
        for alpha in linspace(0.0, 1.0, 21) {
            let opt = optimize_threshold(&inst, alpha).unwrap();
            let mut points = vec![opt.e_star];
            if opt.plateau_top > opt.e_star + 1e-9 {
                points.push(opt.plateau_top);
            }
            for e in points {
                match build_certificate(&inst, alpha, e).and_then(|c| verify_certificate(&inst, &c)) {
                    Ok(r) if r.all_pass() => certified += 1,
                    Ok(r) => {
                        let bad: Vec<&str> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
                        failures.push(format!("{name} alpha {alpha:.2} e* {e:.6}: {}", bad.join(",")));
                    }
                    Err(err) => failures.push(format!("{name} alpha {alpha:.2} e* {e:.6}: {err}")),
                }
            }
            // displaced thresholds outside the optimal plateau must not pass the precondition
            for e in [opt.e_star - 0.02, opt.plateau_top + 0.02] {
                if e <= lo || e > hi {
                    continue;
                }
                controls += 1;
                match build_certificate(&inst, alpha, e) {
                    Err(Error::FocPrecondition { .. }) => {}
                    _ => failures.push(format!("{name} alpha {alpha:.2}: displaced e* {e:.4} passed the precondition")),
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{certified} certificates verified, {controls} displaced controls rejected")
    } else {
        format!("{} failures: {}", failures.len(), failures.join("; "))
    };
    outcome(failures.is_empty() && controls > 0, detail)
}

fn oracle_equivalence() -> Outcome {
    let c = qref();
    let coarse = oracle_vs_threshold(&c, 21, 11).unwrap();
    let fine = oracle_vs_threshold(&c, 41, 13).unwrap();
    let matched = |r: &disclosure_core::oracle::OracleReport| r.matches.iter().all(|m| m.within_bounds);
    let ok = coarse.guarantee_applies && matched(&coarse) && matched(&fine) && fine.worst_gap < coarse.worst_gap;
    outcome(
        ok,
        format!(
            "21x11: {} frontier menus, worst gap {:.3e} (distance {:.3e}); 41x13: {} frontier menus, worst gap {:.3e} (distance {:.3e}); all within bounds: {}",
            coarse.matches.len(),
            coarse.worst_gap,
            coarse.worst_distance,
            fine.matches.len(),
            fine.worst_gap,
            fine.worst_distance,
            matched(&coarse) && matched(&fine)
        ),
    )
}

fn ordering_propositions() -> Outcome {
    let d = discretize(&qref(), 21, 11).unwrap();
    let r = ordering_laws(&d, 200, 7).unwrap();
    outcome(
        r.menus == 1024 && r.refinement_pairs == 200 && r.all_hold(),
        format!(
            "{} menus; full max Pi {}, cap max Gamma {}, cap min Pi {}; refinement violations {}/{}; non-monotone assignments {}",
            r.menus,
            r.full_menu_max_pi,
            r.cap_menu_max_gamma,
            r.cap_menu_min_pi,
            r.refinement_violations,
            r.refinement_pairs,
            r.monotone_assignment_violations
        ),
    )
}

fn full_disclosure_condition() -> Outcome {
    let mut m = ModelInstance::quadratic_reference();
    m.types = TypeSpec {
        lower: 0.9,
        upper: 1.2,
        density: DensitySpec::TruncatedExponential { rate: 2.0 },
    };
    let positive = full_disclosure_only(&m.canonicalize().unwrap()).unwrap();
    let negative = full_disclosure_only(&qref()).unwrap();
    let witness_ok = positive.theta_triangle.is_some_and(|t| (t - 1.0).abs() <= 1e-6);
    outcome(
        positive.holds && witness_ok && !negative.holds,
        format!(
            "increasing density on [0.9, 1.2]: {} (witness {:?}); reference instance: {}",
            positive.holds, positive.theta_triangle, negative.holds
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("intro example profits", intro_example, Duration::from_millis(1)),
        ("reference closed forms", closed_forms, Duration::from_millis(100)),
        ("reference frontier endpoints", frontier_endpoints, Duration::from_secs(1)),
        ("derivative consistency", derivative_consistency, Duration::from_secs(1)),
        ("certificate suite", certificate_suite, Duration::from_secs(10)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(30)),
        ("ordering laws", ordering_propositions, Duration::from_secs(10)),
        ("full disclosure only", full_disclosure_condition, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let pass = result.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if in_time {
            format!("{elapsed:.2?}")
        } else {
            format!("{elapsed:.2?} over the {limit:?} limit")
        };
        println!(
            "{} [{}] {name}: {} ({timing})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
