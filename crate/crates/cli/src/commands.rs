use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use serde_json::json;

use disclosure_core::certify::{build_certificate, log_concavity_check, peak_checks, verify_certificate};
use disclosure_core::frontier::{full_disclosure_only, full_disclosure_point, no_disclosure_point, trace_frontier};
use disclosure_core::numerics::linspace;
use disclosure_core::oracle::{
    discrete_equilibrium, discrete_pareto_frontier, discretize, enumerate_menus, intro_fixture, oracle_vs_threshold,
};
use disclosure_core::threshold::optimize_threshold;
use disclosure_core::{CanonicalInstance, Error as CoreError, ModelInstance};

use crate::output::{csv_string, instance_hash, Sink};
use crate::{Common, EXIT_INPUT, EXIT_VERIFY};

struct Loaded {
    model: ModelInstance,
    hash: String,
}

fn load(common: &Common) -> Result<Loaded> {
    let path = common.config.as_ref().ok_or_else(|| anyhow!("--config is required"))?;
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).context("instance file is not UTF-8")?;
    let mut model = ModelInstance::from_json_str(text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(n) = common.quad_nodes {
        if n < 2 {
            return Err(anyhow!("--quad-nodes must be at least 2"));
        }
        let mut numerics = model.numerics();
        numerics.quad_nodes = n;
        model.numerics = Some(numerics);
    }
    Ok(Loaded {
        model,
        hash: instance_hash(&bytes),
    })
}

fn canonical(loaded: &Loaded) -> Result<CanonicalInstance> {
    Ok(loaded.model.canonicalize()?)
}

#[derive(Serialize)]
struct TableRow {
    theta: f64,
    e_hat: f64,
    e_floor: f64,
}

pub fn analyze(common: &Common, grid: usize) -> Result<u8> {
    let loaded = load(common)?;
    let sink = Sink::new(common.out.as_deref())?;
    let validation = loaded.model.validate();
    if !validation.all_pass() {
        for c in validation.failures() {
            eprintln!("assumption failed: {}: {}", c.name, c.detail);
        }
        let report = json!({
            "status": "assumption-failure",
            "instance_hash": loaded.hash,
            "instance": loaded.model,
            "validation": validation,
        });
        sink.emit_json("analysis.json", &report, true)?;
        return Ok(EXIT_INPUT);
    }
    let inst = canonical(&loaded)?;
    let m = &loaded.model;
    let rows: Vec<TableRow> = linspace(m.types.lower, m.types.upper, grid.max(1))
        .into_iter()
        .map(|theta| {
            let t = inst.to_canonical_type(theta);
            TableRow {
                theta,
                e_hat: inst.peak_emission(t),
                e_floor: inst.participation_floor(t),
            }
        })
        .collect();
    let report = json!({
        "status": "ok",
        "instance_hash": loaded.hash,
        "instance": m,
        "validation": validation,
        "canonical": {
            "scale": inst.scale(),
            "profit_shift": inst.profit_shift(),
            "lower": inst.lower(),
            "upper": inst.upper(),
            "instance": inst.to_model_instance(),
        },
        "full_disclosure": full_disclosure_point(&inst),
        "no_disclosure": no_disclosure_point(&inst),
        "log_concavity": log_concavity_check(&inst).ok(),
        "full_disclosure_only": full_disclosure_only(&inst).ok(),
    });
    sink.emit_json("analysis.json", &report, true)?;
    sink.emit("boundaries.csv", &csv_string(&loaded.hash, &rows)?, false)?;
    Ok(0)
}

#[derive(Serialize)]
struct FrontierRow {
    alpha: f64,
    e_star: f64,
    gamma: f64,
    pi: f64,
    w: f64,
    flags: String,
}

pub fn frontier(common: &Common, alphas: usize) -> Result<u8> {
    let loaded = load(common)?;
    let inst = canonical(&loaded)?;
    let sink = Sink::new(common.out.as_deref())?;
    let fr = trace_frontier(&inst, alphas)?;
    let rows: Vec<FrontierRow> = fr
        .points
        .iter()
        .map(|p| FrontierRow {
            alpha: p.alpha,
            e_star: p.e_star,
            gamma: p.gamma,
            pi: p.pi,
            w: p.w,
            flags: p.flags.join(";"),
        })
        .collect();
    let certificates: Vec<serde_json::Value> = if fr.heuristic || !inst.types().is_continuous() {
        Vec::new()
    } else {
        fr.points
            .iter()
            .map(|p| match build_certificate(&inst, p.alpha, p.e_star).and_then(|c| verify_certificate(&inst, &c)) {
                Ok(r) => json!({
                    "alpha": p.alpha,
                    "e_star": p.e_star,
                    "all_pass": r.all_pass(),
                    "failed": r.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect::<Vec<_>>(),
                }),
                Err(e) => json!({ "alpha": p.alpha, "e_star": p.e_star, "all_pass": false, "error": e.to_string() }),
            })
            .collect()
    };
    let report = json!({
        "instance_hash": loaded.hash,
        "instance": loaded.model,
        "alpha_count": alphas,
        "heuristic": fr.heuristic,
        "warnings": fr.warnings,
        "log_concavity": fr.log_concavity,
        "full_disclosure": full_disclosure_point(&inst),
        "no_disclosure": no_disclosure_point(&inst),
        "points": fr.points,
        "certificates": certificates,
    });
    sink.emit("frontier.csv", &csv_string(&loaded.hash, &rows)?, true)?;
    sink.emit_json("frontier.json", &report, false)?;
    Ok(0)
}

#[derive(Serialize)]
struct MultiplierRow {
    theta: f64,
    lambda: f64,
    psi: f64,
    lambda1: f64,
}

#[derive(Serialize)]
struct QRow {
    theta: f64,
    q: f64,
}

pub fn verify(common: &Common, alpha: f64, threshold: Option<f64>, grid: Option<usize>) -> Result<u8> {
    let mut loaded = load(common)?;
    if let Some(n) = grid {
        let mut numerics = loaded.model.numerics();
        numerics.certificate_grid = n;
        loaded.model.numerics = Some(numerics);
    }
    let inst = canonical(&loaded)?;
    let sink = Sink::new(common.out.as_deref())?;
    let (e_star, optimized) = match threshold {
        Some(e) => (e, false),
        None => (optimize_threshold(&inst, alpha)?.e_star, true),
    };
    let cert = match build_certificate(&inst, alpha, e_star) {
        Ok(c) => c,
        Err(CoreError::FocPrecondition { residual, .. }) => {
            eprintln!("threshold {e_star} is not stationary at alpha = {alpha} (FOC residual {residual:e})");
            let report = json!({
                "status": "foc-precondition-failed",
                "instance_hash": loaded.hash,
                "alpha": alpha,
                "e_star": e_star,
                "foc_residual": residual,
            });
            sink.emit_json("certificate.json", &report, true)?;
            return Ok(EXIT_VERIFY);
        }
        Err(e) => return Err(e.into()),
    };
    let checks = verify_certificate(&inst, &cert)?;
    let peaks = peak_checks(&inst, alpha, e_star)?;
    let pass = checks.all_pass()
        && peaks.peak_range.pass
        && peaks.boundary_relation.as_ref().is_none_or(|c| c.pass);
    let samples = cert.samples(&inst);
    let report = json!({
        "status": if pass { "pass" } else { "fail" },
        "instance_hash": loaded.hash,
        "alpha": alpha,
        "e_star": e_star,
        "optimized": optimized,
        "certificate": checks,
        "peak": peaks,
    });
    let rows: Vec<MultiplierRow> = (0..samples.theta.len())
        .map(|i| MultiplierRow {
            theta: samples.theta[i],
            lambda: samples.lambda[i],
            psi: samples.psi[i],
            lambda1: samples.lambda1[i],
        })
        .collect();
    let q_rows: Vec<QRow> = samples
        .q_theta
        .iter()
        .zip(&samples.q)
        .map(|(&theta, &q)| QRow { theta, q })
        .collect();
    sink.emit_json("certificate.json", &report, true)?;
    sink.emit("multipliers.csv", &csv_string(&loaded.hash, &rows)?, false)?;
    sink.emit("q.csv", &csv_string(&loaded.hash, &q_rows)?, false)?;
    if !pass {
        for c in checks.checks.iter().filter(|c| !c.pass) {
            eprintln!("certificate check failed: {} (violation {:e})", c.name, c.max_violation);
        }
        return Ok(EXIT_VERIFY);
    }
    Ok(0)
}

#[derive(Serialize)]
struct MenuRow {
    bitmask: u32,
    gamma: f64,
    pi: f64,
}

pub fn oracle(common: &Common, n_theta: usize, n_e: usize, intro: bool) -> Result<u8> {
    let sink = Sink::new(common.out.as_deref())?;
    if intro {
        let d = intro_fixture();
        let hash = instance_hash(serde_json::to_string(&d)?.as_bytes());
        let labels = d.labels.clone().unwrap_or_default();
        let menus = enumerate_menus(&d)?
            .map(|m| {
                let o = discrete_equilibrium(&d, m)?;
                Ok(json!({
                    "menu": d.menu_names(m),
                    "bitmask": m,
                    "choice": labels[o.assignments[0]],
                    "gamma": o.gamma,
                    "pi": o.pi,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        let frontier = discrete_pareto_frontier(&d)?;
        let rows: Vec<MenuRow> = frontier.iter().map(|p| MenuRow { bitmask: p.menu, gamma: p.gamma, pi: p.pi }).collect();
        let report = json!({ "instance_hash": hash, "instance": d, "menus": menus, "frontier": frontier });
        sink.emit("oracle_frontier.csv", &csv_string(&hash, &rows)?, true)?;
        sink.emit_json("oracle_report.json", &report, false)?;
        return Ok(0);
    }
    let loaded = load(common)?;
    let inst = canonical(&loaded)?;
    let d = discretize(&inst, n_theta, n_e)?;
    let frontier = discrete_pareto_frontier(&d)?;
    let comparison = oracle_vs_threshold(&inst, n_theta, n_e)?;
    if comparison.red_flag {
        eprintln!("warning: a discrete frontier point is not matched within the grid-resolution bound");
    }
    if !comparison.guarantee_applies {
        eprintln!("warning: density is not log-concave; threshold guarantee inapplicable, gaps are informational");
    }
    let rows: Vec<MenuRow> = frontier.iter().map(|p| MenuRow { bitmask: p.menu, gamma: p.gamma, pi: p.pi }).collect();
    let report = json!({
        "instance_hash": loaded.hash,
        "instance": loaded.model,
        "n_theta": n_theta,
        "n_e": n_e,
        "frontier": frontier,
        "comparison": comparison,
    });
    sink.emit("oracle_frontier.csv", &csv_string(&loaded.hash, &rows)?, true)?;
    sink.emit_json("oracle_report.json", &report, false)?;
    Ok(0)
}
