//! The five subcommands: limiting constants, density evaluation, zero-count
//! simulation, CLT diagnostics, and the self-test suite.

use std::time::Instant;

use nalgebra::DMatrix;
use serde_json::json;

use kaczero::asymptotics::{gamma1, gamma_p, GammaOptions};
use kaczero::divided_diff::{divided_difference, interp_matrix, Differentiable, NodeVector};
use kaczero::estimate::{clt_report, mc_cumulants, zero_count_samples, ScanFamily};
use kaczero::gaussian::{schur_of, CovarianceModel};
use kaczero::kac::{cumulant_kac_density, rho, KacOptions};
use kaczero::partitions::{cumulants_from_moments, moments_from_cumulants};
use kaczero::quad::gauss_legendre;

use crate::output::{num, Report};
use crate::settings::{ModelKind, Settings};
use crate::CliError;

fn model_of(settings: &Settings) -> CovarianceModel {
    match settings.model {
        ModelKind::Sinc => CovarianceModel::Sinc,
        ModelKind::Cosine => CovarianceModel::Cosine,
        ModelKind::TrigPoly => CovarianceModel::TrigPoly { n: settings.n },
    }
}

fn emit(report: &Report, settings: &Settings) -> Result<(), CliError> {
    report
        .emit(settings.format, settings.out.as_deref())
        .map_err(|e| CliError::Numerical(format!("cannot write output: {e}")))
}

/// Limiting constants gamma_p for p = 1..=p_max. A failure at some order
/// still persists the lower orders before exiting nonzero.
pub fn cmd_gamma(settings: &Settings) -> Result<(), CliError> {
    let model = model_of(settings);
    if settings.p_max == 0 || settings.p_max > 4 {
        return Err(CliError::Usage("p-max must be in 1..=4".into()));
    }
    let opts = GammaOptions {
        truncation: settings.truncation,
        mc_samples: settings.mc_samples.unwrap_or(GammaOptions::default().mc_samples),
        seed: settings.seed.unwrap_or(0),
        ..Default::default()
    };
    let mut entries = Vec::new();
    let mut failure: Option<kaczero::Error> = None;
    for p in 1..=settings.p_max {
        match gamma_p(&model, p, &opts) {
            Ok(e) => entries.push(e),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let entries_json: Vec<_> = entries
        .iter()
        .map(|e| {
            json!({
                "p": e.p,
                "value": e.value,
                "error": e.error,
                "per_k": e.per_k.iter().map(|k| json!({
                    "k": k.k, "value": k.value, "error": k.error,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut body = json!({
        "model": settings.model.name(),
        "truncation": settings.truncation,
        "entries": entries_json,
    });
    if let Some(err) = &failure {
        body["error"] = json!(err.to_string());
    }
    let mut rows = Vec::new();
    for e in &entries {
        for k in &e.per_k {
            rows.push(vec![
                e.p.to_string(),
                num(e.value),
                num(e.error),
                k.k.to_string(),
                num(k.value),
                num(k.error),
            ]);
        }
    }
    let report = Report::new("gamma", body).table(
        vec!["p", "gamma", "gamma_error", "k", "integral", "integral_error"],
        rows,
    );
    emit(&report, settings)?;
    match failure {
        Some(err) => Err(CliError::Numerical(err.to_string())),
        None => Ok(()),
    }
}

/// The regularized intensity rho at the given nodes, plus its cumulant
/// analogue when the configuration is small enough.
pub fn cmd_kac_density(settings: &Settings) -> Result<(), CliError> {
    let nodes = settings
        .nodes
        .as_ref()
        .ok_or_else(|| CliError::Usage("--nodes is required (comma-separated list)".into()))?;
    let model = model_of(settings);
    let nv = NodeVector::new(nodes.clone(), model.domain())?;
    let opts = KacOptions {
        mc_samples: settings.mc_samples.unwrap_or(KacOptions::default().mc_samples),
        seed: settings.seed.unwrap_or(0),
        ..Default::default()
    };
    let eval = rho(&model, &nv, &opts)?;
    let mut body = json!({
        "model": settings.model.name(),
        "nodes": nodes,
        "mc_samples": opts.mc_samples,
        "seed": opts.seed,
        "rho": {
            "value": eval.value,
            "std_error": eval.std_error,
            "det_sigma11": eval.det_sigma11,
            "cluster_eta": eval.partition_used.eta,
            "cluster_blocks": eval.partition_used.partition.blocks(),
        },
    });
    let mut rows = vec![vec!["rho".to_string(), num(eval.value), num(eval.std_error)]];
    if nv.len() <= 4 {
        let cum = cumulant_kac_density(&model, &nv, &opts)?;
        body["cumulant"] = json!({
            "value": cum.value,
            "std_error": cum.std_error,
            "per_partition": cum.per_partition.iter().map(|(part, v)| json!({
                "blocks": part.blocks(),
                "contribution": v,
            })).collect::<Vec<_>>(),
        });
        rows.push(vec![
            "cumulant".to_string(),
            num(cum.value),
            num(cum.std_error),
        ]);
    }
    let report =
        Report::new("kac-density", body).table(vec!["quantity", "value", "std_error"], rows);
    emit(&report, settings)
}

fn scan_family(settings: &Settings) -> Result<(ScanFamily, f64), CliError> {
    match settings.model {
        ModelKind::TrigPoly => Ok((ScanFamily::TrigPoly, settings.n as f64)),
        ModelKind::Sinc => Ok((
            ScanFamily::Sinc {
                grid_step: settings.grid_step,
            },
            settings.window,
        )),
        ModelKind::Cosine => Err(CliError::Usage(
            "simulation supports the sinc and trig-poly models".into(),
        )),
    }
}

/// Zero counts over independent paths, reduced to batch cumulant estimates.
pub fn cmd_simulate(settings: &Settings) -> Result<(), CliError> {
    let seed = settings.require_seed()?;
    let (family, parameter) = scan_family(settings)?;
    if settings.paths < 20 {
        return Err(CliError::Usage("need at least 20 paths".into()));
    }
    let p_max = settings.p_max.min(6).max(1);
    let batches = (settings.paths / 10).min(20).max(2);
    let samples = zero_count_samples(&family, parameter, settings.paths, seed)?;
    let ests = mc_cumulants(&samples, p_max, batches)?;
    let body = json!({
        "model": settings.model.name(),
        "parameter": parameter,
        "paths": settings.paths,
        "seed": seed,
        "cumulants": ests.iter().map(|e| json!({
            "p": e.p,
            "value": e.value,
            "std_error": e.std_error,
            "per_length": e.value / parameter,
        })).collect::<Vec<_>>(),
    });
    let rows = ests
        .iter()
        .map(|e| {
            vec![
                e.p.to_string(),
                num(e.value),
                num(e.std_error),
                num(e.value / parameter),
            ]
        })
        .collect();
    let report = Report::new("simulate", body)
        .table(vec!["p", "value", "std_error", "per_length"], rows);
    emit(&report, settings)
}

/// Normalized-moment diagnostics of the zero count against the Gaussian
/// limit, with the first-order mean prediction from the zero density.
pub fn cmd_clt_check(settings: &Settings) -> Result<(), CliError> {
    let seed = settings.require_seed()?;
    let (family, parameter) = scan_family(settings)?;
    let samples = zero_count_samples(&family, parameter, settings.paths, seed)?;
    let report_stats = clt_report(&samples)?;
    let p_max = settings.p_max.min(6).max(1);
    let ests = mc_cumulants(&samples, p_max, 20)?;
    // mean prediction: density of the stationary limit times window length
    let limit = model_of(settings).stationary_limit();
    let g1 = gamma1(&limit)?;
    let length = match family {
        ScanFamily::TrigPoly => 2.0 * std::f64::consts::PI * parameter,
        ScanFamily::Sinc { .. } => parameter,
    };
    let predicted_mean = g1 * length;
    let body = json!({
        "model": settings.model.name(),
        "parameter": parameter,
        "paths": settings.paths,
        "seed": seed,
        "sample_size": report_stats.sample_size,
        "mean": report_stats.mean,
        "sd": report_stats.sd,
        "predicted_mean": predicted_mean,
        "moments": report_stats.moments.iter().map(|&(p, v, se, target)| json!({
            "order": p,
            "value": v,
            "std_error": se,
            "target": target,
            "flagged": report_stats.flagged.contains(&p),
        })).collect::<Vec<_>>(),
        "cumulants": ests.iter().map(|e| json!({
            "p": e.p,
            "value": e.value,
            "std_error": e.std_error,
            "per_length": e.value / length,
        })).collect::<Vec<_>>(),
    });
    let mut rows: Vec<Vec<String>> = report_stats
        .moments
        .iter()
        .map(|&(p, v, se, target)| {
            vec![
                "moment".to_string(),
                p.to_string(),
                num(v),
                num(se),
                num(target),
            ]
        })
        .collect();
    for e in &ests {
        rows.push(vec![
            "cumulant".to_string(),
            e.p.to_string(),
            num(e.value),
            num(e.std_error),
            String::new(),
        ]);
    }
    let report = Report::new("clt-check", body)
        .table(vec!["kind", "order", "value", "std_error", "target"], rows);
    emit(&report, settings)
}

struct SuiteResult {
    name: &'static str,
    passed: bool,
    seconds: f64,
    detail: String,
}

fn run_suite(
    name: &'static str,
    forced_fail: Option<&str>,
    f: impl FnOnce() -> Result<String, String>,
) -> SuiteResult {
    let start = Instant::now();
    let outcome = if forced_fail == Some(name) {
        Err("failure forced by --fail".to_string())
    } else {
        f()
    };
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => SuiteResult {
            name,
            passed: true,
            seconds,
            detail,
        },
        Err(detail) => SuiteResult {
            name,
            passed: false,
            seconds,
            detail,
        },
    }
}

fn check(cond: bool, detail: String) -> Result<String, String> {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn suite_divided_differences() -> Result<String, String> {
    let nodes = NodeVector::line(vec![0.0, 0.7, 1.6]).map_err(|e| e.to_string())?;
    let square = Differentiable(|m: usize, x: f64| match m {
        0 => Some(x * x),
        1 => Some(2.0 * x),
        2 => Some(2.0),
        _ => Some(0.0),
    });
    let dd = divided_difference(&square, &nodes).map_err(|e| e.to_string())?;
    let det = interp_matrix(&nodes).determinant();
    let vandermonde = 0.7 * 1.6 * 0.9;
    check(
        (dd - 1.0).abs() < 1e-12 && (det - vandermonde).abs() < 1e-12,
        format!("dd(t^2) = {dd}, det M = {det} vs {vandermonde}"),
    )
}

fn suite_moment_transforms() -> Result<String, String> {
    let kappa = [0.3, 1.2, -0.4, 0.25, 0.1, -0.05, 0.02, 0.01];
    let moments = moments_from_cumulants(&kappa).map_err(|e| e.to_string())?;
    let back = cumulants_from_moments(&moments).map_err(|e| e.to_string())?;
    let err: f64 = kappa
        .iter()
        .zip(&back)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(err < 1e-10, format!("roundtrip error {err:.3e} at order 8"))
}

fn suite_schur() -> Result<String, String> {
    let b = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.3, -0.2, 0.5, 0.0, 1.1, 0.4, -0.3, 0.2, 0.0, 0.9, 0.1, -0.1, 0.2, 0.0, 1.3,
    ]);
    let sigma = &b * b.transpose() + DMatrix::identity(4, 4);
    let (schur, det11) = schur_of(&sigma, 2).map_err(|e| e.to_string())?;
    let err = (sigma.determinant() - det11 * schur.determinant()).abs();
    check(err < 1e-10, format!("determinant factorization error {err:.3e}"))
}

fn suite_one_point_density() -> Result<String, String> {
    let nv = NodeVector::line(vec![0.0]).map_err(|e| e.to_string())?;
    let eval = rho(&CovarianceModel::Sinc, &nv, &KacOptions::default())
        .map_err(|e| e.to_string())?;
    let target = 1.0 / (std::f64::consts::PI * 3.0_f64.sqrt());
    let err = (eval.value - target).abs();
    check(err < 1e-6, format!("rho(0) = {} vs {target}", eval.value))
}

fn suite_cumulant_cancellation() -> Result<String, String> {
    // distant nodes decorrelate, so the two-point cumulant density vanishes
    let nv = NodeVector::line(vec![0.0, 40.0]).map_err(|e| e.to_string())?;
    let opts = KacOptions {
        mc_samples: 50_000,
        seed: 1,
        ..Default::default()
    };
    let cum = cumulant_kac_density(&CovarianceModel::Sinc, &nv, &opts)
        .map_err(|e| e.to_string())?;
    check(
        cum.value.abs() < 5.0 * cum.std_error + 2e-3,
        format!("F_2(0, 40) = {} pm {}", cum.value, cum.std_error),
    )
}

fn suite_quadrature() -> Result<String, String> {
    let g1 = gamma1(&CovarianceModel::Sinc).map_err(|e| e.to_string())?;
    let target = 1.0 / (std::f64::consts::PI * 3.0_f64.sqrt());
    let (x, w) = gauss_legendre(16);
    let integral: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi * xi).sum();
    check(
        (g1 - target).abs() < 1e-12 && (integral - 2.0 / 3.0).abs() < 1e-13,
        format!("gamma_1 = {g1}, int_-1^1 x^2 = {integral}"),
    )
}

fn suite_zero_counts() -> Result<String, String> {
    let n = 10.0;
    let samples =
        zero_count_samples(&ScanFamily::TrigPoly, n, 200, 3).map_err(|e| e.to_string())?;
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 199.0;
    let se = (var / 200.0).sqrt();
    let exact = 2.0 * ((n - 1.0) * (2.0 * n - 1.0) / 6.0).sqrt();
    check(
        (mean - exact).abs() < 4.0 * se + 0.5,
        format!("mean count {mean} vs exact {exact} (se {se:.3})"),
    )
}

/// Invariant suites with per-suite timing; `forced_fail` injects a failure
/// into the named suite to exercise the reporting path.
pub fn cmd_selftest(settings: &Settings, forced_fail: Option<&str>) -> Result<(), CliError> {
    let fail = forced_fail;
    let results = vec![
        run_suite("divided-differences", fail, suite_divided_differences),
        run_suite("moment-transforms", fail, suite_moment_transforms),
        run_suite("schur", fail, suite_schur),
        run_suite("quadrature", fail, suite_quadrature),
        run_suite("one-point-density", fail, suite_one_point_density),
        run_suite("cumulant-cancellation", fail, suite_cumulant_cancellation),
        run_suite("zero-counts", fail, suite_zero_counts),
    ];
    if let Some(name) = fail {
        if !results.iter().any(|r| r.name == name) {
            return Err(CliError::Usage(format!("unknown suite `{name}`")));
        }
    }
    let body = json!({
        "suites": results.iter().map(|r| json!({
            "name": r.name,
            "passed": r.passed,
            "seconds": r.seconds,
            "detail": r.detail,
        })).collect::<Vec<_>>(),
        "passed": results.iter().all(|r| r.passed),
    });
    let rows = results
        .iter()
        .map(|r| {
            vec![
                r.name.to_string(),
                if r.passed { "pass" } else { "fail" }.to_string(),
                format!("{:.3}", r.seconds),
                r.detail.clone(),
            ]
        })
        .collect();
    let report = Report::new("selftest", body)
        .table(vec!["suite", "status", "seconds", "detail"], rows);
    emit(&report, settings)?;
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "failing suites: {}",
            failed.join(", ")
        )))
    }
}
