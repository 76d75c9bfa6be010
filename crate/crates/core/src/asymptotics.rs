//! The limiting per-length cumulant constants gamma_p of the zero count,
//! obtained by quadrature of the stationary cumulant densities F_{k,inf}
//! against Stirling-number weights.

use rayon::prelude::*;

use crate::divided_diff::NodeVector;
use crate::error::{Error, Result};
use crate::gaussian::CovarianceModel;
use crate::kac::{cumulant_kac_density, KacOptions};
use crate::partitions::stirling2;
use crate::quad::{adaptive_simpson, gauss_legendre};

/// Settings for the F_{k,inf} quadratures.
#[derive(Debug, Clone, Copy)]
pub struct GammaOptions {
    /// Truncation radius for the k = 2 integral.
    pub truncation: f64,
    /// Adaptive quadrature tolerance (k = 2).
    pub tol: f64,
    /// Truncation radius for k >= 3.
    pub truncation_high: f64,
    /// Gauss-Legendre order per axis for k >= 3.
    pub quad_order: usize,
    /// Monte Carlo budget per integrand evaluation (k >= 3).
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for GammaOptions {
    fn default() -> Self {
        GammaOptions {
            truncation: 40.0,
            tol: 1e-8,
            truncation_high: 20.0,
            quad_order: 40,
            mc_samples: 40_000,
            seed: 0,
        }
    }
}

/// One integral of the gamma_p sum.
#[derive(Debug, Clone, Copy)]
pub struct PerKIntegral {
    pub k: usize,
    pub value: f64,
    pub error: f64,
}

/// gamma_p with its error estimate and the per-k integrals it sums.
#[derive(Debug, Clone)]
pub struct GammaEntry {
    pub p: usize,
    pub value: f64,
    pub error: f64,
    pub per_k: Vec<PerKIntegral>,
}

/// Table of gamma_p values over a range of orders.
#[derive(Debug, Clone)]
pub struct GammaTable {
    pub entries: Vec<GammaEntry>,
    pub options: GammaOptions,
}

/// First-intensity formula from kernel values at zero; the second spectral
/// moment is -r''(0) (negative second derivative at the origin).
pub fn gamma1_from(r0: f64, r2: f64) -> Result<f64> {
    if !(r0 > 0.0) || !(r2 < 0.0) {
        return Err(Error::Contract(
            "gamma_1 needs r(0) > 0 and r''(0) < 0".into(),
        ));
    }
    Ok((-r2 / r0).sqrt() / std::f64::consts::PI)
}

/// Zero density gamma_1 of the model's stationary limit.
pub fn gamma1(model: &CovarianceModel) -> Result<f64> {
    let r0 = model.stationary_eval(0, 0, 0.0)?;
    let r2 = model.stationary_eval(2, 0, 0.0)?;
    gamma1_from(r0, r2)
}

/// Stationary cumulant density F_{k,inf}(0, x), x in R^{k-1}.
fn f_k(model: &CovarianceModel, x: &[f64], opts: &KacOptions) -> Result<f64> {
    let mut nodes = vec![0.0];
    nodes.extend_from_slice(x);
    let nv = NodeVector::line(nodes)?;
    Ok(cumulant_kac_density(model, &nv, opts)?.value)
}

/// Empirical tail bound: the decay-envelope integral int_T^inf g^2 scaled by
/// the observed ratio |F| / g^2 near the truncation edge.
fn tail_bound_k2(model: &CovarianceModel, t: f64, opts: &KacOptions) -> f64 {
    let mut ratio: f64 = 0.0;
    for &x in &[t, 1.1 * t, 1.25 * t] {
        let f = f_k(model, &[x], opts).unwrap_or(f64::INFINITY).abs();
        let g2 = model.envelope(x).powi(2);
        if g2 > 0.0 {
            ratio = ratio.max(f / g2);
        }
    }
    // int_T^inf (4 / (1 + tau))^2 dtau = 16 / (1 + T), both half-lines
    2.0 * ratio * 16.0 / (1.0 + t)
}

/// int_{R^{k-1}} F_{k,inf}, k in 2..=4, with an error estimate combining the
/// quadrature (k=2: adaptive with tail bound; k>=3: Monte Carlo propagation)
/// contributions.
pub fn f_k_infinity_integral(
    model: &CovarianceModel,
    k: usize,
    opts: &GammaOptions,
) -> Result<(f64, f64)> {
    let limit = model.stationary_limit();
    match k {
        2 => {
            let kac = KacOptions::default();
            // even integrand: integrate [0, T] and double
            let (half, err) = adaptive_simpson(
                &|x: f64| f_k(&limit, &[x.max(1e-12)], &kac).unwrap_or(f64::NAN),
                0.0,
                opts.truncation,
                opts.tol / 2.0,
            );
            let tail = tail_bound_k2(&limit, opts.truncation, &kac);
            Ok((2.0 * half, 2.0 * err + tail))
        }
        3 | 4 => {
            let dim = k - 1;
            let t = opts.truncation_high;
            let order = if k == 3 {
                opts.quad_order
            } else {
                // 3D grid: keep the total point count near the 2D case
                (((opts.quad_order * opts.quad_order) as f64).cbrt().round() as usize).max(8)
            };
            let (gx, gw) = gauss_legendre(order);
            let nodes: Vec<f64> = gx.iter().map(|&u| t * u).collect();
            let weights: Vec<f64> = gw.iter().map(|&w| t * w).collect();
            let n_points = order.pow(dim as u32);
            let kac_mc = opts.mc_samples;
            let results: Vec<Result<(f64, f64)>> = (0..n_points)
                .into_par_iter()
                .map(|flat| {
                    let mut idx = flat;
                    let mut x = Vec::with_capacity(dim);
                    let mut w = 1.0;
                    for _ in 0..dim {
                        let i = idx % order;
                        idx /= order;
                        x.push(nodes[i]);
                        w *= weights[i];
                    }
                    let kac = KacOptions {
                        mc_samples: kac_mc,
                        seed: opts.seed ^ (flat as u64).wrapping_mul(0xd130_2b97_9af5_37a1),
                        ..Default::default()
                    };
                    let mut nv = vec![0.0];
                    nv.extend_from_slice(&x);
                    let eval =
                        cumulant_kac_density(&limit, &NodeVector::line(nv)?, &kac)?;
                    Ok((w * eval.value, (w * eval.std_error).powi(2)))
                })
                .collect();
            let mut acc = 0.0;
            let mut var = 0.0;
            for r in results {
                let (v, v2) = r?;
                acc += v;
                var += v2;
            }
            Ok((acc, var.sqrt()))
        }
        _ => Err(Error::SizeLimit(format!("k = {k} outside 2..=4"))),
    }
}

/// gamma_p = sum_{k=1}^p S(p, k) int F_{k,inf}, with the k = 1 term the
/// zero-dimensional integral gamma_1.
pub fn gamma_p(model: &CovarianceModel, p: usize, opts: &GammaOptions) -> Result<GammaEntry> {
    if p == 0 || p > 4 {
        return Err(Error::SizeLimit(format!("p = {p} outside 1..=4")));
    }
    let g1 = gamma1(model)?;
    let mut per_k = vec![PerKIntegral {
        k: 1,
        value: g1,
        error: 0.0,
    }];
    for k in 2..=p {
        let (v, e) = f_k_infinity_integral(model, k, opts)?;
        per_k.push(PerKIntegral {
            k,
            value: v,
            error: e,
        });
    }
    let mut value = 0.0;
    let mut error = 0.0;
    for entry in &per_k {
        let w = stirling2(p, entry.k)? as f64;
        value += w * entry.value;
        error += w * entry.error;
    }
    Ok(GammaEntry {
        p,
        value,
        error,
        per_k,
    })
}

/// gamma_p for p = 1..=p_max.
pub fn gamma_table(
    model: &CovarianceModel,
    p_max: usize,
    opts: &GammaOptions,
) -> Result<GammaTable> {
    let entries = (1..=p_max)
        .map(|p| gamma_p(model, p, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(GammaTable {
        entries,
        options: *opts,
    })
}
