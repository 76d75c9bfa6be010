//! Cumulant estimation for Monte Carlo samples of zero counts and linear
//! statistics, with batch-based standard errors and moment diagnostics
//! against the Gaussian limit.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceModel;
use crate::partitions::{cumulants_from_moments, MomentVector};
use crate::simulate::{count_zeros, sample_trig_poly, StationarySampler};

/// A batch-aggregated cumulant estimate.
#[derive(Debug, Clone, Copy)]
pub struct CumulantEstimate {
    pub p: usize,
    pub value: f64,
    pub std_error: f64,
    /// Scaling parameter (n or R) of the experiment, when one applies.
    pub parameter: f64,
}

impl CumulantEstimate {
    /// The per-length normalization kappa_p / parameter.
    pub fn per_length(&self) -> f64 {
        self.value / self.parameter
    }

    pub fn per_length_std_error(&self) -> f64 {
        self.std_error / self.parameter
    }
}

/// Normalized central moments of a sample against the Gaussian targets
/// (1, 0, 3, 0, 15) for orders 2..6.
#[derive(Debug, Clone)]
pub struct CltReport {
    pub sample_size: usize,
    pub mean: f64,
    pub sd: f64,
    /// (order, normalized moment, jackknife std error, Gaussian target).
    pub moments: Vec<(usize, f64, f64, f64)>,
    /// Orders deviating from the target by more than three std errors.
    pub flagged: Vec<usize>,
}

pub const GAUSSIAN_TARGETS: [(usize, f64); 5] =
    [(2, 1.0), (3, 0.0), (4, 3.0), (5, 0.0), (6, 15.0)];

/// Plug-in cumulants of a sample: central-shifted power sums fed through the
/// moment-to-cumulant transform.
fn plugin_cumulants(samples: &[f64], shift: f64, p_max: usize) -> Vec<f64> {
    let m = samples.len() as f64;
    let mut moments = vec![0.0; p_max];
    for &s in samples {
        let c = s - shift;
        let mut pw = 1.0;
        for mom in moments.iter_mut() {
            pw *= c;
            *mom += pw / m;
        }
    }
    let mut cums = cumulants_from_moments(&MomentVector(moments)).expect("order within bounds");
    // the shift moves only the first cumulant
    cums[0] += shift;
    cums
}

/// Batch plug-in cumulant estimates of orders 1..=p_max: per-batch plug-in
/// values, averaged, with the batch spread as the standard error.
pub fn mc_cumulants(
    samples: &[f64],
    p_max: usize,
    n_batches: usize,
) -> Result<Vec<CumulantEstimate>> {
    if p_max > 6 {
        return Err(Error::SizeLimit("p_max exceeds 6".into()));
    }
    if n_batches < 2 || samples.len() < 10 * n_batches {
        return Err(Error::Contract(format!(
            "need at least {} samples for {n_batches} batches",
            10 * n_batches
        )));
    }
    let shift = samples.iter().sum::<f64>() / samples.len() as f64;
    let batch_len = samples.len() / n_batches;
    let per_batch: Vec<Vec<f64>> = (0..n_batches)
        .map(|b| plugin_cumulants(&samples[b * batch_len..(b + 1) * batch_len], shift, p_max))
        .collect();
    let mut out = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let vals: Vec<f64> = per_batch.iter().map(|c| c[p - 1]).collect();
        let mean = vals.iter().sum::<f64>() / n_batches as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (n_batches as f64 - 1.0);
        out.push(CumulantEstimate {
            p,
            value: mean,
            std_error: (var / n_batches as f64).sqrt(),
            parameter: 1.0,
        });
    }
    Ok(out)
}

/// Normalized central moments 2..6 with jackknife-over-batches standard
/// errors, flagged where they deviate from the Gaussian targets by more than
/// three standard errors.
pub fn clt_report(samples: &[f64]) -> Result<CltReport> {
    let m = samples.len();
    if m < 1000 {
        return Err(Error::Contract("need at least 1000 samples".into()));
    }
    let n_batches = 20;
    let batch_len = m / n_batches;
    let used = n_batches * batch_len;
    let mean = samples[..used].iter().sum::<f64>() / used as f64;
    let normalized = |subset: &dyn Fn(usize) -> bool| -> Vec<f64> {
        // normalized moments of the samples whose batch passes `subset`
        let mut count = 0usize;
        let mut central = [0.0f64; 7];
        for b in 0..n_batches {
            if !subset(b) {
                continue;
            }
            for &s in &samples[b * batch_len..(b + 1) * batch_len] {
                let c = s - mean;
                let mut pw = 1.0;
                for mom in central.iter_mut().skip(1) {
                    pw *= c;
                    *mom += pw;
                }
                count += 1;
            }
        }
        for mom in central.iter_mut() {
            *mom /= count as f64;
        }
        let sd = (central[2] - central[1] * central[1]).sqrt();
        (2..=6)
            .map(|p| central[p] / sd.powi(p as i32))
            .collect()
    };
    let full = normalized(&|_| true);
    // jackknife over batches
    let leave_outs: Vec<Vec<f64>> = (0..n_batches)
        .map(|drop| normalized(&move |b| b != drop))
        .collect();
    let mut moments = Vec::new();
    let mut flagged = Vec::new();
    for (i, &(p, target)) in GAUSSIAN_TARGETS.iter().enumerate() {
        let jk_mean = leave_outs.iter().map(|l| l[i]).sum::<f64>() / n_batches as f64;
        let jk_var = leave_outs
            .iter()
            .map(|l| (l[i] - jk_mean).powi(2))
            .sum::<f64>()
            * (n_batches as f64 - 1.0)
            / n_batches as f64;
        let se = jk_var.sqrt();
        moments.push((p, full[i], se, target));
        if (full[i] - target).abs() > 3.0 * se {
            flagged.push(p);
        }
    }
    let var = {
        let v = samples[..used]
            .iter()
            .map(|s| (s - mean).powi(2))
            .sum::<f64>()
            / used as f64;
        v
    };
    Ok(CltReport {
        sample_size: used,
        mean,
        sd: var.sqrt(),
        moments,
        flagged,
    })
}

/// The experiment family a convergence scan runs over.
#[derive(Debug, Clone)]
pub enum ScanFamily {
    /// Zero counts of trig polynomials over the full circle; parameter = n.
    TrigPoly,
    /// Zero counts of the stationary sinc process on [0, R]; parameter = R.
    Sinc { grid_step: f64 },
}

/// Zero counts for `paths` independent paths at one parameter value,
/// deterministic in (seed, parameter).
pub fn zero_count_samples(
    family: &ScanFamily,
    parameter: f64,
    paths: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    match family {
        ScanFamily::TrigPoly => {
            let n = parameter.round() as usize;
            if n == 0 {
                return Err(Error::Contract("n must be positive".into()));
            }
            let model = CovarianceModel::TrigPoly { n };
            let window = 2.0 * std::f64::consts::PI * n as f64;
            (0..paths as u64)
                .into_par_iter()
                .map(|i| {
                    let path_seed =
                        seed ^ (i + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (n as u64) << 32;
                    let path = sample_trig_poly(&model, path_seed)?;
                    Ok(count_zeros(&path, (0.0, window), 0.2, 1e-9)?.count() as f64)
                })
                .collect()
        }
        ScanFamily::Sinc { grid_step } => {
            let r = parameter;
            let sampler = StationarySampler::new(&CovarianceModel::Sinc, r, *grid_step)?;
            let batch = sampler.sample_batch(paths, seed);
            batch
                .into_par_iter()
                .map(|path| Ok(count_zeros(&path, (0.0, r), 0.2, 1e-9)?.count() as f64))
                .collect()
        }
    }
}

/// Cumulant estimates across an ascending parameter grid; each entry carries
/// its parameter for per-length normalization.
pub fn convergence_scan(
    family: &ScanFamily,
    parameters: &[f64],
    paths: usize,
    p_max: usize,
    seed: u64,
) -> Result<Vec<Vec<CumulantEstimate>>> {
    if parameters.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract("parameter grid must ascend".into()));
    }
    let total: f64 = parameters.iter().map(|p| p * paths as f64).sum();
    if total > 5e8 {
        return Err(Error::SizeLimit("scan budget exceeded".into()));
    }
    parameters
        .iter()
        .map(|&param| {
            let samples = zero_count_samples(family, param, paths, seed)?;
            let mut ests = mc_cumulants(&samples, p_max, 20)?;
            for e in &mut ests {
                e.parameter = param;
            }
            Ok(ests)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Exp, Poisson, StandardNormal};

    #[test]
    fn constant_samples() {
        let samples = vec![2.5; 400];
        let ests = mc_cumulants(&samples, 4, 20).unwrap();
        assert_relative_eq!(ests[0].value, 2.5, epsilon = 1e-12);
        for e in &ests[1..] {
            assert!(e.value.abs() < 1e-10);
        }
    }

    #[test]
    fn exact_gaussian_moment_vector_roundtrip() {
        // feeding exact Gaussian moments through the transform gives
        // (mu, sigma^2, 0, 0, ...)
        let moments = MomentVector(vec![0.0, 4.0, 0.0, 48.0, 0.0, 960.0]);
        let cums = cumulants_from_moments(&moments).unwrap();
        assert_relative_eq!(cums[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(cums[1], 4.0, epsilon = 1e-10);
        for p in [3, 4, 5, 6] {
            assert!(cums[p - 1].abs() < 1e-9, "kappa_{p} = {}", cums[p - 1]);
        }
    }

    #[test]
    fn gaussian_draws_have_vanishing_higher_cumulants() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let ests = mc_cumulants(&samples, 4, 20).unwrap();
        assert!((ests[2].value).abs() < 3.0 * ests[2].std_error);
        assert!((ests[3].value).abs() < 3.0 * ests[3].std_error);
        // unbiasedness of the low orders at this scale
        assert!(ests[0].value.abs() < ests[0].std_error / 2.0 + 0.02);
        assert!((ests[1].value - 1.0).abs() < 3.0 * ests[1].std_error);
    }

    #[test]
    fn poisson_draws_share_all_cumulants() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let pois = Poisson::new(3.0).unwrap();
        let samples: Vec<f64> = (0..100_000).map(|_| pois.sample(&mut rng)).collect();
        let ests = mc_cumulants(&samples, 3, 20).unwrap();
        for e in &ests {
            assert!(
                (e.value - 3.0).abs() < 3.0 * e.std_error.max(0.02),
                "kappa_{} = {} pm {}",
                e.p,
                e.value,
                e.std_error
            );
        }
    }

    #[test]
    fn clt_report_on_gaussian_and_exponential() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let gauss: Vec<f64> = (0..40_000).map(|_| rng.sample(StandardNormal)).collect();
        let report = clt_report(&gauss).unwrap();
        assert!(report.flagged.is_empty(), "{:?}", report.moments);

        let exp = Exp::new(1.0).unwrap();
        let skewed: Vec<f64> = (0..40_000).map(|_| exp.sample(&mut rng)).collect();
        let report = clt_report(&skewed).unwrap();
        assert!(report.flagged.contains(&3), "{:?}", report.moments);
        let third = report.moments.iter().find(|m| m.0 == 3).unwrap();
        assert!((third.1 - 2.0).abs() < 0.2, "skewness {}", third.1);
    }

    #[test]
    fn guards() {
        assert!(mc_cumulants(&[1.0; 50], 3, 20).is_err());
        assert!(mc_cumulants(&[1.0; 500], 7, 20).is_err());
        assert!(clt_report(&[0.0; 100]).is_err());
        assert!(convergence_scan(&ScanFamily::TrigPoly, &[30.0, 20.0], 100, 2, 0).is_err());
    }

    #[test]
    fn scan_determinism_and_rate() {
        let params = [20.0];
        let a = convergence_scan(&ScanFamily::TrigPoly, &params, 400, 2, 5).unwrap();
        let b = convergence_scan(&ScanFamily::TrigPoly, &params, 400, 2, 5).unwrap();
        assert_eq!(a[0][0].value, b[0][0].value);
        // mean rate near the exact finite-n value
        let n = 20.0;
        let exact = 2.0 * ((n - 1.0) * (2.0 * n - 1.0) / 6.0_f64).sqrt();
        let est = &a[0][0];
        assert!(
            (est.value - exact).abs() < 4.0 * est.std_error,
            "{} vs {exact} pm {}",
            est.value,
            est.std_error
        );
    }
}
