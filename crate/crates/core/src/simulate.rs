//! Path sampling for the process families (coefficient draws for
//! trigonometric polynomials, circulant embedding for stationary kernels)
//! and robust zero counting and linear statistics along sampled paths.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::divided_diff::Domain;
use crate::error::{Error, Result};
use crate::gaussian::CovarianceModel;

/// Anything with a value, a consistent derivative, and a typical amplitude.
pub trait Evaluable {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    /// Typical path amplitude, used for near-tangency thresholds.
    fn scale(&self) -> f64 {
        1.0
    }
}

/// A sampled realization of one of the process families.
#[derive(Debug, Clone)]
pub enum PathSample {
    /// f(x) = n^{-1/2} sum_k a_k cos(k x / n) + b_k sin(k x / n), the
    /// rescaled trigonometric polynomial on the circle of circumference
    /// 2 pi n.
    TrigPoly {
        n: usize,
        a: Vec<f64>,
        b: Vec<f64>,
    },
    /// Stationary sample on a regular grid, evaluated between grid points by
    /// local quintic interpolation.
    Grid {
        values: Arc<Vec<f64>>,
        step: f64,
        origin: f64,
    },
}

impl PathSample {
    pub fn domain(&self) -> Domain {
        match self {
            PathSample::TrigPoly { n, .. } => Domain::Circle {
                circumference: 2.0 * std::f64::consts::PI * *n as f64,
            },
            PathSample::Grid { .. } => Domain::Line,
        }
    }

    /// Extent of reliable evaluation: the whole circle, or the grid range
    /// minus the interpolation stencil margin.
    pub fn usable_window(&self) -> (f64, f64) {
        match self {
            PathSample::TrigPoly { n, .. } => (0.0, 2.0 * std::f64::consts::PI * *n as f64),
            PathSample::Grid {
                values,
                step,
                origin,
            } => (
                origin + 3.0 * step,
                origin + step * (values.len() as f64 - 4.0),
            ),
        }
    }

    /// Value and derivative of the quintic through the 6 grid points nearest
    /// x, by Newton-form interpolation.
    fn grid_eval(values: &[f64], step: f64, origin: f64, x: f64) -> (f64, f64) {
        let pos = (x - origin) / step;
        let i0 = (pos.floor() as isize - 2)
            .clamp(0, values.len() as isize - 6) as usize;
        let xs: Vec<f64> = (0..6).map(|j| origin + (i0 + j) as f64 * step).collect();
        // divided-difference table
        let mut dd: Vec<f64> = (0..6).map(|j| values[i0 + j]).collect();
        let mut coeffs = vec![dd[0]];
        for level in 1..6 {
            for j in 0..6 - level {
                dd[j] = (dd[j + 1] - dd[j]) / (xs[j + level] - xs[j]);
            }
            coeffs.push(dd[0]);
        }
        // Horner on the Newton form, with derivative accumulation
        let mut v = coeffs[5];
        let mut d = 0.0;
        for k in (0..5).rev() {
            d = d * (x - xs[k]) + v;
            v = v * (x - xs[k]) + coeffs[k];
        }
        (v, d)
    }
}

impl Evaluable for PathSample {
    fn value(&self, x: f64) -> f64 {
        match self {
            PathSample::TrigPoly { n, a, b } => {
                let nf = *n as f64;
                let mut acc = 0.0;
                for k in 0..*n {
                    let th = k as f64 * x / nf;
                    acc += a[k] * th.cos() + b[k] * th.sin();
                }
                acc / nf.sqrt()
            }
            PathSample::Grid {
                values,
                step,
                origin,
            } => Self::grid_eval(values, *step, *origin, x).0,
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self {
            PathSample::TrigPoly { n, a, b } => {
                let nf = *n as f64;
                let mut acc = 0.0;
                for k in 0..*n {
                    let w = k as f64 / nf;
                    let th = k as f64 * x / nf;
                    acc += w * (-a[k] * th.sin() + b[k] * th.cos());
                }
                acc / nf.sqrt()
            }
            PathSample::Grid {
                values,
                step,
                origin,
            } => Self::grid_eval(values, *step, *origin, x).1,
        }
    }
}

/// Draws two independent N(0, circulant(c)) vectors by spectral
/// factorization; `c` is the first row of the circulant.
fn circulant_pair(
    sqrt_eig: &[f64],
    fft: &dyn Fft<f64>,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>) {
    let m = sqrt_eig.len();
    let mut buf: Vec<Complex<f64>> = (0..m)
        .map(|k| {
            let xi: f64 = rng.sample(StandardNormal);
            let eta: f64 = rng.sample(StandardNormal);
            Complex::new(xi, eta) * sqrt_eig[k]
        })
        .collect();
    fft.process(&mut buf);
    (
        buf.iter().map(|z| z.re).collect(),
        buf.iter().map(|z| z.im).collect(),
    )
}

/// Spectral data of a circulant embedding: sqrt(lambda / m) per frequency.
fn embedding_sqrt_eig(row: &[f64], fft: &dyn Fft<f64>) -> Result<Vec<f64>> {
    let m = row.len();
    let mut buf: Vec<Complex<f64>> = row.iter().map(|&c| Complex::new(c, 0.0)).collect();
    fft.process(&mut buf);
    let min_eig = buf.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if min_eig < -1e-8 {
        return Err(Error::Embedding { min_eig });
    }
    Ok(buf
        .iter()
        .map(|z| (z.re.max(0.0) / m as f64).sqrt())
        .collect())
}

/// Circulant spectrum of the discretized uniform band [-1, 1]: frequency
/// omega_k = 2 pi k~ / (m h) carries weight 1 inside the band, 1/2 on the
/// edge; weights are normalized so the grid variance is exactly 1.
fn band_limited_sqrt_eig(m: usize, h: f64) -> Vec<f64> {
    let d_omega = 2.0 * std::f64::consts::PI / (m as f64 * h);
    let weights: Vec<f64> = (0..m)
        .map(|k| {
            let signed = if k <= m / 2 { k as isize } else { k as isize - m as isize };
            let omega = (signed as f64 * d_omega).abs();
            if omega < 1.0 - 0.5 * d_omega {
                1.0
            } else if omega < 1.0 + 0.5 * d_omega {
                0.5
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| (w / total).sqrt()).collect()
}

/// Samples the coefficient vectors of a trigonometric polynomial: iid
/// standard normals, or a stationary sequence with correlation rho(k-l)
/// drawn via circulant embedding on a grid of length 2n.
pub fn sample_trig_poly(model: &CovarianceModel, seed: u64) -> Result<PathSample> {
    let n = match model {
        CovarianceModel::TrigPoly { n } | CovarianceModel::TrigPolyCorrelated { n, .. } => *n,
        _ => {
            return Err(Error::Model(
                "trig-poly sampling needs a trig-poly model".into(),
            ))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match model {
        CovarianceModel::TrigPoly { .. } => {
            let a = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let b = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            Ok(PathSample::TrigPoly { n, a, b })
        }
        CovarianceModel::TrigPolyCorrelated { .. } => {
            let m = 2 * n;
            let row: Vec<f64> = (0..m)
                .map(|j| model.coefficient_correlation(j.min(m - j)))
                .collect();
            let fft = FftPlanner::new().plan_fft_forward(m);
            let sqrt_eig = embedding_sqrt_eig(&row, fft.as_ref())?;
            let (a_full, b_full) = circulant_pair(&sqrt_eig, fft.as_ref(), &mut rng);
            Ok(PathSample::TrigPoly {
                n,
                a: a_full[..n].to_vec(),
                b: b_full[..n].to_vec(),
            })
        }
        _ => unreachable!(),
    }
}

/// Reusable circulant embedding of a stationary kernel on a regular grid
/// covering at least twice the requested window.
pub struct StationarySampler {
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    step: f64,
    /// Number of grid points kept per sample (covers [0, 2R] plus stencil).
    kept: usize,
}

impl StationarySampler {
    pub fn new(model: &CovarianceModel, window: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 0.1) {
            return Err(Error::Contract(
                "grid step must be in (0, 0.1] for unit-scale kernels".into(),
            ));
        }
        if window <= 0.0 {
            return Err(Error::Contract("window must be positive".into()));
        }
        let limit = model.stationary_limit();
        let kept = (2.0 * window / step).ceil() as usize + 8;
        // embedding length: next power of two at least twice the kept grid
        let m = (2 * kept).next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(m);
        let sqrt_eig = match limit {
            // band-limited kernel: eigenvalues assigned from the flat
            // spectral density (nonnegative by construction); FFT of the
            // wrapped kernel row would Gibbs-oscillate below zero at any
            // padding because the spectrum is discontinuous
            CovarianceModel::Sinc => band_limited_sqrt_eig(m, step),
            _ => {
                let row: Vec<f64> = (0..m)
                    .map(|j| {
                        let tau = j.min(m - j) as f64 * step;
                        limit.kernel_eval(0, 0, tau, 0.0).unwrap()
                    })
                    .collect();
                embedding_sqrt_eig(&row, fft.as_ref())?
            }
        };
        Ok(StationarySampler {
            sqrt_eig,
            fft,
            step,
            kept,
        })
    }

    /// Two independent paths from one spectral draw.
    pub fn sample_pair(&self, seed: u64) -> (PathSample, PathSample) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (re, im) = circulant_pair(&self.sqrt_eig, self.fft.as_ref(), &mut rng);
        let path = |v: Vec<f64>| PathSample::Grid {
            values: Arc::new(v[..self.kept].to_vec()),
            step: self.step,
            origin: -3.0 * self.step,
        };
        (path(re), path(im))
    }

    /// `count` independent paths, deterministic in `seed` and independent of
    /// worker count.
    pub fn sample_batch(&self, count: usize, seed: u64) -> Vec<PathSample> {
        let pairs: Vec<(PathSample, PathSample)> = (0..count.div_ceil(2))
            .into_par_iter()
            .map(|i| self.sample_pair(seed ^ (i as u64 + 1).wrapping_mul(0x2545_f491_4f6c_dd1d)))
            .collect();
        let mut out = Vec::with_capacity(count);
        for (a, b) in pairs {
            out.push(a);
            if out.len() < count {
                out.push(b);
            }
        }
        out
    }
}

/// One stationary path on a grid of extent twice `window`.
pub fn sample_stationary(
    model: &CovarianceModel,
    window: f64,
    step: f64,
    seed: u64,
) -> Result<PathSample> {
    Ok(StationarySampler::new(model, window, step)?.sample_pair(seed).0)
}

/// Zero-counting diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountDiagnostics {
    pub grid_cells: usize,
    pub refinement_iterations: usize,
    pub rescanned_cells: usize,
    /// Cells where the path approached zero without a detected sign change.
    pub suspected_misses: usize,
}

/// The zeros of a path in a half-open window, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSet {
    pub zeros: Vec<f64>,
    pub window: (f64, f64),
    pub diagnostics: CountDiagnostics,
}

impl ZeroSet {
    pub fn count(&self) -> usize {
        self.zeros.len()
    }
}

/// Bisection to `tol` in x, then secant polishing to drive |f| toward
/// rounding level.
fn refine_zero<E: Evaluable + ?Sized>(
    f: &E,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    iters: &mut usize,
) -> f64 {
    let mut flo = f.value(lo);
    while hi - lo > tol {
        *iters += 1;
        let mid = 0.5 * (lo + hi);
        let fm = f.value(mid);
        if fm == 0.0 {
            return mid;
        }
        if (flo < 0.0) != (fm < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    // secant polish inside the bracket
    let (mut x0, mut x1) = (lo, hi);
    let (mut f0, mut f1) = (f.value(x0), f.value(x1));
    for _ in 0..8 {
        if (f1 - f0).abs() < f64::MIN_POSITIVE || f1 == 0.0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(lo..=hi).contains(&x2) {
            break;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f.value(x1);
        *iters += 1;
    }
    if f1.abs() <= f0.abs() {
        x1
    } else {
        x0
    }
}

/// Zeros of the path in the half-open window [a, b): grid scan for sign
/// changes, bisection refinement, and a double-density rescan of cells where
/// the path stays near zero at both ends.
pub fn count_zeros<E: Evaluable + ?Sized>(
    path: &E,
    window: (f64, f64),
    grid_step: f64,
    refine_tol: f64,
) -> Result<ZeroSet> {
    let (a, b) = window;
    if !(b > a) || !(grid_step > 0.0) || !(refine_tol > 0.0) {
        return Err(Error::Contract("bad window or steps".into()));
    }
    let cells = ((b - a) / grid_step).ceil() as usize;
    let xs: Vec<f64> = (0..=cells)
        .map(|i| (a + i as f64 * grid_step).min(b))
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| path.value(x)).collect();
    let scale = {
        let ms = vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64;
        ms.sqrt().max(1e-300)
    };
    let near = 0.1 * scale;

    let mut diagnostics = CountDiagnostics {
        grid_cells: cells,
        ..Default::default()
    };
    let mut zeros = Vec::new();
    let mut iters = 0;
    for i in 0..cells {
        let (x0, x1) = (xs[i], xs[i + 1]);
        let (f0, f1) = (vals[i], vals[i + 1]);
        if f0 == 0.0 {
            zeros.push(x0);
            continue;
        }
        if (f0 < 0.0) != (f1 < 0.0) {
            zeros.push(refine_zero(path, x0, x1, refine_tol, &mut iters));
        } else if f0.abs() < near && f1.abs() < near {
            // near-tangency: rescan the cell at double density for hidden
            // sign-change pairs
            diagnostics.rescanned_cells += 1;
            let sub = 8;
            let mut prev_x = x0;
            let mut prev_f = f0;
            let mut found = false;
            let mut min_abs = f0.abs().min(f1.abs());
            for j in 1..=sub {
                let x = x0 + (x1 - x0) * j as f64 / sub as f64;
                let f = path.value(x);
                min_abs = min_abs.min(f.abs());
                if (prev_f < 0.0) != (f < 0.0) {
                    zeros.push(refine_zero(path, prev_x, x, refine_tol, &mut iters));
                    found = true;
                }
                prev_x = x;
                prev_f = f;
            }
            if !found && min_abs < 0.01 * scale {
                diagnostics.suspected_misses += 1;
            }
        }
    }
    diagnostics.refinement_iterations = iters;
    zeros.retain(|&z| (a..b).contains(&z));
    zeros.sort_by(|p, q| p.partial_cmp(q).unwrap());
    zeros.dedup_by(|p, q| (*p - *q).abs() < refine_tol);
    Ok(ZeroSet {
        zeros,
        window,
        diagnostics,
    })
}

/// Sum of a test function over the zeros.
pub fn linear_statistic<F: Fn(f64) -> f64>(zeros: &ZeroSet, phi: F) -> f64 {
    zeros.zeros.iter().map(|&z| phi(z)).sum()
}
