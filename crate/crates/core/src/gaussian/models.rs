//! Covariance kernels of the supported process families, with closed-form
//! mixed derivatives r^{(u,v)}(s,t), their stationary limits, and decay
//! envelopes.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::divided_diff::Domain;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre_unit;

/// Highest derivative order with a closed form in every family.
pub const MAX_DERIV_ORDER: usize = 10;

/// m-th derivative of sinc(t) = sin(t)/t (value 1 at t = 0).
///
/// Power series below |t| = 0.5, Leibniz on sin(t) * t^{-1} elsewhere; the
/// series is truncated at 1e-16 relative accuracy.
pub fn sinc_deriv(m: usize, t: f64) -> f64 {
    assert!(m <= 2 * MAX_DERIV_ORDER);
    if t.abs() < 0.5 {
        // sinc t = sum_j (-1)^j t^{2j} / (2j+1)!
        let mut acc = 0.0;
        let mut c = 1.0; // (-1)^j / (2j+1)!
        for j in 0..40 {
            if 2 * j >= m {
                let mut fall = 1.0;
                for i in 0..m {
                    fall *= (2 * j - i) as f64;
                }
                let term = c * fall * t.powi((2 * j - m) as i32);
                acc += term;
                if j > m && term.abs() < 1e-17 * acc.abs().max(1.0) {
                    break;
                }
            }
            c = -c / ((2 * j + 2) as f64 * (2 * j + 3) as f64);
        }
        acc
    } else {
        // d^m/dt^m [sin(t) / t]
        let mut acc = 0.0;
        let mut binom = 1.0;
        let mut fact = {
            let mut f = 1.0;
            for i in 1..=m {
                f *= i as f64;
            }
            f
        }; // (m - k)! at k = 0 times nothing; recomputed below
        let mut sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..=m {
            let deriv_sin = (t + k as f64 * PI / 2.0).sin();
            acc += binom * deriv_sin * sign * fact / t.powi((m - k + 1) as i32);
            if k < m {
                binom *= (m - k) as f64 / (k + 1) as f64;
                fact /= (m - k) as f64;
                sign = -sign;
            }
        }
        acc
    }
}

/// A Gaussian process family through its covariance kernel. All families
/// admit closed-form mixed derivatives up to `MAX_DERIV_ORDER`.
#[derive(Clone)]
pub enum CovarianceModel {
    /// Stationary kernel r(tau) = sin(tau)/tau on the line.
    Sinc,
    /// Stationary kernel r(tau) = cos(tau) on the line.
    Cosine,
    /// Random trigonometric polynomial with iid coefficients, rescaled to
    /// the circle of circumference 2 pi n; kernel
    /// (1/n) sum_{k<n} cos(k(s-t)/n).
    TrigPoly { n: usize },
    /// Trigonometric polynomial with stationary coefficient correlation
    /// rho(k-l) given by the spectral density psi on [0, 1);
    /// rho(j) = int psi(theta) cos(2 pi j theta) dtheta / int psi.
    TrigPolyCorrelated {
        n: usize,
        psi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        /// rho(0..2n) precomputed from psi.
        rho: Arc<Vec<f64>>,
    },
}

impl std::fmt::Debug for CovarianceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CovarianceModel::Sinc => write!(f, "Sinc"),
            CovarianceModel::Cosine => write!(f, "Cosine"),
            CovarianceModel::TrigPoly { n } => write!(f, "TrigPoly(n={n})"),
            CovarianceModel::TrigPolyCorrelated { n, .. } => {
                write!(f, "TrigPolyCorrelated(n={n})")
            }
        }
    }
}

impl CovarianceModel {
    /// Builds the correlated trig-poly family, validating the spectral
    /// density and precomputing the coefficient correlations.
    pub fn trig_poly_correlated<F>(n: usize, psi: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if n == 0 {
            return Err(Error::Model("n must be positive".into()));
        }
        let (theta, w) = gauss_legendre_unit(200);
        let norm: f64 = theta.iter().zip(&w).map(|(&x, &wi)| wi * psi(x)).sum();
        if !(norm > 0.0) || theta.iter().any(|&x| psi(x) < 0.0) {
            return Err(Error::Model("spectral density must be nonnegative with positive mass".into()));
        }
        let mut rho = Vec::with_capacity(2 * n + 1);
        for j in 0..=2 * n {
            let v: f64 = theta
                .iter()
                .zip(&w)
                .map(|(&x, &wi)| wi * psi(x) * (2.0 * PI * j as f64 * x).cos())
                .sum();
            rho.push(v / norm);
        }
        Ok(CovarianceModel::TrigPolyCorrelated {
            n,
            psi: Arc::new(psi),
            rho: Arc::new(rho),
        })
    }

    /// The domain the process lives on: the line for stationary kernels, a
    /// circle of circumference 2 pi n for trigonometric polynomials.
    pub fn domain(&self) -> Domain {
        match self {
            CovarianceModel::Sinc | CovarianceModel::Cosine => Domain::Line,
            CovarianceModel::TrigPoly { n }
            | CovarianceModel::TrigPolyCorrelated { n, .. } => Domain::Circle {
                circumference: 2.0 * PI * *n as f64,
            },
        }
    }

    /// Coefficient correlation rho(j) for the correlated family; 1 at j=0
    /// and 0 otherwise for the iid family.
    pub fn coefficient_correlation(&self, j: usize) -> f64 {
        match self {
            CovarianceModel::TrigPolyCorrelated { rho, .. } => {
                rho.get(j).copied().unwrap_or(0.0)
            }
            _ => {
                if j == 0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Mixed derivative r^{(u,v)}(s,t) of the covariance kernel.
    pub fn kernel_eval(&self, u: usize, v: usize, s: f64, t: f64) -> Result<f64> {
        if u > MAX_DERIV_ORDER || v > MAX_DERIV_ORDER {
            return Err(Error::Capability(format!(
                "derivative order ({u},{v}) exceeds {MAX_DERIV_ORDER}"
            )));
        }
        let m = u + v;
        let sign = if v % 2 == 0 { 1.0 } else { -1.0 };
        Ok(match self {
            CovarianceModel::Sinc => sign * sinc_deriv(m, s - t),
            CovarianceModel::Cosine => sign * (s - t + m as f64 * PI / 2.0).cos(),
            CovarianceModel::TrigPoly { n } => {
                let nf = *n as f64;
                let mut acc = 0.0;
                for k in 0..*n {
                    let w = k as f64 / nf;
                    acc += w.powi(m as i32) * ((s - t) * w + m as f64 * PI / 2.0).cos();
                }
                sign * acc / nf
            }
            CovarianceModel::TrigPolyCorrelated { n, .. } => {
                let nf = *n as f64;
                let half = PI / 2.0;
                let mut acc = 0.0;
                for k in 0..*n {
                    let wk = k as f64 / nf;
                    for l in 0..*n {
                        let wl = l as f64 / nf;
                        let rho = self.coefficient_correlation(k.abs_diff(l));
                        acc += rho
                            * wk.powi(u as i32)
                            * wl.powi(v as i32)
                            * (wk * s - wl * t + (u as f64 - v as f64) * half).cos();
                    }
                }
                acc / nf
            }
        })
    }

    /// The stationary limit process of this family (itself for stationary
    /// kernels; sinc for trigonometric polynomials, whose frequency measure
    /// tends to the uniform law on [0, 1]).
    pub fn stationary_limit(&self) -> CovarianceModel {
        match self {
            CovarianceModel::Sinc | CovarianceModel::TrigPoly { .. } => CovarianceModel::Sinc,
            CovarianceModel::Cosine => CovarianceModel::Cosine,
            CovarianceModel::TrigPolyCorrelated { .. } => CovarianceModel::Sinc,
        }
    }

    /// Stationary-limit derivative r_inf^{(u,v)}(tau) = r^{(u,v)}(tau, 0).
    pub fn stationary_eval(&self, u: usize, v: usize, tau: f64) -> Result<f64> {
        self.stationary_limit().kernel_eval(u, v, tau, 0.0)
    }

    /// Decay envelope g with |r^{(u,v)}(s,t)| <= g(|s-t|) for the derivative
    /// orders in use (u + v <= 4); for the sinc family the closed forms give
    /// |sinc^{(m)}(tau)| <= (m+1)!/|tau| up to bounded terms, absorbed here
    /// into a single conservative bound.
    pub fn envelope(&self, tau: f64) -> f64 {
        match self {
            CovarianceModel::Cosine => 1.0,
            _ => 1.0f64.min(4.0 / (1.0 + tau.abs())),
        }
    }
}
