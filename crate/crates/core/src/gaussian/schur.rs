//! Schur complements and Gaussian conditioning on the first block of a
//! doubled covariance matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::covariance::BlockCovariance;

/// Schur complement S22 - S21 S11^{-1} S12 of the top-left k x k block of a
/// symmetric matrix, together with det S11.
pub fn schur_of(sigma: &DMatrix<f64>, k: usize) -> Result<(DMatrix<f64>, f64)> {
    let n = sigma.nrows();
    if sigma.ncols() != n || k > n {
        return Err(Error::Contract("bad block size".into()));
    }
    let s11 = sigma.view((0, 0), (k, k)).into_owned();
    let s12 = sigma.view((0, k), (k, n - k)).into_owned();
    let s22 = sigma.view((k, k), (n - k, n - k)).into_owned();
    let chol = s11.clone().cholesky().ok_or(Error::Conditioning {
        det: s11.determinant(),
        min_eig: f64::NAN,
    })?;
    let det11 = chol.l().diagonal().iter().map(|d| d * d).product();
    let solved = chol.solve(&s12);
    Ok((&s22 - s12.transpose() * solved, det11))
}

/// Conditional covariance of the divided-difference derivatives given the
/// divided differences themselves vanish: Sigma^c = S22 - S21 S11^{-1} S12 in
/// the (first copies, second copies) split.
pub fn schur_complement(sigma: &BlockCovariance) -> Result<DMatrix<f64>> {
    let order = sigma.split_order();
    let split = sigma.sigma.select_rows(&order).select_columns(&order);
    let k = sigma.nodes.len();
    Ok(schur_of(&split, k)?.0)
}

/// Law of the second block conditioned on the first block being zero:
/// centered Gaussian with the Schur-complement covariance (mean returned
/// explicitly for clarity).
pub fn conditional_zero_law(sigma: &BlockCovariance) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let cov = schur_complement(sigma)?;
    Ok((DVector::zeros(cov.nrows()), cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divided_diff::NodeVector;
    use crate::gaussian::covariance::dd_covariance;
    use crate::gaussian::models::CovarianceModel;
    use crate::partitions::SetPartition;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn zero_coupling_returns_s22() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let s11 = random_spd(&mut rng, 2);
        let s22 = random_spd(&mut rng, 3);
        let mut sigma = DMatrix::zeros(5, 5);
        sigma.view_mut((0, 0), (2, 2)).copy_from(&s11);
        sigma.view_mut((2, 2), (3, 3)).copy_from(&s22);
        let (sc, _) = schur_of(&sigma, 2).unwrap();
        assert!((sc - s22).amax() < 1e-14);
    }

    #[test]
    fn determinant_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.gen_range(2..7);
            let k = rng.gen_range(1..n);
            let sigma = random_spd(&mut rng, n);
            let (sc, det11) = schur_of(&sigma, k).unwrap();
            let lhs = sigma.determinant();
            let rhs = det11 * sc.determinant();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
        }
    }

    #[test]
    fn inverse_block_identity() {
        // (Sigma^c)^{-1} equals the (2,2) block of Sigma^{-1}
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(2..7);
            let k = rng.gen_range(1..n);
            let sigma = random_spd(&mut rng, n);
            let (sc, _) = schur_of(&sigma, k).unwrap();
            let inv = sigma.clone().try_inverse().unwrap();
            let inv22 = inv.view((k, k), (n - k, n - k)).into_owned();
            let sc_inv = sc.try_inverse().unwrap();
            assert!((sc_inv - inv22).amax() < 1e-9);
        }
    }

    #[test]
    fn scalar_conditional_variance() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]);
        let (sc, _) = schur_of(&sigma, 1).unwrap();
        assert_relative_eq!(sc[(0, 0)], 1.0 - 0.36, epsilon = 1e-14);
    }

    #[test]
    fn singular_first_block_rejected() {
        let sigma = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!(schur_of(&sigma, 1).is_err());
    }

    #[test]
    fn conditional_law_matches_rejection_sampling() {
        // sample (f(x), f'(x)) pairs, keep those with |f| small, compare the
        // conditional variance of f' with the Schur complement
        let nodes = NodeVector::line(vec![0.0, 1.2]).unwrap();
        let part = SetPartition::singletons(2);
        let model = CovarianceModel::Sinc;
        let bc = dd_covariance(&model, &part, &nodes).unwrap();
        let (_, cov) = conditional_zero_law(&bc).unwrap();

        let order = bc.split_order();
        let split = bc.sigma.select_rows(&order).select_columns(&order);
        let chol = split.cholesky().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut kept: Vec<[f64; 2]> = Vec::new();
        let normal = rand_distr::StandardNormal;
        while kept.len() < 4000 {
            let z = DVector::from_fn(4, |_, _| rng.sample::<f64, _>(normal));
            let y = chol.l() * z;
            if y[0].abs() < 0.01 && y[1].abs() < 0.01 {
                kept.push([y[2], y[3]]);
            }
        }
        let m = kept.len() as f64;
        let mut emp = [[0.0f64; 2]; 2];
        for s in &kept {
            for a in 0..2 {
                for b in 0..2 {
                    emp[a][b] += s[a] * s[b] / m;
                }
            }
        }
        for a in 0..2 {
            for b in 0..2 {
                let scale = (cov[(a, a)] * cov[(b, b)]).sqrt();
                assert!(
                    (emp[a][b] - cov[(a, b)]).abs() < 0.05 * scale,
                    "({a},{b}) emp {} vs {}",
                    emp[a][b],
                    cov[(a, b)]
                );
            }
        }
    }
}
