//! Zero-set intensity functions: the matrix-form density rho~(M, Sigma), the
//! regularized p-point intensity rho(x_A) through cluster partitions, and
//! the alternating partition combination F_A whose integrals give cumulants
//! of the zero count.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::divided_diff::{
    block_interp_matrix, cluster_partition, ClusterPartition, DoubledMatrices, NodeVector,
};
use crate::error::{Error, Result};
use crate::gaussian::{dd_covariance, gaussian_abs_moment, schur_of, BlockCovariance, CovarianceModel};
use crate::partitions::{enumerate_partitions, SetPartition, SubsetMask};

/// Tuning knobs shared by all density evaluations.
#[derive(Debug, Clone, Copy)]
pub struct KacOptions {
    /// Proximity radius for the cluster partition.
    pub eta: f64,
    /// Monte Carlo budget per abs-moment integral (dimensions >= 3 only).
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for KacOptions {
    fn default() -> Self {
        KacOptions {
            eta: 0.25,
            mc_samples: 200_000,
            seed: 0,
        }
    }
}

/// A density value together with the regularization it was computed under.
#[derive(Debug, Clone)]
pub struct KacEvaluation {
    pub value: f64,
    pub partition_used: ClusterPartition,
    pub det_sigma11: f64,
    pub std_error: f64,
}

/// The alternating partition combination, with each partition's contribution
/// kept for inspection.
#[derive(Debug, Clone)]
pub struct CumulantKacEvaluation {
    pub value: f64,
    pub std_error: f64,
    pub per_partition: Vec<(SetPartition, f64)>,
}

/// Value of rho~(M, Sigma) with its Monte Carlo standard error and the
/// determinant of the conditioning block.
#[derive(Debug, Clone, Copy)]
pub struct RhoTildeValue {
    pub value: f64,
    pub std_error: f64,
    pub det_sigma11: f64,
}

/// rho~(M, Sigma) = (det 2 pi Sigma^{11})^{-1/2} E prod_a |(M Y)_a| with
/// Y ~ N(0, Sigma^c), Sigma given in (first block, second block) split order
/// on the doubled index set.
///
/// The prefactor splits the ambient normal density into the conditioning
/// block and the Schur complement; this is the unique normalization for
/// which a single node reproduces the classical first-intensity
/// sqrt(-r''(0)/r(0)) / pi.
pub fn rho_tilde(
    weight: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    mc_samples: usize,
    seed: u64,
) -> Result<RhoTildeValue> {
    let d = weight.nrows();
    if sigma.nrows() != 2 * d || sigma.ncols() != 2 * d || weight.ncols() != d {
        return Err(Error::Contract("weight/sigma dimension mismatch".into()));
    }
    if d > 5 {
        return Err(Error::SizeLimit(format!("dimension {d} exceeds 5")));
    }
    let (sc, det11) = schur_of(sigma, d)?;
    let (moment, se) = gaussian_abs_moment(&sc, weight, mc_samples, seed)?;
    let pref = ((2.0 * std::f64::consts::PI).powi(d as i32) * det11).sqrt().recip();
    Ok(RhoTildeValue {
        value: pref * moment,
        std_error: pref * se,
        det_sigma11: det11,
    })
}

/// Reorders a grouped doubled covariance into (first block, second block)
/// split order.
fn split_sigma(bc: &BlockCovariance) -> DMatrix<f64> {
    let order = bc.split_order();
    bc.sigma.select_rows(&order).select_columns(&order)
}

/// The p-point intensity rho(x_A) = |det M^I(x_A)| rho~(M^I, Sigma^I)
/// evaluated with the cluster partition I at radius eta. The Vandermonde
/// factor extends the density continuously across coincident nodes, where
/// it vanishes.
pub fn rho(
    model: &CovarianceModel,
    nodes: &NodeVector,
    opts: &KacOptions,
) -> Result<KacEvaluation> {
    let cp = cluster_partition(nodes, opts.eta)?;
    let partition = cp.partition.clone();
    let bc = dd_covariance(model, &partition, nodes)?;
    let m = block_interp_matrix(nodes, &partition)?;
    let det_m = m.determinant();
    let rt = rho_tilde(&m, &split_sigma(&bc), opts.mc_samples, opts.seed)?;
    Ok(KacEvaluation {
        value: det_m.abs() * rt.value,
        partition_used: cp,
        det_sigma11: rt.det_sigma11,
        std_error: det_m.abs() * rt.std_error,
    })
}

/// rho on a subset of the nodes, with a seed decorrelated by the subset mask.
fn rho_subset(
    model: &CovarianceModel,
    nodes: &NodeVector,
    elements: &[usize],
    mask: SubsetMask,
    opts: &KacOptions,
) -> Result<KacEvaluation> {
    let sub = nodes.subset(elements)?;
    let sub_opts = KacOptions {
        seed: opts.seed ^ (mask as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        ..*opts
    };
    rho(model, &sub, &sub_opts)
}

/// F_A(x_A) = sum over partitions J of A of
/// (|J| - 1)! (-1)^{|J| - 1} prod_{B in J} rho(x_B).
pub fn cumulant_kac_density(
    model: &CovarianceModel,
    nodes: &NodeVector,
    opts: &KacOptions,
) -> Result<CumulantKacEvaluation> {
    let p = nodes.len();
    if p > 4 {
        return Err(Error::SizeLimit(format!(
            "cumulant density supports at most 4 nodes, got {p}"
        )));
    }
    // one rho per nonempty subset, shared across partitions
    let mut cache: HashMap<SubsetMask, (f64, f64)> = HashMap::new();
    for mask in 1u32..(1 << p) {
        let elements: Vec<usize> = (0..p).filter(|i| mask & (1 << i) != 0).collect();
        let eval = rho_subset(model, nodes, &elements, mask, opts)?;
        cache.insert(mask, (eval.value, eval.std_error));
    }
    partition_sum(p, |mask| cache[&mask])
}

/// The partition-alternating sum over block values given by `term`, with
/// first-order error propagation.
fn partition_sum<F: Fn(SubsetMask) -> (f64, f64)>(
    p: usize,
    term: F,
) -> Result<CumulantKacEvaluation> {
    let mut value = 0.0;
    let mut var = 0.0;
    let mut per_partition = Vec::new();
    for partition in enumerate_partitions(p)? {
        let k = partition.num_blocks();
        let mut sign_fact = if k % 2 == 1 { 1.0 } else { -1.0 };
        for j in 1..k {
            sign_fact *= j as f64;
        }
        let vals: Vec<(f64, f64)> = partition
            .blocks()
            .iter()
            .map(|b| term(crate::partitions::mask_of(b)))
            .collect();
        let prod: f64 = vals.iter().map(|v| v.0).product();
        let contribution = sign_fact * prod;
        // se of the product: sum over blocks of (se_j * prod of others)^2
        for j in 0..vals.len() {
            let others: f64 = vals
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, v)| v.0)
                .product();
            var += (sign_fact * vals[j].1 * others).powi(2);
        }
        value += contribution;
        per_partition.push((partition, contribution));
    }
    Ok(CumulantKacEvaluation {
        value,
        std_error: var.sqrt(),
        per_partition,
    })
}

/// F~ evaluated from precomputed doubled matrices and a doubled covariance:
/// each block B contributes |det M^{I_B}| rho~(M^{I_B}, Q^{I,2B} Sigma
/// tQ^{I,2B}); consistency with `cumulant_kac_density` on the same
/// configuration is a tested property.
pub fn f_tilde(
    matrices: &DoubledMatrices,
    sigma: &BlockCovariance,
    opts: &KacOptions,
) -> Result<CumulantKacEvaluation> {
    let p = matrices.nodes.len();
    partition_sum_fallible(p, |mask| {
        let sub = matrices
            .subset(mask)
            .ok_or_else(|| Error::Contract("missing subset matrices".into()))?;
        let mapped = &sub.q_doubled * &sigma.sigma * sub.q_doubled.transpose();
        // grouped doubled order -> split order of the induced partition
        let (mut first, second) =
            crate::divided_diff::doubled_first_second(&sub.induced);
        first.extend(second);
        let split = mapped.select_rows(&first).select_columns(&first);
        let seed = opts.seed ^ (mask as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let rt = rho_tilde(&sub.m_block, &split, opts.mc_samples, seed)?;
        let det_m = sub.m_block.determinant();
        Ok((det_m.abs() * rt.value, det_m.abs() * rt.std_error))
    })
}

fn partition_sum_fallible<F: Fn(SubsetMask) -> Result<(f64, f64)>>(
    p: usize,
    term: F,
) -> Result<CumulantKacEvaluation> {
    let mut cache: HashMap<SubsetMask, (f64, f64)> = HashMap::new();
    for mask in 1u32..(1 << p) {
        cache.insert(mask, term(mask)?);
    }
    partition_sum(p, |mask| cache[&mask])
}
