//! Covariance matrices of doubled divided-difference vectors, computed by
//! simplex quadrature of kernel derivatives (one simplex per side of each
//! entry) with a closed-form shortcut for confluent prefixes.

use nalgebra::DMatrix;

use crate::divided_diff::{cluster_partition, NodeVector};
use crate::divided_diff::{doubled_first_second, doubled_prefixes};
use crate::error::{Error, Result};
use crate::gaussian::models::CovarianceModel;
use crate::partitions::SetPartition;
use crate::quad::{default_order, simplex_points};

pub(crate) use crate::divided_diff::confluence_threshold;

/// Covariance of the doubled divided-difference vector of the process over a
/// node configuration, in grouped doubled order.
#[derive(Debug, Clone)]
pub struct BlockCovariance {
    pub sigma: DMatrix<f64>,
    pub partition: SetPartition,
    pub nodes: NodeVector,
    /// Determinant of the full matrix.
    pub det: f64,
    /// Smallest eigenvalue of the full matrix.
    pub min_eig: f64,
}

impl BlockCovariance {
    fn first_second(&self) -> (Vec<usize>, Vec<usize>) {
        doubled_first_second(&self.partition)
    }

    /// Block (1,1): covariance of the plain divided differences f_I[x_A].
    pub fn sigma11(&self) -> DMatrix<f64> {
        let (first, _) = self.first_second();
        self.sigma.select_rows(&first).select_columns(&first)
    }

    /// Block (2,2): covariance of the once-iterated divided differences.
    pub fn sigma22(&self) -> DMatrix<f64> {
        let (_, second) = self.first_second();
        self.sigma.select_rows(&second).select_columns(&second)
    }

    /// Block (1,2).
    pub fn sigma12(&self) -> DMatrix<f64> {
        let (first, second) = self.first_second();
        self.sigma.select_rows(&first).select_columns(&second)
    }

    /// Permutation mapping grouped doubled order to (first block, second
    /// block) order.
    pub fn split_order(&self) -> Vec<usize> {
        let (mut first, second) = self.first_second();
        first.extend(second);
        first
    }
}

/// Quadrature representation of one side of a covariance entry: the
/// derivative order and weighted evaluation points of the Hermite--Genocchi
/// simplex integral of the prefix.
struct SidePoints {
    order: usize,
    points: Vec<(f64, f64)>,
}

fn side_points(prefix: &[f64], threshold: f64) -> SidePoints {
    let d = prefix.len() - 1;
    let span = prefix
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if span.1 - span.0 <= threshold {
        // all nodes confluent: f[y,..,y] = f^{(d)}(y) / d!
        let mean = prefix.iter().sum::<f64>() / prefix.len() as f64;
        let mut fact = 1.0;
        for k in 1..=d {
            fact *= k as f64;
        }
        return SidePoints {
            order: d,
            points: vec![(mean, 1.0 / fact)],
        };
    }
    SidePoints {
        order: d,
        points: simplex_points(prefix, default_order(d)),
    }
}

/// Covariance matrix Sigma^I(x_{A,A}) of the doubled divided differences,
/// with conditioning diagnostics.
///
/// Entries are double simplex integrals of r^{(u,v)}; each side collapses to
/// a point evaluation of the derivative when its prefix nodes are confluent.
pub fn dd_covariance(
    model: &CovarianceModel,
    partition: &SetPartition,
    nodes: &NodeVector,
) -> Result<BlockCovariance> {
    let n = nodes.len();
    if partition.ground_size() != n {
        return Err(Error::Contract("partition/node size mismatch".into()));
    }
    // coincident nodes must share a cell of the partition
    let coincident = cluster_partition(nodes, 0.0)?;
    if !coincident.partition.refines(partition)? {
        return Err(Error::Contract(
            "coincident nodes split across partition cells".into(),
        ));
    }
    let threshold = confluence_threshold(nodes);
    let prefixes = doubled_prefixes(nodes, partition);
    let sides: Vec<SidePoints> = prefixes.iter().map(|p| side_points(p, threshold)).collect();

    let m = 2 * n;
    let mut sigma = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let (sa, sb) = (&sides[a], &sides[b]);
            let mut acc = 0.0;
            for &(p, wp) in &sa.points {
                for &(q, wq) in &sb.points {
                    acc += wp * wq * model.kernel_eval(sa.order, sb.order, p, q)?;
                }
            }
            sigma[(a, b)] = acc;
            sigma[(b, a)] = acc;
        }
    }

    let det = sigma.determinant();
    let min_eig = sigma
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &e| m.min(e));
    let bc = BlockCovariance {
        sigma,
        partition: partition.clone(),
        nodes: nodes.clone(),
        det,
        min_eig,
    };
    let s11 = bc.sigma11();
    let scale = s11.diagonal().iter().fold(1.0f64, |m, &d| m.max(d));
    if s11.determinant() < 1e-12 * scale.powi(n as i32) {
        return Err(Error::Conditioning { det, min_eig });
    }
    Ok(bc)
}
