//! Divided differences with confluent limits, the interpolation matrices
//! tying nodewise values to divided differences, and the proximity-cluster
//! partition that selects the regularized Kac-density formula.

mod domain;
mod interp;
mod newton;

pub use domain::{cluster_partition, ClusterPartition, Domain, NodeVector};
pub use interp::{
    block_interp_matrix, doubled_matrices, grouped_order, interp_matrix, transfer_matrix,
    DoubledMatrices, SubsetMatrices,
};
pub(crate) use interp::{doubled_first_second, doubled_prefixes};
pub use newton::{
    divided_difference, hermite_genocchi, Differentiable, Polynomial, SmoothFn,
};
pub(crate) use newton::confluence_threshold;
