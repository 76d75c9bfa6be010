//! Numerics for level-crossing intensities of smooth Gaussian processes:
//! partition-lattice cumulant combinatorics, confluent divided differences,
//! regularized Kac densities and their cumulant analogues, quadrature of the
//! limiting linear-statistic constants, and Monte Carlo validation on random
//! trigonometric polynomials and sinc-kernel stationary processes.

pub mod asymptotics;
pub mod divided_diff;
pub mod error;
pub mod estimate;
pub mod gaussian;
pub mod kac;
pub mod partitions;
pub mod quad;
pub mod simulate;

pub use error::{Error, Result};
