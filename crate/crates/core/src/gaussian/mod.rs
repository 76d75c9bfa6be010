//! Covariance models, divided-difference covariance matrices, Schur
//! complements and Gaussian conditioning, and absolute-moment integrals.

mod absmoment;
mod covariance;
mod models;
mod schur;

pub use absmoment::gaussian_abs_moment;
pub use covariance::{dd_covariance, BlockCovariance};
pub use models::{sinc_deriv, CovarianceModel, MAX_DERIV_ORDER};
pub use schur::{conditional_zero_law, schur_complement, schur_of};
