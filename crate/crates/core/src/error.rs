use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Error, Debug)]
pub enum Error {
    /// A combinatorial size guard was exceeded (Bell-number growth, subset counts, ...).
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// A caller violated an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The requested derivative or closed form is not available for this input.
    #[error("capability missing: {0}")]
    Capability(String),

    /// A quadrature did not reach the requested tolerance.
    #[error("tolerance {requested:e} not reached (achieved {achieved:e}, estimate {estimate})")]
    Tolerance {
        requested: f64,
        achieved: f64,
        estimate: f64,
    },

    /// A covariance matrix is numerically degenerate.
    #[error("conditioning failure: det = {det:e}, smallest eigenvalue = {min_eig:e}")]
    Conditioning { det: f64, min_eig: f64 },

    /// Circulant embedding produced significantly negative eigenvalues.
    #[error("circulant embedding failed: most negative eigenvalue {min_eig:e}; increase padding")]
    Embedding { min_eig: f64 },

    /// Invalid model specification (non-positive spectral density, bad kernel name, ...).
    #[error("model error: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;
