use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("self-coupling supplied at site {site}")]
    SelfCoupling { site: usize },

    #[error("conflicting coupling entries between sites {i} and {j}: {a} vs {b}")]
    ConflictingCoupling { i: usize, j: usize, a: f64, b: f64 },

    #[error("spin {0} is not a positive half-integer")]
    InvalidSpin(f64),

    #[error("Fourier coefficient {component}^{k} has imaginary part {imag:e}")]
    ComplexFourier {
        component: char,
        k: usize,
        imag: f64,
    },

    #[error("mean field not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("mean field vanishes at site {site}; local frame undefined")]
    VanishingField { site: usize },

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("RPA instability in mode {mode}: {detail}")]
    Unstable { mode: usize, detail: String },

    #[error("site {site} out of range for {n} sites")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("symplectic spectrum not paired (residual {0:e})")]
    UnpairedSpectrum(f64),

    #[error("occupation {0:e} below zero in reduced spectrum")]
    NegativeOccupation(f64),

    #[error("partially transposed eigenvalue {0} not above -1/2")]
    InconsistentTranspose(f64),

    #[error("matrix is not positive definite (lowest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("Hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("eigensolver did not converge: {0}")]
    Eigensolver(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
