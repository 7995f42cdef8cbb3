use num_complex::Complex64;
use thiserror::Error;

/// Failures raised anywhere in the solver stack.
///
/// Messages carry a module prefix so that errors surfacing through the CLI
/// can be traced back to the component that produced them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mlf: series did not converge after {terms} terms at z = {z} (argument outside oracle range)")]
    SeriesNonConvergence { terms: usize, z: Complex64 },

    #[error("mlf: all evaluation routes failed for E_{{{alpha},{beta}}}({z}) in the {regime} regime")]
    MittagLefflerFailure {
        alpha: f64,
        beta: f64,
        z: Complex64,
        regime: &'static str,
    },

    #[error("fem: ellipticity violated at x = {x}: D(x) = {value}")]
    Ellipticity { x: f64, value: f64 },

    #[error("fem: eigenvector condition estimate {condition:.3e} exceeds {threshold:.1e} (near-defective operator)")]
    IllConditioned { condition: f64, threshold: f64 },

    #[error("fem: coercivity violated, eigenvalue {index} has real part {real}")]
    CoercivityViolation { index: usize, real: f64 },

    #[error("fem: singular system: {0}")]
    Singular(String),

    #[error("fem: imaginary residue {residue:.3e} exceeds discard tolerance relative to norm {norm:.3e}")]
    ImaginaryResidue { residue: f64, norm: f64 },

    #[error("noise: fBm covariance is not positive definite for H = {hurst} and M = {steps}; use fewer steps or a circulant-embedding sampler")]
    Cholesky { hurst: f64, steps: usize },

    #[error("noise: {0}")]
    Noise(String),

    #[error("scheme: non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("scheme: {0}")]
    Scheme(String),

    #[error("experiments: {0}")]
    Study(String),

    #[error("config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit-code category used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
