use thiserror::Error;

/// Errors shared across the simulation crate.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("Fock cutoff {cutoff} insufficient: {what} = {value:.3e} exceeds {limit:.3e}")]
    CutoffInsufficient {
        cutoff: usize,
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("rejection sampler exceeded {0} tries; envelope does not dominate the target")]
    RejectionLoop(u64),

    #[error("quadrature grid covers only {covered:.12} of the state mass (need {needed:.12})")]
    GridCoverage { covered: f64, needed: f64 },

    #[error("insufficient samples: {context} has {got}, need at least {need}")]
    InsufficientSamples {
        context: &'static str,
        got: usize,
        need: usize,
    },

    #[error("degenerate binning: {0}")]
    DegenerateBinning(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("fit failed to converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
