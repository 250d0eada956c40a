use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("quadrature did not converge: estimated error {error:e} above tolerance after {intervals} intervals")]
    Quadrature { error: f64, intervals: usize },
    #[error("rejection sampler exceeded {0} iterations")]
    SamplerFailure(usize),
    #[error("integrator blow-up at site {site}: |omega| = {value:e}")]
    BlowUp { site: usize, value: f64 },
    #[error("energy drift {drift:e} exceeds budget {budget:e}")]
    EnergyDrift { drift: f64, budget: f64 },
    #[error("negative radicand in {0}: sound velocity must be negative")]
    NegativeRadicand(&'static str),
    #[error("potential is not even: V({u}) = {plus}, V(-{u}) = {minus}")]
    NotEven { u: f64, plus: f64, minus: f64 },
    #[error("Gram-Schmidt lost orthogonality: cross product {0:e}")]
    LossOfOrthogonality(f64),
    #[error("test function support {lo}..{hi} leaves the safe window [-1/4, 1/4]")]
    WindowViolation { lo: f64, hi: f64 },
    #[error("mesh mismatch: {0} vs {1}")]
    MeshMismatch(usize, usize),
    #[error("FFT size {0} is not a power of two")]
    FftSize(usize),
    #[error("outside domain: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
