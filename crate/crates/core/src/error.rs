use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("spin {index} is not planar (e3 component {z:e}); use the 3D pipeline")]
    NonPlanarInput { index: usize, z: f64 },

    #[error("spin {index} is not unit-norm (|S| = {norm})")]
    NonUnitSpin { index: usize, norm: f64 },

    #[error("z[{index}] is not unimodular (|z| = {modulus})")]
    NonUnimodularInput { index: usize, modulus: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("adaptive step underflow at t = {t}: h = {h:e} < h_min = {h_min:e}")]
    StepFailure { t: f64, h: f64, h_min: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("coupling constant must be positive for this quantity")]
    ZeroCoupling,

    #[error("no self-consistent solution in the feasible interval: {0}")]
    NoSolution(String),

    #[error("degenerate denominator: sum of sin^2 phi = {0:e}")]
    DegenerateDenominator(f64),

    #[error("indices must differ (got j = q = {0})")]
    SameIndex(usize),

    #[error("relaxation rate is imaginary: lambda*J = {lambda_j}, detuning = {detuning}")]
    ImaginaryRate { lambda_j: f64, detuning: f64 },
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
