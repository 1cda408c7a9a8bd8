use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam {
        field: &'static str,
        reason: &'static str,
    },
    #[error("counting field |chi| = {magnitude} exceeds trust radius {radius}")]
    TrustRadiusExceeded { magnitude: f64, radius: f64 },
    #[error("spectral gap {gap:e} below threshold {threshold:e}")]
    GapTooSmall { gap: f64, threshold: f64 },
    #[error("eigenvalue solver did not converge")]
    EigenSolverFailed,
    #[error("singular generator; no unique stationary state")]
    SingularGenerator,
    #[error("matrix exponential overflowed (norm {norm:e})")]
    PropagationOverflow { norm: f64 },
    #[error("Richardson estimates disagree: relative error {error:e}")]
    DifferentiationUnstable { error: f64 },
    #[error("two-order diffusion fit residual {residual:e} exceeds {tolerance:e}")]
    FitResidualExceeded { residual: f64, tolerance: f64 },
    #[error("square-root branch ambiguous near the negative real axis")]
    BranchAmbiguous,
    #[error("absorption cross section {s_plus:e} m^2 is not positive")]
    DegenerateAbsorption { s_plus: f64 },
    #[error("signal derivative vanishes")]
    DegenerateSignal,
    #[error("covariance is singular (condition {condition:e})")]
    SingularCovariance { condition: f64 },
    #[error("adaptive quadrature did not converge (error estimate {error:e})")]
    QuadratureNotConverged { error: f64 },
    #[error("standard error {standard_error:e} exceeds 10% of analytic term {analytic:e}")]
    InsufficientStatistics { standard_error: f64, analytic: f64 },
    #[error("finite-difference stencil unstable: error estimate {error:e}")]
    StencilUnstable { error: f64 },
}

impl Error {
    /// Stable machine-readable name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParam { .. } => "InvalidParam",
            Error::TrustRadiusExceeded { .. } => "TrustRadiusExceeded",
            Error::GapTooSmall { .. } => "GapTooSmall",
            Error::EigenSolverFailed => "EigenSolverFailed",
            Error::SingularGenerator => "SingularGenerator",
            Error::PropagationOverflow { .. } => "PropagationOverflow",
            Error::DifferentiationUnstable { .. } => "DifferentiationUnstable",
            Error::FitResidualExceeded { .. } => "FitResidualExceeded",
            Error::BranchAmbiguous => "BranchAmbiguous",
            Error::DegenerateAbsorption { .. } => "DegenerateAbsorption",
            Error::DegenerateSignal => "DegenerateSignal",
            Error::SingularCovariance { .. } => "SingularCovariance",
            Error::QuadratureNotConverged { .. } => "QuadratureNotConverged",
            Error::InsufficientStatistics { .. } => "InsufficientStatistics",
            Error::StencilUnstable { .. } => "StencilUnstable",
        }
    }
}
