use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZrpError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series diverges at fugacity {phi} (radius of convergence {phi_c})")]
    Divergent { phi: f64, phi_c: f64 },

    #[error("series at fugacity {phi} not certified after {terms} terms (tail bound {tail_bound:e})")]
    NotCertified {
        phi: f64,
        terms: usize,
        tail_bound: f64,
    },

    #[error("density {rho} is within tolerance of the critical density {rho_c}")]
    NearCritical { rho: f64, rho_c: f64 },

    #[error("profile maximum {max} exceeds sub-critical bound {bound} (critical density minus margin)")]
    Supercritical { max: f64, bound: f64 },

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("absolute continuity violated: P has mass {mass:e} where Q vanishes")]
    NotAbsolutelyContinuous { mass: f64 },

    #[error("time step {dt:e} violates the stability bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("non-finite value in field at step {step}")]
    NonFinite { step: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, ZrpError>;

pub(crate) fn invalid(msg: impl Into<String>) -> ZrpError {
    ZrpError::InvalidParameter(msg.into())
}
