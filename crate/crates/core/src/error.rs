use thiserror::Error;

use crate::minkowski::Dim;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(Dim, Dim),

    #[error("operation requires {expected} mode, got {found}")]
    WrongMode { expected: Dim, found: Dim },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("degenerate curve at lambda = {lambda}: second derivative is not spacelike")]
    DegenerateCurve { lambda: f64 },

    #[error("curve is not null at lambda = {lambda} (|X'.X'| = {violation:e})")]
    NotNull { lambda: f64, violation: f64 },

    #[error("negative kappa2 radicand {radicand:e} at lambda = {lambda}")]
    NegativeRadicand { lambda: f64, radicand: f64 },

    #[error("frame extraction failed at lambda = {lambda}: Gram residual {residual:e}")]
    ExtractionFailure { lambda: f64, residual: f64 },

    #[error("derivative of order {needed} unavailable (source provides {available})")]
    DerivativeUnavailable { needed: usize, available: usize },

    #[error("{value} is outside the domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("invalid initial state: {0}")]
    InvalidInit(String),

    #[error("integration blew up after sigma = {last_sigma}")]
    BlowUp { last_sigma: f64 },

    #[error("frame too far from the constraint surface (Gram residual {0:e})")]
    ResidualTooLarge(f64),

    #[error("singular frame restoration: {0}")]
    Singular(&'static str),

    #[error("deformation does not vanish to fourth order at the domain endpoints")]
    NonCompactSupport,

    #[error("initial curvature lies in the forbidden region (radicand {0:e})")]
    ForbiddenRegion(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
