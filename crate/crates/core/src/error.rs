//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by kernels, the performance model, and persistence.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or layer dimensions do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A parameter is outside its legal domain.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// A value cannot be represented in the requested fixed-point format.
    #[error("value out of range: {0}")]
    Range(String),

    /// A binary or config file is malformed.
    #[error("format error: {0}")]
    Format(String),

    /// A network config violates the layer chaining rules.
    #[error("config error: {0}")]
    Config(String),

    /// A candidate design exceeds the platform's resource capacities.
    #[error("infeasible design: {0}")]
    InfeasibleDesign(String),

    /// No feasible design point exists on the given platform.
    #[error("no feasible design point: {0}")]
    InfeasiblePlatform(String),

    /// The MMD bandwidth heuristic collapsed to zero (identical samples).
    #[error("degenerate kernel bandwidth: median pairwise distance is zero")]
    DegenerateBandwidth,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
