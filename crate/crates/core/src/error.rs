use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, TagError>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input values or configuration supplied by the caller.
    Usage,
    /// Inputs were well-formed but fall outside the model's valid domain.
    Domain,
    /// Filesystem or parse failure.
    Io,
}

#[derive(Debug, Error)]
pub enum TagError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unreachable configuration: arcsin argument {argument:.6} exceeds 1")]
    Unreachable { argument: f64 },

    #[error("stroke {stroke_mm:.6} mm outside [0, {max_mm}] mm")]
    StrokeOutOfRange { stroke_mm: f64, max_mm: f64 },

    #[error("wire too compliant: elongation coefficient {0:.6} must be below 1")]
    CompliantWire(f64),

    #[error("mirror rotation {phi_deg:.4} deg puts the reflected beam at or past the scan plane (limit 45 deg)")]
    BeamParallel { phi_deg: f64 },

    #[error("DH chain singular at theta1 = {theta1_deg:.4} deg")]
    Singular { theta1_deg: f64 },

    #[error("transform is not rigid: {0}")]
    NotRigid(String),

    #[error("no edge pixels found")]
    NoEdges,

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl TagError {
    pub fn class(&self) -> ErrorClass {
        match self {
            TagError::InvalidParameter { .. } | TagError::InvalidConfig(_) => ErrorClass::Usage,
            TagError::Unreachable { .. }
            | TagError::StrokeOutOfRange { .. }
            | TagError::CompliantWire(_)
            | TagError::BeamParallel { .. }
            | TagError::Singular { .. }
            | TagError::NotRigid(_)
            | TagError::NoEdges
            | TagError::InsufficientData { .. } => ErrorClass::Domain,
            TagError::Io { .. } | TagError::Parse(_) | TagError::Csv(_) => ErrorClass::Io,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TagError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        TagError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
