use std::fmt;

use thiserror::Error;

use crate::qcore::Slit;

pub type Result<T> = std::result::Result<T, Error>;

/// Which denominator of a weak value vanished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Denominator {
    /// `<chi|psi>` for the full pre-selected state.
    Full,
    /// `<chi|psi^l>` for the pre-selected state restricted to one slit.
    SingleSlit(Slit),
}

impl fmt::Display for Denominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Denominator::Full => write!(f, "full pre-state"),
            Denominator::SingleSlit(s) => write!(f, "single-slit ({s}) pre-state"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate time interval: t_to = {t_to:e} must exceed t_from = {t_from:e}")]
    DegenerateTime { t_from: f64, t_to: f64 },

    #[error("time {t:e} is outside the evolution range of a {role} packet referenced at {reference:e}")]
    TimeOrder {
        t: f64,
        reference: f64,
        role: &'static str,
    },

    #[error("state has no components")]
    EmptyState,

    #[error("all state weights are zero")]
    ZeroWeights,

    #[error("state role mismatch: {0}")]
    RoleMismatch(String),

    #[error("vanishing overlap in the {denominator} denominator: |<chi|psi>| = {magnitude:e} < {threshold:e}")]
    VanishingOverlap {
        denominator: Denominator,
        magnitude: f64,
        threshold: f64,
    },

    #[error("probe {probe_id}: first-order guard violated, gamma*|w| = {product:e} >= {limit}")]
    FirstOrderGuard {
        probe_id: usize,
        product: f64,
        limit: f64,
    },

    #[error("contrast {label} = {value} lies outside [-1, 1]")]
    ContrastOutOfRange { label: String, value: f64 },

    #[error("branch guard violated: {0}")]
    BranchGuard(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid scenario field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
