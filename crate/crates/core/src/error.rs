//! Crate-wide error type.

use thiserror::Error;

use crate::hgroup::HPoint;

#[derive(Debug, Error)]
pub enum Error {
    /// A field expression was evaluated where a guard fails (division by
    /// zero, square root of a non-positive base, `|φ| ≥ 1`, ...).
    #[error("domain error at {point}: {reason} (node `{node}`)")]
    Domain {
        node: String,
        point: HPoint,
        reason: String,
    },

    /// A parameter fell outside its admissible range.
    #[error("range error: {param} = {value} must satisfy {expected}")]
    Range {
        param: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// A conformal factor (or glued density) was not strictly positive.
    #[error("positivity error at {point}: {what} = {value}")]
    Positivity {
        what: &'static str,
        point: HPoint,
        value: f64,
    },

    /// The base deformation tensor violates the chart normalization
    /// required by the gluing construction.
    #[error("normalization error: {0}")]
    Normalization(String),

    /// `∫ u⁴ dV = 0`, so the Yamabe quotient is undefined.
    #[error("zero denominator: the trial function has vanishing L⁴ norm")]
    ZeroDenominator,

    /// Expression source text failed to parse.
    #[error("syntax error at column {col}: {message} (expected {expected})")]
    Syntax {
        col: usize,
        message: String,
        expected: String,
    },

    /// A run configuration field is missing or invalid.
    #[error("config error: field `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// A quantity that is real by theorem came out with a large imaginary
    /// part; this indicates a bug, not a user error.
    #[error("numerical invariant violated: {what} has imaginary residue {residue:e}")]
    NumericalInvariant { what: &'static str, residue: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(node: impl Into<String>, point: HPoint, reason: impl Into<String>) -> Self {
        Error::Domain {
            node: node.into(),
            point,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
