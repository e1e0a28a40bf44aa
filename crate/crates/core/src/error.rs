use thiserror::Error;

use crate::circuit::{NodeId, Violation};
use crate::netlist::ParseError;

/// Errors raised by the library.
///
/// Every variant names the contract that was violated so front ends can
/// print it verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid circuit: {}", render_violations(.0))]
    InvalidCircuit(Vec<Violation>),

    #[error("missing assignment: circuit has {expected} inputs, got {found}")]
    AssignmentLength { expected: usize, found: usize },

    #[error("operation requires a single-output circuit, found {0} outputs")]
    NotSingleOutput(usize),

    #[error("node {0} does not exist")]
    UnknownNode(NodeId),

    #[error("node {0} is not an input")]
    NotAnInput(NodeId),

    #[error("probability {value} outside [{lo}, {hi}] for {what}")]
    ProbabilityRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("distribution does not sum to 1 (sum = {0})")]
    NotNormalized(f64),

    #[error("invalid probability entry {value} at index {index}")]
    InvalidEntry { index: usize, value: f64 },

    #[error("empty distribution or table")]
    Empty,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("size limit exceeded: {what} is {found}, limit {limit}")]
    SizeLimit {
        what: &'static str,
        found: usize,
        limit: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bound inapplicable: {0}")]
    Inapplicable(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub type Result<T> = std::result::Result<T, Error>;

fn render_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Checks that `value` lies in `[lo, hi]`.
pub(crate) fn check_prob(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::ProbabilityRange { what, value, lo, hi })
    }
}
