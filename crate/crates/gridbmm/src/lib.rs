//! Combinatorial Boolean matrix multiplication through grid-norm regularity.
//!
//! This crate implements a pipeline of combinatorial (non-algebraic) graph
//! algorithms built around one structural idea: a bipartite graph whose
//! `(k, l)`-grid norm barely exceeds its density behaves pseudo-randomly, and
//! products of such graphs have near-uniform 2-path counts. The pieces are:
//!
//! * [`bitmatrix`] — bit-packed binary matrices viewed as bipartite graphs,
//!   with exact rational densities and degrees.
//! * [`sampler`] — oblivious-sampler families that derandomize grid-norm
//!   estimation.
//! * [`gridnorm`] — exact and sampler-based grid norms, regularity predicates,
//!   and the uniformity measurement for products of regular matrices.
//! * [`sift`] — certify `(eps, k, l)`-regularity or extract a large denser
//!   rectangle.
//! * [`decompose`] — min-degree enforcement, good rectangles and cubes, and
//!   the A- and AB-regularity decompositions with machine-checked
//!   postconditions.
//! * [`triangle`] — triangle detection, Four-Russians listing, the full
//!   listing algorithm, constant-delay enumeration, and brute-force oracles.
//! * [`threesum`] — a 3-SUM solver reduced to triangle listing through an
//!   almost-linear hash family.
//! * [`gen`] — seeded, reproducible instance generators.
//! * [`io`] — the text formats shared with the command-line tool.
//!
//! Everything that looks like a threshold comparison is done in exact rational
//! arithmetic (see [`rational`]); brute-force oracles and verifiers re-check
//! each postcondition so the structural guarantees are enforced at run time,
//! not assumed.

use std::fmt;

pub mod bitmatrix;
pub mod decompose;
pub mod gen;
pub mod gridnorm;
pub mod io;
pub mod rational;
pub mod sampler;
pub mod sift;
pub mod threesum;
pub mod triangle;

pub use bitmatrix::{BoolMatrix, CountMatrix, IndexSet, NodeId, TripartiteGraph};
pub use rational::Rat;

/// Errors shared by all modules.
#[derive(Debug)]
pub enum Error {
    /// An operation that needs at least one row and one column got none.
    EmptyMatrix,
    /// Incompatible shapes for a product or a graph constructor.
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    /// A node index outside its part.
    IndexOutOfRange { index: usize, size: usize },
    /// A malformed index set (not strictly increasing, wrong ambient part, ...).
    InvalidIndexSet(String),
    /// A parameter outside its documented range.
    InvalidParameter(String),
    /// An exact computation whose cost exceeds the configured cap.
    Infeasible { cost: u128, cap: u128 },
    /// An algorithm's re-verified postcondition failed; indicates a bug.
    PostconditionViolated(String),
    /// Malformed text input.
    Parse(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyMatrix => write!(f, "matrix has no entries"),
            Error::DimensionMismatch { left, right } => write!(
                f,
                "dimension mismatch: {}x{} against {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::IndexOutOfRange { index, size } => {
                write!(f, "index {index} out of range for part of size {size}")
            }
            Error::InvalidIndexSet(msg) => write!(f, "invalid index set: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Infeasible { cost, cap } => write!(
                f,
                "exact computation needs {cost} elementary steps, above the cap of {cap}; \
                 use sampled mode"
            ),
            Error::PostconditionViolated(msg) => write!(f, "postcondition violated: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(doctest)]
mod book;
