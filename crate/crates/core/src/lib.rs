//! Exact conjugacy machinery for unitary groups over quadratic field pairs.
//!
//! The engine works over two instantiations of a quadratic pair `E/F` with
//! conjugation: a finite pair `F_{q^2}/F_q`, and a truncated local pair
//! `F_{q^2}((t))/F_q((t))` carried to a fixed absolute `t`-adic precision.
//! On top of the coefficient layer it provides hermitian spaces, the
//! `E[T]`-module analysis of a unitary element (primary decomposition and
//! elementary divisors), the reduction of an arbitrary element to primary
//! pieces, the canonical isotropic flag and parabolic data of a primary
//! element, the graded Lie-algebra and centralizer dimension calculus, and
//! brute-force group exploration used as an independent oracle.

pub mod centralizer;
pub mod coefficients;
pub mod docsmap;
pub mod endo;
pub mod explorer;
pub mod flagpar;
pub mod hermitian;
pub mod matrix;
pub mod modstruct;
pub mod polynomials;
pub mod reduction;
pub mod rng;

use thiserror::Error;

/// Unified error type for the whole engine.
///
/// Variants are grouped by the failure class they signal: user/input errors,
/// resource limits, precision exhaustion, and internal invariant violations
/// (the last indicate a bug, since the checks they guard are theorems).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("valuation is indeterminate at working precision (all known coefficients vanish)")]
    IndeterminateValuation,

    #[error("precision loss: {0}")]
    PrecisionLoss(String),

    #[error("polynomial has zero constant term")]
    ZeroConstantTerm,

    #[error("operation unsupported over this field instantiation: {0}")]
    UnsupportedField(String),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("element is not primary for the given polynomial: {0}")]
    NotPrimary(String),

    #[error("declared factor list does not exhaust the space")]
    IncompleteFactorization,

    #[error("field too small: need {needed} distinct scalars, only {available} available")]
    FieldTooSmall { needed: usize, available: usize },

    #[error("splitting search failed: {0}")]
    SplittingSearchFailed(String),

    #[error("witness budget exceeded after {searched} candidates")]
    WitnessBudgetExceeded { searched: u64 },

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("gram matrix does not define a self-dual standard lattice")]
    NotSelfDual,

    #[error("generation failed: {0}")]
    GenerationFailed(String),

    #[error("internal invariant violation: {0}")]
    InternalInvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code class used by the command-line front end:
    /// 2 for input errors, 3 for budget/precision limits, 4 for violated
    /// internal invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::ZeroConstantTerm
            | Error::UnsupportedField(_)
            | Error::NotSelfDual
            | Error::NotPrimary(_)
            | Error::IncompleteFactorization
            | Error::FieldTooSmall { .. }
            | Error::GenerationFailed(_) => 2,
            Error::IndeterminateValuation
            | Error::PrecisionLoss(_)
            | Error::SingularMatrix
            | Error::WitnessBudgetExceeded { .. }
            | Error::BudgetExceeded(_) => 3,
            Error::SplittingSearchFailed(_) | Error::InternalInvariantViolation(_) => 4,
        }
    }
}
