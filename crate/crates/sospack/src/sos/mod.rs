//! Sum-of-squares constraint systems and their certificates.
//!
//! A [`SosConstraintSystem`] collects unknowns (Gram matrices of SOS
//! polynomials, free polynomial coefficients, free scalars), polynomial
//! identities that are linear in those unknowns, and scalar inequalities.
//! [`SosConstraintSystem::compile`] lowers everything to an
//! [`SdpProblem`](crate::sdp::SdpProblem) by coefficient matching, and
//! [`verify_certificate`] re-checks a returned solution a posteriori with
//! exact polynomial arithmetic, so a `verified` certificate does not depend
//! on trusting the solver's status flag.

mod certificate;
mod system;

pub use certificate::{verify_certificate, Certificate, VerifyTolerances};
pub use system::{multiplier_degree, GramId, LinExpr, PolyVarId, ScalarId, SosConstraintSystem};

use crate::poly::PolyError;
use crate::sdp::SdpError;

#[derive(Debug, thiserror::Error)]
pub enum SosError {
    #[error("sos unknown must have even degree, got {0}")]
    OddDegree(u32),
    #[error("dimension mismatch in sos expression: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("product of two unknown-bearing expressions is not linear")]
    NonlinearUnknowns,
    #[error("duplicate unknown name {0}")]
    DuplicateName(String),
    #[error("{0}")]
    Structural(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}
