//! Sparse multivariate polynomials with `f64` coefficients, affine variable
//! changes, and closed-form integration over axis-aligned boxes.
//!
//! Monomials are ordered graded lexicographically (total degree first, then
//! lexicographic comparison of exponent vectors). Every routine that hands
//! out a list of monomials or serializes a polynomial uses this order, so
//! Gram-matrix indexing and file formats stay consistent across the crate.

mod affine;
mod monomial;
mod polynomial;
mod region;

pub use affine::AffineTransform;
pub use monomial::{monomial_basis, Monomial};
pub use polynomial::Polynomial;
pub use region::BoxRegion;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point has {got} coordinates, polynomial has {expected} variables")]
    PointDimension { expected: usize, got: usize },
    #[error("box bound {index} is empty or unordered: lower {lower} >= upper {upper}")]
    EmptyBox {
        index: usize,
        lower: f64,
        upper: f64,
    },
    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },
    #[error("transform matrix is singular or badly conditioned (|det| = {det:e})")]
    SingularTransform { det: f64 },
    #[error("transform flagged rigid but S^T S deviates from identity by {deviation:e}")]
    NotRigid { deviation: f64 },
    #[error("invalid polynomial JSON: {0}")]
    Json(String),
}
