//! Certifying packing configurations.
//!
//! A scene places polynomial sublevel-set objects inside a container via
//! affine transforms. Each required condition (object inside container,
//! object inside the outer domain, pairwise disjointness) is certified by a
//! positivity program with a maximized margin `gamma`; a sampling oracle
//! hunts for explicit violation witnesses on the refutation side. The final
//! verdict is three-valued: certified, refuted, or undecided.

mod certify;
mod oracle;
mod report;
mod scene;

pub use certify::{
    certify_containment, certify_domain, certify_non_overlap, certify_packing, CertifyOptions,
};
pub use oracle::{find_counterexample, scan_all_constraints, ConstraintId, OracleBudget};
pub use report::{Counterexample, PackingReport, PairResult, Verdict};
pub use scene::{Container, GroundTruth, Scene, SceneObject};

use thiserror::Error;

use crate::poly::PolyError;
use crate::sos::SosError;

#[derive(Debug, Error)]
pub enum PackError {
    #[error("object index {index} out of range ({count} objects)")]
    BadIndex { index: usize, count: usize },
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("search region for {constraint} is unbounded; provide a search box")]
    UnboundedSearch { constraint: String },
    #[error("invalid scene JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Sos(#[from] SosError),
}
