//! Learning polynomial sublevel-set shapes from point clouds.
//!
//! A shape is the set `{x : J(x) <= 0}` for a polynomial `J` found by
//! maximizing the average of `J` over a working box while keeping every
//! sample point strictly inside the shape and capping `J` at 1 on a ball
//! around the box, so the optimum hugs the data. Optional priors restrict
//! the fit to symmetric, star-shaped, or convex bodies.

mod boundary;
mod cloud;
mod learn;

pub use boundary::{boundary_points, sample_boundary};
pub use cloud::{load_point_cloud, normalize_cloud, parse_point_cloud, CloudFormat, PointCloud};
pub use learn::{
    covering_radius, learn_shape, learn_shape_with_options, LearnConfig, Prior, ShapeModel,
};

use thiserror::Error;

use crate::poly::PolyError;
use crate::sdp::{SdpError, SolverStatus};
use crate::sos::SosError;

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("point cloud contains no points")]
    EmptyCloud,
    #[error("point {index} has {got} coordinates, expected {expected}")]
    InconsistentPoint {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("degree must be even and at least 2, got {0}")]
    BadDegree(u32),
    #[error("margin must be positive and finite, got {0}")]
    BadMargin(f64),
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("ball of radius {radius} does not cover the working box (needs at least {needed})")]
    BallTooSmall { radius: f64, needed: f64 },
    #[error("point {index} lies outside the working box")]
    PointOutsideBox { index: usize },
    #[error("symmetry matrix must be {expected}x{expected} with finite entries")]
    BadSymmetryMatrix { expected: usize },
    #[error(
        "solve ended with status {status:?} and the certificate failed verification \
         (residual {residual:.3e}, min Gram eigenvalue {min_eig:.3e})"
    )]
    Unverified {
        status: SolverStatus,
        residual: f64,
        min_eig: f64,
    },
    #[error(
        "learned polynomial misses the interior margin at point {index}: \
         J = {value:.6e} > {bound:.6e}"
    )]
    MarginViolated {
        index: usize,
        value: f64,
        bound: f64,
    },
    #[error("invalid shape JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Sos(#[from] SosError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}
