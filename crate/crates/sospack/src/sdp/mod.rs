//! Semidefinite programming layer.
//!
//! Problems are stated over a block-diagonal positive semidefinite variable
//! plus a vector of free scalars, with linear equality constraints and a
//! linear objective that is always *maximized*. The built-in solver is a
//! homogeneous self-dual primal-dual interior-point method, sized for the
//! dense blocks this crate produces (up to roughly 100x100). `SdpSolver` is
//! the seam for plugging in an external backend without touching callers.

mod hsd;
mod problem;

pub use hsd::InteriorPointSolver;
pub use problem::{BlockEntry, Equality, LinearFunctional, SdpProblem};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Structural(String),
    #[error("matrix is not symmetric within 1e-9 (max deviation {0:e})")]
    NotSymmetric(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    /// Converged to the requested feasibility and duality-gap tolerances.
    Optimal,
    /// A certificate of primal infeasibility was found.
    Infeasible,
    /// A certificate of dual infeasibility was found (the maximization is
    /// unbounded above).
    Unbounded,
    /// Progress stalled or a linear solve failed; the best iterate seen is
    /// returned and must not be trusted without external verification.
    NumericalTrouble,
    /// The iteration budget ran out; the best iterate seen is returned.
    IterationLimit,
}

impl SolverStatus {
    /// Whether the returned variables are a meaningful (if possibly
    /// unconverged) iterate rather than an infeasibility certificate.
    pub fn has_iterate(self) -> bool {
        matches!(
            self,
            SolverStatus::Optimal | SolverStatus::NumericalTrouble | SolverStatus::IterationLimit
        )
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub feas_tol: f64,
    pub duality_gap_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 200,
            feas_tol: 1e-8,
            duality_gap_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolverStatus,
    /// One symmetric matrix per declared block, in declaration order.
    pub block_values: Vec<DMatrix<f64>>,
    pub scalar_values: Vec<f64>,
    /// The problem's (maximized) objective functional evaluated at the
    /// returned variables.
    pub objective_value: f64,
    pub iterations: usize,
    /// Final relative primal residual, dual residual, and duality gap.
    pub residuals: (f64, f64, f64),
}

/// Pluggable solver interface.
pub trait SdpSolver {
    fn solve(&self, problem: &SdpProblem, options: &SolveOptions)
        -> Result<SdpSolution, SdpError>;
}

/// Solves with the built-in interior-point implementation.
pub fn solve(problem: &SdpProblem, options: &SolveOptions) -> Result<SdpSolution, SdpError> {
    InteriorPointSolver.solve(problem, options)
}

/// Smallest eigenvalue of a symmetric matrix. The input may deviate from
/// exact symmetry by at most 1e-9 (relative to its largest entry); it is
/// symmetrized before the eigenvalue computation.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64, SdpError> {
    if m.nrows() != m.ncols() {
        return Err(SdpError::Structural(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.is_empty() {
        return Err(SdpError::Structural("empty matrix".to_string()));
    }
    let scale = m.amax().max(1.0);
    let dev = (m - m.transpose()).amax();
    if dev > 1e-9 * scale {
        return Err(SdpError::NotSymmetric(dev));
    }
    let sym = (m + m.transpose()).scale(0.5);
    let eigs = sym.symmetric_eigenvalues();
    Ok(eigs.iter().copied().fold(f64::INFINITY, f64::min))
}
