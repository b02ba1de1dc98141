//! Toolkit for representing objects as polynomial sublevel sets and for
//! certifying packing configurations.
//!
//! The pipeline has two halves. `shape` fits a polynomial `J` to a point
//! cloud so that the cloud lies inside `{x : J(x) <= 0}`, optionally under
//! shape priors (symmetry, star-connectedness, convexity). `pack` takes a
//! scene of placed objects and tries to certify containment in a container
//! and pairwise non-overlap by solving sum-of-squares feasibility programs;
//! every certificate is re-verified a posteriori with exact polynomial
//! arithmetic, and a sampling oracle independently hunts for counterexamples
//! when certification fails.
//!
//! Supporting layers: `poly` (sparse multivariate polynomial arithmetic),
//! `sdp` (a self-contained primal-dual interior-point semidefinite solver),
//! `sos` (compilation of polynomial identities with SOS unknowns down to
//! semidefinite programs, plus certificate verification), and `fixtures`
//! (deterministic generators for test clouds and scenes).

pub mod fixtures;
pub mod pack;
pub mod poly;
pub mod sdp;
pub mod shape;
pub mod sos;
