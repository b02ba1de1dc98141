use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{PolyError, Polynomial};

const RIGID_TOL: f64 = 1e-9;

/// Invertible affine change of coordinates, stored as the map
/// `x -> S (x - v)`.
///
/// Throughout the crate this is the *inverse* placement map: an object
/// authored in its own frame as `{y : p(y) <= 0}` and placed in the world is
/// the set `{x : p(S(x - v)) <= 0}`, so `apply` sends world coordinates to
/// object coordinates and `apply_inverse` sends object coordinates back to
/// the world.
#[derive(Clone, Debug)]
pub struct AffineTransform {
    linear: DMatrix<f64>,
    offset: DVector<f64>,
    rigid: bool,
    inverse_linear: DMatrix<f64>,
}

impl AffineTransform {
    pub fn new(linear: DMatrix<f64>, offset: DVector<f64>, rigid: bool) -> Result<Self, PolyError> {
        let n = offset.len();
        if linear.nrows() != n || linear.ncols() != n {
            return Err(PolyError::DimensionMismatch {
                expected: n,
                got: linear.nrows().max(linear.ncols()),
            });
        }
        if linear.iter().any(|v| !v.is_finite()) || offset.iter().any(|v| !v.is_finite()) {
            return Err(PolyError::NonFinite {
                context: "affine transform entries".to_string(),
            });
        }
        if rigid {
            let gram = linear.transpose() * &linear;
            let eye = DMatrix::identity(n, n);
            let deviation = (gram - eye).amax();
            if deviation > RIGID_TOL {
                return Err(PolyError::NotRigid { deviation });
            }
        }
        let lu = linear.clone().lu();
        let det = lu.determinant();
        let scale = linear.amax().max(1.0);
        if !det.is_finite() || det.abs() < 1e-12 * scale.powi(n as i32) {
            return Err(PolyError::SingularTransform { det });
        }
        let inverse_linear = lu
            .try_inverse()
            .ok_or(PolyError::SingularTransform { det })?;
        Ok(AffineTransform {
            linear,
            offset,
            rigid,
            inverse_linear,
        })
    }

    pub fn identity(dim: usize) -> Self {
        AffineTransform::new(
            DMatrix::identity(dim, dim),
            DVector::zeros(dim),
            true,
        )
        .expect("identity transform is valid")
    }

    /// Uniform scaling about a center: `x -> factor * (x - center)`.
    pub fn scaling(dim: usize, factor: f64, center: &[f64]) -> Result<Self, PolyError> {
        AffineTransform::new(
            DMatrix::from_diagonal_element(dim, dim, factor),
            DVector::from_column_slice(center),
            false,
        )
    }

    /// Pure translation written in the stored convention: `x -> x - center`.
    pub fn translation(center: &[f64]) -> Self {
        let dim = center.len();
        AffineTransform::new(
            DMatrix::identity(dim, dim),
            DVector::from_column_slice(center),
            true,
        )
        .expect("translation is valid")
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn linear(&self) -> &DMatrix<f64> {
        &self.linear
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn rigid(&self) -> bool {
        self.rigid
    }

    /// `S (x - v)`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let p = DVector::from_column_slice(x) - &self.offset;
        (&self.linear * p).iter().copied().collect()
    }

    /// Solves `S (x - v) = y` for `x`, i.e. `x = S^{-1} y + v`.
    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        let x = &self.inverse_linear * DVector::from_column_slice(y) + &self.offset;
        x.iter().copied().collect()
    }

    pub fn inverse_linear(&self) -> &DMatrix<f64> {
        &self.inverse_linear
    }

    /// The transform whose map is `x -> self(other(x))`.
    ///
    /// With maps written as `t(x) = S (x - v)` the composition has linear
    /// part `S1 S2` and offset `v2 + S2^{-1} v1`, so that
    /// `compose_affine(compose_affine(p, t1), t2) = compose_affine(p, t1.after(&t2))`.
    pub fn after(&self, other: &AffineTransform) -> Result<AffineTransform, PolyError> {
        if self.dim() != other.dim() {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let linear = &self.linear * &other.linear;
        let offset = &other.offset + &other.inverse_linear * &self.offset;
        AffineTransform::new(linear, offset, self.rigid && other.rigid)
    }

    /// Degree-one polynomials giving each coordinate of `S (x - v)`.
    pub fn coordinate_polynomials(&self) -> Vec<Polynomial> {
        let n = self.dim();
        let shift = &self.linear * &self.offset;
        (0..n)
            .map(|i| {
                let mut terms = Vec::with_capacity(n + 1);
                terms.push((super::Monomial::constant(n), -shift[i]));
                for j in 0..n {
                    terms.push((super::Monomial::variable(n, j), self.linear[(i, j)]));
                }
                Polynomial::from_terms(n, terms).expect("consistent dimension")
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    linear: Vec<Vec<f64>>,
    offset: Vec<f64>,
    rigid: bool,
}

impl Serialize for AffineTransform {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let n = self.dim();
        let repr = TransformRepr {
            linear: (0..n)
                .map(|i| (0..n).map(|j| self.linear[(i, j)]).collect())
                .collect(),
            offset: self.offset.iter().copied().collect(),
            rigid: self.rigid,
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AffineTransform {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = TransformRepr::deserialize(deserializer)?;
        let n = repr.offset.len();
        if repr.linear.len() != n || repr.linear.iter().any(|row| row.len() != n) {
            return Err(D::Error::custom("transform matrix is not square"));
        }
        let linear = DMatrix::from_fn(n, n, |i, j| repr.linear[i][j]);
        let offset = DVector::from_vec(repr.offset);
        AffineTransform::new(linear, offset, repr.rigid).map_err(D::Error::custom)
    }
}
