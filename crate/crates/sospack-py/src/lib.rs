//! Python bindings: polynomial construction and evaluation, shape learning
//! from point clouds, packing certification, and the sampling oracle.
//!
//! Scenes and reports cross the boundary as JSON strings in the same format
//! the command line tools read and write, so artifacts are interchangeable
//! between the two front ends.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sospack::pack::{certify_packing, scan_all_constraints, CertifyOptions, OracleBudget, Scene};
use sospack::poly::{AffineTransform, BoxRegion, Monomial, Polynomial as CorePolynomial};
use sospack::sdp::SolveOptions;
use sospack::shape::{
    learn_shape_with_options, sample_boundary as boundary_of, LearnConfig, PointCloud, Prior,
    ShapeModel as CoreShapeModel,
};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Sparse multivariate polynomial in `dim` variables.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Polynomial {
    inner: CorePolynomial,
}

#[pymethods]
impl Polynomial {
    #[staticmethod]
    fn constant(dim: usize, value: f64) -> Polynomial {
        Polynomial {
            inner: CorePolynomial::constant(dim, value),
        }
    }

    #[staticmethod]
    fn variable(dim: usize, index: usize) -> PyResult<Polynomial> {
        if index >= dim {
            return Err(value_error(format!(
                "variable index {index} out of range for dimension {dim}"
            )));
        }
        Ok(Polynomial {
            inner: CorePolynomial::variable(dim, index),
        })
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs.
    #[staticmethod]
    fn from_terms(dim: usize, terms: Vec<(Vec<u32>, f64)>) -> PyResult<Polynomial> {
        let inner = CorePolynomial::from_terms(
            dim,
            terms.into_iter().map(|(e, c)| (Monomial::new(e), c)),
        )
        .map_err(value_error)?;
        Ok(Polynomial { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Polynomial> {
        Ok(Polynomial {
            inner: CorePolynomial::from_json(text).map_err(value_error)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn degree(&self) -> u32 {
        self.inner.degree()
    }

    fn evaluate(&self, point: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&point).map_err(value_error)
    }

    /// Coefficient of each monomial as `(exponents, coefficient)` pairs.
    fn terms(&self) -> Vec<(Vec<u32>, f64)> {
        self.inner
            .terms()
            .map(|(m, c)| (m.exponents().to_vec(), c))
            .collect()
    }

    /// Substitutes the map `x -> linear (x - offset)` into the polynomial.
    fn compose(
        &self,
        linear: Vec<Vec<f64>>,
        offset: Vec<f64>,
        rigid: bool,
    ) -> PyResult<Polynomial> {
        let n = offset.len();
        if linear.len() != n || linear.iter().any(|row| row.len() != n) {
            return Err(value_error("linear part must be square and match the offset"));
        }
        let matrix = nalgebra::DMatrix::from_fn(n, n, |i, j| linear[i][j]);
        let transform =
            AffineTransform::new(matrix, nalgebra::DVector::from_vec(offset), rigid)
                .map_err(value_error)?;
        Ok(Polynomial {
            inner: self.inner.compose_affine(&transform).map_err(value_error)?,
        })
    }

    /// Exact integral over the axis-aligned box `[lower, upper]`.
    fn integrate_box(&self, lower: Vec<f64>, upper: Vec<f64>) -> PyResult<f64> {
        let region = BoxRegion::new(lower, upper).map_err(value_error)?;
        self.inner.integrate_box(&region).map_err(value_error)
    }

    fn __add__(&self, other: &Polynomial) -> PyResult<Polynomial> {
        Ok(Polynomial {
            inner: self.inner.add(&other.inner).map_err(value_error)?,
        })
    }

    fn __sub__(&self, other: &Polynomial) -> PyResult<Polynomial> {
        Ok(Polynomial {
            inner: self.inner.sub(&other.inner).map_err(value_error)?,
        })
    }

    fn __mul__(&self, other: &Bound<'_, PyAny>) -> PyResult<Polynomial> {
        if let Ok(p) = other.cast::<Polynomial>() {
            return Ok(Polynomial {
                inner: self.inner.mul(&p.get().inner).map_err(value_error)?,
            });
        }
        let factor: f64 = other.extract()?;
        Ok(Polynomial {
            inner: self.inner.scale(factor),
        })
    }

    fn __rmul__(&self, factor: f64) -> Polynomial {
        Polynomial {
            inner: self.inner.scale(factor),
        }
    }

    fn __neg__(&self) -> Polynomial {
        Polynomial {
            inner: self.inner.neg(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Polynomial(dim={}, degree={}, terms={})",
            self.inner.dim(),
            self.inner.degree(),
            self.inner.terms().count()
        )
    }
}

/// Learned sublevel-set representation of a point cloud.
#[pyclass(frozen, skip_from_py_object)]
struct ShapeModel {
    inner: CoreShapeModel,
}

#[pymethods]
impl ShapeModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<ShapeModel> {
        Ok(ShapeModel {
            inner: CoreShapeModel::from_json(text).map_err(value_error)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn polynomial(&self) -> Polynomial {
        Polynomial {
            inner: self.inner.polynomial.clone(),
        }
    }

    /// Radius of the ball on which the polynomial is certified bounded.
    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius
    }

    #[getter]
    fn verified(&self) -> bool {
        self.inner.certificate.verified
    }

    #[getter]
    fn identity_residual(&self) -> f64 {
        self.inner.certificate.identity_residual
    }

    fn __repr__(&self) -> String {
        format!(
            "ShapeModel(dim={}, degree={}, radius={:.3}, verified={})",
            self.inner.polynomial.dim(),
            self.inner.polynomial.degree(),
            self.inner.radius,
            self.inner.certificate.verified
        )
    }
}

fn parse_priors(specs: &[String]) -> PyResult<Vec<Prior>> {
    specs
        .iter()
        .map(|spec| match spec.as_str() {
            "star" => Ok(Prior::StarConnected),
            "convex" => Ok(Prior::Convex),
            other => {
                let Some(matrix) = other.strip_prefix("symmetry:") else {
                    return Err(value_error(format!(
                        "unknown prior {other:?}; expected star, convex, or symmetry:<matrix>"
                    )));
                };
                if matrix == "neg-identity" {
                    return Ok(Prior::Symmetry {
                        matrix: vec![],
                    });
                }
                let rows: Vec<Vec<f64>> = matrix
                    .split(';')
                    .map(|row| {
                        row.split(',')
                            .map(|v| v.trim().parse::<f64>().map_err(value_error))
                            .collect()
                    })
                    .collect::<PyResult<_>>()?;
                Ok(Prior::Symmetry { matrix: rows })
            }
        })
        .collect()
}

/// Expands the `symmetry:neg-identity` shorthand once the dimension is known.
fn resolve_priors(priors: Vec<Prior>, dim: usize) -> Vec<Prior> {
    priors
        .into_iter()
        .map(|prior| match prior {
            Prior::Symmetry { matrix } if matrix.is_empty() => {
                let rows = (0..dim)
                    .map(|i| (0..dim).map(|j| if i == j { -1.0 } else { 0.0 }).collect())
                    .collect();
                Prior::Symmetry { matrix: rows }
            }
            other => other,
        })
        .collect()
}

/// Fits a polynomial whose zero-sublevel set contains every input point.
#[pyfunction]
#[pyo3(signature = (points, degree, lower, upper, margin=1e-4, priors=vec![], radius=None, max_iters=200))]
#[allow(clippy::too_many_arguments)]
fn learn_shape(
    points: Vec<Vec<f64>>,
    degree: u32,
    lower: Vec<f64>,
    upper: Vec<f64>,
    margin: f64,
    priors: Vec<String>,
    radius: Option<f64>,
    max_iters: usize,
) -> PyResult<ShapeModel> {
    let cloud = PointCloud::new(points).map_err(value_error)?;
    let dim = cloud.dim();
    let region = BoxRegion::new(lower, upper).map_err(value_error)?;
    let mut config = LearnConfig::with_defaults(degree, region);
    config.margin = margin;
    config.priors = resolve_priors(parse_priors(&priors)?, dim);
    if let Some(radius) = radius {
        config.radius = radius;
    }
    let options = SolveOptions {
        max_iters,
        ..SolveOptions::default()
    };
    let inner = learn_shape_with_options(&cloud, &config, &options).map_err(value_error)?;
    Ok(ShapeModel { inner })
}

/// Certifies a packing scene and returns the full report as JSON. The
/// report's `verdict` field is `"certified"`, `"refuted"`, or `"undecided"`.
#[pyfunction]
#[pyo3(signature = (scene_json, degree=None, jobs=0, max_iters=200))]
fn certify_scene(
    scene_json: &str,
    degree: Option<u32>,
    jobs: usize,
    max_iters: usize,
) -> PyResult<String> {
    let mut scene = Scene::from_json(scene_json).map_err(value_error)?;
    if let Some(degree) = degree {
        scene.degree = degree;
    }
    scene.validate().map_err(value_error)?;
    let options = CertifyOptions {
        solve: SolveOptions {
            max_iters,
            ..SolveOptions::default()
        },
        jobs,
        ..CertifyOptions::default()
    };
    let report = certify_packing(&scene, &options).map_err(value_error)?;
    Ok(report.to_json())
}

/// Runs the counterexample search on every constraint of a scene and
/// returns the violations as JSON.
#[pyfunction]
#[pyo3(signature = (scene_json, grid=64, samples=4096, seed=7))]
fn oracle_check(scene_json: &str, grid: usize, samples: usize, seed: u64) -> PyResult<String> {
    let scene = Scene::from_json(scene_json).map_err(value_error)?;
    let budget = OracleBudget {
        grid_resolution: grid,
        random_samples: samples,
        seed,
        search_box: None,
    };
    let violations = scan_all_constraints(&scene, &budget).map_err(value_error)?;
    serde_json::to_string_pretty(&violations).map_err(value_error)
}

/// Points on the zero level set of a learned shape.
#[pyfunction]
#[pyo3(signature = (model, resolution=360))]
fn sample_boundary(model: &ShapeModel, resolution: usize) -> PyResult<Vec<Vec<f64>>> {
    boundary_of(&model.inner, resolution).map_err(value_error)
}

/// Exponent vectors of every monomial in `dim` variables up to `max_degree`.
#[pyfunction]
fn monomial_basis(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    sospack::poly::monomial_basis(dim, max_degree)
        .into_iter()
        .map(|m| m.exponents().to_vec())
        .collect()
}

#[pymodule]
fn sospack_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Polynomial>()?;
    m.add_class::<ShapeModel>()?;
    m.add_function(wrap_pyfunction!(learn_shape, m)?)?;
    m.add_function(wrap_pyfunction!(certify_scene, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add_function(wrap_pyfunction!(sample_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(monomial_basis, m)?)?;
    Ok(())
}
