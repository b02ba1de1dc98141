use serde::{Deserialize, Serialize};

use crate::poly::{monomial_basis, BoxRegion, Monomial, Polynomial};
use crate::sdp::{self, SolveOptions};
use crate::sos::{verify_certificate, Certificate, SosConstraintSystem, VerifyTolerances};

use super::cloud::PointCloud;
use super::ShapeError;

/// Extra slack below the requested margin imposed on the solver, so the
/// exact post-solve check `J(x_i) <= -margin` survives solver tolerances.
const MARGIN_GUARD: f64 = 1e-6;

/// Structural restriction on the learned polynomial.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    /// `J(x) = J(Ax)` as an exact coefficient identity.
    Symmetry { matrix: Vec<Vec<f64>> },
    /// `x . grad J >= 0` on the ball, so sublevel sets are star-shaped
    /// around the origin.
    StarConnected,
    /// The Hessian of `J` is an SOS matrix, so `J` is convex.
    Convex,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LearnConfig {
    pub degree: u32,
    #[serde(rename = "box")]
    pub region: BoxRegion,
    pub radius: f64,
    pub margin: f64,
    pub priors: Vec<Prior>,
}

/// Radius of the smallest origin-centered ball containing the box.
pub fn covering_radius(region: &BoxRegion) -> f64 {
    region
        .lower()
        .iter()
        .zip(region.upper())
        .map(|(lo, hi)| (lo * lo).max(hi * hi))
        .sum::<f64>()
        .sqrt()
}

/// Radius of the largest origin-centered ball inside the box, clamped at 0
/// when the origin lies outside.
fn inscribed_radius(region: &BoxRegion) -> f64 {
    region
        .lower()
        .iter()
        .zip(region.upper())
        .map(|(lo, hi)| (-lo).min(*hi))
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

impl LearnConfig {
    /// Degree and box with a 5% slack on the ball radius, margin 1e-4, no
    /// priors.
    pub fn with_defaults(degree: u32, region: BoxRegion) -> LearnConfig {
        let radius = 1.05 * covering_radius(&region);
        LearnConfig {
            degree,
            region,
            radius,
            margin: 1e-4,
            priors: Vec::new(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), ShapeError> {
        if self.degree < 2 || self.degree % 2 != 0 {
            return Err(ShapeError::BadDegree(self.degree));
        }
        if self.region.dim() != dim {
            return Err(ShapeError::InconsistentPoint {
                index: 0,
                expected: self.region.dim(),
                got: dim,
            });
        }
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return Err(ShapeError::BadMargin(self.margin));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(ShapeError::BadRadius(self.radius));
        }
        let needed = covering_radius(&self.region);
        if self.radius < needed {
            return Err(ShapeError::BallTooSmall {
                radius: self.radius,
                needed,
            });
        }
        for prior in &self.priors {
            if let Prior::Symmetry { matrix } = prior {
                let square = matrix.len() == dim && matrix.iter().all(|row| row.len() == dim);
                let finite = matrix.iter().flatten().all(|v| v.is_finite());
                if !square || !finite {
                    return Err(ShapeError::BadSymmetryMatrix { expected: dim });
                }
            }
        }
        Ok(())
    }
}

/// A learned shape `{x in B_r(0) : J(x) <= 0}` together with the
/// configuration that produced it and the checked certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeModel {
    #[serde(flatten)]
    pub polynomial: Polynomial,
    pub radius: f64,
    pub config: LearnConfig,
    pub certificate: Certificate,
}

impl ShapeModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("shape model serializes")
    }

    pub fn from_json(text: &str) -> Result<ShapeModel, ShapeError> {
        serde_json::from_str(text).map_err(|e| ShapeError::Json(e.to_string()))
    }
}

fn ball_polynomial(dim: usize, radius: f64) -> Polynomial {
    let mut terms = vec![(Monomial::constant(dim), radius * radius)];
    for i in 0..dim {
        let mut exps = vec![0u32; dim];
        exps[i] = 2;
        terms.push((Monomial::new(exps), -1.0));
    }
    Polynomial::from_terms(dim, terms).expect("consistent dimension")
}

pub fn learn_shape(cloud: &PointCloud, config: &LearnConfig) -> Result<ShapeModel, ShapeError> {
    learn_shape_with_options(cloud, config, &SolveOptions::default())
}

pub fn learn_shape_with_options(
    cloud: &PointCloud,
    config: &LearnConfig,
    options: &SolveOptions,
) -> Result<ShapeModel, ShapeError> {
    let n = cloud.dim();
    config.validate(n)?;
    for (index, x) in cloud.points().iter().enumerate() {
        if !config.region.contains(x) {
            return Err(ShapeError::PointOutsideBox { index });
        }
    }

    let d = config.degree;
    let mut sys = SosConstraintSystem::new();
    let j = sys.add_poly_var("J", n, d)?;

    let volume = config.region.volume();
    let weights = monomial_basis(n, d)
        .into_iter()
        .map(|m| {
            Polynomial::from_monomial(n, m, 1.0)?
                .integrate_box(&config.region)
                .map(|v| v / volume)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let objective = sys.poly_weighted_expr(j, &weights)?;
    sys.set_objective(&objective)?;

    for (index, x) in cloud.points().iter().enumerate() {
        let at_point = sys.poly_eval_expr(j, x)?;
        sys.add_inequality_le(
            &format!("interior point {index}"),
            &at_point,
            -(config.margin + MARGIN_GUARD),
        )?;
    }

    let g_ball = ball_polynomial(n, config.radius);
    let s0 = sys.add_sos("s0", n, 2 * ((d - 2) / 2))?;
    let sigma = sys.add_sos("sigma", n, 2 * (d / 2))?;
    let cap = crate::sos::LinExpr::known(Polynomial::constant(n, 1.0))
        .sub(&sys.poly_expr(j))?
        .sub(&sys.gram_expr(s0).mul_poly(&g_ball)?)?
        .sub(&sys.gram_expr(sigma))?;
    sys.add_identity("ball cap", &cap)?;

    for (k, prior) in config.priors.iter().enumerate() {
        match prior {
            Prior::Symmetry { matrix } => {
                let images: Vec<Polynomial> = (0..n)
                    .map(|i| {
                        Polynomial::from_terms(
                            n,
                            (0..n).map(|col| (Monomial::variable(n, col), matrix[i][col])),
                        )
                        .expect("validated matrix")
                    })
                    .collect();
                let composed = sys.poly_substituted_expr(j, &images)?;
                let expr = sys.poly_expr(j).sub(&composed)?;
                sys.add_identity(&format!("symmetry {k}"), &expr)?;
            }
            Prior::StarConnected => {
                let s = sys.add_sos(&format!("star multiplier {k}"), n, 2 * ((d - 2) / 2))?;
                let slack = sys.add_sos(&format!("star remainder {k}"), n, 2 * (d / 2))?;
                let expr = sys
                    .poly_euler_expr(j)
                    .sub(&sys.gram_expr(s).mul_poly(&g_ball)?)?
                    .sub(&sys.gram_expr(slack))?;
                sys.add_identity(&format!("star-shapedness {k}"), &expr)?;
            }
            Prior::Convex => {
                let hess = sys.poly_hessian_exprs(j);
                sys.add_sos_matrix_constraint(&format!("convexity {k}"), &hess, (d - 2) / 2)?;
            }
        }
    }

    let problem = sys.compile();
    let solution = sdp::solve(&problem, options)?;
    let certificate = verify_certificate(&sys, &solution, &VerifyTolerances::default(), None)?;
    if !certificate.verified {
        return Err(ShapeError::Unverified {
            status: certificate.solver_status,
            residual: certificate.identity_residual,
            min_eig: certificate.min_gram_eig,
        });
    }

    let polynomial = sys.poly_value(j, &solution)?;
    for (index, x) in cloud.points().iter().enumerate() {
        let value = polynomial.evaluate(x)?;
        if !(value <= -config.margin) {
            return Err(ShapeError::MarginViolated {
                index,
                value,
                bound: -config.margin,
            });
        }
    }

    Ok(ShapeModel {
        polynomial,
        radius: inscribed_radius(&config.region),
        config: config.clone(),
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_cloud(count: usize, radius: f64) -> PointCloud {
        let points = (0..count)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * (k as f64) / (count as f64);
                vec![radius * theta.cos(), radius * theta.sin()]
            })
            .collect();
        PointCloud::new(points).unwrap()
    }

    fn mean_over_box(p: &Polynomial, region: &BoxRegion) -> f64 {
        p.integrate_box(region).unwrap() / region.volume()
    }

    #[test]
    fn learns_a_ring_with_margins_and_verified_certificate() {
        let cloud = ring_cloud(16, 1.0);
        let region = BoxRegion::centered_cube(2, 1.5).unwrap();
        let config = LearnConfig::with_defaults(4, region.clone());
        let model = learn_shape(&cloud, &config).unwrap();

        assert!(model.certificate.verified);
        for x in cloud.points() {
            assert!(model.polynomial.evaluate(x).unwrap() <= -config.margin);
        }
        assert!((model.radius - 1.5).abs() < 1e-12);
        assert!(
            mean_over_box(&model.polynomial, &region) > 0.2,
            "objective should push J well above the trivial constant fit"
        );
    }

    #[test]
    fn symmetry_prior_kills_odd_coefficients() {
        let mut points = ring_cloud(12, 1.0).points().to_vec();
        points.push(vec![0.9, 0.1]);
        let cloud = PointCloud::new(points).unwrap();
        let mut config = LearnConfig::with_defaults(4, BoxRegion::centered_cube(2, 1.5).unwrap());
        config.priors.push(Prior::Symmetry {
            matrix: vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
        });
        let model = learn_shape(&cloud, &config).unwrap();
        for (m, coef) in model.polynomial.terms() {
            if m.total_degree() % 2 == 1 {
                assert!(
                    coef.abs() <= 1e-8,
                    "odd-degree coefficient {m} = {coef} should vanish"
                );
            }
        }
    }

    #[test]
    fn star_prior_pulls_the_origin_into_the_shape() {
        let cloud = ring_cloud(16, 1.0);
        let mut config = LearnConfig::with_defaults(4, BoxRegion::centered_cube(2, 1.5).unwrap());
        config.priors.push(Prior::StarConnected);
        let model = learn_shape(&cloud, &config).unwrap();
        let at_origin = model.polynomial.evaluate(&[0.0, 0.0]).unwrap();
        assert!(
            at_origin <= -config.margin,
            "J(0) = {at_origin} should be inside: rays from the origin may not exit and re-enter"
        );
    }

    #[test]
    fn convex_prior_bridges_two_clusters() {
        let points = vec![
            vec![0.8, 0.05],
            vec![0.8, -0.05],
            vec![0.75, 0.0],
            vec![-0.8, 0.05],
            vec![-0.8, -0.05],
            vec![-0.75, 0.0],
        ];
        let cloud = PointCloud::new(points).unwrap();
        let mut config = LearnConfig::with_defaults(4, BoxRegion::centered_cube(2, 1.2).unwrap());
        config.priors.push(Prior::Convex);
        let model = learn_shape(&cloud, &config).unwrap();
        let mid = model.polynomial.evaluate(&[0.0, 0.0]).unwrap();
        assert!(
            mid <= 1e-9,
            "convexity must keep the midpoint inside, got J(0) = {mid}"
        );
    }

    #[test]
    fn config_validation_catches_bad_inputs() {
        let cloud = ring_cloud(8, 1.0);
        let region = BoxRegion::centered_cube(2, 1.5).unwrap();

        let odd = LearnConfig {
            degree: 3,
            ..LearnConfig::with_defaults(4, region.clone())
        };
        assert!(matches!(
            learn_shape(&cloud, &odd),
            Err(ShapeError::BadDegree(3))
        ));

        let small_ball = LearnConfig {
            radius: 0.5,
            ..LearnConfig::with_defaults(4, region.clone())
        };
        assert!(matches!(
            learn_shape(&cloud, &small_ball),
            Err(ShapeError::BallTooSmall { .. })
        ));

        let tight_box = LearnConfig::with_defaults(4, BoxRegion::centered_cube(2, 0.9).unwrap());
        assert!(matches!(
            learn_shape(&cloud, &tight_box),
            Err(ShapeError::PointOutsideBox { .. })
        ));
    }

    #[test]
    fn shape_json_round_trip() {
        let cloud = ring_cloud(10, 1.0);
        let config = LearnConfig::with_defaults(4, BoxRegion::centered_cube(2, 1.5).unwrap());
        let model = learn_shape(&cloud, &config).unwrap();
        let text = model.to_json();
        let back = ShapeModel::from_json(&text).unwrap();
        assert!(model
            .polynomial
            .sub(&back.polynomial)
            .unwrap()
            .max_abs_coefficient()
            .abs()
            < 1e-15);
        assert_eq!(model.radius, back.radius);
        assert_eq!(back.certificate.verified, true);
        assert!(text.contains("\"dim\""));
        assert!(text.contains("\"radius\""));
    }

    #[test]
    fn starved_iteration_budget_is_reported_as_unverified() {
        let cloud = ring_cloud(8, 1.0);
        let config = LearnConfig::with_defaults(4, BoxRegion::centered_cube(2, 1.5).unwrap());
        let options = SolveOptions {
            max_iters: 1,
            ..SolveOptions::default()
        };
        match learn_shape_with_options(&cloud, &config, &options) {
            Err(ShapeError::Unverified { .. }) | Err(ShapeError::MarginViolated { .. }) => {}
            other => panic!("expected rejection, got {other:?}"),
        }
    }
}
