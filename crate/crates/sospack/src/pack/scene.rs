use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::poly::{AffineTransform, Polynomial};

use super::PackError;

/// One placed object `{x : p(T^{-1}x) <= 0, F(T^{-1}x) <= 0}`. The stored
/// transform is the inverse placement map, so composing `p` with it directly
/// yields the object in world coordinates. `F` bounds the computational
/// domain; when absent the object's own sublevel set must be bounded for the
/// counterexample oracle to work unaided.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneObject {
    pub label: String,
    pub p: Polynomial,
    #[serde(rename = "F")]
    pub f: Option<Polynomial>,
    pub transform: AffineTransform,
}

/// The container `{x : c(x) < 0, F0(x) < 0}`; `F0` is an optional outer
/// domain whose absence skips the domain programs entirely.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Container {
    pub c: Polynomial,
    #[serde(rename = "F0")]
    pub f0: Option<Polynomial>,
}

/// Fixture annotation recording whether a stored scene is a known-good or
/// known-bad configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTruth {
    Correct,
    Incorrect,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scene {
    pub dim: usize,
    pub container: Container,
    pub objects: Vec<SceneObject>,
    pub degree: u32,
    pub gamma_cap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

impl Scene {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<Scene, PackError> {
        let scene: Scene = serde_json::from_str(text).map_err(|e| PackError::Json(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<(), PackError> {
        let n = self.dim;
        if n == 0 {
            return Err(PackError::Invalid("dimension must be at least 1".into()));
        }
        if self.objects.is_empty() {
            return Err(PackError::Invalid("scene has no objects".into()));
        }
        if !(self.gamma_cap.is_finite() && self.gamma_cap > 0.0) {
            return Err(PackError::Invalid(format!(
                "gamma_cap must be positive and finite, got {}",
                self.gamma_cap
            )));
        }
        if self.degree == 0 {
            return Err(PackError::Invalid("degree must be positive".into()));
        }

        let mut max_degree = self.container.c.degree();
        let check_dim = |what: &str, got: usize| -> Result<(), PackError> {
            if got != n {
                return Err(PackError::Invalid(format!(
                    "{what} has dimension {got}, scene is {n}-dimensional"
                )));
            }
            Ok(())
        };
        check_dim("container polynomial c", self.container.c.dim())?;
        if let Some(f0) = &self.container.f0 {
            check_dim("container domain F0", f0.dim())?;
            max_degree = max_degree.max(f0.degree());
        }
        for obj in &self.objects {
            check_dim(&format!("object '{}' polynomial p", obj.label), obj.p.dim())?;
            check_dim(&format!("object '{}' transform", obj.label), obj.transform.dim())?;
            max_degree = max_degree.max(obj.p.degree());
            if let Some(f) = &obj.f {
                check_dim(&format!("object '{}' domain F", obj.label), f.dim())?;
                max_degree = max_degree.max(f.degree());
                if !leading_form_positive(f) {
                    return Err(PackError::Invalid(format!(
                        "object '{}' domain F does not have a positive definite leading \
                         form, so its sublevel set is unbounded",
                        obj.label
                    )));
                }
            }
        }
        if self.degree < max_degree {
            return Err(PackError::Invalid(format!(
                "certificate degree {} is below the maximum polynomial degree {max_degree}",
                self.degree
            )));
        }
        Ok(())
    }
}

/// Checks that the top-degree form of `p` is strictly positive on sampled
/// unit directions (coordinate axes plus seeded random ones), which makes
/// `{p <= 0}` bounded.
pub(super) fn leading_form_positive(p: &Polynomial) -> bool {
    let n = p.dim();
    let d = p.degree();
    if d == 0 {
        return p.evaluate(&vec![0.0; n]).map(|v| v > 0.0).unwrap_or(false);
    }
    if d % 2 == 1 {
        return false;
    }
    let leading = Polynomial::from_terms(
        n,
        p.terms()
            .filter(|(m, _)| m.total_degree() == d)
            .map(|(m, c)| (m.clone(), c)),
    )
    .expect("same dimension");

    let mut directions: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        directions.push(e.clone());
        e[i] = -1.0;
        directions.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x1ead);
    while directions.len() < 128 * n {
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            directions.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    directions.iter().all(|u| {
        leading
            .evaluate(u)
            .map(|v| v > 1e-12)
            .unwrap_or(false)
    })
}

#[cfg(test)]
pub(super) mod testutil {
    use super::*;

    pub fn ball(dim: usize, center: &[f64], radius: f64) -> Polynomial {
        let mut acc = Polynomial::constant(dim, -radius * radius);
        for (i, &c) in center.iter().enumerate() {
            let shifted = Polynomial::variable(dim, i)
                .add(&Polynomial::constant(dim, -c))
                .unwrap();
            acc = acc.add(&shifted.mul(&shifted).unwrap()).unwrap();
        }
        acc
    }

    pub fn disk_scene(centers: &[[f64; 2]], radius: f64, degree: u32) -> Scene {
        let objects = centers
            .iter()
            .enumerate()
            .map(|(k, c)| SceneObject {
                label: format!("disk{k}"),
                p: ball(2, c, radius),
                f: None,
                transform: AffineTransform::identity(2),
            })
            .collect();
        Scene {
            dim: 2,
            container: Container {
                c: ball(2, &[0.0, 0.0], 1.0),
                f0: None,
            },
            objects,
            degree,
            gamma_cap: 1.0,
            ground_truth: None,
        }
    }

    pub fn translation_transform(shift: &[f64]) -> AffineTransform {
        AffineTransform::translation(shift)
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::{ball, disk_scene};
    use super::*;

    #[test]
    fn json_round_trip_keeps_schema_keys() {
        let scene = disk_scene(&[[0.5, 0.0], [-0.5, 0.0]], 0.2, 4);
        let text = scene.to_json();
        assert!(text.contains("\"dim\""));
        assert!(text.contains("\"container\""));
        assert!(text.contains("\"F0\": null"));
        assert!(text.contains("\"gamma_cap\": 1.0"));
        assert!(!text.contains("ground_truth"));
        let back = Scene::from_json(&text).unwrap();
        assert_eq!(back.objects.len(), 2);
        assert_eq!(back.degree, 4);
    }

    #[test]
    fn ground_truth_tag_round_trips_when_present() {
        let mut scene = disk_scene(&[[0.0, 0.0]], 0.2, 4);
        scene.ground_truth = Some(GroundTruth::Incorrect);
        let text = scene.to_json();
        assert!(text.contains("\"ground_truth\": \"incorrect\""));
        let back = Scene::from_json(&text).unwrap();
        assert_eq!(back.ground_truth, Some(GroundTruth::Incorrect));
    }

    #[test]
    fn validation_rejects_low_degree_and_dim_mismatch() {
        let mut scene = disk_scene(&[[0.0, 0.0]], 0.2, 4);
        scene.degree = 1;
        assert!(matches!(scene.validate(), Err(PackError::Invalid(_))));

        let mut scene = disk_scene(&[[0.0, 0.0]], 0.2, 4);
        scene.container.c = ball(3, &[0.0, 0.0, 0.0], 1.0);
        assert!(matches!(scene.validate(), Err(PackError::Invalid(_))));
    }

    #[test]
    fn unbounded_domain_polynomial_rejected() {
        let mut scene = disk_scene(&[[0.0, 0.0]], 0.2, 4);
        scene.objects[0].f = Some(Polynomial::variable(2, 0));
        let err = scene.validate().unwrap_err();
        assert!(matches!(err, PackError::Invalid(msg) if msg.contains("unbounded")));
    }

    #[test]
    fn leading_form_check_accepts_balls_and_rejects_saddles() {
        assert!(leading_form_positive(&ball(2, &[0.3, -0.4], 0.7)));
        let saddle = {
            let x = Polynomial::variable(2, 0);
            let y = Polynomial::variable(2, 1);
            x.mul(&x).unwrap().sub(&y.mul(&y).unwrap()).unwrap()
        };
        assert!(!leading_form_positive(&saddle));
    }
}
