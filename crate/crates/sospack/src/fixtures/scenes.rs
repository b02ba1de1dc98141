use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};

use super::samplers::{blended_surface_cloud, star_cloud};
use super::FixtureError;
use crate::pack::{scan_all_constraints, Container, GroundTruth, OracleBudget, Scene, SceneObject};
use crate::poly::{AffineTransform, BoxRegion, Polynomial};
use crate::shape::{learn_shape, LearnConfig, Prior};

/// Degree-six torus-shaped container, (|x|^2 + 1)^3 - 10 (x1^2 + x2^2)(x3^2 + 1).
/// Its 0-sublevel set is a solid ring around the x3 axis: the hole has radius
/// 0.392 and the outer wall sits at radius 1.193 in the x3 = 0 plane.
pub fn torus_polynomial() -> Polynomial {
    let norm2 = norm_squared(3);
    let one = Polynomial::constant(3, 1.0);
    let shell = norm2.add(&one).expect("dims agree").pow(3);
    let x1 = Polynomial::variable(3, 0);
    let x2 = Polynomial::variable(3, 1);
    let x3 = Polynomial::variable(3, 2);
    let planar = x1.mul(&x1).expect("dims agree").add(&x2.mul(&x2).expect("dims agree")).expect("dims agree");
    let vertical = x3.mul(&x3).expect("dims agree").add(&one).expect("dims agree");
    let bulk = planar.mul(&vertical).expect("dims agree").scale(10.0);
    shell.sub(&bulk).expect("dims agree")
}

/// (x1 - cx)^2 + (x2 - cy)^2 - r^2, the standard disk in the plane.
pub fn disk_polynomial(cx: f64, cy: f64, r: f64) -> Polynomial {
    let x1 = Polynomial::variable(2, 0);
    let x2 = Polynomial::variable(2, 1);
    let dx = x1.sub(&Polynomial::constant(2, cx)).expect("dims agree");
    let dy = x2.sub(&Polynomial::constant(2, cy)).expect("dims agree");
    dx.mul(&dx)
        .expect("dims agree")
        .add(&dy.mul(&dy).expect("dims agree"))
        .expect("dims agree")
        .sub(&Polynomial::constant(2, r * r))
        .expect("dims agree")
}

/// |x|^2 - r^2 in the requested dimension.
pub fn ball_polynomial(dim: usize, r: f64) -> Polynomial {
    norm_squared(dim)
        .sub(&Polynomial::constant(dim, r * r))
        .expect("dims agree")
}

fn norm_squared(dim: usize) -> Polynomial {
    let mut acc = Polynomial::zero(dim);
    for i in 0..dim {
        let xi = Polynomial::variable(dim, i);
        acc = acc.add(&xi.mul(&xi).expect("dims agree")).expect("dims agree");
    }
    acc
}

fn round_coefficient(value: f64) -> f64 {
    format!("{value:.12e}").parse().expect("formatted float parses")
}

/// Rounds every coefficient to 13 significant digits so that serialized
/// fixtures do not depend on last-ulp differences between platforms.
fn round_coefficients(p: &Polynomial) -> Polynomial {
    let terms: Vec<_> = p
        .terms()
        .map(|(m, c)| (m.clone(), round_coefficient(c)))
        .collect();
    Polynomial::from_terms(p.dim(), terms).expect("rounded terms stay valid")
}

fn ground_truth_budget(dim: usize, seed: u64) -> OracleBudget {
    OracleBudget {
        grid_resolution: if dim >= 3 { 48 } else { 400 },
        random_samples: 8192,
        seed,
        search_box: None,
    }
}

fn tag_scene(mut scene: Scene, seed: u64) -> Result<Scene, FixtureError> {
    let witnesses = scan_all_constraints(&scene, &ground_truth_budget(scene.dim, seed))?;
    scene.ground_truth = Some(if witnesses.is_empty() {
        GroundTruth::Correct
    } else {
        GroundTruth::Incorrect
    });
    Ok(scene)
}

fn identity_disk(label: &str, cx: f64, cy: f64, r: f64) -> SceneObject {
    SceneObject {
        label: label.to_string(),
        p: disk_polynomial(cx, cy, r),
        f: None,
        transform: AffineTransform::identity(2),
    }
}

/// Four radius-0.2 disks at (+-0.75, 0) and (0, +-0.75) inside the unit
/// disk.  Every disk clears the container wall and its neighbours by a wide
/// margin, so the scene is tagged correct.
pub fn disks_disjoint_scene(seed: u64) -> Result<Scene, FixtureError> {
    let scene = Scene {
        dim: 2,
        container: Container {
            c: ball_polynomial(2, 1.0),
            f0: None,
        },
        objects: vec![
            identity_disk("disk1", 0.75, 0.0, 0.2),
            identity_disk("disk2", -0.75, 0.0, 0.2),
            identity_disk("disk3", 0.0, 0.75, 0.2),
            identity_disk("disk4", 0.0, -0.75, 0.2),
        ],
        degree: 4,
        gamma_cap: 1.0,
        ground_truth: None,
    };
    tag_scene(scene, seed)
}

/// Two radius-0.2 disks whose centres are 0.3 apart, overlapping in a lens
/// around (0.25, 0).  Tagged incorrect.
pub fn disks_overlapping_scene(seed: u64) -> Result<Scene, FixtureError> {
    let scene = Scene {
        dim: 2,
        container: Container {
            c: ball_polynomial(2, 1.0),
            f0: None,
        },
        objects: vec![
            identity_disk("disk1", 0.1, 0.0, 0.2),
            identity_disk("disk2", 0.4, 0.0, 0.2),
        ],
        degree: 4,
        gamma_cap: 1.0,
        ground_truth: None,
    };
    tag_scene(scene, seed)
}

fn uniform_shrink_about(dim: usize, factor: f64, center: &[f64]) -> AffineTransform {
    let linear = DMatrix::<f64>::identity(dim, dim) * factor;
    let offset = DVector::from_column_slice(center);
    AffineTransform::new(linear, offset, false).expect("scaling map is invertible")
}

const POT_CLOUD_POINTS: usize = 320;
const POT_CENTERS_INITIAL: [[f64; 3]; 4] = [
    [1.0, 1.0, 0.0],
    [-0.4, 0.0, 0.0],
    [-0.5, 0.5, 0.0],
    [-0.5, -0.5, 0.0],
];
const POT_CENTERS_CORRECTED: [[f64; 3]; 4] = [
    [0.5, 0.5, 0.0],
    [0.5, -0.5, 0.0],
    [-0.5, 0.5, 0.0],
    [-0.5, -0.5, 0.0],
];

/// Torus container holding four copies of a learned pot-shaped solid, each
/// shrunk by 3x and restricted to a unit-ball chart.  The initial layout
/// leaves object 1 centred at (1, 1, 0), far outside the torus wall, and
/// crowds objects 2-4; the corrected layout spaces the four copies at
/// (+-0.5, +-0.5, 0) where everything fits.
pub fn torus_pot_scene(corrected: bool, seed: u64) -> Result<Scene, FixtureError> {
    let cloud = blended_surface_cloud(seed, POT_CLOUD_POINTS);
    let config = LearnConfig {
        degree: 6,
        region: BoxRegion::centered_cube(3, 1.2).expect("cube is a valid box"),
        radius: 2.18,
        margin: 1e-4,
        priors: Vec::new(),
    };
    let model = learn_shape(&cloud, &config)?;
    let p = round_coefficients(&model.polynomial);
    let centers = if corrected {
        POT_CENTERS_CORRECTED
    } else {
        POT_CENTERS_INITIAL
    };
    let objects = centers
        .iter()
        .enumerate()
        .map(|(k, center)| SceneObject {
            label: format!("pot{}", k + 1),
            p: p.clone(),
            f: Some(ball_polynomial(3, 1.0)),
            transform: uniform_shrink_about(3, 3.0, center),
        })
        .collect();
    let scene = Scene {
        dim: 3,
        container: Container {
            c: torus_polynomial(),
            f0: None,
        },
        objects,
        degree: 8,
        gamma_cap: 1.0,
        ground_truth: None,
    };
    tag_scene(scene, seed)
}

const STAR_CLOUD_POINTS: usize = 256;
const STAR_DEGREE: u32 = 12;
const STAR_SCENE_DEGREE: u32 = 14;

/// Unit-disk container holding a learned four-pointed star and the four
/// disks from the disjoint fixture.  With the identity placement the star's
/// tips (reaching 0.62 along the axes) stab into the disks at radius 0.55;
/// rotating the star by pi/4 swings the tips into the diagonal gaps.
pub fn star_disks_scene(rotated: bool, seed: u64) -> Result<Scene, FixtureError> {
    let cloud = star_cloud(seed, STAR_CLOUD_POINTS);
    let config = LearnConfig {
        degree: STAR_DEGREE,
        region: BoxRegion::centered_cube(2, 1.1).expect("cube is a valid box"),
        radius: 1.66,
        margin: 1e-4,
        priors: vec![Prior::StarConnected],
    };
    let model = learn_shape(&cloud, &config)?;
    let p = round_coefficients(&model.polynomial);
    let transform = if rotated {
        let c = FRAC_1_SQRT_2;
        let linear = DMatrix::from_row_slice(2, 2, &[c, c, -c, c]);
        AffineTransform::new(linear, DVector::zeros(2), true).expect("rotation is rigid")
    } else {
        AffineTransform::identity(2)
    };
    let star = SceneObject {
        label: "star".to_string(),
        p,
        f: Some(ball_polynomial(2, 0.9)),
        transform,
    };
    let mut objects = vec![star];
    objects.push(identity_disk("disk1", 0.75, 0.0, 0.2));
    objects.push(identity_disk("disk2", -0.75, 0.0, 0.2));
    objects.push(identity_disk("disk3", 0.0, 0.75, 0.2));
    objects.push(identity_disk("disk4", 0.0, -0.75, 0.2));
    let scene = Scene {
        dim: 2,
        container: Container {
            c: ball_polynomial(2, 1.0),
            f0: None,
        },
        objects,
        degree: STAR_SCENE_DEGREE,
        gamma_cap: 1.0,
        ground_truth: None,
    };
    tag_scene(scene, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_polynomial_matches_hand_values() {
        let c = torus_polynomial();
        assert_eq!(c.evaluate(&[1.0, 0.0, 0.0]).unwrap(), -2.0);
        assert_eq!(c.evaluate(&[1.0, 1.0, 0.0]).unwrap(), 7.0);
        assert_eq!(c.evaluate(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!(c.evaluate(&[0.9, 0.0, 0.0]).unwrap() < 0.0);
        assert!(c.evaluate(&[0.35, 0.0, 0.0]).unwrap() > 0.0);
    }

    #[test]
    fn disk_polynomial_matches_hand_values() {
        let p = disk_polynomial(0.75, 0.0, 0.2);
        assert!((p.evaluate(&[0.75, 0.0]).unwrap() + 0.04).abs() < 1e-15);
        assert!((p.evaluate(&[0.95, 0.0]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn coefficient_rounding_is_idempotent() {
        let p = Polynomial::from_terms(
            1,
            vec![
                (crate::poly::Monomial::new(vec![0]), 0.1 + 0.2),
                (crate::poly::Monomial::new(vec![2]), -1.0 / 3.0),
            ],
        )
        .unwrap();
        let once = round_coefficients(&p);
        let twice = round_coefficients(&once);
        assert_eq!(once.to_json(), twice.to_json());
    }

    #[test]
    fn disjoint_disks_tag_correct() {
        let scene = disks_disjoint_scene(0).unwrap();
        assert_eq!(scene.ground_truth, Some(GroundTruth::Correct));
        assert_eq!(scene.degree, 4);
        assert_eq!(scene.objects.len(), 4);
    }

    #[test]
    fn overlapping_disks_tag_incorrect_with_midpoint_witness() {
        let scene = disks_overlapping_scene(0).unwrap();
        assert_eq!(scene.ground_truth, Some(GroundTruth::Incorrect));
        let witnesses =
            scan_all_constraints(&scene, &ground_truth_budget(2, 0)).unwrap();
        let overlap = witnesses
            .iter()
            .find(|w| w.constraint == "non_overlap:0:1")
            .expect("overlap witness");
        let dx = overlap.witness[0] - 0.25;
        let dy = overlap.witness[1];
        assert!((dx * dx + dy * dy).sqrt() < 0.05);
    }

    #[test]
    fn pot_scene_layouts_get_opposite_tags() {
        let bad = torus_pot_scene(false, 0).unwrap();
        assert_eq!(bad.ground_truth, Some(GroundTruth::Incorrect));
        let witnesses = scan_all_constraints(&bad, &ground_truth_budget(3, 0)).unwrap();
        assert!(
            witnesses.iter().any(|w| w.constraint == "containment:0"),
            "object 1 should poke out of the torus, got {:?}",
            witnesses.iter().map(|w| w.constraint.clone()).collect::<Vec<_>>()
        );
        let good = torus_pot_scene(true, 0).unwrap();
        assert_eq!(good.ground_truth, Some(GroundTruth::Correct));
        assert_eq!(good.degree, 8);
    }

    #[test]
    fn star_scene_layouts_get_opposite_tags() {
        let bad = star_disks_scene(false, 0).unwrap();
        assert_eq!(bad.ground_truth, Some(GroundTruth::Incorrect));
        let witnesses = scan_all_constraints(&bad, &ground_truth_budget(2, 0)).unwrap();
        assert!(
            witnesses
                .iter()
                .any(|w| w.constraint.starts_with("non_overlap:0:")),
            "star tips should overlap a disk, got {:?}",
            witnesses.iter().map(|w| w.constraint.clone()).collect::<Vec<_>>()
        );
        let good = star_disks_scene(true, 0).unwrap();
        assert_eq!(good.ground_truth, Some(GroundTruth::Correct));
    }
}
