use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::poly::Polynomial;

use super::{ShapeError, ShapeModel};

const BISECT_ITERS: usize = 80;
const RAY_SAMPLES: usize = 512;
const DIRECTION_SEED: u64 = 0x5ead_0b0d;

/// Points on the zero level set of the model polynomial inside its domain
/// ball. See [`boundary_points`] for the meaning of `resolution` per
/// dimension.
pub fn sample_boundary(model: &ShapeModel, resolution: usize) -> Result<Vec<Vec<f64>>, ShapeError> {
    boundary_points(&model.polynomial, model.radius, resolution)
}

/// Contours `{x : p(x) = 0, |x| <= radius}`.
///
/// In 2D, casts `resolution` evenly spaced rays from the origin and returns
/// the outermost crossing on each, so a circle yields exactly `resolution`
/// points. In 3D, scans the edges of a `resolution`-per-axis grid over the
/// enclosing cube and bisects each sign change. In any other dimension,
/// casts `resolution` seeded random rays. Returns an empty list when the
/// level set misses the ball entirely.
pub fn boundary_points(
    p: &Polynomial,
    radius: f64,
    resolution: usize,
) -> Result<Vec<Vec<f64>>, ShapeError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(ShapeError::BadRadius(radius));
    }
    let n = p.dim();
    match n {
        2 => {
            let mut out = Vec::new();
            for k in 0..resolution {
                let theta = 2.0 * std::f64::consts::PI * (k as f64) / (resolution as f64);
                let dir = vec![theta.cos(), theta.sin()];
                if let Some(point) = outermost_ray_crossing(p, &dir, radius)? {
                    out.push(point);
                }
            }
            Ok(out)
        }
        3 => grid_edge_crossings(p, radius, resolution.max(2)),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
            let mut out = Vec::new();
            for _ in 0..resolution {
                let dir = random_direction(&mut rng, n);
                if let Some(point) = outermost_ray_crossing(p, &dir, radius)? {
                    out.push(point);
                }
            }
            Ok(out)
        }
    }
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Scans `t` from `radius` toward 0 and bisects the outermost sign change of
/// `t -> p(t * dir)`.
fn outermost_ray_crossing(
    p: &Polynomial,
    dir: &[f64],
    radius: f64,
) -> Result<Option<Vec<f64>>, ShapeError> {
    let at = |t: f64| -> Result<f64, ShapeError> {
        let x: Vec<f64> = dir.iter().map(|d| d * t).collect();
        Ok(p.evaluate(&x)?)
    };
    let mut t_hi = radius;
    let mut v_hi = at(t_hi)?;
    for k in 1..=RAY_SAMPLES {
        let t_lo = radius * ((RAY_SAMPLES - k) as f64) / (RAY_SAMPLES as f64);
        let v_lo = at(t_lo)?;
        if v_hi == 0.0 {
            return Ok(Some(dir.iter().map(|d| d * t_hi).collect()));
        }
        if v_hi.signum() != v_lo.signum() {
            let (mut a, mut b, va) = (t_lo, t_hi, v_lo);
            for _ in 0..BISECT_ITERS {
                let mid = 0.5 * (a + b);
                let vm = at(mid)?;
                if vm == 0.0 || (b - a) < 1e-14 * radius {
                    a = mid;
                    break;
                }
                if vm.signum() == va.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let t = 0.5 * (a + b);
            return Ok(Some(dir.iter().map(|d| d * t).collect()));
        }
        t_hi = t_lo;
        v_hi = v_lo;
    }
    if v_hi == 0.0 {
        return Ok(Some(vec![0.0; dir.len()]));
    }
    Ok(None)
}

fn grid_edge_crossings(
    p: &Polynomial,
    radius: f64,
    res: usize,
) -> Result<Vec<Vec<f64>>, ShapeError> {
    let coord = |i: usize| -radius + 2.0 * radius * (i as f64) / ((res - 1) as f64);
    let mut values = vec![0.0f64; res * res * res];
    let idx = |a: usize, b: usize, c: usize| (a * res + b) * res + c;
    for a in 0..res {
        for b in 0..res {
            for c in 0..res {
                values[idx(a, b, c)] = p.evaluate(&[coord(a), coord(b), coord(c)])?;
            }
        }
    }

    let mut out = Vec::new();
    let mut push_crossing = |from: [f64; 3], to: [f64; 3], vf: f64, vt: f64| -> Result<(), ShapeError> {
        if vf == 0.0 {
            let norm = from.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm <= radius {
                out.push(from.to_vec());
            }
            return Ok(());
        }
        if vf.signum() == vt.signum() || vt == 0.0 {
            return Ok(());
        }
        let (mut lo, mut hi) = (from, to);
        let mut v_lo = vf;
        for _ in 0..BISECT_ITERS {
            let mid = [
                0.5 * (lo[0] + hi[0]),
                0.5 * (lo[1] + hi[1]),
                0.5 * (lo[2] + hi[2]),
            ];
            let vm = p.evaluate(&mid)?;
            if vm == 0.0 {
                lo = mid;
                break;
            }
            if vm.signum() == v_lo.signum() {
                lo = mid;
                v_lo = vm;
            } else {
                hi = mid;
            }
        }
        let point = [
            0.5 * (lo[0] + hi[0]),
            0.5 * (lo[1] + hi[1]),
            0.5 * (lo[2] + hi[2]),
        ];
        let norm = point.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= radius {
            out.push(point.to_vec());
        }
        Ok(())
    };

    for a in 0..res {
        for b in 0..res {
            for c in 0..res {
                let here = [coord(a), coord(b), coord(c)];
                let v = values[idx(a, b, c)];
                if a + 1 < res {
                    let next = [coord(a + 1), here[1], here[2]];
                    push_crossing(here, next, v, values[idx(a + 1, b, c)])?;
                }
                if b + 1 < res {
                    let next = [here[0], coord(b + 1), here[2]];
                    push_crossing(here, next, v, values[idx(a, b + 1, c)])?;
                }
                if c + 1 < res {
                    let next = [here[0], here[1], coord(c + 1)];
                    push_crossing(here, next, v, values[idx(a, b, c + 1)])?;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;

    fn unit_circle() -> Polynomial {
        let x = Polynomial::variable(2, 0);
        let y = Polynomial::variable(2, 1);
        x.mul(&x)
            .unwrap()
            .add(&y.mul(&y).unwrap())
            .unwrap()
            .add(&Polynomial::constant(2, -1.0))
            .unwrap()
    }

    #[test]
    fn circle_gives_one_point_per_ray() {
        let points = boundary_points(&unit_circle(), 2.0, 360).unwrap();
        assert_eq!(points.len(), 360);
        for p in &points {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 1.0).abs() < 1e-9);
            assert!(unit_circle().evaluate(p).unwrap().abs() < 1e-3);
        }
    }

    #[test]
    fn empty_level_set_gives_no_points() {
        let p = Polynomial::constant(2, 1.0);
        assert!(boundary_points(&p, 1.0, 64).unwrap().is_empty());

        let shifted = {
            let x = Polynomial::variable(2, 0);
            let off = x.add(&Polynomial::constant(2, -5.0)).unwrap();
            let y = Polynomial::variable(2, 1);
            off.mul(&off)
                .unwrap()
                .add(&y.mul(&y).unwrap())
                .unwrap()
                .add(&Polynomial::constant(2, -0.01))
                .unwrap()
        };
        assert!(boundary_points(&shifted, 2.0, 64).unwrap().is_empty());
    }

    #[test]
    fn sphere_grid_contour_lands_on_the_surface() {
        let p = {
            let x = Polynomial::variable(3, 0);
            let y = Polynomial::variable(3, 1);
            let z = Polynomial::variable(3, 2);
            x.mul(&x)
                .unwrap()
                .add(&y.mul(&y).unwrap())
                .unwrap()
                .add(&z.mul(&z).unwrap())
                .unwrap()
                .add(&Polynomial::constant(3, -1.0))
                .unwrap()
        };
        let points = boundary_points(&p, 1.5, 21).unwrap();
        assert!(points.len() > 100);
        for q in &points {
            let r = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-6, "grid point at radius {r}");
        }
    }

    #[test]
    fn outermost_crossing_wins_on_an_annulus() {
        let annulus = {
            let ring = unit_circle();
            let inner = {
                let x = Polynomial::variable(2, 0);
                let y = Polynomial::variable(2, 1);
                x.mul(&x)
                    .unwrap()
                    .add(&y.mul(&y).unwrap())
                    .unwrap()
                    .add(&Polynomial::constant(2, -0.25))
                    .unwrap()
            };
            ring.mul(&inner).unwrap().neg()
        };
        let points = boundary_points(&annulus, 2.0, 8).unwrap();
        assert_eq!(points.len(), 8);
        for p in &points {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 1.0).abs() < 1e-9, "expected the outer circle, got {r}");
        }
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(matches!(
            boundary_points(&unit_circle(), 0.0, 10),
            Err(ShapeError::BadRadius(_))
        ));
    }

    #[test]
    fn four_dimensional_rays_hit_the_sphere() {
        let p = {
            let mut acc = Polynomial::constant(4, -1.0);
            for i in 0..4 {
                let v = Polynomial::variable(4, i);
                acc = acc.add(&v.mul(&v).unwrap()).unwrap();
            }
            acc
        };
        let points = boundary_points(&p, 2.0, 32).unwrap();
        assert_eq!(points.len(), 32);
        for q in &points {
            let r = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-9);
        }
    }
}
