use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::shape::PointCloud;

fn unit_jitter(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>() - 0.5
}

/// Points on the unit circle with radial noise of at most 1e-3, so every
/// sample satisfies 0.999 <= |x| <= 1.001.
pub fn circle_cloud(seed: u64, n: usize) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let theta = 2.0 * PI * (i as f64) / (n as f64);
        let r = 1.0 + 2e-3 * unit_jitter(&mut rng);
        points.push(vec![r * theta.cos(), r * theta.sin()]);
    }
    PointCloud::new(points).expect("circle sampler produces a valid cloud")
}

/// Area-uniform samples of the annulus 0.55 <= |x| <= 1.
pub fn annulus_cloud(seed: u64, n: usize) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r_in, r_out) = (0.55_f64, 1.0_f64);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let r = (r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt();
        let theta = 2.0 * PI * rng.random::<f64>();
        points.push(vec![r * theta.cos(), r * theta.sin()]);
    }
    PointCloud::new(points).expect("annulus sampler produces a valid cloud")
}

/// Fibonacci lattice on the unit sphere with radial noise of at most 1e-3.
pub fn sphere_cloud(seed: u64, n: usize) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let golden = PI * (3.0 - 5.0_f64.sqrt());
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let z = 1.0 - 2.0 * ((i as f64) + 0.5) / (n as f64);
        let rho = (1.0 - z * z).sqrt();
        let theta = golden * (i as f64);
        let r = 1.0 + 2e-3 * unit_jitter(&mut rng);
        points.push(vec![r * rho * theta.cos(), r * rho * theta.sin(), r * z]);
    }
    PointCloud::new(points).expect("sphere sampler produces a valid cloud")
}

/// Outline of a four-pointed star, r(t) = 0.45 + 0.17 cos(4t).  The curve is
/// star-shaped about the origin (r > 0 everywhere) but far from convex: tips
/// reach 0.62 along the axes while the waist pinches to 0.28 on the
/// diagonals.
pub fn star_cloud(seed: u64, n: usize) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 2.0 * PI / (n as f64);
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let theta = step * (i as f64) + 0.5 * step * unit_jitter(&mut rng);
        let r = 0.45 + 0.17 * (4.0 * theta).cos();
        points.push(vec![r * theta.cos(), r * theta.sin()]);
    }
    PointCloud::new(points).expect("star sampler produces a valid cloud")
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn sphere_direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [gaussian(rng), gaussian(rng), gaussian(rng)];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-6 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

/// Surface samples of a pot-like blend of four primitives: an ellipsoidal
/// body, a tubular spout rising along +x1, a handle arc on the -x1 side, and
/// a knob on top.  The shape is non-convex, has a through-hole under the
/// handle, and fits inside the unit ball with room to spare (max extent about
/// 0.85 along x1).
pub fn blended_surface_cloud(seed: u64, n: usize) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_body = (n * 55) / 100;
    let n_spout = (n * 18) / 100;
    let n_handle = (n * 17) / 100;
    let n_knob = n - n_body - n_spout - n_handle;
    let mut points = Vec::with_capacity(n);

    for _ in 0..n_body {
        let d = sphere_direction(&mut rng);
        points.push(vec![0.68 * d[0], 0.48 * d[1], 0.40 * d[2]]);
    }

    let axis = {
        let raw = [0.25_f64, 0.0, 0.16];
        let norm = (raw[0] * raw[0] + raw[2] * raw[2]).sqrt();
        [raw[0] / norm, 0.0, raw[2] / norm]
    };
    let e1 = [0.0, -1.0, 0.0];
    let e2 = [axis[2], 0.0, -axis[0]];
    for _ in 0..n_spout {
        let t: f64 = rng.random();
        let psi = 2.0 * PI * rng.random::<f64>();
        let center = [0.55 + 0.25 * t, 0.0, 0.10 + 0.16 * t];
        let (c, s) = (psi.cos(), psi.sin());
        points.push(vec![
            center[0] + 0.05 * (c * e1[0] + s * e2[0]),
            center[1] + 0.05 * (c * e1[1] + s * e2[1]),
            center[2] + 0.05 * (c * e1[2] + s * e2[2]),
        ]);
    }

    for _ in 0..n_handle {
        let alpha = 1.9 * (2.0 * rng.random::<f64>() - 1.0);
        let psi = 2.0 * PI * rng.random::<f64>();
        let radial = 0.20 + 0.04 * psi.cos();
        points.push(vec![
            -0.58 - radial * alpha.cos(),
            0.04 * psi.sin(),
            0.08 + radial * alpha.sin(),
        ]);
    }

    for _ in 0..n_knob {
        let d = sphere_direction(&mut rng);
        points.push(vec![0.06 * d[0], 0.06 * d[1], 0.50 + 0.06 * d[2]]);
    }

    PointCloud::new(points).expect("blended surface sampler produces a valid cloud")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_cloud_radii_stay_in_band() {
        let cloud = circle_cloud(0, 200);
        assert_eq!(cloud.len(), 200);
        for p in cloud.points() {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((0.999..=1.001).contains(&r), "|x| = {r}");
        }
    }

    #[test]
    fn annulus_cloud_stays_in_band() {
        let cloud = annulus_cloud(3, 300);
        for p in cloud.points() {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((0.55..=1.0 + 1e-12).contains(&r), "|x| = {r}");
        }
    }

    #[test]
    fn sphere_cloud_is_three_dimensional_unit_shell() {
        let cloud = sphere_cloud(1, 400);
        assert_eq!(cloud.dim(), 3);
        for p in cloud.points() {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!((0.999..=1.001).contains(&r));
        }
    }

    #[test]
    fn star_cloud_has_tips_and_waist() {
        let cloud = star_cloud(0, 512);
        let mut r_min = f64::INFINITY;
        let mut r_max = 0.0_f64;
        for p in cloud.points() {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            r_min = r_min.min(r);
            r_max = r_max.max(r);
        }
        assert!(r_max > 0.60 && r_max <= 0.62 + 1e-9);
        assert!(r_min < 0.30 && r_min >= 0.28 - 1e-9);
    }

    #[test]
    fn blended_surface_fits_in_unit_ball() {
        let cloud = blended_surface_cloud(0, 2048);
        assert_eq!(cloud.dim(), 3);
        let mut max_norm = 0.0_f64;
        let mut max_x1 = f64::NEG_INFINITY;
        let mut min_x1 = f64::INFINITY;
        for p in cloud.points() {
            max_norm = max_norm.max((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt());
            max_x1 = max_x1.max(p[0]);
            min_x1 = min_x1.min(p[0]);
        }
        assert!(max_norm < 0.95, "max |x| = {max_norm}");
        assert!(max_x1 > 0.78, "spout should extend past the body");
        assert!(min_x1 < -0.78, "handle should extend past the body");
    }

    #[test]
    fn samplers_are_deterministic() {
        let a = blended_surface_cloud(7, 128);
        let b = blended_surface_cloud(7, 128);
        assert_eq!(a.points(), b.points());
        let c = circle_cloud(7, 64);
        let d = circle_cloud(7, 64);
        assert_eq!(c.points(), d.points());
    }
}
