use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::poly::{BoxRegion, Polynomial};

use super::scene::leading_form_positive;
use super::{Counterexample, PackError, Scene};

/// Search effort for `find_counterexample`: a `grid_resolution`-per-axis
/// lattice, then `random_samples` seeded uniform draws, then compass
/// refinement from the best candidate. `search_box` is the fallback region
/// for objects whose extent cannot be derived from their polynomials.
#[derive(Clone, Debug)]
pub struct OracleBudget {
    pub grid_resolution: usize,
    pub random_samples: usize,
    pub seed: u64,
    pub search_box: Option<BoxRegion>,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            grid_resolution: 64,
            random_samples: 4096,
            seed: 7,
            search_box: None,
        }
    }
}

/// Names one certified condition of a scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintId {
    Containment(usize),
    Domain(usize),
    NonOverlap(usize, usize),
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintId::Containment(i) => write!(f, "containment:{i}"),
            ConstraintId::Domain(i) => write!(f, "domain:{i}"),
            ConstraintId::NonOverlap(i, j) => write!(f, "non_overlap:{i}:{j}"),
        }
    }
}

impl ConstraintId {
    fn seed_offset(&self) -> u64 {
        match *self {
            ConstraintId::Containment(i) => 0x0100_0000 + i as u64,
            ConstraintId::Domain(i) => 0x0200_0000 + i as u64,
            ConstraintId::NonOverlap(i, j) => 0x0300_0000 + ((i as u64) << 20) + j as u64,
        }
    }
}

/// One inequality a witness must satisfy, with its violating direction:
/// `margin(x) = -p(x)` when the witness needs `p <= 0`, `margin(x) = p(x)`
/// when it needs `p >= 0`. A valid witness has every margin >= 1e-9.
struct Condition {
    poly: Polynomial,
    want_nonpositive: bool,
}

impl Condition {
    fn inside(poly: Polynomial) -> Condition {
        Condition {
            poly,
            want_nonpositive: true,
        }
    }

    fn outside(poly: Polynomial) -> Condition {
        Condition {
            poly,
            want_nonpositive: false,
        }
    }

    fn margin(&self, x: &[f64]) -> f64 {
        let v = self.poly.evaluate(x).unwrap_or(f64::NAN);
        let m = if self.want_nonpositive { -v } else { v };
        if m.is_finite() {
            m
        } else {
            f64::NEG_INFINITY
        }
    }
}

const WITNESS_MARGIN: f64 = 1e-9;

fn score(conditions: &[Condition], x: &[f64]) -> f64 {
    conditions
        .iter()
        .map(|c| c.margin(x))
        .fold(f64::INFINITY, f64::min)
}

/// Radius of an origin-centered ball containing `{p <= 0}` in the object's
/// own frame, found by walking sampled rays out to the Cauchy root bound and
/// locating the outermost nonpositive value. Requires a positive definite
/// leading form; returns `None` otherwise.
fn frame_radius(p: &Polynomial) -> Option<f64> {
    if !leading_form_positive(p) {
        return None;
    }
    let n = p.dim();
    let deg = p.degree();
    if deg == 0 {
        return Some(0.0);
    }
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        directions.push(e.clone());
        e[i] = -1.0;
        directions.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0d1f);
    while directions.len() < 256 * n {
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            directions.push(v.into_iter().map(|x| x / norm).collect());
        }
    }

    let mut radius = 0.0f64;
    for u in &directions {
        // Coefficients of t -> p(t u), highest degree last.
        let mut coefs = vec![0.0f64; deg as usize + 1];
        for (m, c) in p.terms() {
            let mut w = c;
            for (i, &e) in m.exponents().iter().enumerate() {
                w *= u[i].powi(e as i32);
            }
            coefs[m.total_degree() as usize] += w;
        }
        let lead = coefs[deg as usize];
        if lead.abs() < 1e-12 {
            continue;
        }
        let cauchy = 1.0
            + coefs[..deg as usize]
                .iter()
                .fold(0.0f64, |m, c| m.max((c / lead).abs()));
        let eval = |t: f64| {
            coefs
                .iter()
                .rev()
                .fold(0.0f64, |acc, &c| acc * t + c)
        };
        let steps = 512;
        let mut outer: Option<f64> = None;
        for k in (0..=steps).rev() {
            let t = cauchy * (k as f64) / (steps as f64);
            if eval(t) <= 0.0 {
                outer = Some(t);
                break;
            }
        }
        if let Some(mut t) = outer {
            // The polynomial is positive beyond the Cauchy bound, so refine
            // the sign change just above the hit.
            let mut hi = (t + cauchy / steps as f64).min(cauchy);
            for _ in 0..40 {
                let mid = 0.5 * (t + hi);
                if eval(mid) <= 0.0 {
                    t = mid;
                } else {
                    hi = mid;
                }
            }
            radius = radius.max(hi);
        }
    }
    Some(1.1 * radius + 0.05)
}

/// Axis-aligned box in world coordinates containing object `i`, derived from
/// its domain polynomial (or its shape polynomial when `F` is absent) mapped
/// through the placement transform with interval arithmetic.
fn object_world_box(scene: &Scene, i: usize) -> Result<Option<BoxRegion>, PackError> {
    let obj = &scene.objects[i];
    let rho = match obj.f.as_ref().and_then(frame_radius) {
        Some(r) => r,
        None => match frame_radius(&obj.p) {
            Some(r) => r,
            None => return Ok(None),
        },
    };
    let n = scene.dim;
    let center = obj.transform.apply_inverse(&vec![0.0; n]);
    let inv = obj.transform.inverse_linear();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for r in 0..n {
        let spread: f64 = (0..n).map(|c| inv[(r, c)].abs()).sum::<f64>() * rho;
        let spread = spread.max(1e-9);
        lower.push(center[r] - spread);
        upper.push(center[r] + spread);
    }
    Ok(Some(BoxRegion::new(lower, upper)?))
}

fn composed(scene: &Scene, i: usize) -> Result<(Polynomial, Option<Polynomial>), PackError> {
    let obj = &scene.objects[i];
    let p = obj.p.compose_affine(&obj.transform)?;
    let f = match &obj.f {
        Some(f) => Some(f.compose_affine(&obj.transform)?),
        None => None,
    };
    Ok((p, f))
}

fn search_region(
    scene: &Scene,
    id: ConstraintId,
    budget: &OracleBudget,
) -> Result<Option<BoxRegion>, PackError> {
    let fallback = |derived: Option<BoxRegion>| -> Result<BoxRegion, PackError> {
        derived
            .or_else(|| budget.search_box.clone())
            .ok_or_else(|| PackError::UnboundedSearch {
                constraint: id.to_string(),
            })
    };
    match id {
        ConstraintId::Containment(i) | ConstraintId::Domain(i) => {
            Ok(Some(fallback(object_world_box(scene, i)?)?))
        }
        ConstraintId::NonOverlap(i, j) => {
            let a = fallback(object_world_box(scene, i)?)?;
            let b = fallback(object_world_box(scene, j)?)?;
            Ok(a.intersect(&b))
        }
    }
}

fn conditions(scene: &Scene, id: ConstraintId) -> Result<Vec<Condition>, PackError> {
    let check_index = |i: usize| -> Result<(), PackError> {
        if i >= scene.objects.len() {
            return Err(PackError::BadIndex {
                index: i,
                count: scene.objects.len(),
            });
        }
        Ok(())
    };
    let mut conds = Vec::new();
    match id {
        ConstraintId::Containment(i) => {
            check_index(i)?;
            let (p, f) = composed(scene, i)?;
            conds.push(Condition::inside(p));
            if let Some(f) = f {
                conds.push(Condition::inside(f));
            }
            conds.push(Condition::outside(scene.container.c.clone()));
        }
        ConstraintId::Domain(i) => {
            check_index(i)?;
            let f0 = scene.container.f0.as_ref().ok_or_else(|| {
                PackError::Invalid("domain constraint without container F0".into())
            })?;
            let (p, f) = composed(scene, i)?;
            conds.push(Condition::inside(p));
            if let Some(f) = f {
                conds.push(Condition::inside(f));
            }
            conds.push(Condition::outside(f0.clone()));
        }
        ConstraintId::NonOverlap(i, j) => {
            check_index(i)?;
            check_index(j)?;
            for k in [i, j] {
                let (p, f) = composed(scene, k)?;
                conds.push(Condition::inside(p));
                if let Some(f) = f {
                    conds.push(Condition::inside(f));
                }
            }
        }
    }
    Ok(conds)
}

/// Searches for a point violating the named constraint: inside the relevant
/// object(s) yet outside the container (or outer domain), or inside both
/// objects of a pair. Returns a witness only if every defining inequality
/// holds with margin at least 1e-9 when re-evaluated at the final point.
pub fn find_counterexample(
    scene: &Scene,
    id: ConstraintId,
    budget: &OracleBudget,
) -> Result<Option<Vec<f64>>, PackError> {
    let conds = conditions(scene, id)?;
    let region = match search_region(scene, id, budget)? {
        Some(r) => r,
        None => return Ok(None),
    };
    let n = scene.dim;

    let mut best_x: Option<Vec<f64>> = None;
    let mut best_score = f64::NEG_INFINITY;
    let consider = |x: Vec<f64>, s: f64, best_x: &mut Option<Vec<f64>>, best: &mut f64| {
        if s > *best {
            *best = s;
            *best_x = Some(x);
        }
    };

    // Grid pass, capped so high dimensions cannot explode the lattice.
    let cap_per_axis = (4_000_000f64).powf(1.0 / n as f64).floor() as usize;
    let res = budget.grid_resolution.clamp(2, cap_per_axis.max(2));
    let mut index = vec![0usize; n];
    loop {
        let x: Vec<f64> = (0..n)
            .map(|k| {
                let t = index[k] as f64 / (res - 1) as f64;
                region.lower()[k] + t * (region.upper()[k] - region.lower()[k])
            })
            .collect();
        let s = score(&conds, &x);
        consider(x, s, &mut best_x, &mut best_score);
        let mut k = 0;
        loop {
            if k == n {
                break;
            }
            index[k] += 1;
            if index[k] < res {
                break;
            }
            index[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ id.seed_offset());
    for _ in 0..budget.random_samples {
        let x: Vec<f64> = (0..n)
            .map(|k| {
                let t = rng.random::<f64>();
                region.lower()[k] + t * (region.upper()[k] - region.lower()[k])
            })
            .collect();
        let s = score(&conds, &x);
        consider(x, s, &mut best_x, &mut best_score);
    }

    let mut current = match best_x {
        Some(x) => x,
        None => return Ok(None),
    };
    let widths = region.widths();
    let mut step = widths.iter().fold(0.0f64, |m, w| m.max(*w)) * 0.25;
    let min_step = 1e-14 * step.max(1.0);
    while step > min_step {
        let mut improved = false;
        for k in 0..n {
            for sign in [-1.0, 1.0] {
                let mut probe = current.clone();
                probe[k] = (probe[k] + sign * step)
                    .clamp(region.lower()[k], region.upper()[k]);
                let s = score(&conds, &probe);
                if s > best_score {
                    best_score = s;
                    current = probe;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    let final_score = score(&conds, &current);
    if final_score >= WITNESS_MARGIN {
        Ok(Some(current))
    } else {
        Ok(None)
    }
}

/// All constraint ids of a scene in canonical report order: containment per
/// object, domain per object when the container has an outer domain, then
/// pairs ordered lexicographically.
pub(super) fn constraint_ids(scene: &Scene) -> Vec<ConstraintId> {
    let n = scene.objects.len();
    let mut ids: Vec<ConstraintId> = (0..n).map(ConstraintId::Containment).collect();
    if scene.container.f0.is_some() {
        ids.extend((0..n).map(ConstraintId::Domain));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            ids.push(ConstraintId::NonOverlap(i, j));
        }
    }
    ids
}

/// Runs the witness search on every constraint regardless of certificates;
/// unbounded regions are skipped rather than reported.
pub fn scan_all_constraints(
    scene: &Scene,
    budget: &OracleBudget,
) -> Result<Vec<Counterexample>, PackError> {
    scene.validate()?;
    let mut out = Vec::new();
    for id in constraint_ids(scene) {
        match find_counterexample(scene, id, budget) {
            Ok(Some(witness)) => out.push(Counterexample {
                constraint: id.to_string(),
                witness,
            }),
            Ok(None) | Err(PackError::UnboundedSearch { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
