use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::poly::Polynomial;
use crate::sdp::{self, SolveOptions, SolverStatus};
use crate::sos::{
    multiplier_degree, verify_certificate, Certificate, LinExpr, SosConstraintSystem,
    VerifyTolerances,
};

use super::oracle::{constraint_ids, find_counterexample, ConstraintId, OracleBudget};
use super::report::{Counterexample, PackingReport, PairResult, Verdict};
use super::{PackError, Scene};

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub solve: SolveOptions,
    pub tolerances: VerifyTolerances,
    /// Worker threads for independent constraint programs; 0 uses all cores.
    pub jobs: usize,
    pub oracle: OracleBudget,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            solve: SolveOptions::default(),
            tolerances: VerifyTolerances::default(),
            jobs: 0,
            oracle: OracleBudget::default(),
        }
    }
}

/// Certificate reported when the program could not even be solved; carries
/// saturated diagnostics so it can never pass verification.
fn failed_certificate() -> Certificate {
    Certificate {
        gamma: None,
        verified: false,
        identity_residual: f64::MAX,
        min_gram_eig: -f64::MAX,
        multipliers: BTreeMap::new(),
        solver_status: SolverStatus::NumericalTrouble,
    }
}

/// Builds, solves, and verifies the program
/// `positive_part + sum_k factor_k * s_k = s_main + gamma`, maximizing
/// `gamma <= cap`. A verified positive `gamma` proves `positive_part > 0`
/// wherever every factor is nonpositive.
fn positivity_program(
    positive_part: &Polynomial,
    factors: &[(&str, &Polynomial)],
    main_name: &str,
    degree: u32,
    gamma_cap: f64,
    options: &CertifyOptions,
) -> Result<Certificate, PackError> {
    let n = positive_part.dim();
    let mut sys = SosConstraintSystem::new();
    let gamma = sys.add_scalar("gamma")?;

    let mut expr = LinExpr::known(positive_part.clone());
    for (name, f) in factors {
        let s = sys.add_sos(name, n, multiplier_degree(degree, f.degree()))?;
        let term = sys.gram_expr(s).mul_poly(f)?;
        expr = expr.add(&term)?;
    }
    let main = sys.add_sos(main_name, n, 2 * (degree / 2))?;
    let main_expr = sys.gram_expr(main);
    let gamma_in_space = sys.scalar_expr(gamma, n);
    let expr = expr.sub(&main_expr)?.sub(&gamma_in_space)?;
    sys.add_identity("positivity", &expr)?;

    let gamma_scalar = sys.scalar_expr(gamma, 1);
    sys.add_inequality_le("gamma cap", &gamma_scalar, gamma_cap)?;
    sys.set_objective(&gamma_scalar)?;

    let problem = sys.compile();
    Ok(match sdp::solve(&problem, &options.solve) {
        Ok(solution) => verify_certificate(&sys, &solution, &options.tolerances, Some(gamma))
            .unwrap_or_else(|_| failed_certificate()),
        Err(_) => failed_certificate(),
    })
}

fn object_in_world(
    scene: &Scene,
    i: usize,
) -> Result<(Polynomial, Option<Polynomial>), PackError> {
    let obj = scene.objects.get(i).ok_or(PackError::BadIndex {
        index: i,
        count: scene.objects.len(),
    })?;
    let p = obj.p.compose_affine(&obj.transform)?;
    let f = match &obj.f {
        Some(f) => Some(f.compose_affine(&obj.transform)?),
        None => None,
    };
    Ok((p, f))
}

/// Certifies that the placed object stays strictly inside `{c < 0}`.
pub fn certify_containment(
    scene: &Scene,
    i: usize,
    options: &CertifyOptions,
) -> Result<Certificate, PackError> {
    let (p, f) = object_in_world(scene, i)?;
    let target = scene.container.c.neg();
    let mut factors: Vec<(&str, &Polynomial)> = vec![("s1", &p)];
    if let Some(f) = &f {
        factors.push(("s2", f));
    }
    positivity_program(&target, &factors, "s3", scene.degree, scene.gamma_cap, options)
}

/// Certifies that the placed object stays strictly inside the outer domain
/// `{F0 < 0}`; `Ok(None)` marks the constraint as skipped when the container
/// has no outer domain.
pub fn certify_domain(
    scene: &Scene,
    i: usize,
    options: &CertifyOptions,
) -> Result<Option<Certificate>, PackError> {
    let f0 = match &scene.container.f0 {
        Some(f0) => f0,
        None => return Ok(None),
    };
    let (p, f) = object_in_world(scene, i)?;
    let target = f0.neg();
    let mut factors: Vec<(&str, &Polynomial)> = vec![("s1", &p)];
    if let Some(f) = &f {
        factors.push(("s2", f));
    }
    positivity_program(&target, &factors, "s3", scene.degree, scene.gamma_cap, options)
        .map(Some)
}

/// Certifies that the placed objects `i` and `j` do not intersect, by
/// proving `p_j` composed with its placement stays positive on object `i`'s
/// transformed set. Tries the `(i, j)` template first and falls back to
/// `(j, i)`, since either direction proves disjointness; when neither
/// verifies, the `(i, j)` result is returned.
pub fn certify_non_overlap(
    scene: &Scene,
    i: usize,
    j: usize,
    options: &CertifyOptions,
) -> Result<Certificate, PackError> {
    if i == j {
        return Err(PackError::Invalid(format!(
            "non-overlap constraint needs two distinct objects, got {i} twice"
        )));
    }
    let first = non_overlap_directed(scene, i, j, options)?;
    if first.verified {
        return Ok(first);
    }
    let second = non_overlap_directed(scene, j, i, options)?;
    if second.verified {
        Ok(second)
    } else {
        Ok(first)
    }
}

fn non_overlap_directed(
    scene: &Scene,
    i: usize,
    j: usize,
    options: &CertifyOptions,
) -> Result<Certificate, PackError> {
    let (p_i, f_i) = object_in_world(scene, i)?;
    let (p_j, f_j) = object_in_world(scene, j)?;
    let mut factors: Vec<(&str, &Polynomial)> = vec![("s1", &p_i)];
    if let Some(f) = &f_i {
        factors.push(("s2", f));
    }
    if let Some(f) = &f_j {
        factors.push(("s3", f));
    }
    positivity_program(&p_j, &factors, "s4", scene.degree, scene.gamma_cap, options)
}

/// Runs every required program (all containments, all domain checks when the
/// container has an outer domain, all pairs), searches for witnesses on the
/// ones that failed to verify, and aggregates the three-valued verdict.
/// Constraint programs run in parallel; results are assembled in canonical
/// order so the report is deterministic.
pub fn certify_packing(
    scene: &Scene,
    options: &CertifyOptions,
) -> Result<PackingReport, PackError> {
    scene.validate()?;
    let count = scene.objects.len();
    let pairs: Vec<(usize, usize)> = (0..count)
        .flat_map(|i| ((i + 1)..count).map(move |j| (i, j)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| PackError::Invalid(format!("thread pool: {e}")))?;

    let (containment, domain, non_overlap) =
        pool.install(|| -> Result<_, PackError> {
            let containment: Vec<Certificate> = (0..count)
                .into_par_iter()
                .map(|i| certify_containment(scene, i, options))
                .collect::<Result<_, _>>()?;
            let domain: Option<Vec<Certificate>> = if scene.container.f0.is_some() {
                let ds: Vec<Certificate> = (0..count)
                    .into_par_iter()
                    .map(|i| {
                        certify_domain(scene, i, options)
                            .map(|c| c.expect("outer domain present"))
                    })
                    .collect::<Result<_, _>>()?;
                Some(ds)
            } else {
                None
            };
            let non_overlap: Vec<PairResult> = pairs
                .par_iter()
                .map(|&(i, j)| {
                    certify_non_overlap(scene, i, j, options)
                        .map(|certificate| PairResult { i, j, certificate })
                })
                .collect::<Result<_, _>>()?;
            Ok((containment, domain, non_overlap))
        })?;

    let verified_of = |id: ConstraintId| -> bool {
        match id {
            ConstraintId::Containment(i) => containment[i].verified,
            ConstraintId::Domain(i) => domain.as_ref().map_or(true, |ds| ds[i].verified),
            ConstraintId::NonOverlap(i, j) => non_overlap
                .iter()
                .find(|p| (p.i, p.j) == (i, j))
                .is_some_and(|p| p.certificate.verified),
        }
    };
    let suspects: Vec<ConstraintId> = constraint_ids(scene)
        .into_iter()
        .filter(|&id| !verified_of(id))
        .collect();

    let witnesses: Vec<Option<Vec<f64>>> = pool.install(|| {
        suspects
            .par_iter()
            .map(|&id| match find_counterexample(scene, id, &options.oracle) {
                Ok(w) => w,
                Err(_) => None,
            })
            .collect()
    });
    let counterexamples: Vec<Counterexample> = suspects
        .iter()
        .zip(witnesses)
        .filter_map(|(id, w)| {
            w.map(|witness| Counterexample {
                constraint: id.to_string(),
                witness,
            })
        })
        .collect();

    let mut report = PackingReport {
        verdict: Verdict::Undecided,
        containment,
        domain,
        non_overlap,
        counterexamples,
    };
    report.verdict = if !report.counterexamples.is_empty() {
        Verdict::Refuted
    } else if report.all_verified() {
        Verdict::Certified
    } else {
        Verdict::Undecided
    };
    Ok(report)
}
