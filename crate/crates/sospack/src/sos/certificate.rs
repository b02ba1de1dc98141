use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::poly::Polynomial;
use crate::sdp::{min_eigenvalue, SdpSolution, SolverStatus};

use super::system::{ScalarId, SosConstraintSystem};
use super::SosError;

/// Acceptance thresholds for a posteriori certificate checks.
#[derive(Clone, Copy, Debug)]
pub struct VerifyTolerances {
    /// Largest allowed absolute violation of any defining equality.
    pub tol_res: f64,
    /// How far below zero a Gram eigenvalue may dip.
    pub tol_psd: f64,
    /// The margin gamma must clear to count as strictly positive.
    pub margin_safety: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances {
            tol_res: 1e-6,
            tol_psd: 1e-7,
            margin_safety: 1e-6,
        }
    }
}

/// The checked outcome of one SOS program. `verified` means the identity
/// residual and Gram eigenvalue bounds passed, and, when the program has a
/// margin variable, that gamma cleared the safety margin; it never relies on
/// the solver's status flag.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub gamma: Option<f64>,
    pub verified: bool,
    pub identity_residual: f64,
    pub min_gram_eig: f64,
    pub multipliers: BTreeMap<String, Polynomial>,
    pub solver_status: SolverStatus,
}

fn saturate(v: f64, fallback: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        fallback
    }
}

/// Re-checks a solver iterate against the system it came from: recomputes
/// every equality residual in plain double precision from the original
/// unscaled rows, takes the most negative eigenvalue over all Gram blocks,
/// reads out gamma when the program has one, and reconstructs the multiplier
/// polynomials. Verification is independent of the solver status; an iterate
/// from a struggling solve that still passes the thresholds verifies.
pub fn verify_certificate(
    system: &SosConstraintSystem,
    solution: &SdpSolution,
    tolerances: &VerifyTolerances,
    gamma: Option<ScalarId>,
) -> Result<Certificate, SosError> {
    let residual = system.residual(solution)?;
    let mut min_eig = f64::INFINITY;
    let mut any_gram = false;
    let mut multipliers = BTreeMap::new();
    for (id, name, slack) in system.gram_vars() {
        any_gram = true;
        let q = system.gram_matrix(id, solution)?;
        let block_min = min_eigenvalue(&q)?;
        if block_min < min_eig || min_eig.is_infinite() {
            min_eig = block_min;
        }
        if !slack {
            multipliers.insert(name.to_string(), system.gram_polynomial(id, solution)?);
        }
    }
    if !any_gram {
        min_eig = 0.0;
    }
    for (id, name) in system.poly_var_ids() {
        multipliers.insert(name.to_string(), system.poly_value(id, solution)?);
    }
    let gamma_value = match gamma {
        Some(id) => Some(system.scalar_value(id, solution)?),
        None => None,
    };

    let residual = saturate(residual, f64::MAX);
    let min_eig = saturate(min_eig, -f64::MAX);
    let gamma_ok = match gamma_value {
        Some(g) => g.is_finite() && g - tolerances.margin_safety > 0.0,
        None => true,
    };
    let verified =
        residual <= tolerances.tol_res && min_eig >= -tolerances.tol_psd && gamma_ok;
    Ok(Certificate {
        gamma: gamma_value.map(|g| saturate(g, f64::MIN)),
        verified,
        identity_residual: residual,
        min_gram_eig: min_eig,
        multipliers,
        solver_status: solution.status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::sdp::{solve, SolveOptions};
    use crate::sos::LinExpr;
    use nalgebra::DMatrix;

    /// The degree-2 certificate template for f strictly positive on
    /// {g >= 0}: f - s1 g - s0 - gamma = 0 with s0, s1 SOS and gamma capped.
    fn putinar_system(cap: f64) -> (SosConstraintSystem, ScalarId) {
        let x = Polynomial::variable(1, 0);
        let f = Polynomial::constant(1, 2.0).sub(&x.mul(&x).unwrap()).unwrap();
        let g = Polynomial::constant(1, 1.0).sub(&x.mul(&x).unwrap()).unwrap();
        let mut sys = SosConstraintSystem::new();
        let s1 = sys.add_sos("s1", 1, 0).unwrap();
        let s0 = sys.add_sos("s0", 1, 2).unwrap();
        let gamma = sys.add_scalar("gamma").unwrap();
        let identity = LinExpr::known(f)
            .sub(&sys.gram_expr(s1).mul_poly(&g).unwrap())
            .unwrap()
            .sub(&sys.gram_expr(s0))
            .unwrap()
            .sub(&sys.scalar_expr(gamma, 1))
            .unwrap();
        sys.add_identity("putinar", &identity).unwrap();
        sys.add_inequality_le("gamma cap", &sys.scalar_expr(gamma, 1), cap)
            .unwrap();
        sys.set_objective(&sys.scalar_expr(gamma, 1)).unwrap();
        (sys, gamma)
    }

    fn exact_putinar_solution(s0_diag_shift: f64, gamma: f64) -> SdpSolution {
        // Blocks in declaration order: s1 (1x1), s0 (2x2), cap slack (1x1).
        let mut s0 = DMatrix::zeros(2, 2);
        s0[(0, 0)] = s0_diag_shift + (1.0 - gamma);
        SdpSolution {
            status: SolverStatus::Optimal,
            block_values: vec![
                DMatrix::from_element(1, 1, 1.0),
                s0,
                DMatrix::from_element(1, 1, 1.0 - gamma),
            ],
            scalar_values: vec![gamma],
            objective_value: gamma,
            iterations: 0,
            residuals: (0.0, 0.0, 0.0),
        }
    }

    #[test]
    fn putinar_end_to_end_reaches_the_cap() {
        let (sys, gamma) = putinar_system(1.0);
        let sol = solve(&sys.compile(), &SolveOptions::default()).unwrap();
        let cert =
            verify_certificate(&sys, &sol, &VerifyTolerances::default(), Some(gamma)).unwrap();
        assert!(cert.verified, "{cert:?}");
        let g = cert.gamma.unwrap();
        assert!((g - 1.0).abs() < 1e-6, "gamma = {g}");
        let s1 = &cert.multipliers["s1"];
        assert!((s1.coefficient(&crate::poly::Monomial::constant(1)) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn hand_built_exact_certificate_verifies() {
        let (sys, gamma) = putinar_system(1.0);
        let sol = exact_putinar_solution(0.0, 1.0);
        let cert =
            verify_certificate(&sys, &sol, &VerifyTolerances::default(), Some(gamma)).unwrap();
        assert!(cert.verified);
        assert_eq!(cert.identity_residual, 0.0);
        assert_eq!(cert.min_gram_eig, 0.0);
        assert_eq!(cert.gamma, Some(1.0));
    }

    #[test]
    fn perturbed_gram_diagonal_fails_psd_check() {
        let (sys, gamma) = putinar_system(1.0);
        let mut sol = exact_putinar_solution(0.0, 1.0);
        sol.block_values[1][(0, 0)] -= 1e-3;
        let cert =
            verify_certificate(&sys, &sol, &VerifyTolerances::default(), Some(gamma)).unwrap();
        assert!(!cert.verified);
        assert!(cert.min_gram_eig < -1e-4);
    }

    #[test]
    fn negative_gamma_never_verifies() {
        // Exact residuals and PSD Grams, but gamma = -0.26: must not verify.
        let (sys, gamma) = putinar_system(1.0);
        let sol = exact_putinar_solution(0.0, -0.26);
        let cert =
            verify_certificate(&sys, &sol, &VerifyTolerances::default(), Some(gamma)).unwrap();
        assert_eq!(cert.identity_residual, 0.0);
        assert!(cert.min_gram_eig >= 0.0);
        assert!(!cert.verified);
    }

    #[test]
    fn certificate_json_shape() {
        let (sys, gamma) = putinar_system(1.0);
        let sol = exact_putinar_solution(0.0, 1.0);
        let cert =
            verify_certificate(&sys, &sol, &VerifyTolerances::default(), Some(gamma)).unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        assert!(text.starts_with("{\"gamma\":1.0,\"verified\":true,"));
        assert!(text.contains("\"identity_residual\":"));
        assert!(text.contains("\"min_gram_eig\":"));
        assert!(text.contains("\"multipliers\":{\"s0\":"));
        assert!(text.contains("\"solver_status\":\"optimal\""));
        let back: Certificate = serde_json::from_str(&text).unwrap();
        assert_eq!(back.gamma, Some(1.0));
        assert!(back.verified);
    }

    #[test]
    fn missing_gamma_serializes_as_null() {
        let (sys, _) = putinar_system(1.0);
        let sol = exact_putinar_solution(0.0, 1.0);
        let cert = verify_certificate(&sys, &sol, &VerifyTolerances::default(), None).unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        assert!(text.starts_with("{\"gamma\":null,"));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let (sys, gamma) = putinar_system(1.0);
        let mut sol = exact_putinar_solution(0.0, 1.0);
        sol.block_values.pop();
        assert!(verify_certificate(&sys, &sol, &VerifyTolerances::default(), Some(gamma)).is_err());
    }
}
