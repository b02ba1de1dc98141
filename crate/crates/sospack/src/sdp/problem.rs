use std::fmt::Write as _;

use super::SdpError;

/// One coefficient of a linear functional on a symmetric block. Only the
/// upper triangle is addressed (`row <= col`); an off-diagonal coefficient
/// `c` applies to `Q[row,col] + Q[col,row]` jointly, i.e. it contributes
/// `2 c Q[row,col]` for a symmetric `Q`. Equivalently, the functional is
/// the Frobenius inner product with the symmetric matrix whose `(row,col)`
/// and `(col,row)` entries both equal `c`.
#[derive(Clone, Debug)]
pub struct BlockEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub coef: f64,
}

/// Sparse linear functional over the problem variables.
#[derive(Clone, Debug, Default)]
pub struct LinearFunctional {
    pub block_entries: Vec<BlockEntry>,
    pub free_entries: Vec<(usize, f64)>,
}

impl LinearFunctional {
    pub fn is_empty(&self) -> bool {
        self.block_entries.is_empty() && self.free_entries.is_empty()
    }

    pub fn max_abs_coef(&self) -> f64 {
        let a = self
            .block_entries
            .iter()
            .fold(0.0f64, |m, e| m.max(e.coef.abs()));
        self.free_entries.iter().fold(a, |m, e| m.max(e.1.abs()))
    }

    /// Evaluates the functional at concrete variable values.
    pub fn evaluate(&self, blocks: &[nalgebra::DMatrix<f64>], scalars: &[f64]) -> f64 {
        let mut total = 0.0;
        for e in &self.block_entries {
            let q = &blocks[e.block];
            if e.row == e.col {
                total += e.coef * q[(e.row, e.col)];
            } else {
                total += e.coef * (q[(e.row, e.col)] + q[(e.col, e.row)]);
            }
        }
        for &(idx, coef) in &self.free_entries {
            total += coef * scalars[idx];
        }
        total
    }
}

#[derive(Clone, Debug)]
pub struct Equality {
    pub functional: LinearFunctional,
    pub rhs: f64,
    /// Human-readable tag used by the debug dump (e.g. the monomial whose
    /// coefficient this equality matches).
    pub label: String,
}

/// Equality-constrained SDP over PSD blocks and free scalars.
///
/// maximize    objective(Q_1..Q_B, w)
/// subject to  equalities, Q_b PSD for every block b, w free.
#[derive(Clone, Debug, Default)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub num_free: usize,
    pub equalities: Vec<Equality>,
    pub objective: LinearFunctional,
}

impl SdpProblem {
    pub fn validate(&self) -> Result<(), SdpError> {
        for (b, &size) in self.block_sizes.iter().enumerate() {
            if size == 0 {
                return Err(SdpError::Structural(format!("block {b} has size 0")));
            }
        }
        if self.equalities.is_empty() {
            return Err(SdpError::Structural(
                "problem has no equality constraints".to_string(),
            ));
        }
        let mut free_in_eq = vec![false; self.num_free];
        for (i, eq) in self.equalities.iter().enumerate() {
            self.check_functional(&eq.functional, &format!("equality {i}"))?;
            if !eq.rhs.is_finite() {
                return Err(SdpError::Structural(format!(
                    "equality {i} has non-finite right-hand side"
                )));
            }
            for &(idx, _) in &eq.functional.free_entries {
                free_in_eq[idx] = true;
            }
        }
        self.check_functional(&self.objective, "objective")?;
        for &(idx, coef) in &self.objective.free_entries {
            if coef != 0.0 && !free_in_eq[idx] {
                return Err(SdpError::Structural(format!(
                    "free scalar {idx} appears in the objective but in no equality; \
                     the problem is trivially unbounded"
                )));
            }
        }
        Ok(())
    }

    fn check_functional(&self, f: &LinearFunctional, what: &str) -> Result<(), SdpError> {
        for e in &f.block_entries {
            if e.block >= self.block_sizes.len() {
                return Err(SdpError::Structural(format!(
                    "{what}: block index {} out of range ({} blocks)",
                    e.block,
                    self.block_sizes.len()
                )));
            }
            let size = self.block_sizes[e.block];
            if e.row > e.col || e.col >= size {
                return Err(SdpError::Structural(format!(
                    "{what}: entry ({},{}) invalid for upper triangle of {}x{} block {}",
                    e.row, e.col, size, size, e.block
                )));
            }
            if !e.coef.is_finite() {
                return Err(SdpError::Structural(format!(
                    "{what}: non-finite coefficient"
                )));
            }
        }
        for &(idx, coef) in &f.free_entries {
            if idx >= self.num_free {
                return Err(SdpError::Structural(format!(
                    "{what}: free scalar index {idx} out of range ({} scalars)",
                    self.num_free
                )));
            }
            if !coef.is_finite() {
                return Err(SdpError::Structural(format!(
                    "{what}: non-finite coefficient"
                )));
            }
        }
        Ok(())
    }

    /// Plain-text rendering, one line per equality, for debugging compiled
    /// programs.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "sdp: blocks {:?}, {} free scalars, {} equalities",
            self.block_sizes,
            self.num_free,
            self.equalities.len()
        );
        let render = |f: &LinearFunctional| {
            let mut parts = Vec::new();
            for e in &f.block_entries {
                if e.row == e.col {
                    parts.push(format!("{:+.6}*Q{}[{},{}]", e.coef, e.block, e.row, e.col));
                } else {
                    parts.push(format!(
                        "{:+.6}*(Q{}[{},{}]+sym)",
                        e.coef, e.block, e.row, e.col
                    ));
                }
            }
            for &(idx, coef) in &f.free_entries {
                parts.push(format!("{coef:+.6}*w{idx}"));
            }
            if parts.is_empty() {
                "0".to_string()
            } else {
                parts.join(" ")
            }
        };
        let _ = writeln!(out, "maximize {}", render(&self.objective));
        for (i, eq) in self.equalities.iter().enumerate() {
            let tag = if eq.label.is_empty() {
                String::new()
            } else {
                format!("  # {}", eq.label)
            };
            let _ = writeln!(out, "eq {}: {} = {:+.6}{}", i, render(&eq.functional), eq.rhs, tag);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_indices() {
        let mut p = SdpProblem {
            block_sizes: vec![2],
            num_free: 1,
            equalities: vec![Equality {
                functional: LinearFunctional {
                    block_entries: vec![BlockEntry {
                        block: 0,
                        row: 1,
                        col: 0,
                        coef: 1.0,
                    }],
                    free_entries: vec![],
                },
                rhs: 0.0,
                label: String::new(),
            }],
            objective: LinearFunctional::default(),
        };
        assert!(p.validate().is_err(), "lower-triangle entry rejected");
        p.equalities[0].functional.block_entries[0].row = 0;
        assert!(p.validate().is_ok());
        p.objective.free_entries.push((0, 1.0));
        assert!(
            p.validate().is_err(),
            "objective-only free scalar rejected"
        );
    }

    #[test]
    fn joint_convention_in_evaluate() {
        let f = LinearFunctional {
            block_entries: vec![BlockEntry {
                block: 0,
                row: 0,
                col: 1,
                coef: 1.0,
            }],
            free_entries: vec![],
        };
        let q = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 1.0]);
        assert!((f.evaluate(&[q], &[]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dump_is_one_line_per_equality() {
        let p = SdpProblem {
            block_sizes: vec![1],
            num_free: 1,
            equalities: vec![
                Equality {
                    functional: LinearFunctional {
                        block_entries: vec![BlockEntry {
                            block: 0,
                            row: 0,
                            col: 0,
                            coef: 1.0,
                        }],
                        free_entries: vec![(0, 1.0)],
                    },
                    rhs: 2.0,
                    label: "x^2".to_string(),
                },
            ],
            objective: LinearFunctional {
                block_entries: vec![],
                free_entries: vec![(0, 1.0)],
            },
        };
        let dump = p.dump();
        assert_eq!(dump.lines().count(), 3, "header + objective + 1 equality");
        assert!(dump.contains("# x^2"));
    }
}
