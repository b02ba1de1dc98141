use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use crate::poly::{monomial_basis, Monomial, Polynomial};
use crate::sdp::{BlockEntry, Equality, LinearFunctional, SdpProblem, SdpSolution};

use super::SosError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GramId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolyVarId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalarId(usize);

/// A single scalar unknown. For a Gram block the off-diagonal reference
/// `(row, col)`, row < col, stands for `Q[row][col] + Q[col][row]` jointly,
/// matching the convention of [`BlockEntry`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum VarRef {
    Gram { gram: usize, row: usize, col: usize },
    Poly { var: usize, coef: usize },
    Scalar { var: usize },
}

/// An expression that is affine in the system's unknowns: a known polynomial
/// plus a sum of (unknown scalar) x (known polynomial weight) products.
#[derive(Clone, Debug)]
pub struct LinExpr {
    dim: usize,
    known: Polynomial,
    terms: Vec<(VarRef, Polynomial)>,
}

impl LinExpr {
    pub fn known(p: Polynomial) -> LinExpr {
        LinExpr {
            dim: p.dim(),
            known: p,
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_dim(&self, other: usize) -> Result<(), SosError> {
        if self.dim != other {
            return Err(SosError::Dimension {
                expected: self.dim,
                got: other,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &LinExpr) -> Result<LinExpr, SosError> {
        self.check_dim(other.dim)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(LinExpr {
            dim: self.dim,
            known: self.known.add(&other.known)?,
            terms,
        })
    }

    pub fn sub(&self, other: &LinExpr) -> Result<LinExpr, SosError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LinExpr {
        LinExpr {
            dim: self.dim,
            known: self.known.neg(),
            terms: self
                .terms
                .iter()
                .map(|(v, p)| (*v, p.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> LinExpr {
        LinExpr {
            dim: self.dim,
            known: self.known.scale(factor),
            terms: self
                .terms
                .iter()
                .map(|(v, p)| (*v, p.scale(factor)))
                .collect(),
        }
    }

    pub fn mul_poly(&self, p: &Polynomial) -> Result<LinExpr, SosError> {
        self.check_dim(p.dim())?;
        Ok(LinExpr {
            dim: self.dim,
            known: self.known.mul(p)?,
            terms: self
                .terms
                .iter()
                .map(|(v, w)| Ok((*v, w.mul(p)?)))
                .collect::<Result<_, SosError>>()?,
        })
    }

    /// Product of two expressions. Defined only when at least one side is
    /// free of unknowns; a product of two unknown-bearing expressions would
    /// be quadratic and cannot be compiled.
    pub fn mul(&self, other: &LinExpr) -> Result<LinExpr, SosError> {
        if !self.terms.is_empty() && !other.terms.is_empty() {
            return Err(SosError::NonlinearUnknowns);
        }
        if other.terms.is_empty() {
            self.mul_poly(&other.known)
        } else {
            other.mul_poly(&self.known)
        }
    }

    /// Reinterprets every polynomial in a larger variable space.
    pub fn embed_dim(&self, new_dim: usize) -> Result<LinExpr, SosError> {
        Ok(LinExpr {
            dim: new_dim,
            known: self.known.embed_dim(new_dim)?,
            terms: self
                .terms
                .iter()
                .map(|(v, p)| Ok((*v, p.embed_dim(new_dim)?)))
                .collect::<Result<_, SosError>>()?,
        })
    }

    /// True when the expression is identically zero for every assignment of
    /// the unknowns (known part zero and every merged weight zero).
    pub fn is_zero(&self) -> bool {
        if !self.known.is_zero() {
            return false;
        }
        let mut merged: BTreeMap<VarRef, Polynomial> = BTreeMap::new();
        for (v, p) in &self.terms {
            match merged.get_mut(v) {
                Some(acc) => *acc = acc.add(p).expect("weights share the expression dim"),
                None => {
                    merged.insert(*v, p.clone());
                }
            }
        }
        merged.values().all(|p| p.is_zero())
    }

    fn max_degree(&self) -> u32 {
        let mut d = self.known.degree();
        for (_, p) in &self.terms {
            d = d.max(p.degree());
        }
        d
    }
}

struct GramVar {
    name: String,
    dim: usize,
    basis: Vec<Monomial>,
    slack: bool,
}

struct PolyVarDecl {
    name: String,
    dim: usize,
    basis: Vec<Monomial>,
}

struct RowCon {
    entries: Vec<(VarRef, f64)>,
    rhs: f64,
    label: String,
}

/// Declarations, identities, and inequalities of one SOS feasibility or
/// optimization program, compiled to a block SDP by coefficient matching.
pub struct SosConstraintSystem {
    grams: Vec<GramVar>,
    poly_vars: Vec<PolyVarDecl>,
    scalar_names: Vec<String>,
    names: BTreeSet<String>,
    rows: Vec<RowCon>,
    objective: Vec<(VarRef, f64)>,
}

/// SOS degree for a multiplier that will be multiplied by a known polynomial
/// of degree `factor_degree`, under an overall degree budget `cert_degree`:
/// the largest even value with product degree within the budget.
pub fn multiplier_degree(cert_degree: u32, factor_degree: u32) -> u32 {
    if factor_degree >= cert_degree {
        0
    } else {
        2 * ((cert_degree - factor_degree) / 2)
    }
}

impl SosConstraintSystem {
    pub fn new() -> SosConstraintSystem {
        SosConstraintSystem {
            grams: Vec::new(),
            poly_vars: Vec::new(),
            scalar_names: Vec::new(),
            names: BTreeSet::new(),
            rows: Vec::new(),
            objective: Vec::new(),
        }
    }

    fn claim_name(&mut self, name: &str) -> Result<(), SosError> {
        if !self.names.insert(name.to_string()) {
            return Err(SosError::DuplicateName(name.to_string()));
        }
        Ok(())
    }

    /// Declares an SOS unknown of the given even degree; its Gram matrix is
    /// indexed by `monomial_basis(dim, degree / 2)`.
    pub fn add_sos(&mut self, name: &str, dim: usize, degree: u32) -> Result<GramId, SosError> {
        if degree % 2 != 0 {
            return Err(SosError::OddDegree(degree));
        }
        self.add_sos_with_basis(name, dim, monomial_basis(dim, degree / 2), false)
    }

    fn add_sos_with_basis(
        &mut self,
        name: &str,
        dim: usize,
        basis: Vec<Monomial>,
        slack: bool,
    ) -> Result<GramId, SosError> {
        self.claim_name(name)?;
        if basis.is_empty() {
            return Err(SosError::Structural(format!("empty basis for {name}")));
        }
        for m in &basis {
            if m.dim() != dim {
                return Err(SosError::Dimension {
                    expected: dim,
                    got: m.dim(),
                });
            }
        }
        self.grams.push(GramVar {
            name: name.to_string(),
            dim,
            basis,
            slack,
        });
        Ok(GramId(self.grams.len() - 1))
    }

    /// Declares a free polynomial unknown with one scalar per coefficient
    /// over `monomial_basis(dim, degree)`.
    pub fn add_poly_var(
        &mut self,
        name: &str,
        dim: usize,
        degree: u32,
    ) -> Result<PolyVarId, SosError> {
        self.claim_name(name)?;
        self.poly_vars.push(PolyVarDecl {
            name: name.to_string(),
            dim,
            basis: monomial_basis(dim, degree),
        });
        Ok(PolyVarId(self.poly_vars.len() - 1))
    }

    pub fn add_scalar(&mut self, name: &str) -> Result<ScalarId, SosError> {
        self.claim_name(name)?;
        self.scalar_names.push(name.to_string());
        Ok(ScalarId(self.scalar_names.len() - 1))
    }

    /// The quadratic form `z(x)' Q z(x)` of an SOS unknown as an expression:
    /// weight `z_i z_j` on the joint off-diagonal unknown, `z_i^2` on the
    /// diagonal.
    pub fn gram_expr(&self, id: GramId) -> LinExpr {
        let g = &self.grams[id.0];
        let mut terms = Vec::with_capacity(g.basis.len() * (g.basis.len() + 1) / 2);
        for i in 0..g.basis.len() {
            for j in i..g.basis.len() {
                let prod = g.basis[i].mul(&g.basis[j]);
                let weight = Polynomial::from_monomial(g.dim, prod, 1.0)
                    .expect("basis monomials share the gram dim");
                terms.push((
                    VarRef::Gram {
                        gram: id.0,
                        row: i,
                        col: j,
                    },
                    weight,
                ));
            }
        }
        LinExpr {
            dim: g.dim,
            known: Polynomial::zero(g.dim),
            terms,
        }
    }

    /// The free polynomial unknown as an expression: weight `x^alpha` on
    /// coefficient alpha.
    pub fn poly_expr(&self, id: PolyVarId) -> LinExpr {
        let v = &self.poly_vars[id.0];
        let terms = v
            .basis
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let weight = Polynomial::from_monomial(v.dim, m.clone(), 1.0)
                    .expect("basis monomials share the poly var dim");
                (VarRef::Poly { var: id.0, coef: k }, weight)
            })
            .collect();
        LinExpr {
            dim: v.dim,
            known: Polynomial::zero(v.dim),
            terms,
        }
    }

    /// The value of a free polynomial unknown at a fixed point, as a scalar
    /// expression (all weights constant, ambient dimension 1).
    pub fn poly_eval_expr(&self, id: PolyVarId, point: &[f64]) -> Result<LinExpr, SosError> {
        let v = &self.poly_vars[id.0];
        if point.len() != v.dim {
            return Err(SosError::Dimension {
                expected: v.dim,
                got: point.len(),
            });
        }
        let terms = v
            .basis
            .iter()
            .enumerate()
            .map(|(k, m)| {
                (
                    VarRef::Poly { var: id.0, coef: k },
                    Polynomial::constant(1, m.evaluate(point)),
                )
            })
            .collect();
        Ok(LinExpr {
            dim: 1,
            known: Polynomial::zero(1),
            terms,
        })
    }

    /// A linear functional of a free polynomial unknown with one fixed weight
    /// per coefficient, as a scalar expression.
    pub fn poly_weighted_expr(&self, id: PolyVarId, weights: &[f64]) -> Result<LinExpr, SosError> {
        let v = &self.poly_vars[id.0];
        if weights.len() != v.basis.len() {
            return Err(SosError::Dimension {
                expected: v.basis.len(),
                got: weights.len(),
            });
        }
        let terms = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                (
                    VarRef::Poly { var: id.0, coef: k },
                    Polynomial::constant(1, w),
                )
            })
            .collect();
        Ok(LinExpr {
            dim: 1,
            known: Polynomial::zero(1),
            terms,
        })
    }

    /// The unknown polynomial after substituting `x_i := images[i]`, still
    /// linear in the unknown coefficients: weight `images^alpha` on
    /// coefficient alpha.
    pub fn poly_substituted_expr(
        &self,
        id: PolyVarId,
        images: &[Polynomial],
    ) -> Result<LinExpr, SosError> {
        let v = &self.poly_vars[id.0];
        if images.len() != v.dim {
            return Err(SosError::Dimension {
                expected: v.dim,
                got: images.len(),
            });
        }
        let out_dim = images
            .first()
            .map(|p| p.dim())
            .ok_or(SosError::Dimension {
                expected: v.dim,
                got: 0,
            })?;
        let terms = v
            .basis
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let weight =
                    Polynomial::from_monomial(v.dim, m.clone(), 1.0)?.substitute(images)?;
                Ok((VarRef::Poly { var: id.0, coef: k }, weight))
            })
            .collect::<Result<Vec<_>, SosError>>()?;
        Ok(LinExpr {
            dim: out_dim,
            known: Polynomial::zero(out_dim),
            terms,
        })
    }

    /// The radial derivative `x . grad` of the unknown polynomial: weight
    /// `|alpha| x^alpha` on coefficient alpha.
    pub fn poly_euler_expr(&self, id: PolyVarId) -> LinExpr {
        let v = &self.poly_vars[id.0];
        let terms = v
            .basis
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_constant())
            .map(|(k, m)| {
                let weight =
                    Polynomial::from_monomial(v.dim, m.clone(), f64::from(m.total_degree()))
                        .expect("basis monomials share the poly var dim");
                (VarRef::Poly { var: id.0, coef: k }, weight)
            })
            .collect();
        LinExpr {
            dim: v.dim,
            known: Polynomial::zero(v.dim),
            terms,
        }
    }

    /// The Hessian of the unknown polynomial as a matrix of expressions,
    /// entry (i, j) carrying weight `d^2 x^alpha / dx_i dx_j` on coefficient
    /// alpha. Symmetric by construction.
    pub fn poly_hessian_exprs(&self, id: PolyVarId) -> Vec<Vec<LinExpr>> {
        let v = &self.poly_vars[id.0];
        let n = v.dim;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let terms = v
                    .basis
                    .iter()
                    .enumerate()
                    .filter_map(|(k, m)| {
                        let w = Polynomial::from_monomial(n, m.clone(), 1.0)
                            .expect("basis monomials share the poly var dim")
                            .partial(i)
                            .partial(j);
                        if w.is_zero() {
                            None
                        } else {
                            Some((VarRef::Poly { var: id.0, coef: k }, w))
                        }
                    })
                    .collect();
                row.push(LinExpr {
                    dim: n,
                    known: Polynomial::zero(n),
                    terms,
                });
            }
            out.push(row);
        }
        out
    }

    /// A free scalar as an expression in the given ambient dimension.
    pub fn scalar_expr(&self, id: ScalarId, dim: usize) -> LinExpr {
        LinExpr {
            dim,
            known: Polynomial::zero(dim),
            terms: vec![(VarRef::Scalar { var: id.0 }, Polynomial::constant(dim, 1.0))],
        }
    }

    /// Constrains `expr = 0` as a polynomial identity: one linear equality
    /// per monomial of degree up to the largest degree present, including
    /// explicit zero rows for absent monomials.
    pub fn add_identity(&mut self, name: &str, expr: &LinExpr) -> Result<(), SosError> {
        let max_deg = expr.max_degree();
        for m in monomial_basis(expr.dim, max_deg) {
            let mut entries: BTreeMap<VarRef, f64> = BTreeMap::new();
            for (v, p) in &expr.terms {
                let c = p.coefficient(&m);
                if c != 0.0 {
                    *entries.entry(*v).or_insert(0.0) += c;
                }
            }
            let entries: Vec<(VarRef, f64)> =
                entries.into_iter().filter(|&(_, c)| c != 0.0).collect();
            self.rows.push(RowCon {
                entries,
                rhs: -expr.known.coefficient(&m),
                label: format!("{name}: {m}"),
            });
        }
        Ok(())
    }

    /// Constrains a scalar expression (all weights constant) to `expr <=
    /// bound` by introducing a fresh 1x1 slack Gram block.
    pub fn add_inequality_le(
        &mut self,
        name: &str,
        expr: &LinExpr,
        bound: f64,
    ) -> Result<(), SosError> {
        let entries = Self::scalar_entries(expr)?;
        let slack = self.add_sos_with_basis(
            &format!("{name} slack"),
            1,
            vec![Monomial::constant(1)],
            true,
        )?;
        let mut entries = entries;
        entries.push((
            VarRef::Gram {
                gram: slack.0,
                row: 0,
                col: 0,
            },
            1.0,
        ));
        let known = expr.known.coefficient(&Monomial::constant(expr.dim));
        self.rows.push(RowCon {
            entries,
            rhs: bound - known,
            label: name.to_string(),
        });
        Ok(())
    }

    /// Constrains `y' H(x) y` to be SOS in `(x, y)` with the bilinear basis
    /// `{x-monomials of degree <= x_degree} x {y_1, ..., y_n}`; entries of
    /// `H` may involve unknowns but must be symmetric as expressions.
    pub fn add_sos_matrix_constraint(
        &mut self,
        name: &str,
        h: &[Vec<LinExpr>],
        x_degree: u32,
    ) -> Result<GramId, SosError> {
        let n = h.len();
        for row in h {
            if row.len() != n {
                return Err(SosError::Structural(format!(
                    "matrix for {name} is not square"
                )));
            }
            for e in row {
                e.check_dim(n)
                    .map_err(|_| SosError::Structural(format!("matrix entry dim != {n}")))?;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if !h[i][j].sub(&h[j][i])?.is_zero() {
                    return Err(SosError::Structural(format!(
                        "matrix for {name} is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let lifted = 2 * n;
        let mut w = LinExpr::known(Polynomial::zero(lifted));
        for i in 0..n {
            for j in 0..n {
                let mut exps = vec![0u32; lifted];
                exps[n + i] += 1;
                exps[n + j] += 1;
                let yiyj = Polynomial::from_monomial(lifted, Monomial::new(exps), 1.0)?;
                w = w.add(&h[i][j].embed_dim(lifted)?.mul_poly(&yiyj)?)?;
            }
        }
        let mut basis = Vec::new();
        for i in 0..n {
            for m in monomial_basis(n, x_degree) {
                let mut exps = m.exponents().to_vec();
                exps.resize(lifted, 0);
                exps[n + i] = 1;
                basis.push(Monomial::new(exps));
            }
        }
        basis.sort();
        let gram = self.add_sos_with_basis(name, lifted, basis, false)?;
        let identity = w.sub(&self.gram_expr(gram))?;
        self.add_identity(name, &identity)?;
        Ok(gram)
    }

    /// Sets the (maximized) objective from a scalar expression; any constant
    /// part is dropped, which cannot change the maximizer.
    pub fn set_objective(&mut self, expr: &LinExpr) -> Result<(), SosError> {
        self.objective = Self::scalar_entries(expr)?;
        Ok(())
    }

    fn scalar_entries(expr: &LinExpr) -> Result<Vec<(VarRef, f64)>, SosError> {
        if expr.known.degree() != 0 {
            return Err(SosError::Structural(
                "expression is not scalar: known part has positive degree".into(),
            ));
        }
        let mut entries: BTreeMap<VarRef, f64> = BTreeMap::new();
        for (v, p) in &expr.terms {
            if p.degree() != 0 {
                return Err(SosError::Structural(
                    "expression is not scalar: a weight has positive degree".into(),
                ));
            }
            let c = p.coefficient(&Monomial::constant(p.dim()));
            if c != 0.0 {
                *entries.entry(*v).or_insert(0.0) += c;
            }
        }
        Ok(entries.into_iter().filter(|&(_, c)| c != 0.0).collect())
    }

    fn free_index(&self, v: &VarRef) -> Option<usize> {
        match v {
            VarRef::Gram { .. } => None,
            VarRef::Poly { var, coef } => {
                let offset: usize = self.poly_vars[..*var].iter().map(|p| p.basis.len()).sum();
                Some(offset + coef)
            }
            VarRef::Scalar { var } => {
                let polys: usize = self.poly_vars.iter().map(|p| p.basis.len()).sum();
                Some(polys + var)
            }
        }
    }

    pub fn num_free(&self) -> usize {
        self.poly_vars.iter().map(|p| p.basis.len()).sum::<usize>() + self.scalar_names.len()
    }

    fn functional(&self, entries: &[(VarRef, f64)]) -> LinearFunctional {
        let mut block_entries = Vec::new();
        let mut free_entries = Vec::new();
        for (v, c) in entries {
            match v {
                VarRef::Gram { gram, row, col } => block_entries.push(BlockEntry {
                    block: *gram,
                    row: *row,
                    col: *col,
                    coef: *c,
                }),
                _ => free_entries.push((self.free_index(v).expect("non-gram ref"), *c)),
            }
        }
        LinearFunctional {
            block_entries,
            free_entries,
        }
    }

    pub fn compile(&self) -> SdpProblem {
        SdpProblem {
            block_sizes: self.grams.iter().map(|g| g.basis.len()).collect(),
            num_free: self.num_free(),
            equalities: self
                .rows
                .iter()
                .map(|r| Equality {
                    functional: self.functional(&r.entries),
                    rhs: r.rhs,
                    label: r.label.clone(),
                })
                .collect(),
            objective: self.functional(&self.objective),
        }
    }

    fn check_shapes(&self, sol: &SdpSolution) -> Result<(), SosError> {
        if sol.block_values.len() != self.grams.len()
            || sol.scalar_values.len() != self.num_free()
        {
            return Err(SosError::Structural(
                "solution shape does not match the compiled system".into(),
            ));
        }
        for (g, m) in self.grams.iter().zip(&sol.block_values) {
            if m.nrows() != g.basis.len() || m.ncols() != g.basis.len() {
                return Err(SosError::Structural(format!(
                    "gram block for {} has wrong shape",
                    g.name
                )));
            }
        }
        Ok(())
    }

    fn value_of(&self, v: &VarRef, sol: &SdpSolution) -> f64 {
        match v {
            VarRef::Gram { gram, row, col } => {
                let q = &sol.block_values[*gram];
                if row == col {
                    q[(*row, *col)]
                } else {
                    q[(*row, *col)] + q[(*col, *row)]
                }
            }
            _ => sol.scalar_values[self.free_index(v).expect("non-gram ref")],
        }
    }

    /// Largest absolute violation of the original (unscaled) equality rows at
    /// the returned solution, evaluated in plain double precision.
    pub fn residual(&self, sol: &SdpSolution) -> Result<f64, SosError> {
        self.check_shapes(sol)?;
        let mut worst = 0.0f64;
        for row in &self.rows {
            let mut v = -row.rhs;
            for (var, c) in &row.entries {
                v += c * self.value_of(var, sol);
            }
            worst = worst.max(v.abs());
        }
        Ok(worst)
    }

    pub fn gram_matrix(&self, id: GramId, sol: &SdpSolution) -> Result<DMatrix<f64>, SosError> {
        self.check_shapes(sol)?;
        let q = &sol.block_values[id.0];
        Ok((q + q.transpose()).scale(0.5))
    }

    /// Reconstructs `z(x)' Q z(x)` from a solved Gram block.
    pub fn gram_polynomial(&self, id: GramId, sol: &SdpSolution) -> Result<Polynomial, SosError> {
        let q = self.gram_matrix(id, sol)?;
        let g = &self.grams[id.0];
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for i in 0..g.basis.len() {
            for j in 0..g.basis.len() {
                let m = g.basis[i].mul(&g.basis[j]);
                *terms.entry(m).or_insert(0.0) += q[(i, j)];
            }
        }
        Ok(Polynomial::from_terms(
            g.dim,
            terms.into_iter().filter(|&(_, c)| c != 0.0),
        )?)
    }

    pub fn poly_value(&self, id: PolyVarId, sol: &SdpSolution) -> Result<Polynomial, SosError> {
        self.check_shapes(sol)?;
        let v = &self.poly_vars[id.0];
        let terms = v.basis.iter().enumerate().filter_map(|(k, m)| {
            let c = sol.scalar_values[self
                .free_index(&VarRef::Poly { var: id.0, coef: k })
                .expect("poly ref")];
            if c == 0.0 {
                None
            } else {
                Some((m.clone(), c))
            }
        });
        Ok(Polynomial::from_terms(v.dim, terms)?)
    }

    pub fn scalar_value(&self, id: ScalarId, sol: &SdpSolution) -> Result<f64, SosError> {
        self.check_shapes(sol)?;
        let polys: usize = self.poly_vars.iter().map(|p| p.basis.len()).sum();
        Ok(sol.scalar_values[polys + id.0])
    }

    pub(super) fn gram_vars(&self) -> impl Iterator<Item = (GramId, &str, bool)> {
        self.grams
            .iter()
            .enumerate()
            .map(|(i, g)| (GramId(i), g.name.as_str(), g.slack))
    }

    pub(super) fn poly_var_ids(&self) -> impl Iterator<Item = (PolyVarId, &str)> {
        self.poly_vars
            .iter()
            .enumerate()
            .map(|(i, p)| (PolyVarId(i), p.name.as_str()))
    }
}

impl Default for SosConstraintSystem {
    fn default() -> Self {
        SosConstraintSystem::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{solve, SolveOptions, SolverStatus};

    #[test]
    fn gram_expansion_univariate_degree_two() {
        // z = (1, x): expansion Q11 + (Q12 + Q21) x + Q22 x^2.
        let mut sys = SosConstraintSystem::new();
        let g = sys.add_sos("s", 1, 2).unwrap();
        let e = sys.gram_expr(g);
        assert_eq!(e.terms.len(), 3);
        let weights: Vec<String> = e.terms.iter().map(|(_, p)| p.to_string()).collect();
        assert_eq!(weights, vec!["1", "1*x1", "1*x1^2"]);
    }

    #[test]
    fn gram_expansion_x_squared_coefficient_at_degree_four() {
        // z = (1, x, x^2): the x^2 coefficient collects Q22 and the joint
        // (Q13 + Q31) unknown.
        let mut sys = SosConstraintSystem::new();
        let g = sys.add_sos("s", 1, 4).unwrap();
        let e = sys.gram_expr(g);
        let x2 = Monomial::new(vec![2]);
        let touching: Vec<VarRef> = e
            .terms
            .iter()
            .filter(|(_, p)| p.coefficient(&x2) != 0.0)
            .map(|(v, _)| *v)
            .collect();
        assert_eq!(
            touching,
            vec![
                VarRef::Gram {
                    gram: 0,
                    row: 0,
                    col: 2
                },
                VarRef::Gram {
                    gram: 0,
                    row: 1,
                    col: 1
                },
            ]
        );
    }

    #[test]
    fn odd_degree_rejected() {
        let mut sys = SosConstraintSystem::new();
        assert!(matches!(
            sys.add_sos("s", 1, 3),
            Err(SosError::OddDegree(3))
        ));
    }

    #[test]
    fn product_of_two_unknowns_rejected() {
        let mut sys = SosConstraintSystem::new();
        let a = sys.add_sos("a", 1, 2).unwrap();
        let b = sys.add_sos("b", 1, 2).unwrap();
        let ea = sys.gram_expr(a);
        let eb = sys.gram_expr(b);
        assert!(matches!(ea.mul(&eb), Err(SosError::NonlinearUnknowns)));
    }

    #[test]
    fn scalar_pin_identity() {
        // gamma = 0.5 via an identity, maximize gamma.
        let mut sys = SosConstraintSystem::new();
        let gamma = sys.add_scalar("gamma").unwrap();
        // A dummy SOS unknown keeps the SDP from being a pure LP edge case.
        let s = sys.add_sos("s", 1, 0).unwrap();
        let pin = sys
            .scalar_expr(gamma, 1)
            .sub(&LinExpr::known(Polynomial::constant(1, 0.5)))
            .unwrap();
        sys.add_identity("pin", &pin).unwrap();
        sys.add_identity(
            "s pin",
            &sys.gram_expr(s)
                .sub(&LinExpr::known(Polynomial::constant(1, 1.0)))
                .unwrap(),
        )
        .unwrap();
        sys.set_objective(&sys.scalar_expr(gamma, 1)).unwrap();
        let sol = solve(&sys.compile(), &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sys.scalar_value(gamma, &sol).unwrap() - 0.5).abs() < 1e-7);
    }

    #[test]
    fn identity_row_count_covers_all_monomials() {
        // sigma (degree 2, n=2) minus a known quadratic: rows for all
        // monomials of degree <= 2, i.e. six of them.
        let mut sys = SosConstraintSystem::new();
        let g = sys.add_sos("sigma", 2, 2).unwrap();
        let x = Polynomial::variable(2, 0);
        let known = x.mul(&x).unwrap().add(&Polynomial::constant(2, 1.0)).unwrap();
        let expr = sys.gram_expr(g).sub(&LinExpr::known(known)).unwrap();
        sys.add_identity("match", &expr).unwrap();
        assert_eq!(sys.rows.len(), 6);
    }

    #[test]
    fn sos_matrix_constant_identity_feasible() {
        let mut sys = SosConstraintSystem::new();
        let two = Polynomial::constant(2, 2.0);
        let zero = Polynomial::zero(2);
        let h = vec![
            vec![LinExpr::known(two.clone()), LinExpr::known(zero.clone())],
            vec![LinExpr::known(zero), LinExpr::known(two)],
        ];
        sys.add_sos_matrix_constraint("H", &h, 0).unwrap();
        let sol = solve(&sys.compile(), &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
    }

    #[test]
    fn sos_matrix_indefinite_infeasible() {
        let mut sys = SosConstraintSystem::new();
        let one = Polynomial::constant(2, 1.0);
        let zero = Polynomial::zero(2);
        let h = vec![
            vec![LinExpr::known(one.clone()), LinExpr::known(zero.clone())],
            vec![LinExpr::known(zero), LinExpr::known(one.neg())],
        ];
        sys.add_sos_matrix_constraint("H", &h, 0).unwrap();
        let sol = solve(&sys.compile(), &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Infeasible);
    }

    #[test]
    fn sos_matrix_quartic_hessian_feasible() {
        // Hessian of x1^4 + x2^4 is diag(12 x1^2, 12 x2^2).
        let x1 = Polynomial::variable(2, 0);
        let x2 = Polynomial::variable(2, 1);
        let h11 = x1.mul(&x1).unwrap().scale(12.0);
        let h22 = x2.mul(&x2).unwrap().scale(12.0);
        let zero = Polynomial::zero(2);
        let mut sys = SosConstraintSystem::new();
        let h = vec![
            vec![LinExpr::known(h11), LinExpr::known(zero.clone())],
            vec![LinExpr::known(zero), LinExpr::known(h22)],
        ];
        sys.add_sos_matrix_constraint("H", &h, 1).unwrap();
        let sol = solve(&sys.compile(), &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
    }

    #[test]
    fn sos_matrix_rejects_asymmetric_input() {
        let mut sys = SosConstraintSystem::new();
        let one = Polynomial::constant(2, 1.0);
        let zero = Polynomial::zero(2);
        let h = vec![
            vec![LinExpr::known(one.clone()), LinExpr::known(one.clone())],
            vec![LinExpr::known(zero), LinExpr::known(one)],
        ];
        assert!(matches!(
            sys.add_sos_matrix_constraint("H", &h, 0),
            Err(SosError::Structural(_))
        ));
    }

    #[test]
    fn inequality_slack_enforces_upper_bound() {
        // maximize gamma subject to gamma <= 0.25.
        let mut sys = SosConstraintSystem::new();
        let gamma = sys.add_scalar("gamma").unwrap();
        sys.add_inequality_le("cap", &sys.scalar_expr(gamma, 1), 0.25)
            .unwrap();
        sys.set_objective(&sys.scalar_expr(gamma, 1)).unwrap();
        let sol = solve(&sys.compile(), &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sys.scalar_value(gamma, &sol).unwrap() - 0.25).abs() < 1e-7);
    }
}
