use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{AffineTransform, BoxRegion, Monomial, PolyError};

/// Sparse multivariate polynomial over `f64`. Terms are kept in a map from
/// exponent vector to coefficient, in graded lexicographic order, and a
/// coefficient that becomes exactly zero is dropped, so equal polynomials
/// have equal representations.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        let mut p = Polynomial::zero(dim);
        p.add_term(Monomial::constant(dim), value);
        p
    }

    /// The coordinate polynomial `x_i` (zero-based `i`).
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut p = Polynomial::zero(dim);
        p.add_term(Monomial::variable(dim, i), 1.0);
        p
    }

    pub fn from_monomial(dim: usize, monomial: Monomial, coef: f64) -> Result<Self, PolyError> {
        if monomial.dim() != dim {
            return Err(PolyError::DimensionMismatch {
                expected: dim,
                got: monomial.dim(),
            });
        }
        let mut p = Polynomial::zero(dim);
        p.add_term(monomial, coef);
        Ok(p)
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        let mut p = Polynomial::zero(dim);
        for (m, c) in terms {
            if m.dim() != dim {
                return Err(PolyError::DimensionMismatch {
                    expected: dim,
                    got: m.dim(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0 by convention.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.total_degree())
            .max()
            .unwrap_or(0)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in graded lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, monomial: &Monomial) -> f64 {
        self.terms.get(monomial).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    fn add_term(&mut self, monomial: Monomial, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let entry = self.terms.entry(monomial);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coef);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + coef;
                if sum == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn check_dim(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.dim != other.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * factor);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.dim);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, exponent: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.dim, 1.0);
        for _ in 0..exponent {
            out = out.mul(self).expect("same dimension");
        }
        out
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.dim {
            return Err(PolyError::PointDimension {
                expected: self.dim,
                got: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, &c)| c * m.evaluate(point))
            .sum())
    }

    pub fn partial(&self, var: usize) -> Polynomial {
        assert!(var < self.dim, "variable index out of range");
        let mut out = Polynomial::zero(self.dim);
        for (m, &c) in &self.terms {
            let e = m.exponent(var);
            if e == 0 {
                continue;
            }
            let mut exps = m.exponents().to_vec();
            exps[var] = e - 1;
            out.add_term(Monomial::new(exps), c * f64::from(e));
        }
        out
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.dim).map(|i| self.partial(i)).collect()
    }

    /// Hessian as a dense matrix of polynomials. Entries `[i][j]` and `[j][i]`
    /// are produced by the same computation, so symmetry holds exactly.
    pub fn hessian(&self) -> Vec<Vec<Polynomial>> {
        let n = self.dim;
        let mut h = vec![vec![Polynomial::zero(n); n]; n];
        for i in 0..n {
            for j in i..n {
                let entry = self.partial(i).partial(j);
                h[j][i] = entry.clone();
                h[i][j] = entry;
            }
        }
        h
    }

    /// Integral over an axis-aligned box, computed termwise:
    /// each monomial integrates to the product of
    /// `(upper_i^(a_i+1) - lower_i^(a_i+1)) / (a_i+1)`.
    pub fn integrate_box(&self, region: &BoxRegion) -> Result<f64, PolyError> {
        if region.dim() != self.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                got: region.dim(),
            });
        }
        let mut total = 0.0;
        for (m, &c) in &self.terms {
            let mut factor = c;
            for i in 0..self.dim {
                let a = m.exponent(i) as i32;
                let hi = region.upper()[i].powi(a + 1);
                let lo = region.lower()[i].powi(a + 1);
                factor *= (hi - lo) / f64::from(a + 1);
            }
            total += factor;
        }
        Ok(total)
    }

    /// Simultaneous substitution `x_i := images[i]`. All images must share one
    /// ambient dimension. Expansion is Horner-style in one variable at a time,
    /// which keeps intermediate polynomials no larger than the final result
    /// times the image degree.
    pub fn substitute(&self, images: &[Polynomial]) -> Result<Polynomial, PolyError> {
        if images.len() != self.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                got: images.len(),
            });
        }
        let out_dim = if let Some(first) = images.first() {
            first.dim()
        } else {
            return Ok(Polynomial::constant(
                0,
                self.coefficient(&Monomial::constant(0)),
            ));
        };
        for img in images {
            if img.dim() != out_dim {
                return Err(PolyError::DimensionMismatch {
                    expected: out_dim,
                    got: img.dim(),
                });
            }
        }
        let term_list: Vec<(Vec<u32>, f64)> = self
            .terms
            .iter()
            .map(|(m, &c)| (m.exponents().to_vec(), c))
            .collect();
        Ok(substitute_rec(&term_list, 0, self.dim, images, out_dim))
    }

    /// Reinterprets the polynomial in a larger variable space; the original
    /// variables keep their indices and the new trailing ones never appear.
    pub fn embed_dim(&self, new_dim: usize) -> Result<Polynomial, PolyError> {
        if new_dim < self.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                got: new_dim,
            });
        }
        if new_dim == self.dim {
            return Ok(self.clone());
        }
        let mut out = Polynomial::zero(new_dim);
        for (m, &c) in &self.terms {
            let mut exps = m.exponents().to_vec();
            exps.resize(new_dim, 0);
            out.add_term(Monomial::new(exps), c);
        }
        Ok(out)
    }

    /// Variable change `q(x) = p(t(x))` where `t` stores the map
    /// `x -> S (x - v)`.
    pub fn compose_affine(&self, t: &AffineTransform) -> Result<Polynomial, PolyError> {
        if t.dim() != self.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                got: t.dim(),
            });
        }
        self.substitute(&t.coordinate_polynomials())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("polynomial serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Polynomial, PolyError> {
        serde_json::from_str(text).map_err(|e| PolyError::Json(e.to_string()))
    }
}

/// Recursive Horner expansion for `substitute`. `terms` holds exponent
/// vectors (only positions `>= var` are still meaningful) and coefficients.
fn substitute_rec(
    terms: &[(Vec<u32>, f64)],
    var: usize,
    dim: usize,
    images: &[Polynomial],
    out_dim: usize,
) -> Polynomial {
    if terms.is_empty() {
        return Polynomial::zero(out_dim);
    }
    if var == dim {
        let c: f64 = terms.iter().map(|(_, c)| c).sum();
        return Polynomial::constant(out_dim, c);
    }
    let max_e = terms.iter().map(|(m, _)| m[var]).max().unwrap_or(0);
    let mut groups: Vec<Vec<(Vec<u32>, f64)>> = vec![Vec::new(); max_e as usize + 1];
    for (m, c) in terms {
        groups[m[var] as usize].push((m.clone(), *c));
    }
    let mut acc = Polynomial::zero(out_dim);
    for e in (0..=max_e).rev() {
        if !acc.is_zero() {
            acc = acc.mul(&images[var]).expect("same dimension");
        }
        let group = &groups[e as usize];
        if !group.is_empty() {
            let part = substitute_rec(group, var + 1, dim, images, out_dim);
            acc = acc.add(&part).expect("same dimension");
        }
    }
    acc
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if first {
                write!(f, "{c}")?;
                first = false;
            } else if *c < 0.0 {
                write!(f, " - {}", -c)?;
            } else {
                write!(f, " + {c}")?;
            }
            if !m.is_constant() {
                write!(f, "*{m}")?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exp: Vec<u32>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    dim: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = PolyRepr {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(m, &c)| TermRepr {
                    exp: m.exponents().to_vec(),
                    coef: c,
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(deserializer)?;
        let mut p = Polynomial::zero(repr.dim);
        for (i, term) in repr.terms.into_iter().enumerate() {
            if term.exp.len() != repr.dim {
                return Err(D::Error::custom(format!(
                    "term {i}: exponent vector has length {}, expected {}",
                    term.exp.len(),
                    repr.dim
                )));
            }
            if !term.coef.is_finite() {
                return Err(D::Error::custom(format!(
                    "term {i}: non-finite coefficient"
                )));
            }
            p.add_term(Monomial::new(term.exp), term.coef);
        }
        Ok(p)
    }
}
