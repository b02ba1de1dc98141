use std::cmp::Ordering;
use std::fmt;

/// Exponent vector of a single monomial. `Monomial { exponents: vec![2, 1] }`
/// stands for `x1^2 x2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial { exponents }
    }

    pub fn constant(dim: usize) -> Self {
        Monomial {
            exponents: vec![0; dim],
        }
    }

    /// The monomial `x_i` in `dim` variables (`i` is zero-based).
    pub fn variable(dim: usize, i: usize) -> Self {
        assert!(i < dim, "variable index {i} out of range for dim {dim}");
        let mut exponents = vec![0; dim];
        exponents[i] = 1;
        Monomial { exponents }
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn exponent(&self, i: usize) -> u32 {
        self.exponents[i]
    }

    pub fn total_degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    /// Product of two monomials (adds exponent vectors).
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.dim(), other.dim());
        Monomial {
            exponents: self
                .exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.dim());
        self.exponents
            .iter()
            .zip(point)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }
}

/// Graded lexicographic order: lower total degree first, ties broken by
/// ascending lexicographic comparison of the exponent vectors.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.exponents.cmp(&other.exponents))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

/// All monomials in `dim` variables of total degree at most `max_degree`, in
/// graded lexicographic order. The length is `C(dim + max_degree, max_degree)`.
pub fn monomial_basis(dim: usize, max_degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut current = vec![0u32; dim];
    for degree in 0..=max_degree {
        emit_compositions(dim, degree, 0, &mut current, &mut out);
    }
    out
}

/// Appends all exponent vectors of the given total degree in ascending
/// lexicographic order by filling positions left to right.
fn emit_compositions(
    dim: usize,
    remaining: u32,
    position: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<Monomial>,
) {
    if dim == 0 {
        if remaining == 0 {
            out.push(Monomial::constant(0));
        }
        return;
    }
    if position == dim - 1 {
        current[position] = remaining;
        out.push(Monomial::new(current.clone()));
        current[position] = 0;
        return;
    }
    for e in 0..=remaining {
        current[position] = e;
        emit_compositions(dim, remaining - e, position + 1, current, out);
    }
    current[position] = 0;
}
