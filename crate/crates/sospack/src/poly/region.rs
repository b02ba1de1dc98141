use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::PolyError;

/// Axis-aligned box `[lower_1, upper_1] x ... x [lower_n, upper_n]` with
/// strictly ordered bounds in every coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, PolyError> {
        if lower.len() != upper.len() {
            return Err(PolyError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(PolyError::NonFinite {
                    context: format!("box bound {i}"),
                });
            }
            if lo >= hi {
                return Err(PolyError::EmptyBox {
                    index: i,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(BoxRegion { lower, upper })
    }

    /// The cube `[-half_width, half_width]^dim`.
    pub fn centered_cube(dim: usize, half_width: f64) -> Result<Self, PolyError> {
        BoxRegion::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.widths().iter().product()
    }

    /// Half of the diagonal length; a ball of this radius centered at the box
    /// center covers the box.
    pub fn half_diagonal(&self) -> f64 {
        self.widths()
            .iter()
            .map(|w| 0.25 * w * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&lo, &hi))| x >= lo && x <= hi)
    }

    /// Intersection of two boxes, or `None` if they do not overlap.
    pub fn intersect(&self, other: &BoxRegion) -> Option<BoxRegion> {
        if self.dim() != other.dim() {
            return None;
        }
        let lower: Vec<f64> = self
            .lower
            .iter()
            .zip(&other.lower)
            .map(|(a, b)| a.max(*b))
            .collect();
        let upper: Vec<f64> = self
            .upper
            .iter()
            .zip(&other.upper)
            .map(|(a, b)| a.min(*b))
            .collect();
        BoxRegion::new(lower, upper).ok()
    }
}

#[derive(Serialize, Deserialize)]
struct BoxRepr {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Serialize for BoxRegion {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        BoxRepr {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BoxRegion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = BoxRepr::deserialize(deserializer)?;
        BoxRegion::new(repr.lower, repr.upper).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unordered_bounds() {
        assert!(BoxRegion::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(BoxRegion::new(vec![0.0], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn geometry_helpers() {
        let b = BoxRegion::new(vec![-1.0, 0.0], vec![1.0, 4.0]).unwrap();
        assert!((b.volume() - 8.0).abs() < 1e-15);
        assert_eq!(b.center(), vec![0.0, 2.0]);
        assert!((b.half_diagonal() - (1.0f64 + 4.0).sqrt()).abs() < 1e-15);
        assert!(b.contains(&[0.5, 3.0]));
        assert!(!b.contains(&[0.5, 4.5]));
    }

    #[test]
    fn intersection() {
        let a = BoxRegion::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let b = BoxRegion::new(vec![1.0, 1.0], vec![3.0, 3.0]).unwrap();
        let c = a.intersect(&b).unwrap();
        assert_eq!(c.lower(), &[1.0, 1.0]);
        assert_eq!(c.upper(), &[2.0, 2.0]);
        let far = BoxRegion::new(vec![5.0, 5.0], vec![6.0, 6.0]).unwrap();
        assert!(a.intersect(&far).is_none());
    }
}
