use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::poly::{AffineTransform, BoxRegion};

use super::ShapeError;

/// A nonempty list of points sharing one ambient dimension, all coordinates
/// finite.
#[derive(Clone, Debug)]
pub struct PointCloud {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, ShapeError> {
        let dim = match points.first() {
            Some(p) => p.len(),
            None => return Err(ShapeError::EmptyCloud),
        };
        if dim == 0 {
            return Err(ShapeError::InconsistentPoint {
                index: 0,
                expected: 1,
                got: 0,
            });
        }
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(ShapeError::InconsistentPoint {
                    index,
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(ShapeError::Parse {
                    path: "<memory>".to_string(),
                    line: index + 1,
                    message: "non-finite coordinate".to_string(),
                });
            }
        }
        Ok(PointCloud { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

/// On-disk encodings for point clouds: comma-separated rows or
/// whitespace-separated rows. Blank lines and lines starting with `#` are
/// skipped in both.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    Csv,
    Xyz,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> CloudFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("xyz") => CloudFormat::Xyz,
            _ => CloudFormat::Csv,
        }
    }
}

pub fn load_point_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud, ShapeError> {
    let text = fs::read_to_string(path).map_err(|source| ShapeError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_point_cloud(&text, format, &path.display().to_string())
}

/// Parses cloud text; `origin` names the source in error messages.
pub fn parse_point_cloud(
    text: &str,
    format: CloudFormat,
    origin: &str,
) -> Result<PointCloud, ShapeError> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut expected = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = match format {
            CloudFormat::Csv => trimmed.split(',').map(str::trim).collect(),
            CloudFormat::Xyz => trimmed.split_whitespace().collect(),
        };
        let mut coords = Vec::with_capacity(fields.len());
        for field in fields {
            let value: f64 = field.parse().map_err(|_| ShapeError::Parse {
                path: origin.to_string(),
                line,
                message: format!("cannot parse '{field}' as a number"),
            })?;
            if !value.is_finite() {
                return Err(ShapeError::Parse {
                    path: origin.to_string(),
                    line,
                    message: format!("non-finite coordinate '{field}'"),
                });
            }
            coords.push(value);
        }
        if points.is_empty() {
            expected = coords.len();
        } else if coords.len() != expected {
            return Err(ShapeError::Parse {
                path: origin.to_string(),
                line,
                message: format!("expected {expected} coordinates, got {}", coords.len()),
            });
        }
        points.push(coords);
    }
    PointCloud::new(points)
}

/// Scales and centers the cloud into `target` with a 5% margin per
/// coordinate, returning the mapped cloud and the affine map that performs
/// the normalization. `transform.apply` takes raw coordinates to normalized
/// ones; composing a polynomial learned in the normalized frame with the
/// transform expresses it back in raw coordinates.
///
/// A coordinate with (near-)zero extent is scaled like the widest one so the
/// map stays invertible; a cloud of coincident points is centered without
/// scaling.
pub fn normalize_cloud(
    cloud: &PointCloud,
    target: &BoxRegion,
) -> Result<(PointCloud, AffineTransform), ShapeError> {
    let n = cloud.dim();
    if target.dim() != n {
        return Err(ShapeError::InconsistentPoint {
            index: 0,
            expected: target.dim(),
            got: n,
        });
    }
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for p in cloud.points() {
        for i in 0..n {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let cloud_center: Vec<f64> = (0..n).map(|i| 0.5 * (lo[i] + hi[i])).collect();
    let half_extent: Vec<f64> = (0..n).map(|i| 0.5 * (hi[i] - lo[i])).collect();
    let widest = half_extent.iter().fold(0.0f64, |m, &e| m.max(e));

    let target_center = target.center();
    let target_half: Vec<f64> = target.widths().iter().map(|w| 0.5 * w).collect();
    let flat_tol = 1e-12 * widest;
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            if widest == 0.0 {
                1.0
            } else {
                let extent = if half_extent[i] > flat_tol {
                    half_extent[i]
                } else {
                    widest
                };
                0.95 * target_half[i] / extent
            }
        })
        .collect();

    let linear = DMatrix::from_fn(n, n, |i, j| if i == j { scale[i] } else { 0.0 });
    let offset = DVector::from_fn(n, |i, _| cloud_center[i] - target_center[i] / scale[i]);
    let transform = AffineTransform::new(linear, offset, false)?;

    let mapped: Vec<Vec<f64>> = cloud.points().iter().map(|p| transform.apply(p)).collect();
    Ok((PointCloud::new(mapped)?, transform))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_csv_rows() {
        let cloud = parse_point_cloud("0.0, 1.0\n1.0, 0.0\n-0.5,0.25\n", CloudFormat::Csv, "t")
            .unwrap();
        assert_eq!(cloud.dim(), 2);
        assert_eq!(cloud.len(), 3);
        assert_eq!(cloud.points()[2], vec![-0.5, 0.25]);
    }

    #[test]
    fn parses_whitespace_rows_with_comments() {
        let text = "# header\n1.0 2.0 3.0\n\n\t4.0\t5.0  6.0\n";
        let cloud = parse_point_cloud(text, CloudFormat::Xyz, "t").unwrap();
        assert_eq!(cloud.dim(), 3);
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.points()[1], vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn reports_line_numbers_for_bad_tokens() {
        let err = parse_point_cloud("1.0,2.0\n1.0,oops\n", CloudFormat::Csv, "cloud.csv")
            .unwrap_err();
        match err {
            ShapeError::Parse { path, line, message } => {
                assert_eq!(path, "cloud.csv");
                assert_eq!(line, 2);
                assert!(message.contains("oops"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite_and_ragged_rows() {
        let err = parse_point_cloud("1.0,nan\n", CloudFormat::Csv, "t").unwrap_err();
        assert!(matches!(err, ShapeError::Parse { line: 1, .. }));
        let err = parse_point_cloud("1.0,2.0\n3.0\n", CloudFormat::Csv, "t").unwrap_err();
        assert!(matches!(err, ShapeError::Parse { line: 2, .. }));
    }

    #[test]
    fn empty_input_is_an_error() {
        let err = parse_point_cloud("# only comments\n\n", CloudFormat::Csv, "t").unwrap_err();
        assert!(matches!(err, ShapeError::EmptyCloud));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            CloudFormat::from_path(Path::new("a/b/points.XYZ")),
            CloudFormat::Xyz
        );
        assert_eq!(
            CloudFormat::from_path(Path::new("points.csv")),
            CloudFormat::Csv
        );
    }

    #[test]
    fn normalization_centers_and_scales_with_margin() {
        let cloud = PointCloud::new(vec![vec![0.0], vec![10.0]]).unwrap();
        let target = BoxRegion::new(vec![-1.1], vec![1.1]).unwrap();
        let (mapped, t) = normalize_cloud(&cloud, &target).unwrap();
        assert!((mapped.points()[0][0] + 1.045).abs() < 1e-12);
        assert!((mapped.points()[1][0] - 1.045).abs() < 1e-12);
        let back = t.apply_inverse(&[1.045]);
        assert!((back[0] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn flat_coordinates_reuse_the_widest_extent() {
        let cloud = PointCloud::new(vec![vec![0.0, 5.0], vec![10.0, 5.0]]).unwrap();
        let target = BoxRegion::centered_cube(2, 1.1).unwrap();
        let (mapped, _) = normalize_cloud(&cloud, &target).unwrap();
        for p in mapped.points() {
            assert!((p[1] - 0.0).abs() < 1e-12);
            assert!(p[0].abs() <= 1.045 + 1e-12);
        }
    }

    #[test]
    fn coincident_points_are_centered_without_scaling() {
        let cloud = PointCloud::new(vec![vec![3.0, 4.0], vec![3.0, 4.0]]).unwrap();
        let target = BoxRegion::new(vec![-1.0, 1.0], vec![1.0, 3.0]).unwrap();
        let (mapped, _) = normalize_cloud(&cloud, &target).unwrap();
        assert_eq!(mapped.points()[0], vec![0.0, 2.0]);
    }

    #[test]
    fn off_center_target_box() {
        let cloud = PointCloud::new(vec![vec![-2.0], vec![2.0]]).unwrap();
        let target = BoxRegion::new(vec![4.0], vec![6.0]).unwrap();
        let (mapped, t) = normalize_cloud(&cloud, &target).unwrap();
        assert!((mapped.points()[0][0] - (5.0 - 0.95)).abs() < 1e-12);
        assert!((mapped.points()[1][0] - (5.0 + 0.95)).abs() < 1e-12);
        assert!((t.apply(&[0.0])[0] - 5.0).abs() < 1e-12);
    }
}
