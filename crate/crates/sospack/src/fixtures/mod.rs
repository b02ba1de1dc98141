//! Deterministic generators for the test corpus: point-cloud samplers,
//! analytic container and object polynomials, and complete packing scenes
//! with oracle-established ground-truth tags.  The same spec always produces
//! the same bytes, so fixtures can be regenerated anywhere and diffed.

mod samplers;
mod scenes;

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use samplers::{annulus_cloud, blended_surface_cloud, circle_cloud, sphere_cloud, star_cloud};
pub use scenes::{
    ball_polynomial, disk_polynomial, disks_disjoint_scene, disks_overlapping_scene,
    star_disks_scene, torus_polynomial, torus_pot_scene,
};

use crate::pack::{PackError, Scene};
use crate::poly::PolyError;
use crate::shape::{PointCloud, ShapeError};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Pack(#[from] PackError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureKind {
    CircleCloud,
    AnnulusCloud,
    SphereCloud,
    BlendedSurfaceCloud,
    StarCloud,
    SceneEx3Initial,
    SceneEx3Corrected,
    SceneEx4Initial,
    SceneEx4Corrected,
    DisksDisjoint,
    DisksOverlapping,
}

impl FixtureKind {
    pub fn all() -> &'static [FixtureKind] {
        &[
            FixtureKind::CircleCloud,
            FixtureKind::AnnulusCloud,
            FixtureKind::SphereCloud,
            FixtureKind::BlendedSurfaceCloud,
            FixtureKind::StarCloud,
            FixtureKind::SceneEx3Initial,
            FixtureKind::SceneEx3Corrected,
            FixtureKind::SceneEx4Initial,
            FixtureKind::SceneEx4Corrected,
            FixtureKind::DisksDisjoint,
            FixtureKind::DisksOverlapping,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            FixtureKind::CircleCloud => "circle_cloud",
            FixtureKind::AnnulusCloud => "annulus_cloud",
            FixtureKind::SphereCloud => "sphere_cloud",
            FixtureKind::BlendedSurfaceCloud => "blended_surface_cloud",
            FixtureKind::StarCloud => "star_cloud",
            FixtureKind::SceneEx3Initial => "scene_ex3_initial",
            FixtureKind::SceneEx3Corrected => "scene_ex3_corrected",
            FixtureKind::SceneEx4Initial => "scene_ex4_initial",
            FixtureKind::SceneEx4Corrected => "scene_ex4_corrected",
            FixtureKind::DisksDisjoint => "disks_disjoint",
            FixtureKind::DisksOverlapping => "disks_overlapping",
        }
    }

    pub fn from_name(name: &str) -> Option<FixtureKind> {
        FixtureKind::all().iter().copied().find(|k| k.name() == name)
    }

    fn default_points(&self) -> usize {
        match self {
            FixtureKind::CircleCloud => 200,
            FixtureKind::AnnulusCloud => 240,
            FixtureKind::SphereCloud => 500,
            FixtureKind::BlendedSurfaceCloud => 2048,
            FixtureKind::StarCloud => 256,
            _ => 0,
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What to generate.  `size` overrides the per-kind default point count for
/// cloud fixtures and is ignored for scenes.
#[derive(Clone, Copy, Debug)]
pub struct FixtureSpec {
    pub kind: FixtureKind,
    pub seed: u64,
    pub size: Option<usize>,
}

impl FixtureSpec {
    pub fn new(kind: FixtureKind) -> FixtureSpec {
        FixtureSpec {
            kind,
            seed: 0,
            size: None,
        }
    }
}

/// Builds the scene for a scene-kind spec without touching the filesystem.
pub fn build_scene(spec: &FixtureSpec) -> Result<Option<Scene>, FixtureError> {
    let scene = match spec.kind {
        FixtureKind::SceneEx3Initial => Some(torus_pot_scene(false, spec.seed)?),
        FixtureKind::SceneEx3Corrected => Some(torus_pot_scene(true, spec.seed)?),
        FixtureKind::SceneEx4Initial => Some(star_disks_scene(false, spec.seed)?),
        FixtureKind::SceneEx4Corrected => Some(star_disks_scene(true, spec.seed)?),
        FixtureKind::DisksDisjoint => Some(disks_disjoint_scene(spec.seed)?),
        FixtureKind::DisksOverlapping => Some(disks_overlapping_scene(spec.seed)?),
        _ => None,
    };
    Ok(scene)
}

/// Builds the point cloud for a cloud-kind spec without touching the
/// filesystem.
pub fn build_cloud(spec: &FixtureSpec) -> Option<PointCloud> {
    let n = spec.size.unwrap_or_else(|| spec.kind.default_points());
    match spec.kind {
        FixtureKind::CircleCloud => Some(circle_cloud(spec.seed, n)),
        FixtureKind::AnnulusCloud => Some(annulus_cloud(spec.seed, n)),
        FixtureKind::SphereCloud => Some(sphere_cloud(spec.seed, n)),
        FixtureKind::BlendedSurfaceCloud => Some(blended_surface_cloud(spec.seed, n)),
        FixtureKind::StarCloud => Some(star_cloud(spec.seed, n)),
        _ => None,
    }
}

fn io_err(path: &Path, source: std::io::Error) -> FixtureError {
    FixtureError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), FixtureError> {
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(bytes).map_err(|e| io_err(path, e))
}

fn cloud_csv(spec: &FixtureSpec, cloud: &PointCloud) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# kind={} seed={} points={}\n",
        spec.kind,
        spec.seed,
        cloud.len()
    ));
    for point in cloud.points() {
        let row: Vec<String> = point.iter().map(|c| format!("{c:.12e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes the artifacts for one spec into `out_dir` and returns the paths.
/// Cloud kinds produce `<kind>.csv`; scene kinds produce `<kind>.json`.
pub fn generate(spec: &FixtureSpec, out_dir: &Path) -> Result<Vec<PathBuf>, FixtureError> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut written = Vec::new();
    if let Some(cloud) = build_cloud(spec) {
        let path = out_dir.join(format!("{}.csv", spec.kind));
        write_bytes(&path, cloud_csv(spec, &cloud).as_bytes())?;
        written.push(path);
    }
    if let Some(scene) = build_scene(spec)? {
        let path = out_dir.join(format!("{}.json", spec.kind));
        let mut text = scene.to_json();
        text.push('\n');
        write_bytes(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for kind in FixtureKind::all() {
            assert_eq!(FixtureKind::from_name(kind.name()), Some(*kind));
        }
        assert_eq!(FixtureKind::from_name("no_such_kind"), None);
    }

    #[test]
    fn cloud_generation_is_byte_deterministic() {
        let dir = std::env::temp_dir().join("sospack-fixture-det");
        let spec = FixtureSpec::new(FixtureKind::CircleCloud);
        let first = generate(&spec, &dir.join("a")).unwrap();
        let second = generate(&spec, &dir.join("b")).unwrap();
        let a = fs::read(&first[0]).unwrap();
        let b = fs::read(&second[0]).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(b"# kind=circle_cloud seed=0 points=200\n"));
    }

    #[test]
    fn cloud_csv_parses_back() {
        let dir = std::env::temp_dir().join("sospack-fixture-parse");
        let spec = FixtureSpec {
            kind: FixtureKind::SphereCloud,
            seed: 3,
            size: Some(64),
        };
        let paths = generate(&spec, &dir).unwrap();
        let cloud =
            crate::shape::load_point_cloud(&paths[0], crate::shape::CloudFormat::Csv).unwrap();
        assert_eq!(cloud.dim(), 3);
        assert_eq!(cloud.len(), 64);
        let original = build_cloud(&spec).unwrap();
        for (read, made) in cloud.points().iter().zip(original.points()) {
            for (a, b) in read.iter().zip(made) {
                assert!((a - b).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn scene_generation_writes_tagged_json() {
        let dir = std::env::temp_dir().join("sospack-fixture-scene");
        let spec = FixtureSpec::new(FixtureKind::DisksOverlapping);
        let paths = generate(&spec, &dir).unwrap();
        assert_eq!(paths.len(), 1);
        let text = fs::read_to_string(&paths[0]).unwrap();
        assert!(text.contains("\"ground_truth\": \"incorrect\""));
        let scene = Scene::from_json(&text).unwrap();
        assert_eq!(scene.objects.len(), 2);
    }
}
