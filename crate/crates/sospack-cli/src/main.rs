//! `sospack`: learn polynomial sublevel-set shapes from point clouds and
//! certify packing configurations.
//!
//! Exit codes follow a fixed contract so pipelines can branch on them:
//! `learn` returns 0 on success, 2 when the program is infeasible or the
//! solver fails to produce a verified certificate, 1 on usage or IO errors;
//! `certify` returns 0 (certified), 3 (refuted), 4 (undecided), or 1;
//! `oracle-check` returns 0 (no violation found) or 3 (witness found);
//! `sample` and `fixtures generate` return 0 or 1.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use sospack::fixtures::{generate, FixtureKind, FixtureSpec};
use sospack::pack::{
    certify_packing, scan_all_constraints, CertifyOptions, Counterexample, OracleBudget, Scene,
    Verdict,
};
use sospack::poly::BoxRegion;
use sospack::sdp::SolveOptions;
use sospack::shape::{
    learn_shape_with_options, load_point_cloud, sample_boundary, boundary_points, CloudFormat,
    LearnConfig, Prior, ShapeError, ShapeModel,
};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_INFEASIBLE: i32 = 2;
const EXIT_REFUTED: i32 = 3;
const EXIT_UNDECIDED: i32 = 4;

#[derive(Parser)]
#[command(
    name = "sospack",
    version,
    about = "Sublevel-set shape learning and packing certification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a polynomial sublevel-set model to a point cloud.
    Learn(LearnArgs),
    /// Certify a packing scene and report a verdict.
    Certify(CertifyArgs),
    /// Export boundary points of a shape or scene as CSV.
    Sample(SampleArgs),
    /// Search for constraint violations without solving any SDP.
    OracleCheck(OracleCheckArgs),
    /// Deterministic test-data generators.
    Fixtures(FixturesArgs),
}

#[derive(Args)]
struct LearnArgs {
    /// Point cloud file (.csv or .xyz).
    #[arg(long)]
    input: PathBuf,
    /// Even degree of the learned polynomial.
    #[arg(long)]
    degree: u32,
    /// Objective box: a half-width like `1.1`, or per-axis bounds like
    /// `-1.1,1.1;-0.5,0.5`.
    #[arg(long = "box", value_name = "BOX")]
    region: String,
    /// Cap radius; defaults to 1.05 times the box covering radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Required clearance of every cloud point inside the sublevel set.
    #[arg(long, default_value_t = 1e-4)]
    margin: f64,
    /// Shape prior: `star`, `convex`, `symmetry:neg-identity`, or
    /// `symmetry:<a,b;c,d>` (rows of the matrix A).  Repeatable.
    #[arg(long = "prior", value_name = "PRIOR")]
    priors: Vec<String>,
    /// Output shape JSON path; a manifest is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Interior-point iteration cap.
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
}

#[derive(Args)]
struct CertifyArgs {
    /// Scene JSON path.
    #[arg(long)]
    scene: PathBuf,
    /// Override the certificate degree stored in the scene.
    #[arg(long)]
    degree: Option<u32>,
    /// Worker threads for independent constraint programs; 0 = all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Counterexample search budget as `grid[,samples[,seed]]`.
    #[arg(long, value_name = "BUDGET")]
    oracle_budget: Option<String>,
    /// Output report JSON path; a manifest is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Interior-point iteration cap.
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SampleInput {
    /// Shape JSON produced by `learn`.
    #[arg(long)]
    shape: Option<PathBuf>,
    /// Scene JSON; exports one labeled section per boundary.
    #[arg(long)]
    scene: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    input: SampleInput,
    /// Rays (2D), grid lines per axis (3D), or random directions.
    #[arg(long, default_value_t = 360)]
    resolution: usize,
    /// Search radius for boundary crossings when sampling scenes.
    #[arg(long, default_value_t = 2.0)]
    radius: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleCheckArgs {
    /// Scene JSON path.
    #[arg(long)]
    scene: PathBuf,
    /// Grid resolution per axis.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Random sample count.
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    /// Seed for the random sampling stage.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FixturesArgs {
    #[command(subcommand)]
    action: FixturesAction,
}

#[derive(Subcommand)]
enum FixturesAction {
    /// Write one fixture (or `--kind all`) into a directory.
    Generate {
        /// Fixture kind name, or `all`.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the point count of cloud fixtures.
        #[arg(long)]
        size: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: String,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    seed: Option<u64>,
    timings: BTreeMap<String, f64>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match cli.command {
        Command::Learn(args) => cmd_learn(&args),
        Command::Certify(args) => cmd_certify(&args),
        Command::Sample(args) => cmd_sample(&args),
        Command::OracleCheck(args) => cmd_oracle_check(&args),
        Command::Fixtures(args) => cmd_fixtures(&args),
    };
    std::process::exit(code.unwrap_or_else(|message| {
        eprintln!("error: {message}");
        EXIT_USAGE
    }));
}

fn read_file(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn digest_hex(path: &Path) -> Result<String, String> {
    let bytes = fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<(), String> {
    let path = out.with_extension("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| format!("cannot serialize manifest: {e}"))?;
    text.push('\n');
    write_file(&path, &text)
}

fn parse_box(spec: &str, dim: usize) -> Result<BoxRegion, String> {
    if let Ok(half) = spec.trim().parse::<f64>() {
        return BoxRegion::centered_cube(dim, half)
            .map_err(|e| format!("invalid --box {spec}: {e}"));
    }
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (i, axis) in spec.split(';').enumerate() {
        let parts: Vec<&str> = axis.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(format!(
                "invalid --box axis {} ({axis:?}): expected lo,hi",
                i + 1
            ));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| format!("invalid --box bound {:?}", parts[0]))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| format!("invalid --box bound {:?}", parts[1]))?;
        lower.push(lo);
        upper.push(hi);
    }
    if lower.len() != dim {
        return Err(format!(
            "--box has {} axes but the cloud has dimension {dim}",
            lower.len()
        ));
    }
    BoxRegion::new(lower, upper).map_err(|e| format!("invalid --box {spec}: {e}"))
}

fn parse_symmetry_matrix(spec: &str, dim: usize) -> Result<Vec<Vec<f64>>, String> {
    if spec == "neg-identity" {
        let mut matrix = vec![vec![0.0; dim]; dim];
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = -1.0;
        }
        return Ok(matrix);
    }
    let mut matrix = Vec::new();
    for row in spec.split(';') {
        let entries: Result<Vec<f64>, _> = row.split(',').map(|v| v.trim().parse()).collect();
        matrix.push(entries.map_err(|_| format!("invalid symmetry matrix row {row:?}"))?);
    }
    Ok(matrix)
}

fn parse_priors(specs: &[String], dim: usize) -> Result<Vec<Prior>, String> {
    let mut priors = Vec::new();
    for spec in specs {
        let prior = match spec.as_str() {
            "star" => Prior::StarConnected,
            "convex" => Prior::Convex,
            other => match other.strip_prefix("symmetry:") {
                Some(matrix_spec) => Prior::Symmetry {
                    matrix: parse_symmetry_matrix(matrix_spec, dim)?,
                },
                None => {
                    return Err(format!(
                        "unknown prior {spec:?}: expected star, convex, or symmetry:<spec>"
                    ))
                }
            },
        };
        priors.push(prior);
    }
    Ok(priors)
}

fn parse_budget(spec: Option<&str>) -> Result<OracleBudget, String> {
    let mut budget = OracleBudget::default();
    let Some(spec) = spec else {
        return Ok(budget);
    };
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.is_empty() || parts.len() > 3 {
        return Err(format!(
            "invalid --oracle-budget {spec:?}: expected grid[,samples[,seed]]"
        ));
    }
    budget.grid_resolution = parts[0]
        .parse()
        .map_err(|_| format!("invalid grid resolution {:?}", parts[0]))?;
    if let Some(samples) = parts.get(1) {
        budget.random_samples = samples
            .parse()
            .map_err(|_| format!("invalid sample count {samples:?}"))?;
    }
    if let Some(seed) = parts.get(2) {
        budget.seed = seed
            .parse()
            .map_err(|_| format!("invalid seed {seed:?}"))?;
    }
    Ok(budget)
}

fn solve_options(max_iters: usize) -> SolveOptions {
    SolveOptions {
        max_iters,
        ..SolveOptions::default()
    }
}

fn cmd_learn(args: &LearnArgs) -> Result<i32, String> {
    let started = Instant::now();
    let format = CloudFormat::from_path(&args.input);
    let cloud = load_point_cloud(&args.input, format)
        .map_err(|e| format!("{}: {e}", args.input.display()))?;
    let region = parse_box(&args.region, cloud.dim())?;
    let priors = parse_priors(&args.priors, cloud.dim())?;
    let mut config = LearnConfig::with_defaults(args.degree, region);
    config.margin = args.margin;
    config.priors = priors;
    if let Some(radius) = args.radius {
        config.radius = radius;
    }
    let load_seconds = started.elapsed().as_secs_f64();

    let solve_started = Instant::now();
    let result = learn_shape_with_options(&cloud, &config, &solve_options(args.max_iters));
    let solve_seconds = solve_started.elapsed().as_secs_f64();
    let model = match result {
        Ok(model) => model,
        Err(e @ ShapeError::Unverified { .. })
        | Err(e @ ShapeError::MarginViolated { .. })
        | Err(e @ ShapeError::Sdp(_))
        | Err(e @ ShapeError::Sos(_)) => {
            eprintln!("infeasible: {e}");
            return Ok(EXIT_INFEASIBLE);
        }
        Err(e) => return Err(e.to_string()),
    };

    let mut text = model.to_json();
    text.push('\n');
    write_file(&args.out, &text)?;

    let mut inputs = BTreeMap::new();
    inputs.insert(args.input.display().to_string(), digest_hex(&args.input)?);
    let manifest = RunManifest {
        command: "learn".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::json!({
            "input": args.input.display().to_string(),
            "degree": args.degree,
            "box": { "lower": config.region.lower(), "upper": config.region.upper() },
            "radius": config.radius,
            "margin": config.margin,
            "priors": args.priors,
            "max_iters": args.max_iters,
            "out": args.out.display().to_string(),
        }),
        inputs,
        seed: None,
        timings: BTreeMap::from([
            ("load".to_string(), load_seconds),
            ("solve".to_string(), solve_seconds),
        ]),
    };
    write_manifest(&args.out, &manifest)?;
    println!(
        "learned degree-{} shape from {} points; certificate gamma-free residual {:.2e}",
        args.degree,
        cloud.len(),
        model.certificate.identity_residual
    );
    Ok(EXIT_OK)
}

fn cmd_certify(args: &CertifyArgs) -> Result<i32, String> {
    let started = Instant::now();
    let text = read_file(&args.scene)?;
    let mut scene =
        Scene::from_json(&text).map_err(|e| format!("{}: {e}", args.scene.display()))?;
    if let Some(degree) = args.degree {
        scene.degree = degree;
        scene
            .validate()
            .map_err(|e| format!("{}: {e}", args.scene.display()))?;
    }
    let budget = parse_budget(args.oracle_budget.as_deref())?;
    let options = CertifyOptions {
        solve: solve_options(args.max_iters),
        jobs: args.jobs,
        oracle: budget.clone(),
        ..CertifyOptions::default()
    };
    let load_seconds = started.elapsed().as_secs_f64();

    let certify_started = Instant::now();
    let report = certify_packing(&scene, &options).map_err(|e| e.to_string())?;
    let certify_seconds = certify_started.elapsed().as_secs_f64();

    let mut out_text = report.to_json();
    out_text.push('\n');
    write_file(&args.out, &out_text)?;

    let mut inputs = BTreeMap::new();
    inputs.insert(args.scene.display().to_string(), digest_hex(&args.scene)?);
    let manifest = RunManifest {
        command: "certify".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::json!({
            "scene": args.scene.display().to_string(),
            "degree": scene.degree,
            "jobs": args.jobs,
            "oracle_budget": {
                "grid_resolution": budget.grid_resolution,
                "random_samples": budget.random_samples,
                "seed": budget.seed,
            },
            "max_iters": args.max_iters,
            "out": args.out.display().to_string(),
        }),
        inputs,
        seed: Some(budget.seed),
        timings: BTreeMap::from([
            ("load".to_string(), load_seconds),
            ("certify".to_string(), certify_seconds),
        ]),
    };
    write_manifest(&args.out, &manifest)?;

    let verdict = report.verdict;
    println!(
        "verdict: {} (min gamma {})",
        match verdict {
            Verdict::Certified => "certified",
            Verdict::Refuted => "refuted",
            Verdict::Undecided => "undecided",
        },
        report
            .min_gamma()
            .map_or("n/a".to_string(), |g| format!("{g:.6}"))
    );
    Ok(match verdict {
        Verdict::Certified => EXIT_OK,
        Verdict::Refuted => EXIT_REFUTED,
        Verdict::Undecided => EXIT_UNDECIDED,
    })
}

fn push_rows(out: &mut String, rows: &[Vec<f64>]) {
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:.12e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
}

fn cmd_sample(args: &SampleArgs) -> Result<i32, String> {
    let mut out = String::new();
    let mut total = 0usize;
    let mut inputs = BTreeMap::new();
    if let Some(shape_path) = &args.input.shape {
        let model = ShapeModel::from_json(&read_file(shape_path)?)
            .map_err(|e| format!("{}: {e}", shape_path.display()))?;
        let rows = sample_boundary(&model, args.resolution).map_err(|e| e.to_string())?;
        total = rows.len();
        push_rows(&mut out, &rows);
        inputs.insert(shape_path.display().to_string(), digest_hex(shape_path)?);
    } else if let Some(scene_path) = &args.input.scene {
        let scene = Scene::from_json(&read_file(scene_path)?)
            .map_err(|e| format!("{}: {e}", scene_path.display()))?;
        out.push_str("# container\n");
        let rows = boundary_points(&scene.container.c, args.radius, args.resolution)
            .map_err(|e| e.to_string())?;
        total += rows.len();
        push_rows(&mut out, &rows);
        for object in &scene.objects {
            let world = object
                .p
                .compose_affine(&object.transform)
                .map_err(|e| e.to_string())?;
            let rows = boundary_points(&world, args.radius, args.resolution)
                .map_err(|e| e.to_string())?;
            out.push_str(&format!("# {}\n", object.label));
            total += rows.len();
            push_rows(&mut out, &rows);
        }
        inputs.insert(scene_path.display().to_string(), digest_hex(scene_path)?);
    }
    if total == 0 {
        eprintln!("warning: no boundary points found; writing empty CSV");
    }
    write_file(&args.out, &out)?;
    let manifest = RunManifest {
        command: "sample".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::json!({
            "resolution": args.resolution,
            "radius": args.radius,
            "out": args.out.display().to_string(),
        }),
        inputs,
        seed: None,
        timings: BTreeMap::new(),
    };
    write_manifest(&args.out, &manifest)?;
    println!("wrote {total} boundary points to {}", args.out.display());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct OracleReport {
    violations: Vec<Counterexample>,
}

fn cmd_oracle_check(args: &OracleCheckArgs) -> Result<i32, String> {
    let scene = Scene::from_json(&read_file(&args.scene)?)
        .map_err(|e| format!("{}: {e}", args.scene.display()))?;
    let budget = OracleBudget {
        grid_resolution: args.grid,
        random_samples: args.samples,
        seed: args.seed,
        search_box: None,
    };
    let violations = scan_all_constraints(&scene, &budget).map_err(|e| e.to_string())?;
    let report = OracleReport { violations };
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| format!("cannot serialize report: {e}"))?;
    println!("{text}");
    Ok(if report.violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_REFUTED
    })
}

fn cmd_fixtures(args: &FixturesArgs) -> Result<i32, String> {
    let FixturesAction::Generate {
        kind,
        seed,
        size,
        out,
    } = &args.action;
    let kinds: Vec<FixtureKind> = if kind == "all" {
        FixtureKind::all().to_vec()
    } else {
        let parsed = FixtureKind::from_name(kind).ok_or_else(|| {
            let names: Vec<&str> = FixtureKind::all().iter().map(|k| k.name()).collect();
            format!("unknown fixture kind {kind:?}: expected one of {names:?} or all")
        })?;
        vec![parsed]
    };
    for kind in kinds {
        let spec = FixtureSpec {
            kind,
            seed: *seed,
            size: *size,
        };
        let written = generate(&spec, out).map_err(|e| e.to_string())?;
        for path in written {
            println!("wrote {}", path.display());
        }
    }
    Ok(EXIT_OK)
}
