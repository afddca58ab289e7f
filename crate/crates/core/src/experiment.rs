//! Configuration-driven experiment runner.
//!
//! A run validates its [`ExperimentConfig`] in full, executes one
//! experiment and writes CSV/JSON artifacts, a `verdict.json` block and a
//! `manifest.json` listing every artifact with its SHA-256. Artifact bytes
//! depend only on the config (including its seed), never on thread count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::accessibility::{self, PathSearchBudget};
use crate::error::{invalid, Error, Result};
use crate::foliation::{self, LeafSegment};
use crate::global::{self, BoxGrid};
use crate::maps::{c1_distance_estimate, MapSpec, ShearTemplate, ToralMap};
use crate::render;
use crate::sh::{self, ShParams};
use crate::splitting::{self, BundleDims, StrongBundle};
use crate::torus::TorusPoint;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const VERDICT_FILE: &str = "verdict.json";

/// Box grid whose dimension is taken from the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub divisions: usize,
    #[serde(default = "defaults::samples_per_box")]
    pub samples_per_box: usize,
}

impl GridSpec {
    pub fn boxes(&self, dim: usize) -> Result<BoxGrid> {
        BoxGrid::new(dim, self.divisions, self.samples_per_box)
    }
}

mod defaults {
    pub fn samples_per_box() -> usize {
        4
    }
    pub fn splitting_grid() -> usize {
        3
    }
    pub fn n_iters() -> usize {
        crate::splitting::DEFAULT_ITERS
    }
    pub fn lyapunov_iters() -> usize {
        200
    }
    pub fn sh_grid() -> usize {
        5
    }
    pub fn scan_grid() -> usize {
        3
    }
    pub fn iterates() -> Vec<usize> {
        vec![1, 2, 3]
    }
    pub fn periodic_tol() -> f64 {
        crate::global::DEFAULT_PERIODIC_TOL
    }
    pub fn mixing_n_max() -> usize {
        20
    }
    pub fn one() -> usize {
        1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingParams {
    pub dims: BundleDims,
    /// Sample points per axis.
    #[serde(default = "defaults::splitting_grid")]
    pub grid_per_axis: usize,
    #[serde(default = "defaults::n_iters")]
    pub n_iters: usize,
    #[serde(default = "defaults::lyapunov_iters")]
    pub lyapunov_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafParams {
    pub point: Vec<f64>,
    pub bundle: StrongBundle,
    pub radius: f64,
    pub step: f64,
    /// Also refine the leaf by graph transform with this many iterates.
    #[serde(default)]
    pub refine_depth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessParams {
    /// Boxes per axis of the open-set grid.
    pub divisions: usize,
    pub delta: f64,
    /// Search limits; unset fields come from `PathSearchBudget::default_for`.
    /// Tolerance and seed are `delta` and the config seed.
    #[serde(default)]
    pub max_legs: Option<usize>,
    #[serde(default)]
    pub max_leg_length: Option<f64>,
    #[serde(default)]
    pub multistarts: Option<usize>,
    #[serde(default)]
    pub step: Option<f64>,
    /// Random us-paths sampled from `start` (0 disables the class sample).
    #[serde(default)]
    pub class_paths: usize,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShSurveyParams {
    pub sh: ShParams,
    #[serde(default = "defaults::sh_grid")]
    pub grid_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShScanParams {
    pub sh: ShParams,
    #[serde(default = "defaults::scan_grid")]
    pub grid_per_axis: usize,
    pub template: ShearTemplate,
    pub amplitudes: Vec<f64>,
    /// Also bisect for the pass threshold to this tolerance.
    #[serde(default)]
    pub bisection_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingParams {
    pub grid: GridSpec,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitivityParams {
    pub grid: GridSpec,
    pub n_union: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonwanderingParams {
    pub grid: GridSpec,
    pub n_max: usize,
    /// Powers k of the map evaluated alongside f.
    #[serde(default = "defaults::iterates")]
    pub iterates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicParams {
    pub seed_grid: GridSpec,
    pub k_max: usize,
    #[serde(default = "defaults::periodic_tol")]
    pub tol: f64,
    /// Grid whose vertices define the density gap; defaults to `seed_grid`.
    #[serde(default)]
    pub reference_grid: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityParams {
    pub bundle: StrongBundle,
    pub leaf_radius: f64,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustSuiteParams {
    pub sh: ShParams,
    #[serde(default = "defaults::scan_grid")]
    pub grid_per_axis: usize,
    pub template: ShearTemplate,
    pub amplitudes: Vec<f64>,
    pub mixing_grid: GridSpec,
    #[serde(default = "defaults::mixing_n_max")]
    pub mixing_n_max: usize,
    #[serde(default = "defaults::one")]
    pub periodic_k_max: usize,
    pub periodic_seed_grid: GridSpec,
    #[serde(default = "defaults::periodic_tol")]
    pub periodic_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", content = "parameters", rename_all = "kebab-case")]
pub enum Experiment {
    Splitting(SplittingParams),
    Leaf(LeafParams),
    Access(AccessParams),
    Sh(ShSurveyParams),
    ShInverse(ShSurveyParams),
    ShScan(ShScanParams),
    Mixing(MixingParams),
    Transitivity(TransitivityParams),
    Nonwandering(NonwanderingParams),
    Periodic(PeriodicParams),
    Minimality(MinimalityParams),
    RobustSuite(RobustSuiteParams),
}

pub const EXPERIMENT_NAMES: [&str; 12] = [
    "splitting",
    "leaf",
    "access",
    "sh",
    "sh-inverse",
    "sh-scan",
    "mixing",
    "transitivity",
    "nonwandering",
    "periodic",
    "minimality",
    "robust-suite",
];

impl Experiment {
    pub fn name(&self) -> &'static str {
        let i = match self {
            Experiment::Splitting(_) => 0,
            Experiment::Leaf(_) => 1,
            Experiment::Access(_) => 2,
            Experiment::Sh(_) => 3,
            Experiment::ShInverse(_) => 4,
            Experiment::ShScan(_) => 5,
            Experiment::Mixing(_) => 6,
            Experiment::Transitivity(_) => 7,
            Experiment::Nonwandering(_) => 8,
            Experiment::Periodic(_) => 9,
            Experiment::Minimality(_) => 10,
            Experiment::RobustSuite(_) => 11,
        };
        EXPERIMENT_NAMES[i]
    }

    /// The `parameters` block as JSON.
    pub fn parameters(&self) -> Value {
        serde_json::to_value(self).expect("parameters serialize")["parameters"].clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub map: MapSpec,
    #[serde(flatten)]
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every precondition of the target operation; returns the
    /// compiled map.
    pub fn validate(&self) -> Result<ToralMap> {
        if self.schema_version != SCHEMA_VERSION {
            return invalid(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let f = ToralMap::new(self.map.clone())?;
        let d = f.dim();
        let positive = |name: &str, v: f64| -> Result<()> {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive and finite"));
            }
            Ok(())
        };
        let at_least = |name: &str, v: usize, min: usize| -> Result<()> {
            if v < min {
                return invalid(format!("{name} = {v} is below {min}"));
            }
            Ok(())
        };
        match &self.experiment {
            Experiment::Splitting(p) => {
                p.dims.validate(d)?;
                at_least("grid_per_axis", p.grid_per_axis, 1)?;
                at_least("n_iters", p.n_iters, 1)?;
                at_least("lyapunov_iters", p.lyapunov_iters, 10)?;
            }
            Experiment::Leaf(p) => {
                point_of(&p.point, d)?;
                if !(p.radius >= 0.0 && p.radius.is_finite()) {
                    return invalid("radius must be finite and non-negative");
                }
                if p.radius > 0.0 && !(p.step > 0.0 && p.step <= p.radius / 50.0) {
                    return invalid("step must lie in (0, radius/50]");
                }
                if let Some(depth) = p.refine_depth {
                    at_least("refine_depth", depth, 1)?;
                }
            }
            Experiment::Access(p) => {
                at_least("divisions", p.divisions, 1)?;
                positive("delta", p.delta)?;
                access_budget(p, d, self.seed).validate(d)?;
                if let Some(start) = &p.start {
                    point_of(start, d)?;
                }
            }
            Experiment::Sh(p) | Experiment::ShInverse(p) => {
                p.sh.validate(d)?;
                at_least("grid_per_axis", p.grid_per_axis, 1)?;
            }
            Experiment::ShScan(p) => {
                p.sh.validate(d)?;
                at_least("grid_per_axis", p.grid_per_axis, 1)?;
                check_template(&p.template, &p.amplitudes, d)?;
                if let Some(tol) = p.bisection_tol {
                    positive("bisection_tol", tol)?;
                }
            }
            Experiment::Mixing(p) => {
                p.grid.boxes(d)?;
                at_least("n_max", p.n_max, 2)?;
            }
            Experiment::Transitivity(p) => {
                p.grid.boxes(d)?;
                at_least("n_union", p.n_union, 1)?;
            }
            Experiment::Nonwandering(p) => {
                p.grid.boxes(d)?;
                at_least("n_max", p.n_max, 1)?;
                if p.iterates.is_empty() || p.iterates.contains(&0) {
                    return invalid("iterates must be a nonempty list of positive powers");
                }
            }
            Experiment::Periodic(p) => {
                p.seed_grid.boxes(d)?;
                if let Some(r) = p.reference_grid {
                    r.boxes(d)?;
                }
                at_least("k_max", p.k_max, 1)?;
                positive("tol", p.tol)?;
            }
            Experiment::Minimality(p) => {
                p.grid.boxes(d)?;
                if !(p.leaf_radius >= 1.0 && p.leaf_radius.is_finite()) {
                    return invalid("leaf_radius must be at least 1");
                }
            }
            Experiment::RobustSuite(p) => {
                p.sh.validate(d)?;
                at_least("grid_per_axis", p.grid_per_axis, 1)?;
                check_template(&p.template, &p.amplitudes, d)?;
                p.mixing_grid.boxes(d)?;
                at_least("mixing_n_max", p.mixing_n_max, 2)?;
                p.periodic_seed_grid.boxes(d)?;
                at_least("periodic_k_max", p.periodic_k_max, 1)?;
                positive("periodic_tol", p.periodic_tol)?;
            }
        }
        Ok(f)
    }
}

fn point_of(coords: &[f64], dim: usize) -> Result<TorusPoint> {
    if coords.len() != dim {
        return invalid(format!(
            "point has {} coordinates, map has {dim}",
            coords.len()
        ));
    }
    TorusPoint::new(coords.to_vec())
}

fn check_template(t: &ShearTemplate, amplitudes: &[f64], dim: usize) -> Result<()> {
    if t.center.len() != dim || t.direction.len() != dim {
        return invalid("shear template center/direction dimension mismatch");
    }
    if !(t.support_radius > 0.0 && t.support_radius < 0.5) {
        return invalid("shear support_radius must lie in (0, 0.5)");
    }
    if amplitudes.is_empty() || amplitudes.iter().any(|a| !a.is_finite()) {
        return invalid("amplitudes must be a nonempty list of finite numbers");
    }
    Ok(())
}

fn access_budget(p: &AccessParams, dim: usize, seed: u64) -> PathSearchBudget {
    let base = PathSearchBudget::default_for(dim);
    PathSearchBudget {
        max_legs: p.max_legs.unwrap_or(base.max_legs),
        max_leg_length: p.max_leg_length.unwrap_or(base.max_leg_length),
        tolerance: p.delta,
        multistarts: p.multistarts.unwrap_or(base.multistarts),
        seed,
        step: p.step.unwrap_or(base.step),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub library_version: String,
    pub config: ExperimentConfig,
    pub artifacts: Vec<ArtifactRecord>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub test: String,
    pub map: MapSpec,
    pub params: Value,
    /// Null when the experiment failed numerically.
    pub verdict: Value,
    pub evidence_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Formats with 17 significant digits, '.' decimal point.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn coord_header(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}{i}")).collect()
}

fn coord_cells(p: &TorusPoint) -> Vec<String> {
    p.coords().iter().map(|&c| fmt_f64(c)).collect()
}

/// Writes artifacts into one directory and records their hashes.
pub struct ArtifactWriter {
    dir: PathBuf,
    records: Vec<ArtifactRecord>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records(&self) -> &[ArtifactRecord] {
        &self.records
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.records.retain(|r| r.file != name);
        self.records.push(ArtifactRecord {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn csv<I>(&mut self, name: &str, header: &[String], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(&row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        self.bytes(name, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Io(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Render every polyline or matrix CSV to SVG with this coordinate pair.
    pub render: Option<(usize, usize)>,
}

/// Validates and runs `config`, writing into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest> {
    run_experiment_with(config, RunOptions::default())
}

pub fn run_experiment_with(config: &ExperimentConfig, options: RunOptions) -> Result<RunManifest> {
    let f = config.validate()?;
    if let Some((a, b)) = options.render {
        if a == b || a >= f.dim() || b >= f.dim() {
            return invalid(format!(
                "projection ({a},{b}) invalid for dimension {}",
                f.dim()
            ));
        }
    }
    let started = Instant::now();
    let mut out = ArtifactWriter::new(&config.output_dir)?;
    let outcome = execute(config, &f, &mut out);
    let (verdict, evidence, error) = match outcome {
        Ok((v, evidence)) => (v, evidence, None),
        Err(Error::Io(e)) => return Err(Error::Io(e)),
        Err(e) => {
            log::warn!("{} experiment failed: {e}", config.experiment.name());
            (Value::Null, String::new(), Some(e.to_string()))
        }
    };
    out.json(
        VERDICT_FILE,
        &Verdict {
            test: config.experiment.name().to_string(),
            map: config.map.clone(),
            params: config.experiment.parameters(),
            verdict,
            evidence_path: evidence,
            error,
        },
    )?;
    if let Some(projection) = options.render {
        render_outputs(&mut out, projection)?;
    }
    let manifest = RunManifest {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        artifacts: out.records.clone(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    out.json(MANIFEST_FILE, &manifest)?;
    Ok(manifest)
}

fn render_outputs(out: &mut ArtifactWriter, projection: (usize, usize)) -> Result<()> {
    let renderable: Vec<String> = out
        .records
        .iter()
        .map(|r| r.file.clone())
        .filter(|f| render::RENDERABLE.iter().any(|r| f == r))
        .collect();
    for file in renderable {
        let text = std::fs::read_to_string(out.dir.join(&file))?;
        let svg = render::render_svg(&text, projection)?;
        out.bytes(&file.replace(".csv", ".svg"), svg.as_bytes())?;
    }
    Ok(())
}

/// Re-reads a manifest and checks that every artifact exists and matches
/// its recorded hash.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("manifest: {e}")))?;
    for r in &manifest.artifacts {
        let bytes = std::fs::read(dir.join(&r.file))?;
        if sha256_hex(&bytes) != r.sha256 {
            return Err(Error::Io(format!(
                "{} does not match its recorded hash",
                r.file
            )));
        }
    }
    Ok(manifest)
}

type Outcome = Result<(Value, String)>;

fn execute(config: &ExperimentConfig, f: &ToralMap, out: &mut ArtifactWriter) -> Outcome {
    let seed = config.seed;
    match &config.experiment {
        Experiment::Splitting(p) => run_splitting(f, p, out),
        Experiment::Leaf(p) => run_leaf(f, p, out),
        Experiment::Access(p) => run_access(f, p, seed, out),
        Experiment::Sh(p) => run_sh(f, p, false, out),
        Experiment::ShInverse(p) => run_sh(f, p, true, out),
        Experiment::ShScan(p) => run_sh_scan(f, p, seed, out),
        Experiment::Mixing(p) => run_mixing(f, p, out),
        Experiment::Transitivity(p) => run_transitivity(f, p, out),
        Experiment::Nonwandering(p) => run_nonwandering(f, p, out),
        Experiment::Periodic(p) => run_periodic(f, p, out),
        Experiment::Minimality(p) => run_minimality(f, p, out),
        Experiment::RobustSuite(p) => run_robust_suite(f, p, seed, out),
    }
}

fn run_splitting(f: &ToralMap, p: &SplittingParams, out: &mut ArtifactWriter) -> Outcome {
    let d = f.dim();
    let grid = splitting::sample_grid(d, p.grid_per_axis);
    let frames: Vec<_> = grid
        .par_iter()
        .map(|x| splitting::estimate_splitting(f, x, p.dims, p.n_iters))
        .collect();
    let exponents: Vec<_> = grid
        .par_iter()
        .map(|x| splitting::lyapunov_exponents(f, x, p.lyapunov_iters))
        .collect();

    let mut header = vec!["index".to_string()];
    header.extend(coord_header("x", d));
    header.push("status".into());
    for (name, k) in [("e_ss", p.dims.ss), ("e_c", p.dims.c), ("e_uu", p.dims.uu)] {
        for col in 0..k {
            header.extend(coord_header(&format!("{name}_{col}_"), d));
        }
    }
    for name in [
        "invariance_residual",
        "principal_gap",
        "rate_ss",
        "rate_c",
        "rate_uu",
    ] {
        header.push(name.into());
    }
    let width = header.len();
    let rows = frames.iter().enumerate().map(|(i, fr)| {
        let mut row = vec![i.to_string()];
        row.extend(coord_cells(&grid[i]));
        match fr {
            Ok(fr) => {
                row.push("ok".into());
                for m in [&fr.e_ss, &fr.e_c, &fr.e_uu] {
                    row.extend(m.iter().map(|&v| fmt_f64(v)));
                }
                row.extend(
                    [
                        fr.invariance_residual,
                        fr.principal_gap,
                        fr.rates.ss,
                        fr.rates.c,
                        fr.rates.uu,
                    ]
                    .map(fmt_f64),
                );
            }
            Err(e) => {
                row.push(e.to_string());
                row.resize(width, String::new());
            }
        }
        row
    });
    out.csv("frames.csv", &header, rows)?;

    let mut header = vec!["index".to_string(), "status".to_string()];
    header.extend(coord_header("exponent_", d));
    let rows = exponents.iter().enumerate().map(|(i, e)| match e {
        Ok(e) => {
            let mut row = vec![i.to_string(), "ok".into()];
            row.extend(e.iter().map(|&v| fmt_f64(v)));
            row
        }
        Err(err) => {
            let mut row = vec![i.to_string(), err.to_string()];
            row.resize(d + 2, String::new());
            row
        }
    });
    out.csv("exponents.csv", &header, rows)?;

    let constants = splitting::verify_ph_constants(f, &grid, p.dims, p.n_iters);
    let failures = frames.iter().filter(|r| r.is_err()).count();
    let constants_json = match &constants {
        Ok(c) => json!({ "constants": c, "failed_points": failures }),
        Err(e) => json!({ "error": e.to_string(), "failed_points": failures }),
    };
    out.json("constants.json", &constants_json)?;
    let verdict = match constants {
        Ok(c) => {
            json!({ "verified": c.verified, "dominated": c.dominated, "failed_points": failures })
        }
        Err(e) => json!({ "verified": false, "error": e.to_string(), "failed_points": failures }),
    };
    Ok((verdict, "frames.csv".into()))
}

fn leaf_rows(leaf: &LeafSegment) -> impl Iterator<Item = Vec<String>> + '_ {
    leaf.vertices.iter().map(|v| {
        let mut row = vec![fmt_f64(v.arclength)];
        row.extend(coord_cells(&v.point));
        row
    })
}

fn leaf_header(dim: usize) -> Vec<String> {
    let mut h = vec!["arclength".to_string()];
    h.extend(coord_header("x", dim));
    h
}

fn run_leaf(f: &ToralMap, p: &LeafParams, out: &mut ArtifactWriter) -> Outcome {
    let x = point_of(&p.point, f.dim())?;
    let leaf = foliation::grow_leaf(f, &x, p.bundle, p.radius, p.step)?;
    out.csv("leaf.csv", &leaf_header(f.dim()), leaf_rows(&leaf))?;
    let mut verdict = json!({ "vertices": leaf.vertices.len() });
    if let Some(depth) = p.refine_depth {
        let refined = foliation::refine_leaf_dynamically(f, &x, p.bundle, p.radius, p.step, depth)?;
        out.csv("refined.csv", &leaf_header(f.dim()), leaf_rows(&refined))?;
        verdict["hausdorff_distance"] = json!(foliation::hausdorff_distance(&leaf, &refined)?);
    }
    Ok((verdict, "leaf.csv".into()))
}

fn matrix_rows(m: &[Vec<f64>]) -> (Vec<String>, Vec<Vec<String>>) {
    let n = m.first().map_or(0, Vec::len);
    let mut header = vec!["row".to_string()];
    header.extend((0..n).map(|j| format!("c{j}")));
    let rows = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![i.to_string()];
            row.extend(r.iter().map(|&v| fmt_f64(v)));
            row
        })
        .collect();
    (header, rows)
}

fn run_access(f: &ToralMap, p: &AccessParams, seed: u64, out: &mut ArtifactWriter) -> Outcome {
    let d = f.dim();
    let budget = access_budget(p, d, seed);
    let report =
        accessibility::open_set_accessibility_test(f, 1.0 / p.divisions as f64, p.delta, &budget)?;
    let indicator: Vec<Vec<f64>> = report
        .success
        .iter()
        .map(|r| {
            r.iter()
                .map(|&v| if v >= 0.0 { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let (header, rows) = matrix_rows(&indicator);
    out.csv("matrix.csv", &header, rows)?;
    let (header, rows) = matrix_rows(&report.success);
    out.csv("residuals.csv", &header, rows)?;
    out.json("report.json", &report)?;

    let mut verdict = json!({
        "success_rate": report.success_rate,
        "failures": report.failures.len(),
    });
    if p.class_paths > 0 {
        let start = match &p.start {
            Some(s) => point_of(s, d)?,
            None => TorusPoint::origin(d)?,
        };
        let paths = accessibility::accessibility_class_paths(f, &start, p.class_paths, &budget)?;
        let mut header = vec!["path".to_string(), "vertex".to_string()];
        header.extend(coord_header("x", d));
        let rows = paths.iter().enumerate().flat_map(|(i, path)| {
            path.vertices.iter().enumerate().map(move |(k, v)| {
                let mut row = vec![i.to_string(), k.to_string()];
                row.extend(coord_cells(v));
                row
            })
        });
        out.csv("class_paths.csv", &header, rows)?;
        let endpoints: Vec<TorusPoint> = paths.iter().map(|p| p.endpoint.clone()).collect();
        let reference = splitting::sample_grid(d, p.divisions);
        verdict["class_paths"] = json!(paths.len());
        verdict["class_covering_radius"] =
            json!(accessibility::covering_radius(&endpoints, &reference).ok());
    }
    Ok((verdict, "matrix.csv".into()))
}

fn certificate_rows(survey: &sh::ShSurvey, dim: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = coord_header("x", dim);
    header.extend(coord_header("y_u", dim));
    for name in ["arc_pos", "sigma_est", "C_est", "n_max", "l_max", "pass"] {
        header.push(name.into());
    }
    let rows = survey
        .certificates
        .iter()
        .map(|c| {
            let mut row = coord_cells(&c.x);
            row.extend(coord_cells(&c.y_u));
            row.extend([
                fmt_f64(c.arc_pos),
                fmt_f64(c.sigma_est),
                fmt_f64(c.c_est),
                c.n_max.to_string(),
                c.l_max.to_string(),
                c.pass.to_string(),
            ]);
            row
        })
        .collect();
    (header, rows)
}

fn run_sh(f: &ToralMap, p: &ShSurveyParams, inverse: bool, out: &mut ArtifactWriter) -> Outcome {
    let grid = splitting::sample_grid(f.dim(), p.grid_per_axis);
    let survey = if inverse {
        sh::sh_inverse_survey(f, &grid, &p.sh)?
    } else {
        sh::sh_survey(f, &grid, &p.sh)?
    };
    let (header, rows) = certificate_rows(&survey, f.dim());
    out.csv("certificates.csv", &header, rows)?;
    out.json("survey.json", &survey)?;
    Ok((
        json!({
            "pass": survey.pass,
            "min_sigma": survey.min_sigma,
            "failures": survey.failures.len(),
        }),
        "certificates.csv".into(),
    ))
}

fn run_sh_scan(f: &ToralMap, p: &ShScanParams, seed: u64, out: &mut ArtifactWriter) -> Outcome {
    let grid = splitting::sample_grid(f.dim(), p.grid_per_axis);
    let rows = sh::sh_robustness_scan(f, &p.amplitudes, &p.template, &grid, &p.sh, seed)?;
    let header: Vec<String> = ["amplitude", "c1", "min_sigma", "pass", "failures", "status"]
        .map(String::from)
        .to_vec();
    out.csv(
        "scan.csv",
        &header,
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.amplitude),
                fmt_opt_f64(r.c1),
                fmt_opt_f64(r.min_sigma),
                r.pass.to_string(),
                r.failures.to_string(),
                r.status.clone(),
            ]
        }),
    )?;
    let mut verdict = json!({
        "rows": rows.len(),
        "passing": rows.iter().filter(|r| r.pass).count(),
    });
    if let Some(tol) = p.bisection_tol {
        let threshold = sh::pass_threshold(f, &p.template, &grid, &p.sh, tol, seed)?;
        out.json("threshold.json", &threshold)?;
        verdict["a_star"] = json!(threshold.a_star);
    }
    Ok((verdict, "scan.csv".into()))
}

fn edge_rows(g: &global::TransitionGraph) -> Vec<Vec<String>> {
    g.adjacency
        .iter()
        .enumerate()
        .flat_map(|(i, t)| t.iter().map(move |j| vec![i.to_string(), j.to_string()]))
        .collect()
}

fn edge_header() -> Vec<String> {
    vec!["source".into(), "target".into()]
}

fn run_mixing(f: &ToralMap, p: &MixingParams, out: &mut ArtifactWriter) -> Outcome {
    let grid = p.grid.boxes(f.dim())?;
    let graph = global::transition_graph(f, &grid, 1)?;
    out.csv("transitions.csv", &edge_header(), edge_rows(&graph))?;
    let report = global::mixing_test(f, &grid, p.n_max)?;
    out.csv(
        "coverage.csv",
        &["iterate".to_string(), "coverage".to_string()],
        report
            .coverage
            .iter()
            .enumerate()
            .map(|(m, c)| vec![(m + 1).to_string(), fmt_f64(*c)]),
    )?;
    out.json("mixing.json", &report)?;
    Ok((json!({ "n0": report.n0 }), "coverage.csv".into()))
}

fn run_transitivity(f: &ToralMap, p: &TransitivityParams, out: &mut ArtifactWriter) -> Outcome {
    let grid = p.grid.boxes(f.dim())?;
    let graph = global::transition_graph(f, &grid, 1)?;
    out.csv("transitions.csv", &edge_header(), edge_rows(&graph))?;
    let transitive = global::transitivity_test(f, &grid, p.n_union)?;
    Ok((
        json!({ "transitive": transitive }),
        "transitions.csv".into(),
    ))
}

fn run_nonwandering(f: &ToralMap, p: &NonwanderingParams, out: &mut ArtifactWriter) -> Outcome {
    let grid = p.grid.boxes(f.dim())?;
    let mut fractions = Vec::new();
    let mut first = None;
    for &k in &p.iterates {
        let g = if k == 1 { f.clone() } else { f.iterate(k) };
        let report = global::nonwandering_test(&g, &grid, p.n_max)?;
        fractions.push((k, report.fraction));
        if first.is_none() {
            first = Some(report);
        }
    }
    out.csv(
        "nonwandering.csv",
        &["power".to_string(), "fraction".to_string()],
        fractions
            .iter()
            .map(|(k, v)| vec![k.to_string(), fmt_f64(*v)]),
    )?;
    let first = first.expect("iterates validated nonempty");
    out.csv(
        "return_times.csv",
        &["box".to_string(), "return_time".to_string()],
        first
            .return_times
            .iter()
            .enumerate()
            .map(|(i, t)| vec![i.to_string(), fmt_opt(*t)]),
    )?;
    let by_power: serde_json::Map<String, Value> = fractions
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    Ok((json!({ "fraction": by_power }), "nonwandering.csv".into()))
}

fn pooled_periodic(
    f: &ToralMap,
    k_max: usize,
    seed_grid: &BoxGrid,
    tol: f64,
) -> Result<Vec<global::PeriodicPoint>> {
    let mut all = Vec::new();
    for k in 1..=k_max {
        all.extend(global::find_periodic_points(f, k, seed_grid, tol)?);
    }
    Ok(all)
}

fn run_periodic(f: &ToralMap, p: &PeriodicParams, out: &mut ArtifactWriter) -> Outcome {
    let d = f.dim();
    let seed_grid = p.seed_grid.boxes(d)?;
    let reference = p.reference_grid.unwrap_or(p.seed_grid).boxes(d)?;
    let points = pooled_periodic(f, p.k_max, &seed_grid, p.tol)?;
    let mut header = vec!["k".to_string()];
    header.extend(coord_header("x", d));
    header.extend(["hyperbolic".to_string(), "residual".to_string()]);
    out.csv(
        "periodic.csv",
        &header,
        points.iter().map(|q| {
            let mut row = vec![q.period.to_string()];
            row.extend(coord_cells(&q.point));
            row.extend([q.hyperbolic().to_string(), fmt_f64(q.residual)]);
            row
        }),
    )?;
    let counts: Vec<usize> = (1..=p.k_max)
        .map(|k| points.iter().filter(|q| q.period == k).count())
        .collect();
    let gap = global::periodic_density_gap(&points, &reference);
    let verdict = json!({
        "counts": counts,
        "degenerate": points.iter().filter(|q| q.degenerate).count(),
        "gap": gap.as_ref().ok(),
        "gap_status": gap.as_ref().err().map(|e| e.to_string()).unwrap_or_else(|| "ok".into()),
    });
    out.json("periodic.json", &verdict)?;
    Ok((verdict, "periodic.csv".into()))
}

fn run_minimality(f: &ToralMap, p: &MinimalityParams, out: &mut ArtifactWriter) -> Outcome {
    let grid = p.grid.boxes(f.dim())?;
    let report = global::minimality_test(f, p.bundle, p.leaf_radius, &grid)?;
    out.csv(
        "minimality.csv",
        &["box".to_string(), "visited".to_string()],
        report
            .visited
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), fmt_opt(*v)]),
    )?;
    Ok((
        json!({
            "covered_fraction": report.covered_fraction,
            "worst_box": report.worst_box,
            "minimal": report.covered_fraction == 1.0,
        }),
        "minimality.csv".into(),
    ))
}

/// One robust-suite row: hypotheses (SH for g and g^-1) next to the
/// conclusions they are meant to imply (mixing, dense periodic points).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustRow {
    pub amplitude: f64,
    pub c1: Option<f64>,
    pub sh_pass: Option<bool>,
    pub sh_inverse_pass: Option<bool>,
    pub mixing_n0: Option<usize>,
    pub periodic_gap: Option<f64>,
    pub status: String,
}

fn robust_row(
    f: &ToralMap,
    p: &RobustSuiteParams,
    amplitude: f64,
    grid: &[TorusPoint],
    seed: u64,
) -> Result<RobustRow> {
    let d = f.dim();
    let mut row = RobustRow {
        amplitude,
        c1: None,
        sh_pass: None,
        sh_inverse_pass: None,
        mixing_n0: None,
        periodic_gap: None,
        status: "ok".into(),
    };
    let g = match ToralMap::new(p.template.spec(f.spec(), amplitude)) {
        Ok(g) => g,
        Err(e) => {
            row.status = format!("invalid-spec: {e}");
            return Ok(row);
        }
    };
    let mut notes = Vec::new();
    let mut note = |what: &str, e: Error| notes.push(format!("{what}: {e}"));
    match c1_distance_estimate(f, &g, sh::SCAN_C1_SAMPLES, seed) {
        Ok(c) => row.c1 = Some(c.c1),
        Err(e) => note("c1", e),
    }
    match sh::sh_survey(&g, grid, &p.sh) {
        Ok(s) => row.sh_pass = Some(s.pass),
        Err(e) => note("sh", e),
    }
    match sh::sh_inverse_survey(&g, grid, &p.sh) {
        Ok(s) => row.sh_inverse_pass = Some(s.pass),
        Err(e) => note("sh-inverse", e),
    }
    match global::mixing_test(&g, &p.mixing_grid.boxes(d)?, p.mixing_n_max) {
        Ok(m) => row.mixing_n0 = m.n0,
        Err(e) => note("mixing", e),
    }
    let seed_grid = p.periodic_seed_grid.boxes(d)?;
    match pooled_periodic(&g, p.periodic_k_max, &seed_grid, p.periodic_tol)
        .and_then(|pts| global::periodic_density_gap(&pts, &seed_grid))
    {
        Ok(gap) => row.periodic_gap = Some(gap),
        Err(e) => note("periodic", e),
    }
    if !notes.is_empty() {
        row.status = format!("failed: {}", notes.join("; "));
    }
    Ok(row)
}

fn run_robust_suite(
    f: &ToralMap,
    p: &RobustSuiteParams,
    seed: u64,
    out: &mut ArtifactWriter,
) -> Outcome {
    let grid = splitting::sample_grid(f.dim(), p.grid_per_axis);
    let mut amplitudes = p.amplitudes.clone();
    amplitudes.sort_by(f64::total_cmp);
    let rows = amplitudes
        .iter()
        .map(|&a| robust_row(f, p, a, &grid, seed))
        .collect::<Result<Vec<_>>>()?;
    let header: Vec<String> = [
        "amplitude",
        "c1",
        "sh_pass",
        "sh_inverse_pass",
        "mixing_n0",
        "periodic_gap",
        "status",
    ]
    .map(String::from)
    .to_vec();
    out.csv(
        "robust_suite.csv",
        &header,
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.amplitude),
                fmt_opt_f64(r.c1),
                fmt_opt(r.sh_pass),
                fmt_opt(r.sh_inverse_pass),
                fmt_opt(r.mixing_n0),
                fmt_opt_f64(r.periodic_gap),
                r.status.clone(),
            ]
        }),
    )?;
    out.json("robust_suite.json", &rows)?;
    Ok((
        json!({
            "rows": rows.len(),
            "sh_pass": rows.iter().filter(|r| r.sh_pass == Some(true)).count(),
            "mixing": rows.iter().filter(|r| r.mixing_n0.is_some()).count(),
        }),
        "robust_suite.csv".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::catalog;

    fn config(map: MapSpec, experiment: Experiment, dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            map,
            experiment,
            seed: 3,
            output_dir: dir.to_path_buf(),
        }
    }

    #[test]
    fn config_json_shape_and_round_trip() {
        let text = r#"{
            "schema_version": 1,
            "map": {"variant": "LinearToral", "matrix": [[2, 1], [1, 1]]},
            "experiment": "mixing",
            "parameters": {"grid": {"divisions": 8}, "n_max": 10},
            "seed": 7,
            "output_dir": "out"
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.experiment.name(), "mixing");
        match &c.experiment {
            Experiment::Mixing(p) => assert_eq!(p.grid.samples_per_box, 4),
            other => panic!("parsed as {other:?}"),
        }
        let once = c.to_json();
        let twice = ExperimentConfig::from_json(&once).unwrap().to_json();
        assert_eq!(once, twice);
        let v: Value = serde_json::from_str(&once).unwrap();
        assert_eq!(v["experiment"], "mixing");
        assert_eq!(v["parameters"]["n_max"], 10);
    }

    #[test]
    fn every_experiment_name_round_trips() {
        let dims = BundleDims::new(1, 1, 1);
        let grid = GridSpec {
            divisions: 8,
            samples_per_box: 4,
        };
        let template = ShearTemplate {
            center: vec![0.0; 3],
            support_radius: 0.2,
            direction: vec![0.0, 0.0, 1.0],
        };
        let all = vec![
            Experiment::Splitting(SplittingParams {
                dims,
                grid_per_axis: 2,
                n_iters: 60,
                lyapunov_iters: 100,
            }),
            Experiment::Leaf(LeafParams {
                point: vec![0.1; 3],
                bundle: StrongBundle::Uu,
                radius: 1.0,
                step: 0.01,
                refine_depth: None,
            }),
            Experiment::Access(AccessParams {
                divisions: 2,
                delta: 0.05,
                max_legs: None,
                max_leg_length: None,
                multistarts: None,
                step: None,
                class_paths: 0,
                start: None,
            }),
            Experiment::Sh(ShSurveyParams {
                sh: ShParams::new(dims),
                grid_per_axis: 2,
            }),
            Experiment::ShInverse(ShSurveyParams {
                sh: ShParams::new(dims),
                grid_per_axis: 2,
            }),
            Experiment::ShScan(ShScanParams {
                sh: ShParams::new(dims),
                grid_per_axis: 2,
                template: template.clone(),
                amplitudes: vec![0.0],
                bisection_tol: None,
            }),
            Experiment::Mixing(MixingParams { grid, n_max: 4 }),
            Experiment::Transitivity(TransitivityParams { grid, n_union: 2 }),
            Experiment::Nonwandering(NonwanderingParams {
                grid,
                n_max: 2,
                iterates: vec![1],
            }),
            Experiment::Periodic(PeriodicParams {
                seed_grid: grid,
                k_max: 1,
                tol: 1e-10,
                reference_grid: None,
            }),
            Experiment::Minimality(MinimalityParams {
                bundle: StrongBundle::Ss,
                leaf_radius: 1.0,
                grid,
            }),
            Experiment::RobustSuite(RobustSuiteParams {
                sh: ShParams::new(dims),
                grid_per_axis: 2,
                template,
                amplitudes: vec![0.0],
                mixing_grid: grid,
                mixing_n_max: 4,
                periodic_k_max: 1,
                periodic_seed_grid: grid,
                periodic_tol: 1e-10,
            }),
        ];
        let dir = Path::new("unused");
        for (e, name) in all.into_iter().zip(EXPERIMENT_NAMES) {
            assert_eq!(e.name(), name);
            let c = config(catalog::heptagonal(), e, dir);
            c.validate().unwrap();
            let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let dir = Path::new("unused");
        let bad_grid = config(
            catalog::cat_map(),
            Experiment::Mixing(MixingParams {
                grid: GridSpec {
                    divisions: 10,
                    samples_per_box: 4,
                },
                n_max: 5,
            }),
            dir,
        );
        assert!(matches!(bad_grid.validate(), Err(Error::InvalidInput(_))));

        let bad_map = config(
            MapSpec::LinearToral {
                matrix: vec![vec![2, 0], vec![0, 1]],
            },
            Experiment::Mixing(MixingParams {
                grid: GridSpec {
                    divisions: 8,
                    samples_per_box: 4,
                },
                n_max: 5,
            }),
            dir,
        );
        assert!(matches!(bad_map.validate(), Err(Error::InvalidSpec(_))));

        let bad_dims = config(
            catalog::cat_map(),
            Experiment::Sh(ShSurveyParams {
                sh: ShParams::new(BundleDims::new(1, 1, 1)),
                grid_per_axis: 2,
            }),
            dir,
        );
        assert!(bad_dims.validate().is_err());

        let mut wrong_version = bad_dims.clone();
        wrong_version.schema_version = 99;
        assert!(wrong_version.validate().is_err());
    }

    #[test]
    fn periodic_run_writes_hashed_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let c = config(
            catalog::cat_map(),
            Experiment::Periodic(PeriodicParams {
                seed_grid: GridSpec {
                    divisions: 16,
                    samples_per_box: 4,
                },
                k_max: 2,
                tol: 1e-10,
                reference_grid: None,
            }),
            tmp.path(),
        );
        let manifest = run_experiment(&c).unwrap();
        let files: Vec<&str> = manifest.artifacts.iter().map(|a| a.file.as_str()).collect();
        assert_eq!(files, vec!["periodic.csv", "periodic.json", "verdict.json"]);
        verify_manifest(tmp.path()).unwrap();
        let verdict: Verdict =
            serde_json::from_str(&std::fs::read_to_string(tmp.path().join(VERDICT_FILE)).unwrap())
                .unwrap();
        assert_eq!(verdict.test, "periodic");
        assert_eq!(verdict.verdict["counts"], json!([1, 5]));
        let csv = std::fs::read_to_string(tmp.path().join("periodic.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 6);
        assert!(csv.starts_with("k,x0,x1,hyperbolic,residual\n"));

        std::fs::write(tmp.path().join("periodic.csv"), "tampered").unwrap();
        assert!(verify_manifest(tmp.path()).is_err());
    }

    #[test]
    fn undefined_results_are_recorded_not_fatal() {
        // an irrational translation has no periodic points, so the density
        // gap is undefined
        let tmp = tempfile::tempdir().unwrap();
        let c = config(
            catalog::translation(&[0.5f64.sqrt(), 3f64.sqrt() - 1.0]),
            Experiment::Periodic(PeriodicParams {
                seed_grid: GridSpec {
                    divisions: 8,
                    samples_per_box: 4,
                },
                k_max: 2,
                tol: 1e-10,
                reference_grid: None,
            }),
            tmp.path(),
        );
        run_experiment(&c).unwrap();
        let verdict: Verdict =
            serde_json::from_str(&std::fs::read_to_string(tmp.path().join(VERDICT_FILE)).unwrap())
                .unwrap();
        assert_eq!(verdict.verdict["counts"], json!([0, 0]));
        assert_eq!(verdict.verdict["gap"], Value::Null);
        assert!(verdict.verdict["gap_status"]
            .as_str()
            .unwrap()
            .starts_with("undefined"));
    }

    #[test]
    fn robust_suite_marks_invalid_amplitudes() {
        let tmp = tempfile::tempdir().unwrap();
        let template = ShearTemplate {
            center: vec![0.0; 3],
            support_radius: 0.1,
            direction: vec![0.0, 0.0, 1.0],
        };
        let too_big = 2.0 * template.amplitude_bound();
        let grid = GridSpec {
            divisions: 8,
            samples_per_box: 4,
        };
        let c = config(
            catalog::heptagonal(),
            Experiment::RobustSuite(RobustSuiteParams {
                sh: ShParams::new(BundleDims::new(1, 1, 1)),
                grid_per_axis: 2,
                template,
                amplitudes: vec![too_big, 0.0],
                mixing_grid: grid,
                mixing_n_max: 10,
                periodic_k_max: 1,
                periodic_seed_grid: grid,
                periodic_tol: 1e-10,
            }),
            tmp.path(),
        );
        run_experiment(&c).unwrap();
        let rows: Vec<RobustRow> = serde_json::from_str(
            &std::fs::read_to_string(tmp.path().join("robust_suite.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(rows[0].amplitude, 0.0);
        assert_eq!(rows[0].status, "ok");
        assert_eq!(rows[0].c1, Some(0.0));
        assert!(rows[0].mixing_n0.is_some());
        assert!(rows[1].status.starts_with("invalid-spec"));
    }

    #[test]
    fn fmt_is_seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }
}
