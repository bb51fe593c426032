//! A fully specified training run and its `key=value` run manifest.
//!
//! ```text
//! tool_version=0.1.0
//! command=train
//!
//! [data]
//! grid=/abs/path/grid.fgrid
//! format=fairgrid
//! samples=10000
//! sampling=grid_uniform
//! data_seed=0
//!
//! [encoding]
//! spec=sh:L=20
//!
//! [model]  [train]  [thresholds]  [derived]  [outputs]
//! ```
//!
//! Sweep configs use the same sections with `{a,b}` lists in values.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use geoinr::config::KvDocument;
use geoinr::encodings::{Encoder, EncodingSpec};
use geoinr::fairness::{stratify, ReportManifest, StratifiedReport};
use geoinr::geodata::{
    derive_subgroups, label_landmasses, read_grid, sample_points, GridDataset, GridFormat, SampleSet, SamplingMode,
    SubgroupThresholds, TaskKind,
};
use geoinr::inr::{evaluate, to_checkpoint_bytes, train, Evaluation, ModelConfig, SirenModel, TrainConfig, TrainHistory};

use crate::artifacts::ArtifactGuard;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CHECKPOINT_FILE: &str = "model.bin";
pub const HISTORY_FILE: &str = "history.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const STRATIFIED_FILE: &str = "stratified.csv";
pub const REPORT_MANIFEST_FILE: &str = "report_manifest.json";

/// Added to the data seed for the validation draw.
const VALIDATION_SEED_OFFSET: u64 = 0x5EED_0000_0001;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainPlan {
    pub grid: PathBuf,
    pub format: GridFormat,
    pub samples: usize,
    pub sampling: SamplingMode,
    pub data_seed: u64,
    pub encoding: EncodingSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub thresholds: SubgroupThresholds,
}

fn format_name(f: GridFormat) -> &'static str {
    match f {
        GridFormat::Csv => "csv",
        GridFormat::Fairgrid => "fairgrid",
    }
}

impl TrainPlan {
    pub fn validation_seed(&self) -> u64 {
        self.data_seed.wrapping_add(VALIDATION_SEED_OFFSET)
    }

    pub fn validation_samples(&self) -> usize {
        self.train.validation_size(self.samples)
    }

    /// The reproducible part of the manifest: every input, no outputs.
    pub fn to_kv(&self) -> KvDocument {
        let mut doc = KvDocument::new();
        doc.set("", "tool_version", env!("CARGO_PKG_VERSION"));
        doc.set("", "command", "train");
        doc.set("data", "grid", self.grid.display());
        doc.set("data", "format", format_name(self.format));
        doc.set("data", "samples", self.samples);
        doc.set("data", "sampling", self.sampling.as_str());
        doc.set("data", "data_seed", self.data_seed);
        doc.set("encoding", "spec", self.encoding);
        self.model.write_kv(&mut doc, "model");
        self.train.write_kv(&mut doc, "train");
        doc.set("thresholds", "island_max_km2", self.thresholds.island_max_km2);
        doc.set("thresholds", "coast_band_km", self.thresholds.coast_band_km);
        doc
    }

    /// Reads a plan from a manifest or an expanded sweep config. Relative grid
    /// paths are resolved against `base`.
    pub fn from_kv(doc: &KvDocument, base: &Path) -> Result<Self> {
        let grid = PathBuf::from(doc.get("data", "grid").ok_or_else(|| CliError::Usage("[data] grid is required".into()))?);
        let grid = if grid.is_relative() { base.join(grid) } else { grid };
        let format = match doc.get("data", "format") {
            Some(f) => f.parse()?,
            None => GridFormat::from_path(&grid),
        };
        let train = TrainConfig::from_kv(doc, "train")?;
        let defaults = SubgroupThresholds::default();
        Ok(Self {
            grid,
            format,
            samples: doc.parse_or("data", "samples", 10_000)?,
            sampling: doc.parse_or("data", "sampling", SamplingMode::GridUniform)?,
            data_seed: doc.parse_or("data", "data_seed", train.seed)?,
            encoding: doc.parse("encoding", "spec")?,
            model: ModelConfig::from_kv(doc, "model")?,
            train,
            thresholds: SubgroupThresholds {
                island_max_km2: doc.parse_or("thresholds", "island_max_km2", defaults.island_max_km2)?,
                coast_band_km: doc.parse_or("thresholds", "coast_band_km", defaults.coast_band_km)?,
            },
        })
    }

    /// Content hash of everything that determines the run, with the grid
    /// identified by its fingerprint rather than its path.
    pub fn config_id(&self, grid_fingerprint: &str) -> String {
        let mut doc = self.to_kv();
        doc.set("data", "grid", grid_fingerprint);
        doc.set("", "tool_version", "");
        hex::encode(&Sha256::digest(doc.to_string().as_bytes())[..6])
    }

    pub fn load_grid(&self) -> Result<GridDataset> {
        let grid = read_grid(&self.grid, self.format)?;
        Ok(with_subgroups(grid, &self.thresholds)?)
    }
}

/// Fills in landmass labels and subgroups when the grid has a land mask but
/// no subgroup plane.
pub fn with_subgroups(grid: GridDataset, thresholds: &SubgroupThresholds) -> geoinr::Result<GridDataset> {
    if grid.subgroup.is_some() {
        return Ok(grid);
    }
    let labelled = match (&grid.landmass_id, grid.task) {
        (Some(_), _) => grid,
        (None, TaskKind::BinaryClassification) => label_landmasses(&grid)?.0,
        (None, TaskKind::Regression) => return Ok(grid),
    };
    derive_subgroups(&labelled, thresholds)
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: SirenModel,
    pub history: TrainHistory,
    pub evaluation: Evaluation,
    pub report: Option<StratifiedReport>,
}

/// Samples, trains, evaluates on the full grid and writes every artifact
/// into `out_dir`. Artifacts are removed again if any step fails.
pub fn execute(plan: &TrainPlan, grid: &GridDataset, out_dir: &Path) -> Result<RunOutcome> {
    let mut guard = ArtifactGuard::new();
    guard.create_dir(out_dir)?;

    let train_set = sample_points(grid, plan.samples, plan.sampling, plan.data_seed)?;
    let validation = sample_points(grid, plan.validation_samples(), plan.sampling, plan.validation_seed())?;
    let encoder = Encoder::new(&plan.encoding)?;
    let (model, history) = train(&train_set, &validation, &encoder, &plan.model, &plan.train)?;
    let full = SampleSet::full_grid(grid);
    let evaluation = evaluate(&model, &encoder, &full)?;
    let report = match &full.subgroups {
        Some(groups) => Some(stratify(&evaluation.losses, groups)?),
        None => None,
    };

    let mut doc = plan.to_kv();
    doc.set("derived", "grid_fingerprint", &train_set.grid_fingerprint);
    doc.set("derived", "encoding_fingerprint", encoder.fingerprint());
    doc.set("derived", "encoding_length", encoder.len());
    doc.set("derived", "validation_samples", validation.len());
    doc.set("derived", "validation_seed", plan.validation_seed());
    doc.set("derived", "params_fingerprint", &history.params_fingerprint);
    doc.set("derived", "best_epoch", history.best_epoch + 1);
    doc.set("outputs", "checkpoint", CHECKPOINT_FILE);
    doc.set("outputs", "history", HISTORY_FILE);
    doc.set("outputs", "timing", TIMING_FILE);

    guard.write(&out_dir.join(CHECKPOINT_FILE), to_checkpoint_bytes(&model))?;
    let mut buf = Vec::new();
    history.write_csv(&mut buf)?;
    guard.write(&out_dir.join(HISTORY_FILE), &buf)?;
    buf.clear();
    history.write_timing_csv(&mut buf)?;
    guard.write(&out_dir.join(TIMING_FILE), &buf)?;
    if let Some(report) = &report {
        doc.set("outputs", "stratified", STRATIFIED_FILE);
        buf.clear();
        report.write_csv(&mut buf, 1.0)?;
        guard.write(&out_dir.join(STRATIFIED_FILE), &buf)?;
        let mut rm = ReportManifest::new(MANIFEST_FILE, 1.0);
        rm.files.push(STRATIFIED_FILE.into());
        guard.write(&out_dir.join(REPORT_MANIFEST_FILE), rm.to_json())?;
    }
    guard.write(&out_dir.join(MANIFEST_FILE), doc.to_string())?;
    guard.commit();
    Ok(RunOutcome { model, history, evaluation, report })
}

/// Reads a run manifest and its plan, resolving relative paths against the
/// manifest's directory. Errors if the grid no longer matches the recorded
/// fingerprint.
pub fn read_manifest(path: &Path) -> Result<(KvDocument, TrainPlan)> {
    let text = fs::read_to_string(path).map_err(|_| CliError::MissingArtifact(path.to_path_buf()))?;
    let doc: KvDocument = text.parse()?;
    let base = path.parent().unwrap_or(Path::new("."));
    let plan = TrainPlan::from_kv(&doc, base)?;
    Ok((doc, plan))
}

pub fn check_fingerprint(doc: &KvDocument, grid: &GridDataset) -> Result<()> {
    if let Some(expected) = doc.get("derived", "grid_fingerprint") {
        let actual = grid.fingerprint();
        if expected != actual {
            return Err(CliError::Usage(format!("grid fingerprint {actual} does not match the manifest's {expected}")));
        }
    }
    Ok(())
}
