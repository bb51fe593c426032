//! `geoinr train`, from flags or from an earlier run's manifest.

use std::io::Write;
use std::path::Path;

use geoinr::geodata::SubgroupThresholds;
use geoinr::inr::{ModelConfig, TrainConfig};

use super::grid_format;
use crate::error::{CliError, Result};
use crate::plan::{check_fingerprint, execute, read_manifest, RunOutcome, TrainPlan};
use crate::TrainArgs;

/// Builds the plan described by command-line flags.
pub fn plan_from_args(a: &TrainArgs) -> Result<TrainPlan> {
    let grid = a.grid.as_deref().ok_or_else(|| CliError::Usage("--grid is required".into()))?;
    let grid = grid.canonicalize().map_err(|_| CliError::MissingArtifact(grid.to_path_buf()))?;
    let encoding = a.encoding.as_deref().ok_or_else(|| CliError::Usage("--encoding is required".into()))?;
    let defaults = SubgroupThresholds::default();
    let train = TrainConfig {
        learning_rate: a.lr,
        batch_size: a.batch_size,
        max_epochs: a.epochs,
        weight_decay: a.weight_decay,
        seed: a.seed,
        validation_fraction: a.val_fraction,
        early_stop_patience: a.patience,
    };
    train.validate()?;
    let plan = TrainPlan {
        format: grid_format(&grid, a.format.as_deref())?,
        grid,
        samples: a.samples,
        sampling: a.sampling.parse()?,
        data_seed: a.data_seed.unwrap_or(a.seed),
        encoding: encoding.parse()?,
        model: ModelConfig { hidden_dim: a.hidden_dim, n_layers: a.layers, omega0: a.omega0 },
        train,
        thresholds: SubgroupThresholds {
            island_max_km2: a.island_max_km2.unwrap_or(defaults.island_max_km2),
            coast_band_km: a.coast_band_km.unwrap_or(defaults.coast_band_km),
        },
    };
    plan.encoding.validate()?;
    Ok(plan)
}

/// Trains into `out`, from a manifest when given.
pub fn train_to(plan: &TrainPlan, manifest: Option<&geoinr::config::KvDocument>, out: &Path) -> Result<RunOutcome> {
    let grid = plan.load_grid()?;
    if let Some(doc) = manifest {
        check_fingerprint(doc, &grid)?;
    }
    execute(plan, &grid, out)
}

pub fn run(args: TrainArgs, stdout: &mut dyn Write) -> Result<()> {
    let (plan, doc) = match &args.manifest {
        Some(path) => {
            let (doc, plan) = read_manifest(path)?;
            (plan, Some(doc))
        }
        None => (plan_from_args(&args)?, None),
    };
    let outcome = train_to(&plan, doc.as_ref(), &args.out)?;
    let h = &outcome.history;
    writeln!(
        stdout,
        "trained {} for {} epochs; best epoch {} with validation loss {:.6}",
        plan.encoding,
        h.epochs(),
        h.best_epoch + 1,
        h.best_val_loss()
    )?;
    writeln!(stdout, "full-grid mean loss {:.6}", outcome.evaluation.mean_loss())?;
    if let Some(report) = &outcome.report {
        for (g, s) in &report.groups {
            writeln!(stdout, "  {g}: {:.6} over {} cells", s.mean, s.count)?;
        }
    }
    writeln!(stdout, "artifacts in {}", args.out.display())?;
    Ok(())
}
