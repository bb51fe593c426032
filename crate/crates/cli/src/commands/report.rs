//! `geoinr report` on a run directory or a sweep directory.

use std::io::Write;
use std::path::Path;

use geoinr::encodings::Encoder;
use geoinr::fairness::{binned_error_grid, country_extremes, stratify, sweep_correlation, ReportManifest};
use geoinr::geodata::{SampleSet, Subgroup};
use geoinr::inr::{evaluate, load_checkpoint};

use super::sweep::{load_table, SWEEP_FILE};
use crate::artifacts::ArtifactGuard;
use crate::error::{CliError, Result};
use crate::plan::{check_fingerprint, read_manifest, CHECKPOINT_FILE, MANIFEST_FILE, REPORT_MANIFEST_FILE, STRATIFIED_FILE};
use crate::ReportArgs;

pub const CORRELATION_FILE: &str = "correlation.csv";
pub const COUNTRIES_FILE: &str = "countries.csv";
pub const ERROR_GRID_FILE: &str = "error_grid.csv";

pub fn run(args: ReportArgs, stdout: &mut dyn Write) -> Result<()> {
    if !(args.loss_scale > 0.0 && args.loss_scale.is_finite()) {
        return Err(CliError::Usage(format!("--loss-scale must be positive, got {}", args.loss_scale)));
    }
    if args.dir.join(SWEEP_FILE).exists() {
        report_sweep(&args, stdout)
    } else if args.dir.join(MANIFEST_FILE).exists() {
        report_run(&args, stdout)
    } else {
        Err(CliError::MissingArtifact(args.dir.join(MANIFEST_FILE)))
    }
}

fn report_run(args: &ReportArgs, stdout: &mut dyn Write) -> Result<()> {
    let dir = &args.dir;
    let (doc, plan) = read_manifest(&dir.join(MANIFEST_FILE))?;
    let ckpt = dir.join(CHECKPOINT_FILE);
    if !ckpt.exists() {
        return Err(CliError::MissingArtifact(ckpt));
    }
    let model = load_checkpoint(&ckpt)?;
    let grid = plan.load_grid()?;
    check_fingerprint(&doc, &grid)?;
    let encoder = Encoder::new(&plan.encoding)?;
    let full = SampleSet::full_grid(&grid);
    let losses = evaluate(&model, &encoder, &full)?.losses;

    let mut guard = ArtifactGuard::new();
    let mut manifest = ReportManifest::new(MANIFEST_FILE, args.loss_scale);
    let mut buf = Vec::new();
    let report = match &full.subgroups {
        Some(groups) => stratify(&losses, groups)?,
        None => {
            manifest.notes.push("grid has no land mask; only the total row is reported".into());
            let mut r = stratify(&losses, &vec![Subgroup::Sea; losses.len()])?;
            r.groups.clear();
            r
        }
    };
    report.write_csv(&mut buf, args.loss_scale)?;
    guard.write(&dir.join(STRATIFIED_FILE), &buf)?;
    manifest.files.push(STRATIFIED_FILE.into());
    for (g, s) in &report.groups {
        writeln!(stdout, "{g}: mean {:.6} std {:.6} n {}", s.mean * args.loss_scale, s.std * args.loss_scale, s.count)?;
    }

    if let Some(countries) = &full.countries {
        match country_extremes(&losses, countries, args.min_country_points)? {
            Some(ext) => {
                buf.clear();
                ext.write_csv(&mut buf, args.loss_scale)?;
                guard.write(&dir.join(COUNTRIES_FILE), &buf)?;
                manifest.files.push(COUNTRIES_FILE.into());
                writeln!(stdout, "best country {} / worst country {}", ext.best.country, ext.worst.country)?;
            }
            None => manifest.notes.push(format!("no country has at least {} points", args.min_country_points)),
        }
    }
    if let Some(bin) = args.bin_deg {
        let grid = binned_error_grid(&losses, &full.points, bin)?;
        buf.clear();
        grid.write_csv(&mut buf, args.loss_scale)?;
        guard.write(&dir.join(ERROR_GRID_FILE), &buf)?;
        manifest.files.push(ERROR_GRID_FILE.into());
    }
    guard.write(&dir.join(REPORT_MANIFEST_FILE), manifest.to_json())?;
    guard.commit();
    Ok(())
}

fn report_sweep(args: &ReportArgs, stdout: &mut dyn Write) -> Result<()> {
    let dir = &args.dir;
    let table = load_table(dir)?;
    let corr = sweep_correlation(&table, Subgroup::Land, Subgroup::Island);
    let mut manifest = ReportManifest::new(SWEEP_FILE, args.loss_scale);
    manifest.notes.extend(corr.warnings.iter().cloned());
    for w in &corr.warnings {
        writeln!(stdout, "warning: {w}")?;
    }
    let mut guard = ArtifactGuard::new();
    if !corr.rows.is_empty() {
        let mut buf = Vec::new();
        corr.write_csv(&mut buf)?;
        guard.write(&dir.join(CORRELATION_FILE), &buf)?;
        manifest.files.push(CORRELATION_FILE.into());
        for row in &corr.rows {
            writeln!(stdout, "{}: r(land, island) = {:.4} over {} runs", row.stratum(), row.r, row.n)?;
        }
    }
    guard.write(&dir.join(REPORT_MANIFEST_FILE), manifest.to_json())?;
    guard.commit();
    Ok(())
}

/// Whether `dir` holds a finished sweep.
pub fn is_sweep_dir(dir: &Path) -> bool {
    dir.join(SWEEP_FILE).exists()
}
