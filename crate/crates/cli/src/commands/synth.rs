//! `geoinr synth checkerboard|archipelago`.

use std::io::Write;
use std::path::{Path, PathBuf};

use geoinr::config::KvDocument;
use geoinr::geodata::{generate_archipelago, generate_checkerboard, write_grid, ArchipelagoParams, GridDataset, Subgroup};

use super::grid_format;
use crate::artifacts::ArtifactGuard;
use crate::error::Result;
use crate::SynthCommand;

/// Path of the manifest written next to a synthesized grid.
pub fn manifest_path(grid: &Path) -> PathBuf {
    let mut s = grid.as_os_str().to_owned();
    s.push(".manifest.txt");
    PathBuf::from(s)
}

pub fn run(cmd: SynthCommand, stdout: &mut dyn Write) -> Result<()> {
    let mut doc = KvDocument::new();
    doc.set("", "tool_version", env!("CARGO_PKG_VERSION"));
    doc.set("", "command", "synth");
    let (grid, output) = match cmd {
        SynthCommand::Checkerboard(a) => {
            doc.set("synth", "kind", "checkerboard");
            doc.set("synth", "cell_deg", a.cell_deg);
            doc.set("synth", "resolution_deg", a.resolution);
            doc.set("synth", "seed", a.seed);
            (generate_checkerboard(a.cell_deg, a.resolution, a.seed)?, a.output)
        }
        SynthCommand::Archipelago(a) => {
            let params = ArchipelagoParams {
                n_continents: a.continents,
                n_islands: a.islands,
                island_radius_deg: (a.island_radius_min, a.island_radius_max),
                resolution_deg: a.resolution,
                seed: a.seed,
                ..ArchipelagoParams::default()
            };
            doc.set("synth", "kind", "archipelago");
            doc.set("synth", "continents", params.n_continents);
            doc.set("synth", "islands", params.n_islands);
            doc.set("synth", "island_radius_min_deg", a.island_radius_min);
            doc.set("synth", "island_radius_max_deg", a.island_radius_max);
            doc.set("synth", "resolution_deg", params.resolution_deg);
            doc.set("synth", "seed", params.seed);
            doc.set("thresholds", "island_max_km2", params.thresholds.island_max_km2);
            doc.set("thresholds", "coast_band_km", params.thresholds.coast_band_km);
            (generate_archipelago(&params)?, a.output)
        }
    };
    let format = grid_format(&output.out, output.format.as_deref())?;
    doc.set("outputs", "grid", output.out.display());
    doc.set("derived", "grid_fingerprint", grid.fingerprint());

    let mut guard = ArtifactGuard::new();
    if let Some(parent) = output.out.parent() {
        guard.create_dir(parent)?;
    }
    guard.track(&output.out);
    write_grid(&grid, &output.out, format)?;
    guard.write(&manifest_path(&output.out), doc.to_string())?;
    guard.commit();
    write_summary(&grid, stdout)?;
    Ok(())
}

fn write_summary(grid: &GridDataset, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "cells: {} ({} x {} at {} deg)", grid.n_cells(), grid.n_lat(), grid.n_lon(), grid.resolution_deg())?;
    if let Some(counts) = grid.subgroup_counts() {
        for g in Subgroup::ALL {
            writeln!(w, "{g}: {}", counts[g as usize])?;
        }
    }
    writeln!(w, "fingerprint: {}", grid.fingerprint())
}
