//! Equirectangular grids of Earth signals and their subgroup metadata.
//!
//! Cells are stored row-major with latitude descending from `90 − Δ/2` and
//! longitude ascending from `−180 + Δ/2`.

mod io;
mod labels;
mod sample;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use io::{read_grid, write_grid, GridFormat};
pub use labels::{
    coast_distances, derive_subgroups, label_landmasses, landmass_areas, SubgroupThresholds, ISLAND_MAX_KM2,
    SQ_MILE_KM2,
};
pub use sample::{sample_points, SampleSet, SamplingMode};
pub use synth::{generate_archipelago, generate_checkerboard, ArchipelagoParams};

use crate::error::{Error, Result};
use crate::sphere::SpherePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    BinaryClassification,
    Regression,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::BinaryClassification => "binary",
            TaskKind::Regression => "regression",
        }
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "binary" | "binary_classification" | "classification" => Ok(TaskKind::BinaryClassification),
            "regression" => Ok(TaskKind::Regression),
            other => Err(Error::invalid(format!("unknown task {other:?}"))),
        }
    }
}

/// Mutually exclusive evaluation strata. Precedence when deriving:
/// island, then coastline, then land or sea.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subgroup {
    Island,
    Coastline,
    Land,
    Sea,
}

impl Subgroup {
    pub const ALL: [Subgroup; 4] = [Subgroup::Island, Subgroup::Coastline, Subgroup::Land, Subgroup::Sea];

    pub fn as_str(&self) -> &'static str {
        match self {
            Subgroup::Island => "island",
            Subgroup::Coastline => "coastline",
            Subgroup::Land => "land",
            Subgroup::Sea => "sea",
        }
    }

    pub(crate) fn code(&self) -> u8 {
        *self as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subgroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.as_str() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown subgroup {s:?}")))
    }
}

/// A single-plane gridded signal with optional per-cell metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDataset {
    resolution_deg: f64,
    n_lat: usize,
    n_lon: usize,
    pub task: TaskKind,
    pub values: Vec<f32>,
    pub landmass_id: Option<Vec<u32>>,
    pub is_island: Option<Vec<bool>>,
    pub coast_distance_km: Option<Vec<f32>>,
    /// Empty string means no country.
    pub country_code: Option<Vec<String>>,
    pub population_density: Option<Vec<f32>>,
    pub subgroup: Option<Vec<Subgroup>>,
}

/// Number of rows and columns for a resolution, `round(180/Δ) × round(360/Δ)`.
pub fn grid_dims(resolution_deg: f64) -> Result<(usize, usize)> {
    if !(resolution_deg > 0.0 && resolution_deg <= 180.0 && resolution_deg.is_finite()) {
        return Err(Error::invalid(format!("resolution {resolution_deg} must lie in (0, 180]")));
    }
    let n_lat = (180.0 / resolution_deg).round() as usize;
    let n_lon = (360.0 / resolution_deg).round() as usize;
    if ((n_lat as f64) * resolution_deg - 180.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("resolution {resolution_deg} does not tile 180 degrees")));
    }
    Ok((n_lat, n_lon))
}

impl GridDataset {
    /// A grid filled with `fill`.
    pub fn new(resolution_deg: f64, task: TaskKind, fill: f32) -> Result<Self> {
        let (n_lat, n_lon) = grid_dims(resolution_deg)?;
        Self::from_values(resolution_deg, task, vec![fill; n_lat * n_lon])
    }

    pub fn from_values(resolution_deg: f64, task: TaskKind, values: Vec<f32>) -> Result<Self> {
        let (n_lat, n_lon) = grid_dims(resolution_deg)?;
        if values.len() != n_lat * n_lon {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {n_lat}x{n_lon} grid",
                values.len()
            )));
        }
        let grid = Self {
            resolution_deg,
            n_lat,
            n_lon,
            task,
            values,
            landmass_id: None,
            is_island: None,
            coast_distance_km: None,
            country_code: None,
            population_density: None,
            subgroup: None,
        };
        grid.check_values()?;
        Ok(grid)
    }

    pub(crate) fn check_values(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            let bad = !v.is_finite() || (self.task == TaskKind::BinaryClassification && *v != 0.0 && *v != 1.0);
            if bad {
                let (lat, lon) = self.cell_center_deg(i);
                return Err(Error::invalid(format!("invalid {} value {v} at ({lat}, {lon})", self.task.as_str())));
            }
        }
        Ok(())
    }

    pub fn resolution_deg(&self) -> f64 {
        self.resolution_deg
    }

    pub fn n_lat(&self) -> usize {
        self.n_lat
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    pub fn n_cells(&self) -> usize {
        self.n_lat * self.n_lon
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_lon + col
    }

    pub fn lat_of_row(&self, row: usize) -> f64 {
        90.0 - self.resolution_deg * (row as f64 + 0.5)
    }

    pub fn lon_of_col(&self, col: usize) -> f64 {
        -180.0 + self.resolution_deg * (col as f64 + 0.5)
    }

    pub fn cell_center_deg(&self, idx: usize) -> (f64, f64) {
        (self.lat_of_row(idx / self.n_lon), self.lon_of_col(idx % self.n_lon))
    }

    pub fn cell_point(&self, idx: usize) -> SpherePoint {
        let (lat, lon) = self.cell_center_deg(idx);
        SpherePoint::from_lat_lon_deg(lat, lon).expect("cell centres are valid coordinates")
    }

    /// Cell containing a geographic coordinate, if it is (close to) a cell centre.
    pub fn cell_of_center(&self, lat: f64, lon: f64) -> Option<usize> {
        let d = self.resolution_deg;
        let row = ((90.0 - d / 2.0 - lat) / d).round();
        let col = ((lon + 180.0 - d / 2.0) / d).round();
        if row < 0.0 || col < 0.0 || row >= self.n_lat as f64 || col >= self.n_lon as f64 {
            return None;
        }
        let (row, col) = (row as usize, col as usize);
        let tol = d * 1e-3;
        ((self.lat_of_row(row) - lat).abs() < tol && (self.lon_of_col(col) - lon).abs() < tol)
            .then(|| self.index(row, col))
    }

    /// The 4-neighbours of a cell, wrapping in longitude but not across the poles.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> {
        let (row, col) = (idx / self.n_lon, idx % self.n_lon);
        let n_lon = self.n_lon;
        let west = row * n_lon + (col + n_lon - 1) % n_lon;
        let east = row * n_lon + (col + 1) % n_lon;
        let north = (row > 0).then(|| idx - n_lon);
        let south = (row + 1 < self.n_lat).then(|| idx + n_lon);
        [Some(west), Some(east), north, south].into_iter().flatten().filter(move |&n| n != idx)
    }

    /// Land cells: labelled landmasses when present, otherwise the binary values.
    pub fn land_mask(&self) -> Result<Vec<bool>> {
        if let Some(ids) = &self.landmass_id {
            return Ok(ids.iter().map(|&id| id > 0).collect());
        }
        match self.task {
            TaskKind::BinaryClassification => Ok(self.values.iter().map(|&v| v >= 0.5).collect()),
            TaskKind::Regression => Err(Error::invalid("a land mask needs binary values or a landmass_id plane")),
        }
    }

    /// Cells per subgroup, in [`Subgroup::ALL`] order.
    pub fn subgroup_counts(&self) -> Option<[usize; 4]> {
        self.subgroup.as_ref().map(|groups| {
            let mut counts = [0; 4];
            for g in groups {
                counts[g.code() as usize] += 1;
            }
            counts
        })
    }

    /// Content hash over the binary serialization.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(io::to_fairgrid_bytes(self));
        hex::encode(&digest[..8])
    }
}
