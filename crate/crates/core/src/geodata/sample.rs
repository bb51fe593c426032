//! Point sampling from grids.

use std::str::FromStr;

use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GridDataset, Subgroup, TaskKind};
use crate::error::{Error, Result};
use crate::sphere::SpherePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplingMode {
    /// Distinct cells, uniformly over the grid. Over-represents high
    /// latitudes relative to surface area.
    GridUniform,
    /// Cells drawn with replacement, rows weighted by `cos(lat)`.
    AreaWeighted,
}

impl SamplingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplingMode::GridUniform => "grid_uniform",
            SamplingMode::AreaWeighted => "area_weighted",
        }
    }
}

impl FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid_uniform" | "uniform" => Ok(SamplingMode::GridUniform),
            "area_weighted" => Ok(SamplingMode::AreaWeighted),
            other => Err(Error::invalid(format!("unknown sampling mode {other:?}"))),
        }
    }
}

/// Points drawn from a grid, with their targets and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<SpherePoint>,
    pub targets: Vec<f64>,
    pub task: TaskKind,
    pub cells: Vec<usize>,
    pub subgroups: Option<Vec<Subgroup>>,
    pub countries: Option<Vec<String>>,
    pub grid_fingerprint: String,
    pub mode: SamplingMode,
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Builds a sample set from explicit cells.
    pub fn from_cells(grid: &GridDataset, cells: Vec<usize>, mode: SamplingMode, seed: u64) -> Self {
        let fingerprint = grid.fingerprint();
        Self::from_cells_with_fingerprint(grid, cells, mode, seed, fingerprint)
    }

    pub(crate) fn from_cells_with_fingerprint(grid: &GridDataset, cells: Vec<usize>, mode: SamplingMode, seed: u64, grid_fingerprint: String) -> Self {
        Self {
            points: cells.iter().map(|&c| grid.cell_point(c)).collect(),
            targets: cells.iter().map(|&c| f64::from(grid.values[c])).collect(),
            task: grid.task,
            subgroups: grid.subgroup.as_ref().map(|g| cells.iter().map(|&c| g[c]).collect()),
            countries: grid.country_code.as_ref().map(|g| cells.iter().map(|&c| g[c].clone()).collect()),
            cells,
            grid_fingerprint,
            mode,
            seed,
        }
    }

    /// Every cell of the grid, in storage order.
    pub fn full_grid(grid: &GridDataset) -> Self {
        Self::from_cells(grid, (0..grid.n_cells()).collect(), SamplingMode::GridUniform, 0)
    }

    /// A subset by position.
    pub fn select(&self, positions: &[usize]) -> Self {
        Self {
            points: positions.iter().map(|&i| self.points[i]).collect(),
            targets: positions.iter().map(|&i| self.targets[i]).collect(),
            cells: positions.iter().map(|&i| self.cells[i]).collect(),
            subgroups: self.subgroups.as_ref().map(|g| positions.iter().map(|&i| g[i]).collect()),
            countries: self.countries.as_ref().map(|g| positions.iter().map(|&i| g[i].clone()).collect()),
            ..self.clone()
        }
    }
}

/// Draws `n` cell centres from `grid`, deterministic per seed.
pub fn sample_points(grid: &GridDataset, n: usize, mode: SamplingMode, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let total = grid.n_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = match mode {
        SamplingMode::GridUniform => {
            if n > total {
                return Err(Error::invalid(format!("cannot draw {n} distinct cells from a grid of {total}")));
            }
            rand::seq::index::sample(&mut rng, total, n).into_vec()
        }
        SamplingMode::AreaWeighted => {
            let weights: Vec<f64> = (0..grid.n_lat()).map(|r| grid.lat_of_row(r).to_radians().cos().max(0.0)).collect();
            let rows = WeightedIndex::new(&weights).map_err(|e| Error::invalid(e.to_string()))?;
            let cols = Uniform::new(0, grid.n_lon());
            (0..n).map(|_| grid.index(rows.sample(&mut rng), cols.sample(&mut rng))).collect()
        }
    };
    Ok(SampleSet::from_cells(grid, cells, mode, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_draw_covers_grid() {
        let g = GridDataset::new(10.0, TaskKind::Regression, 1.0).unwrap();
        let s = sample_points(&g, g.n_cells(), SamplingMode::GridUniform, 3).unwrap();
        let mut cells = s.cells.clone();
        cells.sort_unstable();
        assert_eq!(cells, (0..g.n_cells()).collect::<Vec<_>>());
        assert!(sample_points(&g, g.n_cells() + 1, SamplingMode::GridUniform, 3).is_err());
        assert!(sample_points(&g, 0, SamplingMode::GridUniform, 3).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let g = GridDataset::new(5.0, TaskKind::Regression, 1.0).unwrap();
        for mode in [SamplingMode::GridUniform, SamplingMode::AreaWeighted] {
            let a = sample_points(&g, 500, mode, 11).unwrap();
            assert_eq!(a, sample_points(&g, 500, mode, 11).unwrap());
            assert_ne!(a.cells, sample_points(&g, 500, mode, 12).unwrap().cells);
        }
    }

    #[test]
    fn area_weighted_latitudes_follow_cosine() {
        let g = GridDataset::new(1.0, TaskKind::Regression, 0.0).unwrap();
        let n = 1_000_000;
        let s = sample_points(&g, n, SamplingMode::AreaWeighted, 5).unwrap();
        // 18 bands of 10°
        let mut observed = [0f64; 18];
        for &c in &s.cells {
            observed[(c / g.n_lon()) / 10] += 1.0;
        }
        let weights: Vec<f64> = (0..g.n_lat()).map(|r| g.lat_of_row(r).to_radians().cos()).collect();
        let total: f64 = weights.iter().sum();
        let mut chi2 = 0.0;
        for (band, obs) in observed.iter().enumerate() {
            let expected = n as f64 * weights[band * 10..band * 10 + 10].iter().sum::<f64>() / total;
            chi2 += (obs - expected).powi(2) / expected;
        }
        // 17 degrees of freedom; the 0.999 quantile is about 40.8
        assert!(chi2 < 40.8, "chi2 = {chi2}");
    }
}
