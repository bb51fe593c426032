//! Synthetic land/sea grids.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::labels::{derive_subgroups, label_landmasses, SubgroupThresholds};
use super::{GridDataset, TaskKind};
use crate::error::{Error, Result};
use crate::sphere::{angular_distance, SpherePoint};

/// A `cell_deg` latitude/longitude checkerboard at `resolution_deg`, labelled
/// with landmasses and subgroups. The seed only picks which colour is land.
pub fn generate_checkerboard(cell_deg: f64, resolution_deg: f64, seed: u64) -> Result<GridDataset> {
    if !(cell_deg > 0.0 && cell_deg <= 180.0) {
        return Err(Error::invalid(format!("checkerboard cell size {cell_deg} must lie in (0, 180]")));
    }
    let mut grid = GridDataset::new(resolution_deg, TaskKind::BinaryClassification, 0.0)?;
    let flip = ChaCha8Rng::seed_from_u64(seed).gen::<bool>() as usize;
    for i in 0..grid.n_cells() {
        let (lat, lon) = grid.cell_center_deg(i);
        let row = ((lat + 90.0) / cell_deg).floor() as usize;
        let col = ((lon + 180.0) / cell_deg).floor() as usize;
        grid.values[i] = ((row + col + flip) % 2) as f32;
    }
    let (grid, _) = label_landmasses(&grid)?;
    derive_subgroups(&grid, &SubgroupThresholds::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchipelagoParams {
    pub n_continents: usize,
    pub n_islands: usize,
    pub island_radius_deg: (f64, f64),
    pub resolution_deg: f64,
    pub seed: u64,
    pub thresholds: SubgroupThresholds,
}

impl Default for ArchipelagoParams {
    fn default() -> Self {
        Self {
            n_continents: 3,
            n_islands: 40,
            island_radius_deg: (0.3, 2.0),
            resolution_deg: 0.5,
            seed: 0,
            thresholds: SubgroupThresholds::default(),
        }
    }
}

/// A continent outline: `r(β) = base · (1 + Σ a_k cos(kβ + φ_k))` around a centre.
struct Blob {
    centre: SpherePoint,
    base: f64,
    harmonics: Vec<(f64, f64)>,
}

impl Blob {
    const MAX_WOBBLE: f64 = 0.3;

    fn radius_at(&self, bearing: f64) -> f64 {
        let wobble: f64 = self.harmonics.iter().enumerate().map(|(k, (a, ph))| a * ((k + 1) as f64 * bearing + ph).cos()).sum();
        self.base * (1.0 + wobble)
    }

    fn max_radius(&self) -> f64 {
        self.base * (1.0 + Self::MAX_WOBBLE)
    }

    fn contains(&self, p: SpherePoint) -> bool {
        let d = angular_distance(self.centre, p);
        if d > self.max_radius() {
            return false;
        }
        let (lat1, lat2) = (self.centre.lat_rad(), p.lat_rad());
        let dlon = p.phi() - self.centre.phi();
        let bearing = (dlon.sin() * lat2.cos()).atan2(lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos());
        d < self.radius_at(bearing)
    }
}

fn random_centre(rng: &mut ChaCha8Rng, max_lat_deg: f64) -> SpherePoint {
    // uniform on the band |lat| ≤ max_lat
    let zmax = max_lat_deg.to_radians().sin();
    let z: f64 = rng.gen_range(-zmax..zmax);
    let lon: f64 = rng.gen_range(-PI..PI);
    SpherePoint::new(z.acos(), lon).expect("valid centre")
}

const MAX_ATTEMPTS: usize = 2000;

/// Random smooth continents (at least 30° across) and small circular islands,
/// none overlapping, labelled with landmasses and subgroups.
pub fn generate_archipelago(params: &ArchipelagoParams) -> Result<GridDataset> {
    let (rmin, rmax) = params.island_radius_deg;
    if !(rmin > 0.0 && rmax >= rmin) {
        return Err(Error::invalid(format!("island radius range ({rmin}, {rmax}) is invalid")));
    }
    let mut grid = GridDataset::new(params.resolution_deg, TaskKind::BinaryClassification, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let margin = (2.0 * params.resolution_deg).max(1.0).to_radians();

    let mut continents: Vec<Blob> = Vec::new();
    for c in 0..params.n_continents {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let blob = Blob {
                centre: random_centre(&mut rng, 60.0),
                // radius ≥ 15° · (1 − 0.3) keeps the extent above 30° even at the narrowest bearing
                base: rng.gen_range(22.0f64..32.0).to_radians(),
                harmonics: (0..4).map(|_| (rng.gen_range(0.0..Blob::MAX_WOBBLE / 4.0), rng.gen_range(0.0..2.0 * PI))).collect(),
            };
            if continents.iter().all(|o| angular_distance(o.centre, blob.centre) > o.max_radius() + blob.max_radius() + margin) {
                continents.push(blob);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Infeasible(format!("could not place continent {} without overlap", c + 1)));
        }
    }

    let mut islands: Vec<(SpherePoint, f64)> = Vec::new();
    for i in 0..params.n_islands {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let centre = random_centre(&mut rng, 75.0);
            let radius = rng.gen_range(rmin..=rmax).to_radians();
            let clear_of_land = continents.iter().all(|c| angular_distance(c.centre, centre) > c.max_radius() + radius + margin);
            let clear_of_islands = islands.iter().all(|(o, r)| angular_distance(*o, centre) > r + radius + margin);
            if clear_of_land && clear_of_islands {
                islands.push((centre, radius));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Infeasible(format!("could not place island {} without overlap", i + 1)));
        }
    }

    let d = params.resolution_deg.to_radians();
    for idx in 0..grid.n_cells() {
        let p = grid.cell_point(idx);
        let land = continents.iter().any(|c| c.contains(p))
            || islands.iter().any(|(c, r)| (c.theta() - p.theta()).abs() <= *r && angular_distance(*c, p) < *r);
        if land {
            grid.values[idx] = 1.0;
        }
    }
    // islands smaller than a cell still get their nearest cell
    for (centre, radius) in &islands {
        let row = ((90.0 - grid.resolution_deg() / 2.0 - centre.lat_deg()) / grid.resolution_deg()).round().clamp(0.0, (grid.n_lat() - 1) as f64) as usize;
        let col = ((centre.lon_deg() + 180.0 - grid.resolution_deg() / 2.0) / grid.resolution_deg())
            .round()
            .rem_euclid(grid.n_lon() as f64) as usize;
        let idx = grid.index(row, col);
        if *radius < d {
            grid.values[idx] = 1.0;
        }
    }

    let (grid, _) = label_landmasses(&grid)?;
    derive_subgroups(&grid, &params.thresholds)
}
