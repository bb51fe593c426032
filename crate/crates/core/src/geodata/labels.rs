//! Landmass labelling and subgroup derivation.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::{GridDataset, Subgroup};
use crate::error::{Error, Result};
use crate::sphere::{cell_area_km2, great_circle_distance, EARTH_RADIUS_KM};

/// One international square mile in km².
pub const SQ_MILE_KM2: f64 = 2.589_988_110_336;

/// Default island threshold: 30,000 sq mi.
pub const ISLAND_MAX_KM2: f64 = 30_000.0 * SQ_MILE_KM2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgroupThresholds {
    /// Landmasses strictly smaller than this are islands.
    pub island_max_km2: f64,
    /// Cells within this distance of a land/sea boundary are coastline.
    pub coast_band_km: f64,
}

impl Default for SubgroupThresholds {
    fn default() -> Self {
        Self { island_max_km2: ISLAND_MAX_KM2, coast_band_km: 100.0 }
    }
}

fn row_areas(grid: &GridDataset) -> Vec<f64> {
    (0..grid.n_lat())
        .map(|r| cell_area_km2(grid.lat_of_row(r), grid.resolution_deg(), EARTH_RADIUS_KM).expect("row latitude is valid"))
        .collect()
}

/// Labels 4-connected land components (wrapping in longitude) with ids in
/// decreasing area order; id 1 is the largest, sea is 0. Returns the grid
/// with its `landmass_id` plane set and the area of each id (index `id − 1`).
pub fn label_landmasses(grid: &GridDataset) -> Result<(GridDataset, Vec<f64>)> {
    let land = grid.land_mask()?;
    let areas_by_row = row_areas(grid);
    let n = grid.n_cells();
    let mut component = vec![u32::MAX; n];
    // (area, first cell) per raw component
    let mut raw: Vec<(f64, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !land[start] || component[start] != u32::MAX {
            continue;
        }
        let cid = raw.len() as u32;
        let mut area = 0.0;
        component[start] = cid;
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            area += areas_by_row[c / grid.n_lon()];
            for nb in grid.neighbors(c) {
                if land[nb] && component[nb] == u32::MAX {
                    component[nb] = cid;
                    queue.push_back(nb);
                }
            }
        }
        raw.push((area, start));
    }

    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].0.partial_cmp(&raw[a].0).unwrap_or(Ordering::Equal).then(raw[a].1.cmp(&raw[b].1)));
    let mut remap = vec![0u32; raw.len()];
    for (rank, &cid) in order.iter().enumerate() {
        remap[cid] = rank as u32 + 1;
    }
    let ids: Vec<u32> = component.iter().map(|&c| if c == u32::MAX { 0 } else { remap[c as usize] }).collect();
    let areas = order.iter().map(|&cid| raw[cid].0).collect();

    let mut out = grid.clone();
    out.landmass_id = Some(ids);
    Ok((out, areas))
}

/// Area of every landmass id present in the grid (index `id − 1`).
pub fn landmass_areas(grid: &GridDataset) -> Result<Vec<f64>> {
    let ids = grid.landmass_id.as_ref().ok_or_else(|| Error::invalid("landmass labels are missing"))?;
    let areas_by_row = row_areas(grid);
    let max_id = ids.iter().copied().max().unwrap_or(0) as usize;
    let mut areas = vec![0.0; max_id];
    for (i, &id) in ids.iter().enumerate() {
        if id > 0 {
            areas[id as usize - 1] += areas_by_row[i / grid.n_lon()];
        }
    }
    Ok(areas)
}

#[derive(PartialEq)]
struct Frontier {
    dist: f64,
    cell: usize,
    source: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distance from each cell centre to the nearest boundary cell centre, in km.
///
/// Boundary cells are land cells with a sea 4-neighbour or sea cells with a
/// land 4-neighbour. Sources spread outward over the 4-neighbour graph and
/// each cell keeps the source with the smallest haversine distance. Without
/// any boundary every cell gets half the Earth's circumference.
pub fn coast_distances(grid: &GridDataset, land: &[bool]) -> Vec<f32> {
    let n = grid.n_cells();
    let points: Vec<_> = (0..n).map(|i| grid.cell_point(i)).collect();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for c in 0..n {
        if grid.neighbors(c).any(|nb| land[nb] != land[c]) {
            dist[c] = 0.0;
            heap.push(Frontier { dist: 0.0, cell: c, source: c });
        }
    }
    while let Some(Frontier { dist: d, cell, source }) = heap.pop() {
        if d > dist[cell] {
            continue;
        }
        for nb in grid.neighbors(cell) {
            let cand = great_circle_distance(points[nb], points[source], EARTH_RADIUS_KM);
            if cand < dist[nb] {
                dist[nb] = cand;
                heap.push(Frontier { dist: cand, cell: nb, source });
            }
        }
    }
    let fallback = std::f64::consts::PI * EARTH_RADIUS_KM;
    dist.into_iter().map(|d| if d.is_finite() { d as f32 } else { fallback as f32 }).collect()
}

/// Adds `is_island`, `coast_distance_km` and `subgroup` planes.
///
/// Each cell gets exactly one subgroup: island if its landmass is smaller than
/// the island threshold, else coastline within the coast band, else land or sea.
pub fn derive_subgroups(grid: &GridDataset, thresholds: &SubgroupThresholds) -> Result<GridDataset> {
    let ids = grid.landmass_id.as_ref().ok_or_else(|| Error::invalid("landmass labels are missing"))?;
    let areas = landmass_areas(grid)?;
    let land: Vec<bool> = ids.iter().map(|&id| id > 0).collect();
    let is_island: Vec<bool> = ids.iter().map(|&id| id > 0 && areas[id as usize - 1] < thresholds.island_max_km2).collect();
    let coast = coast_distances(grid, &land);
    let subgroup = (0..grid.n_cells())
        .map(|i| {
            if is_island[i] {
                Subgroup::Island
            } else if f64::from(coast[i]) <= thresholds.coast_band_km {
                Subgroup::Coastline
            } else if land[i] {
                Subgroup::Land
            } else {
                Subgroup::Sea
            }
        })
        .collect();
    let mut out = grid.clone();
    out.is_island = Some(is_island);
    out.coast_distance_km = Some(coast);
    out.subgroup = Some(subgroup);
    Ok(out)
}
