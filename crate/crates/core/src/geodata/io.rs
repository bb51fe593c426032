//! Grid files.
//!
//! CSV: an optional `# resolution_deg=<Δ> task=<binary|regression>` comment,
//! then a header with `lat_deg,lon_deg,value` followed by any of
//! `landmass_id,is_island,coast_distance_km,country_code,population_density,subgroup`.
//! One row per cell centre.
//!
//! FAIRGRID1 (all integers and floats little-endian):
//!
//! ```text
//! magic        9 bytes  "FAIRGRID1"
//! resolution   f64
//! n_lat, n_lon u32, u32
//! task         u8       0 = binary, 1 = regression
//! planes       u32      count, then per plane: u8 name length, name bytes
//! dictionary   u32      count, then per entry: u16 length, bytes (country codes)
//! data         per plane, n_lat·n_lon f32 values, row-major
//! ```
//!
//! Integer-valued planes (landmass id, island flag, subgroup code, country
//! index into the dictionary with −1 for none) are stored as exact f32 values.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::{grid_dims, GridDataset, Subgroup, TaskKind};
use crate::error::{Error, Result};

pub const FAIRGRID_MAGIC: &[u8; 9] = b"FAIRGRID1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFormat {
    Csv,
    Fairgrid,
}

impl GridFormat {
    /// Guesses from the file extension, defaulting to FAIRGRID1.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => GridFormat::Csv,
            _ => GridFormat::Fairgrid,
        }
    }
}

impl FromStr for GridFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(GridFormat::Csv),
            "fairgrid" => Ok(GridFormat::Fairgrid),
            other => Err(Error::invalid(format!("unknown grid format {other:?}"))),
        }
    }
}

const PLANES: [&str; 6] = ["landmass_id", "is_island", "coast_distance_km", "country_code", "population_density", "subgroup"];

fn present_planes(grid: &GridDataset) -> Vec<&'static str> {
    let present = [
        grid.landmass_id.is_some(),
        grid.is_island.is_some(),
        grid.coast_distance_km.is_some(),
        grid.country_code.is_some(),
        grid.population_density.is_some(),
        grid.subgroup.is_some(),
    ];
    PLANES.iter().zip(present).filter(|(_, p)| *p).map(|(n, _)| *n).collect()
}

fn country_dictionary(codes: &[String]) -> (Vec<&str>, HashMap<&str, usize>) {
    let mut dict: Vec<&str> = codes.iter().map(String::as_str).filter(|c| !c.is_empty()).collect();
    dict.sort_unstable();
    dict.dedup();
    let index = dict.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    (dict, index)
}

pub(crate) fn to_fairgrid_bytes(grid: &GridDataset) -> Vec<u8> {
    let n = grid.n_cells();
    let planes = present_planes(grid);
    let mut out = Vec::with_capacity(64 + 4 * n * (planes.len() + 1));
    out.extend_from_slice(FAIRGRID_MAGIC);
    out.extend_from_slice(&grid.resolution_deg().to_le_bytes());
    out.extend_from_slice(&(grid.n_lat() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n_lon() as u32).to_le_bytes());
    out.push(match grid.task {
        TaskKind::BinaryClassification => 0,
        TaskKind::Regression => 1,
    });
    let names: Vec<&str> = std::iter::once("value").chain(planes.iter().copied()).collect();
    out.extend_from_slice(&(names.len() as u32).to_le_bytes());
    for name in &names {
        out.push(name.len() as u8);
        out.extend_from_slice(name.as_bytes());
    }
    let (dict, index) = grid.country_code.as_deref().map(country_dictionary).unwrap_or_default();
    out.extend_from_slice(&(dict.len() as u32).to_le_bytes());
    for code in &dict {
        out.extend_from_slice(&(code.len() as u16).to_le_bytes());
        out.extend_from_slice(code.as_bytes());
    }
    let mut push_plane = |values: &mut dyn Iterator<Item = f32>| {
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    for name in &names {
        match *name {
            "value" => push_plane(&mut grid.values.iter().copied()),
            "landmass_id" => push_plane(&mut grid.landmass_id.as_ref().unwrap().iter().map(|&v| v as f32)),
            "is_island" => push_plane(&mut grid.is_island.as_ref().unwrap().iter().map(|&v| if v { 1.0 } else { 0.0 })),
            "coast_distance_km" => push_plane(&mut grid.coast_distance_km.as_ref().unwrap().iter().copied()),
            "country_code" => push_plane(
                &mut grid.country_code.as_ref().unwrap().iter().map(|c| if c.is_empty() { -1.0 } else { index[c.as_str()] as f32 }),
            ),
            "population_density" => push_plane(&mut grid.population_density.as_ref().unwrap().iter().copied()),
            "subgroup" => push_plane(&mut grid.subgroup.as_ref().unwrap().iter().map(|g| g.code() as f32)),
            _ => unreachable!(),
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::format("FAIRGRID1 file", format!("truncated while reading {what} at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, len: usize, what: &str) -> Result<String> {
        String::from_utf8(self.take(len, what)?.to_vec()).map_err(|_| Error::format("FAIRGRID1 file", format!("{what} is not UTF-8")))
    }
}

fn cell_error(grid: &GridDataset, plane: &str, idx: usize, detail: impl std::fmt::Display) -> Error {
    let (lat, lon) = grid.cell_center_deg(idx);
    Error::format("grid data", format!("{plane} at cell {idx} ({lat}, {lon}): {detail}"))
}

fn integral(grid: &GridDataset, plane: &str, idx: usize, v: f32, max: f32) -> Result<u32> {
    if v.fract() != 0.0 || v < 0.0 || v > max {
        return Err(cell_error(grid, plane, idx, format!("expected an integer in [0, {max}], got {v}")));
    }
    Ok(v as u32)
}

pub(crate) fn from_fairgrid_bytes(bytes: &[u8]) -> Result<GridDataset> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(9, "magic")? != FAIRGRID_MAGIC {
        return Err(Error::format("FAIRGRID1 file", "bad magic"));
    }
    let resolution = r.f64("resolution")?;
    let n_lat = r.u32("n_lat")? as usize;
    let n_lon = r.u32("n_lon")? as usize;
    let (e_lat, e_lon) = grid_dims(resolution)?;
    if (n_lat, n_lon) != (e_lat, e_lon) {
        return Err(Error::format(
            "FAIRGRID1 file",
            format!("dimensions {n_lat}x{n_lon} do not match resolution {resolution} ({e_lat}x{e_lon})"),
        ));
    }
    let task = match r.u8("task")? {
        0 => TaskKind::BinaryClassification,
        1 => TaskKind::Regression,
        t => return Err(Error::format("FAIRGRID1 file", format!("unknown task code {t}"))),
    };
    let n_planes = r.u32("plane count")? as usize;
    let mut names = Vec::with_capacity(n_planes);
    for _ in 0..n_planes {
        let len = r.u8("plane name length")? as usize;
        names.push(r.string(len, "plane name")?);
    }
    if names.first().map(String::as_str) != Some("value") {
        return Err(Error::format("FAIRGRID1 file", "first plane must be `value`"));
    }
    let n_dict = r.u32("dictionary size")? as usize;
    let mut dict = Vec::with_capacity(n_dict);
    for _ in 0..n_dict {
        let len = r.u16("dictionary entry length")? as usize;
        dict.push(r.string(len, "dictionary entry")?);
    }
    let n = n_lat * n_lon;
    let expected = r.pos + 4 * n * n_planes;
    if bytes.len() != expected {
        return Err(Error::format("FAIRGRID1 file", format!("expected {expected} bytes for {n_planes} planes, found {}", bytes.len())));
    }

    let mut grid = GridDataset {
        resolution_deg: resolution,
        n_lat,
        n_lon,
        task,
        values: Vec::new(),
        landmass_id: None,
        is_island: None,
        coast_distance_km: None,
        country_code: None,
        population_density: None,
        subgroup: None,
    };
    for name in &names {
        let data = r.take(4 * n, "plane data")?;
        let plane: Vec<f32> = data.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        if let Some(idx) = plane.iter().position(|v| !v.is_finite()) {
            return Err(cell_error(&grid, name, idx, "non-finite value"));
        }
        match name.as_str() {
            "value" => grid.values = plane,
            "landmass_id" => {
                grid.landmass_id = Some(plane.iter().enumerate().map(|(i, &v)| integral(&grid, name, i, v, 16_777_216.0)).collect::<Result<_>>()?)
            }
            "is_island" => grid.is_island = Some(plane.iter().enumerate().map(|(i, &v)| integral(&grid, name, i, v, 1.0).map(|b| b == 1)).collect::<Result<_>>()?),
            "coast_distance_km" => grid.coast_distance_km = Some(plane),
            "population_density" => grid.population_density = Some(plane),
            "subgroup" => {
                grid.subgroup = Some(
                    plane
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| integral(&grid, name, i, v, 3.0).map(|c| Subgroup::from_code(c as u8).unwrap()))
                        .collect::<Result<_>>()?,
                )
            }
            "country_code" => {
                let codes = plane
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        if v == -1.0 {
                            Ok(String::new())
                        } else {
                            let k = integral(&grid, name, i, v, dict.len().saturating_sub(1) as f32)? as usize;
                            dict.get(k).cloned().ok_or_else(|| cell_error(&grid, name, i, "country index outside dictionary"))
                        }
                    })
                    .collect::<Result<_>>()?;
                grid.country_code = Some(codes);
            }
            other => return Err(Error::format("FAIRGRID1 file", format!("unknown plane {other:?}"))),
        }
    }
    grid.check_values()?;
    Ok(grid)
}

fn write_csv(grid: &GridDataset, path: &Path) -> Result<()> {
    let planes = present_planes(grid);
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# resolution_deg={} task={}", grid.resolution_deg(), grid.task.as_str())?;
    let mut header = vec!["lat_deg", "lon_deg", "value"];
    header.extend(&planes);
    writeln!(w, "{}", header.join(","))?;
    let mut row = String::new();
    for i in 0..grid.n_cells() {
        let (lat, lon) = grid.cell_center_deg(i);
        row.clear();
        row.push_str(&format!("{lat},{lon},{}", grid.values[i]));
        for plane in &planes {
            row.push(',');
            match *plane {
                "landmass_id" => row.push_str(&grid.landmass_id.as_ref().unwrap()[i].to_string()),
                "is_island" => row.push_str(if grid.is_island.as_ref().unwrap()[i] { "1" } else { "0" }),
                "coast_distance_km" => row.push_str(&grid.coast_distance_km.as_ref().unwrap()[i].to_string()),
                "country_code" => row.push_str(&grid.country_code.as_ref().unwrap()[i]),
                "population_density" => row.push_str(&grid.population_density.as_ref().unwrap()[i].to_string()),
                "subgroup" => row.push_str(grid.subgroup.as_ref().unwrap()[i].as_str()),
                _ => unreachable!(),
            }
        }
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv(path: &Path) -> Result<GridDataset> {
    let text = fs::read_to_string(path)?;
    let mut resolution = None;
    let mut task = None;
    let body_start = if let Some(first) = text.lines().next().filter(|l| l.starts_with('#')) {
        for kv in first.trim_start_matches('#').split_whitespace() {
            match kv.split_once('=') {
                Some(("resolution_deg", v)) => {
                    resolution = Some(v.parse::<f64>().map_err(|_| Error::format("grid CSV", format!("bad resolution {v:?}")))?)
                }
                Some(("task", v)) => task = Some(v.parse::<TaskKind>()?),
                _ => {}
            }
        }
        first.len() + 1
    } else {
        0
    };

    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(&text.as_bytes()[body_start.min(text.len())..]);
    let headers = reader.headers().map_err(|e| Error::format("grid CSV", e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(lat_c), Some(lon_c), Some(val_c)) = (col("lat_deg"), col("lon_deg"), col("value")) else {
        return Err(Error::format("grid CSV", "header must contain lat_deg, lon_deg and value"));
    };
    for h in headers.iter() {
        if !["lat_deg", "lon_deg", "value"].contains(&h) && !PLANES.contains(&h) {
            return Err(Error::format("grid CSV", format!("unknown column {h:?}")));
        }
    }

    let mut records = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::format("grid CSV", format!("record {}: {e}", line + 1)))?;
        let num = |c: usize| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::format("grid CSV", format!("record {}: bad number {raw:?} in column {}", line + 1, &headers[c])))
        };
        let (lat, lon) = (num(lat_c)?, num(lon_c)?);
        let raw = rec.get(val_c).unwrap_or("");
        let value: f32 = raw.parse().map_err(|_| Error::format("grid CSV", format!("record {}: bad value {raw:?}", line + 1)))?;
        if !lat.is_finite() || !lon.is_finite() || !value.is_finite() {
            return Err(Error::format("grid CSV", format!("record {} ({lat}, {lon}): non-finite value", line + 1)));
        }
        records.push((line + 1, lat, lon, value, rec));
    }
    if records.is_empty() {
        return Err(Error::format("grid CSV", "no records"));
    }

    let resolution = match resolution {
        Some(r) => r,
        None => infer_resolution(records.iter().map(|r| (r.1, r.2)))?,
    };
    let task = task.unwrap_or_else(|| {
        if records.iter().all(|r| r.3 == 0.0 || r.3 == 1.0) {
            TaskKind::BinaryClassification
        } else {
            TaskKind::Regression
        }
    });
    let mut grid = GridDataset::new(resolution, TaskKind::Regression, 0.0)?;
    grid.task = task;
    let n = grid.n_cells();
    let mut seen = vec![false; n];
    let has = |name: &str| col(name).is_some();
    let mut landmass = has("landmass_id").then(|| vec![0u32; n]);
    let mut island = has("is_island").then(|| vec![false; n]);
    let mut coast = has("coast_distance_km").then(|| vec![0f32; n]);
    let mut country = has("country_code").then(|| vec![String::new(); n]);
    let mut pop = has("population_density").then(|| vec![0f32; n]);
    let mut subgroup = has("subgroup").then(|| vec![Subgroup::Sea; n]);

    for (line, lat, lon, value, rec) in &records {
        let at = |what: &str| Error::format("grid CSV", format!("record {line} ({lat}, {lon}): {what}"));
        let idx = grid.cell_of_center(*lat, *lon).ok_or_else(|| at("not a cell centre"))?;
        if std::mem::replace(&mut seen[idx], true) {
            return Err(at("duplicate cell"));
        }
        grid.values[idx] = *value;
        let field = |name: &str| rec.get(col(name).unwrap()).unwrap_or("");
        let parse_f32 = |name: &str| -> Result<f32> {
            let v: f32 = field(name).parse().map_err(|_| at(&format!("bad {name} {:?}", field(name))))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(at(&format!("non-finite {name}")))
            }
        };
        if let Some(p) = landmass.as_mut() {
            p[idx] = field("landmass_id").parse().map_err(|_| at("bad landmass_id"))?;
        }
        if let Some(p) = island.as_mut() {
            p[idx] = match field("is_island") {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(at(&format!("bad is_island {other:?}"))),
            };
        }
        if let Some(p) = coast.as_mut() {
            p[idx] = parse_f32("coast_distance_km")?;
        }
        if let Some(p) = pop.as_mut() {
            p[idx] = parse_f32("population_density")?;
        }
        if let Some(p) = country.as_mut() {
            p[idx] = field("country_code").to_string();
        }
        if let Some(p) = subgroup.as_mut() {
            p[idx] = field("subgroup").parse().map_err(|_| at("bad subgroup"))?;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        let (lat, lon) = grid.cell_center_deg(missing);
        let count = seen.iter().filter(|s| !**s).count();
        return Err(Error::format("grid CSV", format!("missing cell ({lat}, {lon}) and {} more", count - 1)));
    }
    grid.landmass_id = landmass;
    grid.is_island = island;
    grid.coast_distance_km = coast;
    grid.country_code = country;
    grid.population_density = pop;
    grid.subgroup = subgroup;
    grid.check_values()?;
    Ok(grid)
}

fn infer_resolution(coords: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let mut lats: BTreeMap<i64, ()> = BTreeMap::new();
    let mut lons: BTreeMap<i64, ()> = BTreeMap::new();
    for (lat, lon) in coords {
        lats.insert((lat * 1e6).round() as i64, ());
        lons.insert((lon * 1e6).round() as i64, ());
    }
    let min_gap = |m: &BTreeMap<i64, ()>| m.keys().zip(m.keys().skip(1)).map(|(a, b)| b - a).min();
    let gap = match (min_gap(&lats), min_gap(&lons)) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return Err(Error::format("grid CSV", "cannot infer resolution from a single cell")),
    };
    Ok(gap as f64 / 1e6)
}

/// Reads a grid from disk.
pub fn read_grid(path: &Path, format: GridFormat) -> Result<GridDataset> {
    let wrap = |e: Error| Error::Load { path: path.to_path_buf(), reason: e.to_string() };
    match format {
        GridFormat::Csv => read_csv(path).map_err(wrap),
        GridFormat::Fairgrid => from_fairgrid_bytes(&fs::read(path).map_err(|e| wrap(e.into()))?).map_err(wrap),
    }
}

/// Writes a grid to disk.
pub fn write_grid(grid: &GridDataset, path: &Path, format: GridFormat) -> Result<()> {
    match format {
        GridFormat::Csv => write_csv(grid, path),
        GridFormat::Fairgrid => Ok(fs::write(path, to_fairgrid_bytes(grid))?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::{derive_subgroups, label_landmasses, SubgroupThresholds};
    use proptest::prelude::*;

    fn labelled(values: Vec<f32>) -> GridDataset {
        let g = GridDataset::from_values(30.0, TaskKind::BinaryClassification, values).unwrap();
        let (g, _) = label_landmasses(&g).unwrap();
        let mut g = derive_subgroups(&g, &SubgroupThresholds::default()).unwrap();
        g.country_code = Some((0..g.n_cells()).map(|i| if i % 5 == 0 { String::new() } else { format!("C{}", i % 7) }).collect());
        g.population_density = Some((0..g.n_cells()).map(|i| i as f32 * 0.37).collect());
        g
    }

    #[test]
    fn csv_missing_cell_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let g = GridDataset::new(30.0, TaskKind::Regression, 2.5).unwrap();
        write_grid(&g, &path, GridFormat::Csv).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let trimmed: Vec<&str> = text.lines().filter(|l| !l.starts_with("15,-165,")).collect();
        fs::write(&path, trimmed.join("\n")).unwrap();
        let err = read_grid(&path, GridFormat::Csv).unwrap_err().to_string();
        assert!(err.contains("missing cell (15, -165)"), "{err}");
    }

    #[test]
    fn csv_without_comment_infers_resolution() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let g = GridDataset::new(45.0, TaskKind::BinaryClassification, 1.0).unwrap();
        write_grid(&g, &path, GridFormat::Csv).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.lines().skip(1).collect::<Vec<_>>().join("\n")).unwrap();
        assert_eq!(read_grid(&path, GridFormat::Csv).unwrap(), g);
    }

    #[test]
    fn corrupt_binary_is_rejected() {
        let g = labelled(vec![0.0; 72]);
        let mut bytes = to_fairgrid_bytes(&g);
        assert!(from_fairgrid_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(from_fairgrid_bytes(&bytes).is_err());
        let mut bytes = to_fairgrid_bytes(&GridDataset::new(30.0, TaskKind::Regression, 0.0).unwrap());
        let last = bytes.len() - 4;
        bytes[last..].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = from_fairgrid_bytes(&bytes).unwrap_err().to_string();
        assert!(err.contains("cell 71"), "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn both_formats_round_trip(mask in proptest::collection::vec(proptest::bool::ANY, 72)) {
            let g = labelled(mask.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect());
            let dir = tempfile::tempdir().unwrap();
            for (name, fmt) in [("g.csv", GridFormat::Csv), ("g.fgrid", GridFormat::Fairgrid)] {
                let path = dir.path().join(name);
                write_grid(&g, &path, fmt).unwrap();
                prop_assert_eq!(&read_grid(&path, fmt).unwrap(), &g);
            }
        }
    }
}
