//! Subgroup-stratified losses, cross-run correlations, country extremes and
//! binned error maps, with their fixed CSV layouts.

mod sweep;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use sweep::{sweep_correlation, CorrelationRow, CorrelationTable, SweepRow, SweepTable};

use crate::error::{Error, Result};
use crate::geodata::Subgroup;
use crate::sphere::SpherePoint;

/// Count, mean and population standard deviation of a set of losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl GroupStats {
    fn from_values<'a>(values: impl Iterator<Item = &'a f64> + Clone) -> Option<Self> {
        let count = values.clone().count();
        if count == 0 {
            return None;
        }
        let mean = values.clone().sum::<f64>() / count as f64;
        let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
        Some(Self { count, mean, std: var.sqrt() })
    }

    fn scaled(self, factor: f64) -> Self {
        Self { mean: self.mean * factor, std: self.std * factor, ..self }
    }
}

/// Per-subgroup loss statistics. Subgroups with no points are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedReport {
    pub groups: Vec<(Subgroup, GroupStats)>,
    pub total: GroupStats,
    /// Path of the run manifest the losses came from, if any.
    pub manifest: Option<String>,
}

impl StratifiedReport {
    pub fn get(&self, group: Subgroup) -> Option<GroupStats> {
        self.groups.iter().find(|(g, _)| *g == group).map(|(_, s)| *s)
    }

    /// `subgroup,count,mean,std`, one row per present subgroup then `total`.
    /// Means and deviations are multiplied by `display_scale`.
    pub fn write_csv<W: Write>(&self, w: W, display_scale: f64) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["subgroup", "count", "mean", "std"]).map_err(csv_err)?;
        let rows = self.groups.iter().map(|(g, s)| (g.as_str(), *s)).chain([("total", self.total)]);
        for (name, stats) in rows {
            let s = stats.scaled(display_scale);
            out.write_record([name.to_string(), s.count.to_string(), s.mean.to_string(), s.std.to_string()]).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::format("csv", format!("{other:?}")),
    }
}

/// Groups per-point losses by subgroup.
pub fn stratify(losses: &[f64], groups: &[Subgroup]) -> Result<StratifiedReport> {
    if losses.len() != groups.len() {
        return Err(Error::ShapeMismatch(format!("{} losses for {} subgroup labels", losses.len(), groups.len())));
    }
    if losses.is_empty() {
        return Err(Error::invalid("nothing to stratify"));
    }
    if let Some(i) = losses.iter().position(|l| !l.is_finite()) {
        return Err(Error::invalid(format!("loss at position {i} is not finite")));
    }
    let mut buckets: [Vec<f64>; 4] = Default::default();
    for (&l, g) in losses.iter().zip(groups) {
        buckets[*g as usize].push(l);
    }
    let report = StratifiedReport {
        groups: Subgroup::ALL
            .into_iter()
            .filter_map(|g| GroupStats::from_values(buckets[g as usize].iter()).map(|s| (g, s)))
            .collect(),
        total: GroupStats::from_values(losses.iter()).expect("nonempty"),
        manifest: None,
    };
    Ok(report)
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeMismatch(format!("{} xs for {} ys", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!("need at least 2 pairs, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("one of the series has zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryStats {
    pub country: String,
    pub count: usize,
    pub mean: f64,
}

/// Lowest- and highest-loss countries among those with enough points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryExtremes {
    pub best: CountryStats,
    pub worst: CountryStats,
    /// Every qualifying country, by code.
    pub qualifying: Vec<CountryStats>,
}

impl CountryExtremes {
    /// `country,count,mean,role` for every qualifying country.
    pub fn write_csv<W: Write>(&self, w: W, display_scale: f64) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["country", "count", "mean", "role"]).map_err(csv_err)?;
        for c in &self.qualifying {
            let mut role = Vec::new();
            if c.country == self.best.country {
                role.push("best");
            }
            if c.country == self.worst.country {
                role.push("worst");
            }
            out.write_record([c.country.clone(), c.count.to_string(), (c.mean * display_scale).to_string(), role.join("+")])
                .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Ties on the mean go to the lexicographically smallest code, for both ends.
/// Empty country codes are ignored. `None` if no country has `min_points`.
pub fn country_extremes(losses: &[f64], countries: &[String], min_points: usize) -> Result<Option<CountryExtremes>> {
    if losses.len() != countries.len() {
        return Err(Error::ShapeMismatch(format!("{} losses for {} country labels", losses.len(), countries.len())));
    }
    let mut acc: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for (l, c) in losses.iter().zip(countries) {
        if c.is_empty() {
            continue;
        }
        let e = acc.entry(c.as_str()).or_default();
        e.0 += 1;
        e.1 += l;
    }
    let qualifying: Vec<CountryStats> = acc
        .into_iter()
        .filter(|(_, (n, _))| *n >= min_points.max(1))
        .map(|(c, (n, s))| CountryStats { country: c.to_string(), count: n, mean: s / n as f64 })
        .collect();
    let Some(first) = qualifying.first() else {
        return Ok(None);
    };
    // BTreeMap order is by code, so strict comparisons keep the smallest code on ties
    let (mut best, mut worst) = (first, first);
    for c in &qualifying[1..] {
        if c.mean < best.mean {
            best = c;
        }
        if c.mean > worst.mean {
            worst = c;
        }
    }
    Ok(Some(CountryExtremes { best: best.clone(), worst: worst.clone(), qualifying: qualifying.clone() }))
}

/// Mean loss per `bin_deg × bin_deg` latitude/longitude bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedErrorGrid {
    pub bin_deg: f64,
    pub n_lat: usize,
    pub n_lon: usize,
    sums: Vec<f64>,
    counts: Vec<usize>,
}

impl BinnedErrorGrid {
    /// Bin containing a point; rows run north to south, columns west to east.
    pub fn bin_of(&self, p: SpherePoint) -> (usize, usize) {
        let row = (((90.0 - p.lat_deg()) / self.bin_deg).floor() as usize).min(self.n_lat - 1);
        let col = (((p.lon_deg() + 180.0) / self.bin_deg).floor() as usize).min(self.n_lon - 1);
        (row, col)
    }

    pub fn count(&self, row: usize, col: usize) -> usize {
        self.counts[row * self.n_lon + col]
    }

    /// `None` for empty bins.
    pub fn mean(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.n_lon + col;
        (self.counts[i] > 0).then(|| self.sums[i] / self.counts[i] as f64)
    }

    pub fn total_count(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Southern and western edge of a bin, in degrees.
    pub fn bin_origin(&self, row: usize, col: usize) -> (f64, f64) {
        (90.0 - (row + 1) as f64 * self.bin_deg, -180.0 + col as f64 * self.bin_deg)
    }

    /// `lat_bin,lon_bin,mean,count` for non-empty bins, with bin centres in
    /// degrees.
    pub fn write_csv<W: Write>(&self, w: W, display_scale: f64) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lat_bin", "lon_bin", "mean", "count"]).map_err(csv_err)?;
        for row in 0..self.n_lat {
            for col in 0..self.n_lon {
                if let Some(m) = self.mean(row, col) {
                    let (lat, lon) = self.bin_origin(row, col);
                    let half = self.bin_deg / 2.0;
                    out.write_record([
                        (lat + half).to_string(),
                        (lon + half).to_string(),
                        (m * display_scale).to_string(),
                        self.count(row, col).to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Bins per-point losses. `bin_deg` must divide 180.
pub fn binned_error_grid(losses: &[f64], points: &[SpherePoint], bin_deg: f64) -> Result<BinnedErrorGrid> {
    if losses.len() != points.len() {
        return Err(Error::ShapeMismatch(format!("{} losses for {} points", losses.len(), points.len())));
    }
    let n_lat = (180.0 / bin_deg).round();
    if !(bin_deg > 0.0 && bin_deg <= 180.0) || (n_lat * bin_deg - 180.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("bin size {bin_deg} does not divide 180 degrees")));
    }
    let (n_lat, n_lon) = (n_lat as usize, 2 * n_lat as usize);
    let mut grid = BinnedErrorGrid { bin_deg, n_lat, n_lon, sums: vec![0.0; n_lat * n_lon], counts: vec![0; n_lat * n_lon] };
    for (&l, &p) in losses.iter().zip(points) {
        let (r, c) = grid.bin_of(p);
        grid.sums[r * n_lon + c] += l;
        grid.counts[r * n_lon + c] += 1;
    }
    Ok(grid)
}

/// Metadata written next to every report as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportManifest {
    pub tool_version: String,
    pub source: String,
    pub subgroup_precedence: String,
    /// Factor applied to every loss in the CSVs (1 unless asked otherwise).
    pub loss_display_scale: f64,
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

impl ReportManifest {
    pub fn new(source: impl Into<String>, loss_display_scale: f64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            source: source.into(),
            subgroup_precedence: "island > coastline > land | sea".to_string(),
            loss_display_scale,
            files: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stratify_examples() {
        let r = stratify(&[0.2, 0.4], &[Subgroup::Land, Subgroup::Land]).unwrap();
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.total.mean, r.get(Subgroup::Land).unwrap().mean);
        assert!(r.get(Subgroup::Island).is_none());

        let r = stratify(&[0.0, 1.0], &[Subgroup::Sea, Subgroup::Island]).unwrap();
        assert_eq!(r.get(Subgroup::Sea).unwrap().mean, 0.0);
        assert_eq!(r.get(Subgroup::Island).unwrap().mean, 1.0);
        assert_eq!(r.total.mean, 0.5);
        assert!(stratify(&[], &[]).is_err());
        assert!(stratify(&[f64::NAN], &[Subgroup::Sea]).is_err());
    }

    #[test]
    fn stratified_csv_layout() {
        let r = stratify(&[1.0, 3.0], &[Subgroup::Coastline, Subgroup::Coastline]).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf, 10.0).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "subgroup,count,mean,std\ncoastline,2,20,10\ntotal,2,20,10\n");
    }

    #[test]
    fn weighted_recombination() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let losses: Vec<f64> = (0..5000).map(|_| rng.gen_range(0.0..3.0)).collect();
        let groups: Vec<Subgroup> = (0..5000).map(|_| Subgroup::ALL[rng.gen_range(0..4)]).collect();
        let r = stratify(&losses, &groups).unwrap();
        let n: usize = r.groups.iter().map(|(_, s)| s.count).sum();
        let recombined = r.groups.iter().map(|(_, s)| s.count as f64 * s.mean).sum::<f64>() / n as f64;
        assert_eq!(n, 5000);
        assert!((recombined - r.total.mean).abs() < 1e-12);
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&xs, &xs.map(|x| 2.0 * x + 3.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&xs, &xs.map(|x| -x)).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&xs, &[2.0, 1.0, 4.0, 3.0]).unwrap() - 0.6).abs() < 1e-15);
        assert!(matches!(pearson(&xs, &[1.0; 4]), Err(Error::UndefinedCorrelation(_))));
        assert!(pearson(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn pearson_invariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..50).map(|_| rng.gen()).collect();
        let ys: Vec<f64> = (0..50).map(|_| rng.gen()).collect();
        let r = pearson(&xs, &ys).unwrap();
        assert!((pearson(&ys, &xs).unwrap() - r).abs() < 1e-14);
        let scaled: Vec<f64> = xs.iter().map(|x| 3.5 * x - 2.0).collect();
        assert!((pearson(&scaled, &ys).unwrap() - r).abs() < 1e-12);
        let flipped: Vec<f64> = xs.iter().map(|x| -0.5 * x + 1.0).collect();
        assert!((pearson(&flipped, &ys).unwrap() + r).abs() < 1e-12);
    }

    fn labels(spec: &[(&str, usize, f64)]) -> (Vec<f64>, Vec<String>) {
        let mut losses = Vec::new();
        let mut countries = Vec::new();
        for (c, n, l) in spec {
            losses.extend(std::iter::repeat_n(*l, *n));
            countries.extend(std::iter::repeat_n(c.to_string(), *n));
        }
        (losses, countries)
    }

    #[test]
    fn country_examples() {
        let (l, c) = labels(&[("FRA", 150, 0.2), ("AND", 20, 0.0)]);
        let e = country_extremes(&l, &c, 100).unwrap().unwrap();
        assert_eq!((e.best.country.as_str(), e.worst.country.as_str()), ("FRA", "FRA"));
        assert_eq!(e.qualifying.len(), 1);

        let (l, c) = labels(&[("CCC", 100, 0.3), ("AAA", 100, 0.1), ("BBB", 100, 0.2)]);
        let e = country_extremes(&l, &c, 100).unwrap().unwrap();
        assert_eq!((e.best.country.as_str(), e.worst.country.as_str()), ("AAA", "CCC"));

        let (l, c) = labels(&[("ZZZ", 100, 0.5), ("YYY", 100, 0.5)]);
        let e = country_extremes(&l, &c, 100).unwrap().unwrap();
        assert_eq!((e.best.country.as_str(), e.worst.country.as_str()), ("YYY", "YYY"));

        let (l, c) = labels(&[("AAA", 99, 0.1), ("", 500, 1.0)]);
        assert!(country_extremes(&l, &c, 100).unwrap().is_none());
    }

    #[test]
    fn binning_examples() {
        let pts = [SpherePoint::from_lat_lon_deg(10.0, 10.0).unwrap(), SpherePoint::from_lat_lon_deg(-80.0, -170.0).unwrap()];
        let g = binned_error_grid(&[1.0, 3.0], &pts, 180.0).unwrap();
        assert_eq!((g.n_lat, g.n_lon), (1, 2));
        assert_eq!(g.mean(0, 1), Some(1.0));
        assert_eq!(g.mean(0, 0), Some(3.0));

        let g = binned_error_grid(&[0.0, 2.0], &pts, 10.0).unwrap();
        let nonempty = (0..g.n_lat).flat_map(|r| (0..g.n_lon).map(move |c| (r, c))).filter(|&(r, c)| g.mean(r, c).is_some()).count();
        assert_eq!(nonempty, 2);
        assert_eq!(g.total_count(), 2);
        assert_eq!(g.mean(8, 19), Some(0.0));
        assert!(binned_error_grid(&[1.0], &pts[..1], 7.0).is_err());

        let mut buf = Vec::new();
        binned_error_grid(&[2.0], &pts[..1], 180.0).unwrap().write_csv(&mut buf, 1.0).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "lat_bin,lon_bin,mean,count\n0,90,2,1\n");
    }

    #[test]
    fn manifest_is_json() {
        let mut m = ReportManifest::new("runs/a", 10.0);
        m.files.push("stratified.csv".into());
        let back: ReportManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
