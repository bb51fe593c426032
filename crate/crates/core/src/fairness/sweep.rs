use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{csv_err, pearson};
use crate::error::{Error, Result};
use crate::geodata::Subgroup;

/// One completed (or failed) run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub config_id: String,
    pub encoding: String,
    pub samples: usize,
    pub weight_decay: f64,
    pub seed: u64,
    /// Remaining hyperparameters as `key=value` pairs joined by `;`.
    pub params: String,
    /// Mean loss per subgroup in [`Subgroup::ALL`] order; `None` when absent.
    pub losses: [Option<f64>; 4],
    pub total: Option<f64>,
    /// `ok`, or `failed: <reason>`.
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn loss(&self, group: Subgroup) -> Option<f64> {
        self.losses[group as usize]
    }
}

const HEADER: [&str; 12] =
    ["config_id", "encoding", "samples", "weight_decay", "seed", "params", "island", "coastline", "land", "sea", "total", "status"];

/// Sweep results, one row per config id, ordered by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    rows: Vec<SweepRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

impl SweepTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[SweepRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, config_id: &str) -> Option<&SweepRow> {
        self.rows.binary_search_by(|r| r.config_id.as_str().cmp(config_id)).ok().map(|i| &self.rows[i])
    }

    /// Inserts a row, replacing any earlier row with the same config id.
    pub fn upsert(&mut self, row: SweepRow) {
        match self.rows.binary_search_by(|r| r.config_id.cmp(&row.config_id)) {
            Ok(i) => self.rows[i] = row,
            Err(i) => self.rows.insert(i, row),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(HEADER).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.config_id.clone(),
                r.encoding.clone(),
                r.samples.to_string(),
                r.weight_decay.to_string(),
                r.seed.to_string(),
                r.params.clone(),
            ];
            rec.extend(r.losses.iter().map(|l| opt(*l)));
            rec.push(opt(r.total));
            rec.push(r.status.clone());
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(r);
        let headers = reader.headers().map_err(csv_err)?.clone();
        if headers.iter().ne(HEADER) {
            return Err(Error::format("sweep table", format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
        }
        let mut table = SweepTable::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let bad = |field: &str| Error::format("sweep table", format!("record {}: bad {field}", i + 1));
            let num = |k: usize| -> Result<Option<f64>> {
                let s = &rec[k];
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad(HEADER[k]))
                }
            };
            table.upsert(SweepRow {
                config_id: rec[0].to_string(),
                encoding: rec[1].to_string(),
                samples: rec[2].parse().map_err(|_| bad("samples"))?,
                weight_decay: rec[3].parse().map_err(|_| bad("weight_decay"))?,
                seed: rec[4].parse().map_err(|_| bad("seed"))?,
                params: rec[5].to_string(),
                losses: [num(6)?, num(7)?, num(8)?, num(9)?],
                total: num(10)?,
                status: rec[11].to_string(),
            });
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub encoding: String,
    pub samples: usize,
    pub group_a: Subgroup,
    pub group_b: Subgroup,
    pub r: f64,
    pub n: usize,
}

impl CorrelationRow {
    pub fn stratum(&self) -> String {
        format!("{} samples={}", self.encoding, self.samples)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrelationTable {
    pub rows: Vec<CorrelationRow>,
    /// Strata that were skipped, with the reason.
    pub warnings: Vec<String>,
}

impl CorrelationTable {
    pub fn get(&self, encoding: &str, samples: usize) -> Option<&CorrelationRow> {
        self.rows.iter().find(|r| r.encoding == encoding && r.samples == samples)
    }

    /// `stratum,group_a,group_b,r,n`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["stratum", "group_a", "group_b", "r", "n"]).map_err(csv_err)?;
        for row in &self.rows {
            out.write_record([row.stratum(), row.group_a.to_string(), row.group_b.to_string(), row.r.to_string(), row.n.to_string()])
                .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Pearson r between the run-level mean losses of two subgroups, per
/// (encoding, training samples) stratum. Failed runs and runs missing either
/// subgroup are left out; strata with fewer than two runs or zero variance
/// are skipped with a warning.
pub fn sweep_correlation(table: &SweepTable, group_a: Subgroup, group_b: Subgroup) -> CorrelationTable {
    let mut strata: BTreeMap<(String, usize), Vec<(f64, f64)>> = BTreeMap::new();
    // rows are ordered by config id, so each stratum's pairs come in a fixed order
    for row in table.rows().iter().filter(|r| r.is_ok()) {
        if let (Some(a), Some(b)) = (row.loss(group_a), row.loss(group_b)) {
            strata.entry((row.encoding.clone(), row.samples)).or_default().push((a, b));
        }
    }
    let mut out = CorrelationTable::default();
    for ((encoding, samples), pairs) in strata {
        let label = format!("{encoding} samples={samples}");
        if pairs.len() < 2 {
            out.warnings.push(format!("stratum {label} has {} run(s); skipped", pairs.len()));
            continue;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        match pearson(&xs, &ys) {
            Ok(r) => out.rows.push(CorrelationRow { encoding, samples, group_a, group_b, r, n: pairs.len() }),
            Err(e) => out.warnings.push(format!("stratum {label}: {e}; skipped")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row(id: &str, enc: &str, samples: usize, land: f64, island: f64) -> SweepRow {
        SweepRow {
            config_id: id.into(),
            encoding: enc.into(),
            samples,
            weight_decay: 1e-4,
            seed: 0,
            params: "lr=0.0001;epochs=5".into(),
            losses: [Some(island), None, Some(land), Some(0.01)],
            total: Some(0.1),
            status: "ok".into(),
        }
    }

    #[test]
    fn csv_round_trip_and_upsert() {
        let mut t = SweepTable::new();
        t.upsert(row("b", "sw:N=130,M=4", 5000, 0.1, 2.0));
        t.upsert(row("a", "sh:L=20", 5000, 0.1, 2.0));
        t.upsert(row("b", "sw:N=130,M=4", 5000, 0.2, 3.0));
        assert_eq!(t.len(), 2);
        assert_eq!(t.rows()[0].config_id, "a");
        let mut failed = row("c", "sh:L=20", 5000, 0.0, 0.0);
        failed.losses = [None; 4];
        failed.total = None;
        failed.status = "failed: training diverged".into();
        t.upsert(failed);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = SweepTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.get("b").unwrap().loss(Subgroup::Land), Some(0.2));
        assert!(SweepTable::read_csv("x,y\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn constructed_anticorrelation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut t = SweepTable::new();
        for s in [5000, 10000] {
            for i in 0..6 {
                let land: f64 = rng.gen_range(0.0..1.0);
                let island = -land + rng.gen_range(-1e-3..1e-3);
                t.upsert(row(&format!("{s}-{i}"), "sh:L=20", s, land, island));
            }
        }
        t.upsert(row("lonely", "sw:N=10", 5000, 0.3, 0.4));
        let c = sweep_correlation(&t, Subgroup::Land, Subgroup::Island);
        assert_eq!(c.rows.len(), 2);
        assert!(c.rows.iter().all(|r| r.r < -0.99 && r.n == 6));
        assert_eq!(c.warnings.len(), 1);
        assert!(c.warnings[0].contains("sw:N=10"));

        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("stratum,group_a,group_b,r,n\nsh:L=20 samples=5000,land,island,"));
    }

    #[test]
    fn zero_variance_stratum_is_skipped() {
        let mut t = SweepTable::new();
        t.upsert(row("a", "sh:L=5", 100, 0.5, 1.0));
        t.upsert(row("b", "sh:L=5", 100, 0.5, 2.0));
        let c = sweep_correlation(&t, Subgroup::Land, Subgroup::Island);
        assert!(c.rows.is_empty());
        assert_eq!(c.warnings.len(), 1);
    }
}
