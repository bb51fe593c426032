//! Cross-product sweeps over a templated run manifest.
//!
//! Any value may hold `{a,b,c}` groups; each key expands to the list of its
//! alternatives and the sweep runs the cross product of all keys. Several
//! `spec*` keys under `[encoding]` (e.g. `spec.sh`, `spec.sw`) form a single
//! axis.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use geoinr::config::KvDocument;
use geoinr::fairness::{SweepRow, SweepTable};
use geoinr::geodata::{GridDataset, Subgroup};

use crate::artifacts::write_atomic;
use crate::error::{CliError, Result};
use crate::plan::{execute, TrainPlan};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const RUNS_DIR: &str = "runs";

/// Expands every `{a,b}` group in `s`, left to right.
pub fn brace_expand(s: &str) -> Result<Vec<String>> {
    let Some(open) = s.find('{') else {
        if s.contains('}') {
            return Err(CliError::Usage(format!("unbalanced '}}' in {s:?}")));
        }
        return Ok(vec![s.to_string()]);
    };
    let close = s[open..].find('}').map(|c| open + c).ok_or_else(|| CliError::Usage(format!("unbalanced '{{' in {s:?}")))?;
    let inner = &s[open + 1..close];
    if inner.contains('{') {
        return Err(CliError::Usage(format!("nested braces are not supported in {s:?}")));
    }
    let (head, tail) = (&s[..open], &s[close + 1..]);
    let tails = brace_expand(tail)?;
    let mut out = Vec::new();
    for alt in inner.split(',') {
        for t in &tails {
            out.push(format!("{head}{}{t}", alt.trim()));
        }
    }
    Ok(out)
}

/// One axis of the sweep: which keys it sets and the alternatives.
struct Axis {
    section: String,
    key: String,
    values: Vec<String>,
}

/// Expands a sweep template into single-valued documents, in a fixed order.
pub fn expand(template: &KvDocument) -> Result<Vec<KvDocument>> {
    let mut axes: Vec<Axis> = Vec::new();
    let mut encodings: Vec<String> = Vec::new();
    for (section, entries) in template.sections() {
        for (key, value) in entries {
            let values = brace_expand(value)?;
            if section == "encoding" && (key == "spec" || key.starts_with("spec.")) {
                encodings.extend(values);
            } else {
                axes.push(Axis { section: section.to_string(), key: key.clone(), values });
            }
        }
    }
    if encodings.is_empty() {
        return Err(CliError::Usage("sweep config needs at least one [encoding] spec".into()));
    }
    axes.push(Axis { section: "encoding".into(), key: "spec".into(), values: encodings });

    let mut docs = vec![KvDocument::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(docs.len() * axis.values.len());
        for doc in &docs {
            for v in &axis.values {
                let mut d = doc.clone();
                d.set(&axis.section, &axis.key, v);
                next.push(d);
            }
        }
        docs = next;
    }
    Ok(docs)
}

/// A planned run with its content-hash id.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub id: String,
    pub plan: TrainPlan,
}

/// Expands and validates a sweep config file.
pub fn plan_sweep(config: &Path, grid_fingerprint: impl Fn(&TrainPlan) -> Result<String>) -> Result<Vec<SweepEntry>> {
    let config = config.canonicalize().map_err(|_| CliError::MissingArtifact(config.to_path_buf()))?;
    let text = fs::read_to_string(&config)?;
    let template: KvDocument = text.parse()?;
    let base = config.parent().unwrap_or(Path::new("/"));
    let mut entries: Vec<SweepEntry> = Vec::new();
    for doc in expand(&template)? {
        let plan = TrainPlan::from_kv(&doc, base)?;
        plan.encoding.validate()?;
        let id = plan.config_id(&grid_fingerprint(&plan)?);
        if !entries.iter().any(|e| e.id == id) {
            entries.push(SweepEntry { id, plan });
        }
    }
    Ok(entries)
}

fn params_summary(plan: &TrainPlan) -> String {
    format!(
        "lr={};batch={};epochs={};hidden={};layers={};omega0={};sampling={};data_seed={}",
        plan.train.learning_rate,
        plan.train.batch_size,
        plan.train.max_epochs,
        plan.model.hidden_dim,
        plan.model.n_layers,
        plan.model.omega0,
        plan.sampling.as_str(),
        plan.data_seed
    )
}

fn row_for(entry: &SweepEntry, outcome: std::result::Result<[Option<f64>; 5], String>) -> SweepRow {
    let (losses, total, status) = match outcome {
        Ok(v) => ([v[0], v[1], v[2], v[3]], v[4], "ok".to_string()),
        Err(e) => ([None; 4], None, format!("failed: {e}")),
    };
    SweepRow {
        config_id: entry.id.clone(),
        encoding: entry.plan.encoding.to_string(),
        samples: entry.plan.samples,
        weight_decay: entry.plan.train.weight_decay,
        seed: entry.plan.train.seed,
        params: params_summary(&entry.plan),
        losses,
        total,
        status,
    }
}

fn save_table(table: &SweepTable, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    write_atomic(path, &buf)?;
    Ok(())
}

pub fn load_table(out_dir: &Path) -> Result<SweepTable> {
    let path = out_dir.join(SWEEP_FILE);
    if !path.exists() {
        return Ok(SweepTable::new());
    }
    Ok(SweepTable::read_csv(fs::File::open(&path)?)?)
}

/// Summary of a sweep invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSummary {
    pub planned: usize,
    pub skipped: usize,
    pub completed: usize,
    pub failed: usize,
}

/// Runs every pending config on `jobs` workers. Completed config ids already
/// in `sweep.csv` are skipped; failed ones are retried. The table on disk is
/// rewritten after each run, so an interrupted sweep can resume.
pub fn run_sweep(entries: &[SweepEntry], grids: &dyn Fn(&Path) -> Result<Arc<GridDataset>>, out_dir: &Path, jobs: usize) -> Result<SweepSummary> {
    fs::create_dir_all(out_dir.join(RUNS_DIR))?;
    let table_path = out_dir.join(SWEEP_FILE);
    let table = load_table(out_dir)?;
    let pending: Vec<&SweepEntry> = entries.iter().filter(|e| !table.get(&e.id).is_some_and(|r| r.is_ok())).collect();
    let skipped = entries.len() - pending.len();
    // load grids up front so workers never race on the cache
    let mut loaded: Vec<(PathBuf, Arc<GridDataset>)> = Vec::new();
    for e in &pending {
        if !loaded.iter().any(|(p, _)| *p == e.plan.grid) {
            loaded.push((e.plan.grid.clone(), grids(&e.plan.grid)?));
        }
    }
    let table = Mutex::new(table);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| CliError::Usage(e.to_string()))?;
    let results: Vec<Result<bool>> = pool.install(|| {
        pending
            .par_iter()
            .map(|entry| {
                let grid = &loaded.iter().find(|(p, _)| *p == entry.plan.grid).expect("grid loaded").1;
                let run_dir = out_dir.join(RUNS_DIR).join(&entry.id);
                // leftovers from an interrupted attempt
                if run_dir.exists() {
                    fs::remove_dir_all(&run_dir)?;
                }
                let outcome = execute(&entry.plan, grid, &run_dir)
                    .map_err(|e| e.to_string())
                    .and_then(|o| match o.report {
                        Some(r) => {
                            let mut v = [None; 5];
                            for g in Subgroup::ALL {
                                v[g as usize] = r.get(g).map(|s| s.mean);
                            }
                            v[4] = Some(r.total.mean);
                            Ok(v)
                        }
                        None => Ok([None, None, None, None, Some(o.evaluation.mean_loss())]),
                    });
                let ok = outcome.is_ok();
                match &outcome {
                    Ok(_) => eprintln!("run {} ({} samples={} wd={} seed={}) done", entry.id, entry.plan.encoding, entry.plan.samples, entry.plan.train.weight_decay, entry.plan.train.seed),
                    Err(e) => eprintln!("run {} failed: {e}", entry.id),
                }
                let mut t = table.lock().expect("no worker panicked while holding the table");
                t.upsert(row_for(entry, outcome));
                save_table(&t, &table_path)?;
                Ok(ok)
            })
            .collect()
    });
    let mut summary = SweepSummary { planned: entries.len(), skipped, completed: 0, failed: 0 };
    for r in results {
        if r? {
            summary.completed += 1;
        } else {
            summary.failed += 1;
        }
    }
    save_table(&table.into_inner().expect("workers finished"), &table_path)?;
    Ok(summary)
}

/// `geoinr sweep CONFIG --out DIR --jobs N`.
pub fn run(args: crate::SweepArgs, stdout: &mut dyn std::io::Write) -> Result<()> {
    let cache: Mutex<Vec<(PathBuf, Arc<GridDataset>)>> = Mutex::new(Vec::new());
    let entries = plan_sweep(&args.config, |plan| {
        let mut cache = cache.lock().expect("grid cache");
        if let Some((_, g)) = cache.iter().find(|(p, _)| *p == plan.grid) {
            return Ok(g.fingerprint());
        }
        let g = Arc::new(plan.load_grid()?);
        let fp = g.fingerprint();
        cache.push((plan.grid.clone(), g));
        Ok(fp)
    })?;
    let jobs = args.jobs.min(crate::thread_cap()).max(1);
    writeln!(stdout, "{} configs, {} worker(s)", entries.len(), jobs)?;
    let lookup = |path: &Path| -> Result<Arc<GridDataset>> {
        let cache = cache.lock().expect("grid cache");
        cache.iter().find(|(p, _)| p == path).map(|(_, g)| g.clone()).ok_or_else(|| CliError::MissingArtifact(path.to_path_buf()))
    };
    let s = run_sweep(&entries, &lookup, &args.out, jobs)?;
    writeln!(stdout, "{} completed, {} failed, {} already done", s.completed, s.failed, s.skipped)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn braces_expand_left_to_right() {
        assert_eq!(brace_expand("plain").unwrap(), vec!["plain"]);
        assert_eq!(brace_expand("{1e-4, 1e-3}").unwrap(), vec!["1e-4", "1e-3"]);
        let sw = brace_expand("sw:N={50,90,130,170},M={3,4,5},Q=6,k=6").unwrap();
        assert_eq!(sw.len(), 12);
        assert_eq!(sw[0], "sw:N=50,M=3,Q=6,k=6");
        assert_eq!(sw[11], "sw:N=170,M=5,Q=6,k=6");
        assert!(brace_expand("{1,2").is_err());
        assert!(brace_expand("1}").is_err());
        assert!(brace_expand("{{1}}").is_err());
    }

    #[test]
    fn cross_product_counts() {
        let doc: KvDocument = "[data]\ngrid=g.fgrid\nsamples={5000,10000}\n[train]\nweight_decay={1e-4,1e-3}\nseed={0,1}\n[encoding]\nspec=sh:L=20"
            .parse()
            .unwrap();
        let docs = expand(&doc).unwrap();
        assert_eq!(docs.len(), 8);
        let doc: KvDocument = "[data]\ngrid=g\n[encoding]\nspec.sh=sh:L={10,20}\nspec.sw=sw:N={50,90},M={3,4,5}".parse().unwrap();
        assert_eq!(expand(&doc).unwrap().len(), 2 + 6);
        assert!(expand(&"[data]\ngrid=g".parse().unwrap()).is_err());
    }
}
