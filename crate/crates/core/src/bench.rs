//! Benchmark harness: runs an instance x solver x seed grid, validates every
//! reported solution against the independent checker, persists records
//! incrementally so interrupted grids can resume, and aggregates the
//! best-known-solution statistics tables.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hampath::{instance_hash, HamPathError, PathCostTable, DEFAULT_LAMBDA_MAX};
use crate::ils::{run_ils, IlsConfig, IlsMode};
use crate::instance::{CostMatrix, Instance, InstanceError};
use crate::solution::validate;
use crate::uhgs::{run_uhgs, UhgsConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverId {
    #[serde(rename = "ils")]
    Ils,
    #[serde(rename = "ils-clu")]
    IlsClu,
    #[serde(rename = "uhgs")]
    Uhgs,
}

impl SolverId {
    pub fn parse(s: &str) -> Option<SolverId> {
        match s {
            "ils" => Some(SolverId::Ils),
            "ils-clu" => Some(SolverId::IlsClu),
            "uhgs" => Some(SolverId::Uhgs),
            _ => None,
        }
    }

    /// Whether the solver consumes the Hamiltonian-path table.
    pub fn needs_table(&self) -> bool {
        !matches!(self, SolverId::Ils)
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolverId::Ils => "ils",
            SolverId::IlsClu => "ils-clu",
            SolverId::Uhgs => "uhgs",
        };
        f.write_str(s)
    }
}

/// One grid cell result. `best` is empty for failed runs (solver panic or no
/// feasible solution); `avg` is the mean best cost over the completed seeds
/// of the same (instance, solver) pair, filled in when records are written.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub n: usize,
    pub clusters: usize,
    pub m: usize,
    pub solver: SolverId,
    pub seed: u64,
    pub best: Option<f64>,
    pub avg: Option<f64>,
    pub time: f64,
    pub preproc_time: f64,
}

/// Best-known solution values keyed by instance name.
#[derive(Debug, Clone, Default)]
pub struct BksTable {
    map: HashMap<String, f64>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bks line {0}: expected `instance,cost` with positive cost")]
    Bks(usize),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    HamPath(#[from] HamPathError),
}

impl BksTable {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, instance: impl Into<String>, cost: f64) {
        self.map.insert(instance.into(), cost);
    }

    pub fn get(&self, instance: &str) -> Option<f64> {
        self.map.get(instance).copied()
    }

    /// Loads `instance,cost` lines; a leading header row is tolerated.
    pub fn from_csv_path(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)?;
        let mut map = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (name, value) = line.split_once(',').ok_or(BenchError::Bks(idx + 1))?;
            let value = value.trim();
            if idx == 0 && value.parse::<f64>().is_err() {
                continue; // header
            }
            let cost: f64 = value.parse().map_err(|_| BenchError::Bks(idx + 1))?;
            if cost <= 0.0 {
                return Err(BenchError::Bks(idx + 1));
            }
            map.insert(name.trim().to_string(), cost);
        }
        Ok(BksTable { map })
    }
}

/// Percentage deviation from the best known solution:
/// `(z - z_bks) / z_bks * 100`. Negative values are improvements over the
/// best known value.
pub fn percent_dev(z: f64, z_bks: f64) -> f64 {
    debug_assert!(z_bks > 0.0);
    (z - z_bks) / z_bks * 100.0
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub instances: Vec<PathBuf>,
    pub solvers: Vec<SolverId>,
    /// Seeds per (instance, solver) pair: base_seed..base_seed+runs.
    pub runs: usize,
    pub base_seed: u64,
    pub workers: usize,
    /// Per-run wall clock cap in seconds.
    pub time_limit: Option<f64>,
    pub lambda_max: usize,
    /// Directory for Hamiltonian-path caches; default is the instance's own
    /// directory.
    pub cache_dir: Option<PathBuf>,
    /// Records file, appended after every completed cell; existing cells are
    /// skipped on restart.
    pub out_csv: Option<PathBuf>,
}

impl BenchConfig {
    pub fn new(instances: Vec<PathBuf>, solvers: Vec<SolverId>) -> Self {
        BenchConfig {
            instances,
            solvers,
            runs: 10,
            base_seed: 0,
            workers: 1,
            time_limit: Some(300.0),
            lambda_max: DEFAULT_LAMBDA_MAX,
            cache_dir: None,
            out_csv: None,
        }
    }
}

/// Resolves the cache path for an instance file: `<stem>.<hash>.hampath`
/// beside the instance unless a cache directory is given. The
/// `CLUVRP_CACHE_DIR` environment variable overrides the default directory.
pub fn cache_path(instance_path: &Path, inst: &Instance, cache_dir: Option<&Path>) -> PathBuf {
    let dir = cache_dir
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("CLUVRP_CACHE_DIR").map(PathBuf::from))
        .unwrap_or_else(|| {
            instance_path
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."))
        });
    let stem = instance_path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "instance".to_string());
    dir.join(format!("{}.{}.hampath", stem, instance_hash(inst)))
}

/// Loads the path table from cache or computes and persists it.
pub fn ensure_table(
    instance_path: &Path,
    inst: &Instance,
    costs: &CostMatrix,
    lambda_max: usize,
    cache_dir: Option<&Path>,
) -> Result<PathCostTable, BenchError> {
    let path = cache_path(instance_path, inst, cache_dir);
    if path.exists() {
        if let Ok(table) = PathCostTable::load(&path, inst) {
            return Ok(table);
        }
    }
    let table = PathCostTable::build(inst, costs, lambda_max)?;
    if let Some(dir) = path.parent() {
        let _ = std::fs::create_dir_all(dir);
    }
    table.save(&path)?;
    Ok(table)
}

struct LoadedInstance {
    name: String,
    inst: Instance,
    costs: CostMatrix,
    table: Option<PathCostTable>,
    preproc_time: f64,
}

/// Runs the full grid. Parse failures skip the instance with a log line;
/// solver panics become failed records. Every reported cost is re-verified
/// by the independent validator before being recorded.
pub fn run_experiment(cfg: &BenchConfig) -> Result<Vec<RunRecord>, BenchError> {
    let needs_table = cfg.solvers.iter().any(SolverId::needs_table);
    let mut loaded: Vec<LoadedInstance> = Vec::new();
    for path in &cfg.instances {
        let inst = match Instance::from_path(path) {
            Ok(inst) => inst,
            Err(e) => {
                eprintln!("[bench] skipping {}: {e}", path.display());
                continue;
            }
        };
        let costs = CostMatrix::from_instance(&inst);
        let (table, preproc_time) = if needs_table {
            match ensure_table(path, &inst, &costs, cfg.lambda_max, cfg.cache_dir.as_deref()) {
                Ok(t) => {
                    let secs = t.build_seconds;
                    (Some(t), secs)
                }
                Err(e) => {
                    eprintln!("[bench] skipping {}: {e}", path.display());
                    continue;
                }
            }
        } else {
            (None, 0.0)
        };
        loaded.push(LoadedInstance {
            name: inst.name.clone(),
            inst,
            costs,
            table,
            preproc_time,
        });
    }

    let mut records: Vec<RunRecord> = match &cfg.out_csv {
        Some(path) if path.exists() => read_records(path)?,
        _ => Vec::new(),
    };
    let done: HashSet<(String, SolverId, u64)> = records
        .iter()
        .map(|r| (r.instance.clone(), r.solver, r.seed))
        .collect();

    let mut queue: VecDeque<(usize, SolverId, u64)> = VecDeque::new();
    for (idx, li) in loaded.iter().enumerate() {
        for &solver in &cfg.solvers {
            for i in 0..cfg.runs {
                let seed = cfg.base_seed + i as u64;
                if !done.contains(&(li.name.clone(), solver, seed)) {
                    queue.push_back((idx, solver, seed));
                }
            }
        }
    }

    let shared = Mutex::new((queue, records));
    let workers = cfg.workers.max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let cell = {
                    let mut guard = shared.lock().unwrap();
                    guard.0.pop_front()
                };
                let Some((idx, solver, seed)) = cell else { break };
                let li = &loaded[idx];
                let record = run_cell(li, solver, seed, cfg);
                let mut guard = shared.lock().unwrap();
                guard.1.push(record);
                fill_averages(&mut guard.1);
                if let Some(path) = &cfg.out_csv {
                    if let Err(e) = write_records(path, &guard.1) {
                        eprintln!("[bench] failed to write {}: {e}", path.display());
                    }
                }
            });
        }
    });

    records = shared.into_inner().unwrap().1;
    fill_averages(&mut records);
    sort_records(&mut records);
    if let Some(path) = &cfg.out_csv {
        write_records(path, &records)?;
    }
    Ok(records)
}

fn run_cell(li: &LoadedInstance, solver: SolverId, seed: u64, cfg: &BenchConfig) -> RunRecord {
    let started = std::time::Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| match solver {
        SolverId::Ils | SolverId::IlsClu => {
            let mode = if solver == SolverId::Ils {
                IlsMode::Vertex
            } else {
                IlsMode::Cluster
            };
            let mut scfg = IlsConfig::new(mode, seed);
            scfg.time_limit = cfg.time_limit;
            run_ils(&li.inst, &li.costs, li.table.as_ref(), &scfg).map(|r| r.solution)
        }
        SolverId::Uhgs => {
            let mut scfg = UhgsConfig::new(seed);
            scfg.time_limit = cfg.time_limit;
            run_uhgs(&li.inst, &li.costs, li.table.as_ref().unwrap(), &scfg).map(|r| r.solution)
        }
    }));
    let time = started.elapsed().as_secs_f64();
    let best = match outcome {
        Ok(Ok(sol)) => match validate(&li.inst, &li.costs, &sol) {
            Ok(cost) => Some(cost),
            Err(e) => {
                eprintln!("[bench] {} {} seed {seed}: invalid solution: {e}", li.name, solver);
                None
            }
        },
        Ok(Err(e)) => {
            eprintln!("[bench] {} {} seed {seed}: {e}", li.name, solver);
            None
        }
        Err(_) => {
            eprintln!("[bench] {} {} seed {seed}: solver panicked", li.name, solver);
            None
        }
    };
    let preproc = if solver.needs_table() { li.preproc_time } else { 0.0 };
    RunRecord {
        instance: li.name.clone(),
        n: li.inst.n(),
        clusters: li.inst.num_clusters(),
        m: li.inst.fleet,
        solver,
        seed,
        best,
        avg: None,
        time,
        preproc_time: preproc,
    }
}

/// Sets `avg` on every record to the mean best over completed seeds of the
/// same (instance, solver) pair.
pub fn fill_averages(records: &mut [RunRecord]) {
    let mut sums: HashMap<(String, SolverId), (f64, usize)> = HashMap::new();
    for r in records.iter() {
        if let Some(b) = r.best {
            let e = sums.entry((r.instance.clone(), r.solver)).or_insert((0.0, 0));
            e.0 += b;
            e.1 += 1;
        }
    }
    for r in records.iter_mut() {
        r.avg = sums
            .get(&(r.instance.clone(), r.solver))
            .map(|(s, c)| s / *c as f64);
    }
}

fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        a.instance
            .cmp(&b.instance)
            .then(a.solver.to_string().cmp(&b.solver.to_string()))
            .then(a.seed.cmp(&b.seed))
    });
}

pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<(), BenchError> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        for r in records {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let mut out = Vec::new();
    let mut rdr = csv::Reader::from_path(path)?;
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    /// Leading alphabetic part of the instance name.
    InstanceSet,
    /// Number of customers.
    Size,
    /// Mean cluster cardinality, rounded.
    Theta,
}

/// One summary line: a (group, solver) aggregate.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SummaryRow {
    pub group: String,
    pub solver: SolverId,
    pub instances: usize,
    /// Instances whose best run matched the best known value.
    pub bks_hits: usize,
    /// Instances whose best run improved on the best known value.
    pub new_bks: usize,
    pub avg_time_s: f64,
    /// Mean time including Hamiltonian-path preprocessing.
    pub avg_time_with_preproc_s: f64,
    /// Mean percentage deviation of the per-instance best, over instances
    /// with a known BKS.
    pub avg_dev_pct: Option<f64>,
}

fn group_key(r: &RunRecord, group_by: GroupBy) -> String {
    match group_by {
        GroupBy::InstanceSet => {
            let stem: String = r
                .instance
                .chars()
                .take_while(|c| c.is_alphabetic())
                .collect();
            if stem.is_empty() {
                r.instance.clone()
            } else {
                stem
            }
        }
        GroupBy::Size => format!("n={}", r.n),
        GroupBy::Theta => {
            let theta = (r.n as f64 / r.clusters.max(1) as f64).round() as usize;
            format!("theta={theta}")
        }
    }
}

/// Aggregates records into the benchmark-style summary table: one row per
/// (group, solver) with BKS hits, mean times, and mean deviation of the
/// per-instance best. Output is independent of record order.
pub fn summarize(records: &[RunRecord], bks: &BksTable, group_by: GroupBy) -> Vec<SummaryRow> {
    const BKS_EPS: f64 = 1e-6;
    // (group, solver) -> per-instance best costs and run times.
    let mut best_per_instance: HashMap<(String, SolverId, String), f64> = HashMap::new();
    let mut times: HashMap<(String, SolverId), (f64, f64, usize)> = HashMap::new();
    for r in records {
        let g = group_key(r, group_by);
        if let Some(b) = r.best {
            best_per_instance
                .entry((g.clone(), r.solver, r.instance.clone()))
                .and_modify(|cur| *cur = cur.min(b))
                .or_insert(b);
        }
        let t = times.entry((g, r.solver)).or_insert((0.0, 0.0, 0));
        t.0 += r.time;
        t.1 += r.time + r.preproc_time;
        t.2 += 1;
    }

    let mut rows: HashMap<(String, SolverId), SummaryRow> = HashMap::new();
    for ((group, solver, instance), best) in &best_per_instance {
        let row = rows
            .entry((group.clone(), *solver))
            .or_insert_with(|| SummaryRow {
                group: group.clone(),
                solver: *solver,
                instances: 0,
                bks_hits: 0,
                new_bks: 0,
                avg_time_s: 0.0,
                avg_time_with_preproc_s: 0.0,
                avg_dev_pct: None,
            });
        row.instances += 1;
        if let Some(z_bks) = bks.get(instance) {
            let dev = percent_dev(*best, z_bks);
            if (best - z_bks).abs() <= BKS_EPS {
                row.bks_hits += 1;
            } else if *best < z_bks {
                row.new_bks += 1;
            }
            row.avg_dev_pct = Some(row.avg_dev_pct.unwrap_or(0.0) + dev);
        }
    }
    for ((group, solver), row) in rows.iter_mut() {
        if let Some(sum) = row.avg_dev_pct {
            let with_bks = best_per_instance
                .iter()
                .filter(|((g, s, i), _)| g == group && s == solver && bks.get(i).is_some())
                .count();
            row.avg_dev_pct = Some(sum / with_bks as f64);
        }
        if let Some((t, tp, c)) = times.get(&(group.clone(), *solver)) {
            row.avg_time_s = t / *c as f64;
            row.avg_time_with_preproc_s = tp / *c as f64;
        }
    }
    let mut out: Vec<SummaryRow> = rows.into_values().collect();
    out.sort_by(|a, b| {
        a.group
            .cmp(&b.group)
            .then(a.solver.to_string().cmp(&b.solver.to_string()))
    });
    out
}

/// Renders the summary as a Markdown table mirroring the published layout:
/// per group one line per solver with #BKS, times and mean deviation.
pub fn summary_to_markdown(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str("| Group | Solver | Inst. | #BKS | New BKS | Avg. Time (s) | Avg. Time+Preproc (s) | Avg. % Dev. |\n");
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for r in rows {
        let dev = r
            .avg_dev_pct
            .map(|d| format!("{:.2}", d))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {:.1} | {:.1} | {} |\n",
            r.group, r.solver, r.instances, r.bks_hits, r.new_bks, r.avg_time_s, r.avg_time_with_preproc_s, dev
        ));
    }
    out
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| {
        BenchError::Io(std::io::Error::new(std::io::ErrorKind::Other, e.to_string()))
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
