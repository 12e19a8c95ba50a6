//! `cluvrp` command line: instance generation, Hamiltonian-path
//! preprocessing, single solver runs, and benchmark grids.
//!
//! Every flag can also come from a JSON config file (`--config`); explicit
//! flags win over config values. The cache directory resolves as
//! flag > `CLUVRP_CACHE_DIR` > the instance's own directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use cluvrp_core::bench::{
    cache_path, ensure_table, run_experiment, summarize, summary_to_csv, summary_to_markdown,
    BenchConfig, BksTable, GroupBy, SolverId,
};
use cluvrp_core::hampath::{HamPathError, PathCostTable, DEFAULT_LAMBDA_MAX};
use cluvrp_core::ils::{run_ils, IlsConfig, IlsMode};
use cluvrp_core::instance::{generate_clustered, write_instance, CostMatrix, Instance};
use cluvrp_core::solution::validate;
use cluvrp_core::uhgs::{run_uhgs, UhgsConfig};

#[derive(Parser)]
#[command(name = "cluvrp", about = "Clustered VRP solving toolkit", version)]
struct Cli {
    /// JSON config file with per-subcommand defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regroup a CVRP instance into clusters with a target mean size.
    Gen {
        /// Input instance (clusters, if any, are ignored).
        #[arg(long)]
        cvrp: Option<PathBuf>,
        /// Target mean cluster cardinality.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute and cache the intra-cluster Hamiltonian path table.
    Preprocess {
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        lambda_max: Option<usize>,
    },
    /// Run one solver on one instance.
    Solve {
        #[arg(long)]
        instance: Option<PathBuf>,
        /// ils | ils-clu | uhgs
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Wall-clock cap in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        json_out: Option<PathBuf>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        lambda_max: Option<usize>,
    },
    /// Run an instances x solvers x seeds grid and report the statistics.
    Bench {
        /// Directory with `.cluvrp` instance files.
        #[arg(long)]
        instances: Option<PathBuf>,
        /// Comma-separated solver list, e.g. `ils,ils-clu,uhgs`.
        #[arg(long)]
        solvers: Option<String>,
        /// Seeds per (instance, solver) cell.
        #[arg(long)]
        runs: Option<usize>,
        /// Best-known-solutions CSV (`instance,cost`).
        #[arg(long)]
        bks: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Per-run records CSV (also the resume state).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Grouped summary tables in Markdown.
        #[arg(long)]
        markdown: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        lambda_max: Option<usize>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
}

/// JSON mirror of the command-line flags, one section per subcommand.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    gen: GenConfig,
    #[serde(default)]
    preprocess: PreprocessConfig,
    #[serde(default)]
    solve: SolveConfig,
    #[serde(default)]
    bench: BenchFileConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenConfig {
    cvrp: Option<PathBuf>,
    theta: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PreprocessConfig {
    instance: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    lambda_max: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    instance: Option<PathBuf>,
    solver: Option<String>,
    seed: Option<u64>,
    time_limit: Option<f64>,
    json_out: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    lambda_max: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchFileConfig {
    instances: Option<PathBuf>,
    solvers: Option<String>,
    runs: Option<usize>,
    bks: Option<PathBuf>,
    workers: Option<usize>,
    csv: Option<PathBuf>,
    markdown: Option<PathBuf>,
    seed: Option<u64>,
    time_limit: Option<f64>,
    lambda_max: Option<usize>,
    cache_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct SolveReport {
    instance: String,
    solver: String,
    seed: u64,
    cost: f64,
    routes: Vec<Vec<usize>>,
    time_s: f64,
    preproc_time_s: f64,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let file: ConfigFile = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => ConfigFile::default(),
    };

    match cli.command {
        Command::Gen { cvrp, theta, seed, out } => {
            let cvrp = cvrp.or(file.gen.cvrp).ok_or_else(|| anyhow!("--cvrp is required"))?;
            let theta = theta.or(file.gen.theta).ok_or_else(|| anyhow!("--theta is required"))?;
            let seed = seed.or(file.gen.seed).unwrap_or(0);
            let out = out.or(file.gen.out).ok_or_else(|| anyhow!("--out is required"))?;
            let base = Instance::from_path(&cvrp)
                .with_context(|| format!("reading {}", cvrp.display()))?;
            let clustered = generate_clustered(&base, theta, seed)?;
            std::fs::write(&out, write_instance(&clustered)?)?;
            println!(
                "wrote {} (n={}, clusters={}, m={})",
                out.display(),
                clustered.n(),
                clustered.num_clusters(),
                clustered.fleet
            );
        }
        Command::Preprocess {
            instance,
            cache_dir,
            lambda_max,
        } => {
            let path = instance
                .or(file.preprocess.instance)
                .ok_or_else(|| anyhow!("--instance is required"))?;
            let cache_dir = cache_dir.or(file.preprocess.cache_dir);
            let lambda_max = lambda_max.or(file.preprocess.lambda_max).unwrap_or(DEFAULT_LAMBDA_MAX);
            let inst = Instance::from_path(&path)?;
            warn_large_clusters(&inst, lambda_max);
            let costs = CostMatrix::from_instance(&inst);
            let table = build_table(&path, &inst, &costs, lambda_max, cache_dir.as_deref())?;
            println!(
                "cached {} ({} endpoint pairs, {:.2}s)",
                cache_path(&path, &inst, cache_dir.as_deref()).display(),
                table.pair_count(),
                table.build_seconds
            );
        }
        Command::Solve {
            instance,
            solver,
            seed,
            time_limit,
            json_out,
            cache_dir,
            lambda_max,
        } => {
            let path = instance
                .or(file.solve.instance)
                .ok_or_else(|| anyhow!("--instance is required"))?;
            let solver = solver
                .or(file.solve.solver)
                .ok_or_else(|| anyhow!("--solver is required"))?;
            let solver = SolverId::parse(&solver)
                .ok_or_else(|| anyhow!("unknown solver `{solver}` (ils | ils-clu | uhgs)"))?;
            let seed = seed.or(file.solve.seed).unwrap_or(0);
            let time_limit = time_limit.or(file.solve.time_limit);
            let json_out = json_out.or(file.solve.json_out);
            let cache_dir = cache_dir.or(file.solve.cache_dir);
            let lambda_max = lambda_max.or(file.solve.lambda_max).unwrap_or(DEFAULT_LAMBDA_MAX);

            let inst = Instance::from_path(&path)?;
            let costs = CostMatrix::from_instance(&inst);
            let (table, preproc) = if solver.needs_table() {
                warn_large_clusters(&inst, lambda_max);
                let table = build_table(&path, &inst, &costs, lambda_max, cache_dir.as_deref())?;
                let secs = table.build_seconds;
                (Some(table), secs)
            } else {
                (None, 0.0)
            };

            let started = Instant::now();
            let solution = match solver {
                SolverId::Ils | SolverId::IlsClu => {
                    let mode = if solver == SolverId::Ils {
                        IlsMode::Vertex
                    } else {
                        IlsMode::Cluster
                    };
                    let mut cfg = IlsConfig::new(mode, seed);
                    cfg.time_limit = time_limit;
                    run_ils(&inst, &costs, table.as_ref(), &cfg)?.solution
                }
                SolverId::Uhgs => {
                    let mut cfg = UhgsConfig::new(seed);
                    cfg.time_limit = time_limit;
                    run_uhgs(&inst, &costs, table.as_ref().unwrap(), &cfg)?.solution
                }
            };
            let time_s = started.elapsed().as_secs_f64();
            let cost = validate(&inst, &costs, &solution)
                .map_err(|e| anyhow!("solver returned an invalid solution: {e}"))?;
            println!("instance {} solver {} seed {}", inst.name, solver, seed);
            println!("cost {cost}  time {time_s:.2}s  preproc {preproc:.2}s");
            for (i, route) in solution.routes.iter().enumerate() {
                let stops: Vec<String> = route.iter().map(|v| v.to_string()).collect();
                println!("route {}: 0 {} 0", i + 1, stops.join(" "));
            }
            if let Some(out) = json_out {
                let report = SolveReport {
                    instance: inst.name.clone(),
                    solver: solver.to_string(),
                    seed,
                    cost,
                    routes: solution.routes.clone(),
                    time_s,
                    preproc_time_s: preproc,
                };
                std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
                println!("wrote {}", out.display());
            }
        }
        Command::Bench {
            instances,
            solvers,
            runs,
            bks,
            workers,
            csv,
            markdown,
            seed,
            time_limit,
            lambda_max,
            cache_dir,
        } => {
            let dir = instances
                .or(file.bench.instances)
                .ok_or_else(|| anyhow!("--instances is required"))?;
            let solvers_text = solvers.or(file.bench.solvers).unwrap_or_else(|| "ils,ils-clu,uhgs".into());
            let solvers = parse_solvers(&solvers_text)?;
            let paths = instance_files(&dir)?;
            if paths.is_empty() {
                bail!("no .cluvrp instances under {}", dir.display());
            }
            let mut cfg = BenchConfig::new(paths, solvers);
            if let Some(r) = runs.or(file.bench.runs) {
                cfg.runs = r;
            }
            if let Some(s) = seed.or(file.bench.seed) {
                cfg.base_seed = s;
            }
            if let Some(w) = workers.or(file.bench.workers) {
                cfg.workers = w;
            }
            if let Some(t) = time_limit.or(file.bench.time_limit) {
                cfg.time_limit = Some(t);
            }
            if let Some(l) = lambda_max.or(file.bench.lambda_max) {
                cfg.lambda_max = l;
            }
            cfg.cache_dir = cache_dir.or(file.bench.cache_dir);
            cfg.out_csv = csv.or(file.bench.csv);

            let bks = match bks.or(file.bench.bks) {
                Some(path) => BksTable::from_csv_path(&path)?,
                None => BksTable::empty(),
            };
            let records = run_experiment(&cfg)?;
            println!("{} runs recorded", records.len());
            let mut report = String::new();
            for (title, group_by) in [
                ("By instance set", GroupBy::InstanceSet),
                ("By size", GroupBy::Size),
                ("By mean cluster size", GroupBy::Theta),
            ] {
                let rows = summarize(&records, &bks, group_by);
                report.push_str(&format!("## {title}\n\n"));
                report.push_str(&summary_to_markdown(&rows));
                report.push('\n');
            }
            match markdown.or(file.bench.markdown) {
                Some(path) => {
                    std::fs::write(&path, &report)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{report}"),
            }
            if cfg.out_csv.is_none() {
                // No records file requested; still show the set summary as CSV.
                let rows = summarize(&records, &bks, GroupBy::InstanceSet);
                print!("{}", summary_to_csv(&rows)?);
            }
        }
    }
    Ok(())
}

fn parse_solvers(text: &str) -> Result<Vec<SolverId>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| SolverId::parse(s).ok_or_else(|| anyhow!("unknown solver `{s}`")))
        .collect()
}

fn instance_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().map_or(false, |e| e == "cluvrp") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn warn_large_clusters(inst: &Instance, lambda_max: usize) {
    let largest = inst.clusters.iter().map(Vec::len).max().unwrap_or(0);
    if largest > lambda_max {
        eprintln!(
            "warning: largest cluster has {largest} customers, above lambda-max {lambda_max}; \
             preprocessing will fail unless --lambda-max is raised"
        );
    } else if largest > DEFAULT_LAMBDA_MAX {
        eprintln!(
            "warning: largest cluster has {largest} customers; exact path preprocessing \
             is exponential in cluster size and may take a while"
        );
    }
}

fn build_table(
    path: &Path,
    inst: &Instance,
    costs: &CostMatrix,
    lambda_max: usize,
    cache_dir: Option<&Path>,
) -> Result<PathCostTable> {
    match ensure_table(path, inst, costs, lambda_max, cache_dir) {
        Ok(t) => Ok(t),
        Err(e) => {
            if let cluvrp_core::bench::BenchError::HamPath(HamPathError::ClusterTooLarge {
                size, ..
            }) = &e
            {
                bail!("{e}\nhint: rerun with --lambda-max {} or larger", size);
            }
            Err(e.into())
        }
    }
}
