//! Command-line front end: solving, benchmarking, generation, checking and
//! the brute-force oracle.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use maxw_core::checker::{brute_force_optimum, check_schedule, CheckReport};
use maxw_core::gen::{
    density_grid, generate_maxw, generate_suite, random_jobshop, read_manifest, GenParams, ManifestRow,
};
use maxw_core::jps::{reconstruct, ShiftSchedule};
use maxw_core::lazy::solve_iterative;
use maxw_core::model::{validate_instance, ModelError};
use maxw_core::solver::{minimize_makespan, Status};
use maxw_core::{Instance, RawInstance, SubintervalPlan};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const EXIT_PARSE: u8 = 2;
pub const EXIT_CHECK: u8 = 3;
pub const EXIT_NO_SOLUTION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "maxw", version, about = "Preemptive job-shop scheduling with MaxW constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance and write the schedule, Gantt chart and run record.
    Solve(SolveArgs),
    /// Run strategies over every instance of a manifest.
    Bench(BenchArgs),
    /// Add random MaxW constraints to base instances.
    Gen(GenArgs),
    /// Validate a schedule against an instance.
    Check(CheckArgs),
    /// Exact optimum of a tiny instance by exhaustive search.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Every constraint active from the start.
    Allmaxw,
    /// Constraints activated when violated.
    Iterative,
    /// Exhaustive search, tiny instances only.
    Oracle,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Allmaxw => "allmaxw",
            Strategy::Iterative => "iterative",
            Strategy::Oracle => "oracle",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Optimal,
    Feasible,
    Infeasible,
    Timeout,
    /// The instance could not be read or solved.
    Error,
    /// A schedule was produced but failed validation.
    CheckFailed,
}

impl From<Status> for RunStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Optimal => RunStatus::Optimal,
            Status::Feasible => RunStatus::Feasible,
            Status::Infeasible => RunStatus::Infeasible,
            Status::Timeout => RunStatus::Timeout,
        }
    }
}

/// One solver run; also a row of the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub strategy: Strategy,
    pub status: RunStatus,
    pub c_max: Option<i64>,
    pub elapsed_ms: u64,
    pub makespan_iterations: usize,
    /// Master iterations, iterative runs only.
    pub maxw_iterations: Option<usize>,
    /// Constraints active in the final model.
    pub activated: usize,
    /// Constraints that can be activated (non-vacuous).
    pub pool: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Strategy::Iterative)]
    pub strategy: Strategy,
    /// Seconds allowed for the whole solve.
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub manifest: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Strategy::Allmaxw, Strategy::Iterative])]
    pub strategies: Vec<Strategy>,
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,
    /// Concurrent runs; each run is single-threaded.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
    #[arg(long, default_value = "summary.csv")]
    pub summary: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Base job-shop instances.
    #[arg(long)]
    pub base: Vec<PathBuf>,
    /// Random bases to create in addition to `--base`.
    #[arg(long, default_value_t = 0)]
    pub random_bases: usize,
    #[arg(long, default_value_t = 4)]
    pub base_jobs: usize,
    #[arg(long, default_value_t = 4)]
    pub base_operators: usize,
    #[arg(long, default_value_t = 5)]
    pub base_max_duration: usize,
    #[arg(long)]
    pub gd: Option<f64>,
    #[arg(long)]
    pub ld: Option<f64>,
    /// Instance seed, or the master seed in suite mode.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Horizon; defaults to the greedy makespan of each base (at least 15).
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Output file for a single instance.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write the whole density grid and a manifest here.
    #[arg(long)]
    pub suite_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub instance: PathBuf,
    pub schedule: PathBuf,
    /// Claimed makespan; defaults to the schedule's last work shift.
    #[arg(long)]
    pub cmax: Option<i64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub horizon_cap: Option<usize>,
    #[arg(long, default_value_t = 50_000_000)]
    pub node_cap: u64,
}

/// Failure to read an instance file.
#[derive(Debug)]
pub enum LoadError {
    Io(PathBuf, std::io::Error),
    Model(PathBuf, ModelError),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            LoadError::Model(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl std::error::Error for LoadError {}

/// Reads a text or JSON (`.json`) instance; the name defaults to the file stem.
pub fn load_instance(path: &Path) -> Result<Instance, LoadError> {
    let text = fs::read_to_string(path).map_err(|e| LoadError::Io(path.to_path_buf(), e))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
    let raw = if path.extension().is_some_and(|e| e == "json") {
        RawInstance::from_json(&text).map(|mut r| {
            if r.name.is_empty() {
                r.name = stem.to_string();
            }
            r
        })
    } else {
        RawInstance::parse_text(stem, &text)
    };
    raw.and_then(validate_instance)
        .map_err(|e| LoadError::Model(path.to_path_buf(), e))
}

fn limit(seconds: f64) -> Option<Instant> {
    Some(Instant::now() + Duration::from_secs_f64(seconds.max(0.0)))
}

/// Result of one solve: the record, the schedule it certifies and the
/// validation report of that schedule against the full pool.
pub struct SolveRun {
    pub record: RunRecord,
    pub schedule: Option<ShiftSchedule>,
    pub report: Option<CheckReport>,
    pub iterations_jsonl: Option<String>,
}

pub fn solve(instance: &Instance, strategy: Strategy, time_limit: f64, seed: Option<u64>) -> SolveRun {
    let started = Instant::now();
    let pool = instance.binding_constraints().count();
    let mut record = RunRecord {
        instance: instance.name.clone(),
        strategy,
        status: RunStatus::Error,
        c_max: None,
        elapsed_ms: 0,
        makespan_iterations: 0,
        maxw_iterations: None,
        activated: 0,
        pool,
        seed,
    };
    let mut iterations_jsonl = None;
    let schedule = match strategy {
        Strategy::Allmaxw => {
            let all = instance.binding_constraints().collect::<Vec<_>>();
            let out = minimize_makespan(instance, &all, limit(time_limit));
            record.status = out.status.into();
            record.c_max = out.cmax();
            record.makespan_iterations = out.makespan_iterations;
            record.activated = pool;
            let plan = SubintervalPlan::build(instance, &all);
            out.best.as_ref().and_then(|b| reconstruct(b, &plan, instance).ok())
        }
        Strategy::Iterative => {
            let out = solve_iterative(instance, limit(time_limit));
            record.status = out.outcome.status.into();
            record.c_max = out.outcome.cmax();
            record.makespan_iterations = out.outcome.makespan_iterations;
            record.maxw_iterations = Some(out.maxw_iterations);
            record.activated = out
                .activation
                .active_at_first_feasible
                .unwrap_or(out.activation.active.len());
            iterations_jsonl = Some(out.activation.log_jsonl());
            out.schedule
        }
        Strategy::Oracle => {
            match brute_force_optimum(instance, None, 50_000_000) {
                Ok(c) => {
                    record.status = RunStatus::Optimal;
                    record.c_max = Some(c);
                }
                Err(e) => {
                    log::warn!("{}: {e}", instance.name);
                    record.status = RunStatus::Timeout;
                }
            }
            record.activated = pool;
            None
        }
    };
    let report = schedule
        .as_ref()
        .map(|s| check_schedule(s, instance, record.c_max.unwrap_or(s.makespan() as i64)));
    if report.as_ref().is_some_and(|r| !r.ok) {
        record.status = RunStatus::CheckFailed;
    }
    if strategy != Strategy::Oracle && schedule.is_none() && record.c_max.is_some() {
        record.status = RunStatus::Error;
    }
    record.elapsed_ms = started.elapsed().as_millis() as u64;
    SolveRun {
        record,
        schedule,
        report,
        iterations_jsonl,
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_solve(args: &SolveArgs) -> Result<u8> {
    let instance = match load_instance(&args.instance) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_PARSE);
        }
    };
    let run = solve(&instance, args.strategy, args.time_limit, None);
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let stem = args.out_dir.join(format!("{}.{}", instance.name, args.strategy));
    let with_ext = |ext: &str| PathBuf::from(format!("{}.{ext}", stem.display()));
    if let Some(s) = &run.schedule {
        write(&with_ext("schedule.json"), &s.to_json())?;
        write(&with_ext("gantt.txt"), &s.to_gantt())?;
    }
    if let Some(log) = &run.iterations_jsonl {
        write(&with_ext("iterations.jsonl"), log)?;
    }
    let record = serde_json::to_string_pretty(&run.record)?;
    write(&with_ext("record.json"), &record)?;
    println!("{record}");
    if let Some(report) = run.report.as_ref().filter(|r| !r.ok) {
        eprintln!("schedule failed validation:\n{}", report.to_json());
        return Ok(EXIT_CHECK);
    }
    if run.record.c_max.is_none() {
        eprintln!("no solution within the time limit");
        return Ok(EXIT_NO_SOLUTION);
    }
    Ok(0)
}

/// Density-class aggregate of a results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub gd: f64,
    pub ld: f64,
    pub strategy: Strategy,
    pub runs: usize,
    pub optimal: usize,
    pub mean_activated: f64,
    pub mean_makespan_iterations: f64,
}

/// Groups records by density pair and strategy. Activation is averaged over
/// runs with a solution and at least one activatable constraint.
pub fn summarize(records: &[RunRecord], manifest: &[ManifestRow]) -> Vec<SummaryRow> {
    let density = manifest
        .iter()
        .map(|m| (instance_stem(&m.instance), (m.gd, m.ld)))
        .collect::<BTreeMap<_, _>>();
    let mut groups: BTreeMap<(u64, u64, Strategy), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        if let Some(&(gd, ld)) = density.get(r.instance.as_str()) {
            groups.entry((gd.to_bits(), ld.to_bits(), r.strategy)).or_default().push(r);
        }
    }
    let mean = |xs: Vec<f64>| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    let mut rows = groups
        .into_iter()
        .map(|((gd, ld, strategy), rs)| SummaryRow {
            gd: f64::from_bits(gd),
            ld: f64::from_bits(ld),
            strategy,
            runs: rs.len(),
            optimal: rs.iter().filter(|r| r.status == RunStatus::Optimal).count(),
            mean_activated: mean(
                rs.iter()
                    .filter(|r| r.c_max.is_some() && r.pool > 0)
                    .map(|r| r.activated as f64 / r.pool as f64)
                    .collect(),
            ),
            mean_makespan_iterations: mean(rs.iter().map(|r| r.makespan_iterations as f64).collect()),
        })
        .collect::<Vec<_>>();
    rows.sort_by(|a, b| (a.gd, a.ld, a.strategy).partial_cmp(&(b.gd, b.ld, b.strategy)).unwrap());
    rows
}

fn instance_stem(file: &str) -> &str {
    file.strip_suffix(".txt").or_else(|| file.strip_suffix(".json")).unwrap_or(file)
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R], header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const RECORD_COLUMNS: [&str; 10] = [
    "instance",
    "strategy",
    "status",
    "c_max",
    "elapsed_ms",
    "makespan_iterations",
    "maxw_iterations",
    "activated",
    "pool",
    "seed",
];

pub const SUMMARY_COLUMNS: [&str; 7] = [
    "gd",
    "ld",
    "strategy",
    "runs",
    "optimal",
    "mean_activated",
    "mean_makespan_iterations",
];

/// Runs every (instance, strategy) pair; failures become records.
pub fn bench(manifest: &Path, strategies: &[Strategy], time_limit: f64, jobs: usize) -> Result<Vec<RunRecord>> {
    let rows = read_manifest(manifest)?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let work = rows
        .iter()
        .flat_map(|r| strategies.iter().map(move |&s| (r, s)))
        .collect::<Vec<_>>();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    Ok(pool.install(|| {
        work.par_iter()
            .map(|(row, strategy)| match load_instance(&dir.join(&row.instance)) {
                Ok(inst) => {
                    let run = solve(&inst, *strategy, time_limit, Some(row.seed));
                    log::info!("{} {}: {:?} {:?}", row.instance, strategy, run.record.status, run.record.c_max);
                    run.record
                }
                Err(e) => {
                    log::error!("{e}");
                    RunRecord {
                        instance: instance_stem(&row.instance).to_string(),
                        strategy: *strategy,
                        status: RunStatus::Error,
                        c_max: None,
                        elapsed_ms: 0,
                        makespan_iterations: 0,
                        maxw_iterations: None,
                        activated: 0,
                        pool: 0,
                        seed: Some(row.seed),
                    }
                }
            })
            .collect()
    }))
}

fn cmd_bench(args: &BenchArgs) -> Result<u8> {
    let records = bench(&args.manifest, &args.strategies, args.time_limit, args.jobs)?;
    write_csv(&args.out, &records, &RECORD_COLUMNS)?;
    let summary = summarize(&records, &read_manifest(&args.manifest)?);
    write_csv(&args.summary, &summary, &SUMMARY_COLUMNS)?;
    println!("{:>5} {:>5} {:>10} {:>5} {:>8} {:>10} {:>10}", "gd", "ld", "strategy", "runs", "optimal", "activated", "mk_iters");
    for s in &summary {
        println!(
            "{:>5} {:>5} {:>10} {:>5} {:>8} {:>10.3} {:>10.2}",
            s.gd, s.ld, s.strategy, s.runs, s.optimal, s.mean_activated, s.mean_makespan_iterations
        );
    }
    Ok(0)
}

fn gen_bases(args: &GenArgs) -> Result<Vec<Instance>> {
    let mut bases = Vec::new();
    for p in &args.base {
        bases.push(load_instance(p)?.without_maxw());
    }
    for b in 0..args.random_bases {
        bases.push(random_jobshop(
            &format!("rand{b}"),
            args.base_jobs,
            args.base_operators,
            args.base_operators,
            args.base_max_duration,
            args.seed.wrapping_add(b as u64),
        ));
    }
    Ok(bases)
}

fn cmd_gen(args: &GenArgs) -> Result<u8> {
    let bases = gen_bases(args)?;
    match (&args.suite_dir, &args.output) {
        (Some(dir), None) => {
            let rows = generate_suite(&bases, &density_grid(), args.seed, args.horizon, dir)?;
            println!("wrote {} instances and manifest.csv to {}", rows.len(), dir.display());
        }
        (None, Some(out)) => {
            let [base] = bases.as_slice() else {
                bail!("single-instance mode takes exactly one base");
            };
            let (Some(gd), Some(ld)) = (args.gd, args.ld) else {
                bail!("--gd and --ld are required without --suite-dir");
            };
            let horizon = args.horizon.unwrap_or_else(|| maxw_core::gen::default_horizon(base));
            let inst = generate_maxw(base, &GenParams { gd, ld, seed: args.seed, horizon })?;
            write(out, &inst.to_raw().to_text())?;
        }
        _ => bail!("give exactly one of --output and --suite-dir"),
    }
    Ok(0)
}

fn cmd_check(args: &CheckArgs) -> Result<u8> {
    let instance = match load_instance(&args.instance) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_PARSE);
        }
    };
    let text = fs::read_to_string(&args.schedule).with_context(|| format!("reading {}", args.schedule.display()))?;
    let schedule = match ShiftSchedule::from_json(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", args.schedule.display());
            return Ok(EXIT_PARSE);
        }
    };
    let claimed = args.cmax.unwrap_or(schedule.makespan() as i64);
    let report = check_schedule(&schedule, &instance, claimed);
    println!("{}", report.to_json());
    Ok(if report.ok { 0 } else { EXIT_CHECK })
}

fn cmd_oracle(args: &OracleArgs) -> Result<u8> {
    let instance = match load_instance(&args.instance) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_PARSE);
        }
    };
    let started = Instant::now();
    let result = brute_force_optimum(&instance, args.horizon_cap, args.node_cap);
    let record = RunRecord {
        instance: instance.name.clone(),
        strategy: Strategy::Oracle,
        status: if result.is_ok() { RunStatus::Optimal } else { RunStatus::Timeout },
        c_max: result.as_ref().ok().copied(),
        elapsed_ms: started.elapsed().as_millis() as u64,
        makespan_iterations: 0,
        maxw_iterations: None,
        activated: instance.binding_constraints().count(),
        pool: instance.binding_constraints().count(),
        seed: None,
    };
    println!("{}", serde_json::to_string_pretty(&record)?);
    if let Err(e) = result {
        eprintln!("{e}");
        return Ok(EXIT_NO_SOLUTION);
    }
    Ok(0)
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Check(a) => cmd_check(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}
