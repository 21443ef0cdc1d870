use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use planbench::bench::{self, primitives_for, worker_count, RunRecord};
use planbench::world::{
    generate_variations, load_scenario_unchecked, parse_scenario, VariationFamily,
};
use planbench::{
    aggregate, emit_report, load_scenario, path_cost, validate_path, BenchmarkReport, Path,
    PlanStatus, PlannerId, PlannerParams, Query, ReportFormat,
};

#[derive(Parser)]
#[command(
    name = "planbench",
    version,
    about = "Run and benchmark RRT-Connect and ARA* on scenario files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerArg {
    RrtConnect,
    AraStar,
}

impl From<PlannerArg> for PlannerId {
    fn from(p: PlannerArg) -> Self {
        match p {
            PlannerArg::RrtConnect => PlannerId::RrtConnect,
            PlannerArg::AraStar => PlannerId::AraStar,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Objects,
    Height,
    Rotation,
}

impl From<FamilyArg> for VariationFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Objects => VariationFamily::ObjectsOnly,
            FamilyArg::Height => VariationFamily::PlusHeight,
            FamilyArg::Rotation => VariationFamily::PlusRotation,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Plan one scenario and print the outcome.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        planner: PlannerArg,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the path as CSV here when solved.
        #[arg(long)]
        path_out: Option<PathBuf>,
    },
    /// Write perturbed copies of a base scenario.
    Gen {
        #[arg(long)]
        base: PathBuf,
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run planners over a suite directory.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        /// Comma-separated planner names.
        #[arg(long, value_delimiter = ',', default_value = "rrt-connect,ara-star")]
        planners: Vec<PlannerArg>,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        reps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-run CSV output.
        #[arg(long)]
        out: PathBuf,
        /// Also print the summary table.
        #[arg(long)]
        table: bool,
        /// Directory for the solved paths, one CSV per run.
        #[arg(long)]
        paths: Option<PathBuf>,
    },
    /// Re-check a path against a scenario.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

/// Exit codes 1 and 2 report planning outcomes, so usage and I/O errors use 3.
fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Plan {
            scenario,
            planner,
            params,
            seed,
            path_out,
        } => plan(
            &scenario,
            planner.into(),
            params.as_deref(),
            seed,
            path_out.as_deref(),
        ),
        Command::Gen {
            base,
            family,
            count,
            seed,
            out,
        } => gen(&base, family.into(), count, seed, &out).map(|()| ExitCode::SUCCESS),
        Command::Bench {
            suite,
            planners,
            params,
            reps,
            seed,
            out,
            table,
            paths,
        } => {
            let planners: Vec<PlannerId> = planners.into_iter().map(Into::into).collect();
            run_bench(
                &suite,
                &planners,
                params.as_deref(),
                reps,
                seed,
                &out,
                table,
                paths.as_deref(),
            )
            .map(|()| ExitCode::SUCCESS)
        }
        Command::Validate {
            scenario,
            path,
            params,
        } => validate(&scenario, &path, params.as_deref()),
    }
}

fn load_params(path: Option<&FsPath>) -> Result<PlannerParams> {
    match path {
        Some(p) => {
            PlannerParams::load(p).with_context(|| format!("loading params {}", p.display()))
        }
        None => Ok(PlannerParams::default()),
    }
}

fn plan(
    scenario: &FsPath,
    planner: PlannerId,
    params: Option<&FsPath>,
    seed: Option<u64>,
    path_out: Option<&FsPath>,
) -> Result<ExitCode> {
    let loaded = load_scenario(scenario)
        .with_context(|| format!("loading scenario {}", scenario.display()))?;
    let mut params = load_params(params)?;
    let seed = seed.unwrap_or(params.seed);
    params = params.with_seed(seed);
    let primitives = primitives_for(&loaded.robot, &params)?;
    let query = Query::from_scenario(&loaded.scenario, seed, params.goal_tolerance_default);

    let started = Instant::now();
    let result = bench::plan_with(
        planner,
        &loaded.robot,
        &loaded.scenario.world,
        &query,
        &params,
        &primitives,
    )?;
    let elapsed = started.elapsed().as_secs_f64();

    println!("scenario: {}", loaded.scenario.name);
    println!("planner: {planner}");
    println!("time_s: {elapsed:.6}");
    let code = match &result.status {
        PlanStatus::Solved { path, direction } => {
            let cost = path_cost(&loaded.robot, path)?;
            println!(
                "status: solved ({})",
                format!("{direction:?}").to_lowercase()
            );
            println!("cost: {cost:.6}");
            println!("waypoints: {}", path.len());
            if let Some(out) = path_out {
                fs::write(out, path.to_csv())
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            ExitCode::SUCCESS
        }
        PlanStatus::FailureTimeout => {
            println!("status: failure");
            ExitCode::from(1)
        }
        PlanStatus::Unsolvable(reason) => {
            println!("status: unsolvable ({reason:?})");
            ExitCode::from(2)
        }
    };
    for (k, v) in &result.stats {
        println!("{k}: {v}");
    }
    Ok(code)
}

fn gen(
    base: &FsPath,
    family: VariationFamily,
    count: usize,
    seed: u64,
    out: &FsPath,
) -> Result<()> {
    let text = fs::read_to_string(base).with_context(|| format!("reading {}", base.display()))?;
    let scenario = parse_scenario(&text)?;
    let variations = generate_variations(&scenario, family, count, seed)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let base_dir = base.parent().unwrap_or(FsPath::new("."));
    let robot = scenario.robot_path(base_dir);
    let robot_abs = absolute(&robot)?;
    let out_abs = absolute(out)?;
    let robot_rel = pathdiff::diff_paths(&robot_abs, &out_abs).unwrap_or(robot_abs);

    for mut v in variations {
        v.robot_file = robot_rel.clone();
        let file = out.join(format!("{}.scenario", v.name));
        fs::write(&file, v.to_yaml()).with_context(|| format!("writing {}", file.display()))?;
    }
    println!("wrote {count} scenarios to {}", out.display());
    Ok(())
}

fn absolute(p: &FsPath) -> Result<PathBuf> {
    Ok(std::path::absolute(p)?)
}

/// `generated/*.scenario` sorted by name, or `base.scenario` when nothing has
/// been generated.
fn suite_files(suite: &FsPath) -> Result<Vec<PathBuf>> {
    let generated = suite.join("generated");
    if generated.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(&generated)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "scenario"))
            .collect();
        files.sort();
        if !files.is_empty() {
            return Ok(files);
        }
    }
    let base = suite.join("base.scenario");
    if !base.is_file() {
        bail!(
            "{} has neither generated/*.scenario nor base.scenario",
            suite.display()
        );
    }
    Ok(vec![base])
}

#[allow(clippy::too_many_arguments)]
fn run_bench(
    suite: &FsPath,
    planners: &[PlannerId],
    params: Option<&FsPath>,
    reps: u32,
    seed: u64,
    out: &FsPath,
    table: bool,
    paths: Option<&FsPath>,
) -> Result<()> {
    let params = load_params(params)?;
    let files = suite_files(suite)?;
    let suite_name = fs::canonicalize(suite)?
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "suite".into());

    let mut loaded = Vec::with_capacity(files.len());
    for f in &files {
        loaded
            .push(load_scenario_unchecked(f).with_context(|| format!("loading {}", f.display()))?);
    }

    let mut records: Vec<RunRecord> = Vec::new();
    for &planner in planners {
        records.extend(bench::run_suite(&loaded, planner, &params, reps, seed)?);
    }
    let mut report = BenchmarkReport {
        rows: Vec::new(),
        workers: worker_count(),
    };
    report.merge(aggregate(&suite_name, &records)?);

    fs::write(out, emit_report(&report, ReportFormat::Csv))
        .with_context(|| format!("writing {}", out.display()))?;
    if let Some(dir) = paths {
        fs::create_dir_all(dir)?;
        for r in records.iter() {
            if let Some(p) = &r.path {
                let file = dir.join(format!("{}_{}_{}.csv", r.scenario, r.planner, r.seed));
                fs::write(&file, p.to_csv())?;
            }
        }
    }
    for r in records.iter().filter(|r| r.message.is_some()) {
        eprintln!(
            "{} {} seed {}: {}",
            r.scenario,
            r.planner,
            r.seed,
            r.message.as_deref().unwrap_or("")
        );
    }
    if table {
        print!("{}", emit_report(&report, ReportFormat::Table));
    }
    Ok(())
}

fn validate(scenario: &FsPath, path: &FsPath, params: Option<&FsPath>) -> Result<ExitCode> {
    let loaded = load_scenario(scenario)?;
    let params = load_params(params)?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let path = Path::from_csv(&text)?;
    let query = Query::from_scenario(&loaded.scenario, 0, params.goal_tolerance_default);
    let ok = validate_path(
        &loaded.robot,
        &loaded.scenario.world,
        &query,
        &path,
        params.edge_step,
    )?;
    if ok {
        println!("valid (cost {:.6})", path_cost(&loaded.robot, &path)?);
        Ok(ExitCode::SUCCESS)
    } else {
        println!("invalid");
        Ok(ExitCode::from(1))
    }
}
