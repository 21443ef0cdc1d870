//! Benchmark harness: runs planners over scenario suites, aggregates
//! outcomes and timings, and renders tables and per-run CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ara_star::{default_primitives, plan_ara_star, MotionPrimitiveSet};
use crate::error::{Error, Result};
use crate::params::PlannerParams;
use crate::planning::{path_cost, Direction, Path, PlanStatus, PlannerId, PlannerResult, Query};
use crate::robot::RobotModel;
use crate::rrt_connect::plan_rrt_connect;
use crate::world::{LoadedScenario, WorldModel};

/// Environment variable capping the number of benchmark workers.
pub const WORKERS_ENV: &str = "PLANBENCH_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RunStatus {
    #[serde(rename = "solved-forward")]
    SolvedForward,
    #[serde(rename = "solved-backward")]
    SolvedBackward,
    #[serde(rename = "failure")]
    Failure,
    #[serde(rename = "unsolvable")]
    Unsolvable,
    /// The run could not be attempted (e.g. scenario and robot disagree).
    #[serde(rename = "error")]
    Error,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::SolvedForward => "solved-forward",
            RunStatus::SolvedBackward => "solved-backward",
            RunStatus::Failure => "failure",
            RunStatus::Unsolvable => "unsolvable",
            RunStatus::Error => "error",
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self, RunStatus::SolvedForward | RunStatus::SolvedBackward)
    }

    pub fn from_plan_status(status: &PlanStatus) -> Self {
        match status {
            PlanStatus::Solved {
                direction: Direction::Forward,
                ..
            } => RunStatus::SolvedForward,
            PlanStatus::Solved {
                direction: Direction::Backward,
                ..
            } => RunStatus::SolvedBackward,
            PlanStatus::FailureTimeout => RunStatus::Failure,
            PlanStatus::Unsolvable(_) => RunStatus::Unsolvable,
        }
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "solved-forward" => RunStatus::SolvedForward,
            "solved-backward" => RunStatus::SolvedBackward,
            "failure" => RunStatus::Failure,
            "unsolvable" => RunStatus::Unsolvable,
            "error" => RunStatus::Error,
            other => return Err(Error::validation(format!("unknown run status `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: String,
    pub planner: PlannerId,
    pub seed: u64,
    pub status: RunStatus,
    /// Seconds, measured around the planner call only.
    pub planning_time: f64,
    pub path_cost: Option<f64>,
    pub stats: BTreeMap<String, u64>,
    pub path: Option<Path>,
    pub message: Option<String>,
}

/// Runs one planner on one query.
pub fn plan_with(
    planner: PlannerId,
    robot: &RobotModel,
    world: &WorldModel,
    query: &Query,
    params: &PlannerParams,
    primitives: &MotionPrimitiveSet,
) -> Result<PlannerResult> {
    match planner {
        PlannerId::RrtConnect => plan_rrt_connect(robot, world, query, &params.rrt_connect),
        PlannerId::AraStar => plan_ara_star(robot, world, query, primitives, &params.ara_star),
    }
}

/// Primitive set for `robot`: the params file's set if one is configured,
/// else the single-joint moves.
pub fn primitives_for(robot: &RobotModel, params: &PlannerParams) -> Result<MotionPrimitiveSet> {
    match &params.primitives_file {
        Some(p) => MotionPrimitiveSet::load(robot, p),
        None => Ok(default_primitives(robot)),
    }
}

/// Runs a single scenario once. Problems with the scenario itself become an
/// `error` record rather than an `Err`.
pub fn run_one(
    loaded: &LoadedScenario,
    planner: PlannerId,
    params: &PlannerParams,
    seed: u64,
) -> RunRecord {
    let mut record = RunRecord {
        scenario: loaded.scenario.name.clone(),
        planner,
        seed,
        status: RunStatus::Error,
        planning_time: 0.0,
        path_cost: None,
        stats: BTreeMap::new(),
        path: None,
        message: None,
    };
    let prepared = loaded.scenario.check_robot(&loaded.robot).and_then(|()| {
        let primitives = match planner {
            PlannerId::AraStar => primitives_for(&loaded.robot, params)?,
            PlannerId::RrtConnect => default_primitives(&loaded.robot),
        };
        Ok(primitives)
    });
    let primitives = match prepared {
        Ok(p) => p,
        Err(e) => {
            record.message = Some(e.to_string());
            return record;
        }
    };
    let params = params.clone().with_seed(seed);
    let query = Query::from_scenario(&loaded.scenario, seed, params.goal_tolerance_default);

    let started = Instant::now();
    let result = plan_with(
        planner,
        &loaded.robot,
        &loaded.scenario.world,
        &query,
        &params,
        &primitives,
    );
    let elapsed = started.elapsed().as_secs_f64();

    match result {
        Ok(result) => {
            record.status = RunStatus::from_plan_status(&result.status);
            record.planning_time = elapsed;
            record.path_cost = result
                .path()
                .map(|p| path_cost(&loaded.robot, p).unwrap_or(f64::NAN));
            record.path = result.path().cloned();
            record.stats = result.stats;
        }
        Err(e) => record.message = Some(e.to_string()),
    }
    record
}

/// Worker count from [`WORKERS_ENV`]; 1 when unset or invalid.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Runs every scenario `repetitions` times. Run `(i, r)` uses seed
/// `base_seed + i * repetitions + r`. Records come back in scenario-major
/// order regardless of how many workers execute them.
pub fn run_suite(
    scenarios: &[LoadedScenario],
    planner: PlannerId,
    params: &PlannerParams,
    repetitions: u32,
    base_seed: u64,
) -> Result<Vec<RunRecord>> {
    run_suite_with_workers(
        scenarios,
        planner,
        params,
        repetitions,
        base_seed,
        worker_count(),
    )
}

pub fn run_suite_with_workers(
    scenarios: &[LoadedScenario],
    planner: PlannerId,
    params: &PlannerParams,
    repetitions: u32,
    base_seed: u64,
    workers: usize,
) -> Result<Vec<RunRecord>> {
    if repetitions < 1 {
        return Err(Error::contract("repetitions must be >= 1"));
    }
    let reps = repetitions as u64;
    let jobs: Vec<(usize, u64)> = (0..scenarios.len())
        .flat_map(|i| (0..reps).map(move |r| (i, base_seed + i as u64 * reps + r)))
        .collect();
    let run = |&(i, seed): &(usize, u64)| run_one(&scenarios[i], planner, params, seed);
    if workers <= 1 {
        return Ok(jobs.iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::contract(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(run).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSummary {
    pub min: f64,
    pub median: f64,
    pub geometric_mean: f64,
    pub max: f64,
}

/// Floor applied to times before taking logarithms.
const GEOMEAN_FLOOR: f64 = 1e-9;

impl TimeSummary {
    /// `None` for an empty sample.
    pub fn of(times: &[f64]) -> Option<Self> {
        if times.is_empty() {
            return None;
        }
        let mut t = times.to_vec();
        t.sort_by(f64::total_cmp);
        let n = t.len();
        let median = if n % 2 == 1 {
            t[n / 2]
        } else {
            (t[n / 2 - 1] + t[n / 2]) / 2.0
        };
        let log_mean = t.iter().map(|x| x.max(GEOMEAN_FLOOR).ln()).sum::<f64>() / n as f64;
        Some(TimeSummary {
            min: t[0],
            median,
            geometric_mean: log_mean.exp(),
            max: t[n - 1],
        })
    }
}

/// Aggregates of one planner over one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteAggregate {
    pub suite: String,
    pub planner: PlannerId,
    pub success_forward: usize,
    pub success_backward: usize,
    pub failure: usize,
    pub unsolvable: usize,
    /// Runs that could not be attempted; excluded from the rate.
    pub errors: usize,
    pub runs: usize,
    pub success_rate: f64,
    /// Over solved runs; the geometric mean is only reported here.
    pub solved_time: Option<TimeSummary>,
    /// Over every attempted run.
    pub all_time: Option<TimeSummary>,
    pub records: Vec<RunRecord>,
}

impl SuiteAggregate {
    pub fn is_conserved(&self) -> bool {
        self.success_forward + self.success_backward + self.failure + self.unsolvable + self.errors
            == self.runs
            && self.runs == self.records.len()
    }

    /// Row in the documented table layout.
    pub fn table_row(&self) -> String {
        let backward = match self.planner {
            PlannerId::RrtConnect => "-".to_string(),
            PlannerId::AraStar => self.success_backward.to_string(),
        };
        format!(
            "{}, {}, {}, {}, {}",
            self.suite, self.success_forward, backward, self.failure, self.unsolvable
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<SuiteAggregate>,
    pub workers: usize,
}

impl BenchmarkReport {
    pub fn merge(&mut self, other: BenchmarkReport) {
        self.rows.extend(other.rows);
        self.workers = self.workers.max(other.workers);
    }

    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.rows.iter().flat_map(|r| &r.records)
    }
}

/// Groups `records` by planner (in order of first appearance) under the
/// suite label `suite`.
pub fn aggregate(suite: &str, records: &[RunRecord]) -> Result<BenchmarkReport> {
    if records.is_empty() {
        return Err(Error::contract("cannot aggregate an empty record set"));
    }
    let mut planners: Vec<PlannerId> = Vec::new();
    for r in records {
        if !planners.contains(&r.planner) {
            planners.push(r.planner);
        }
    }
    let rows = planners
        .into_iter()
        .map(|planner| {
            let recs: Vec<RunRecord> = records
                .iter()
                .filter(|r| r.planner == planner)
                .cloned()
                .collect();
            let count = |s: RunStatus| recs.iter().filter(|r| r.status == s).count();
            let success_forward = count(RunStatus::SolvedForward);
            let success_backward = count(RunStatus::SolvedBackward);
            let errors = count(RunStatus::Error);
            let attempted = recs.len() - errors;
            let solved: Vec<f64> = recs
                .iter()
                .filter(|r| r.status.is_solved())
                .map(|r| r.planning_time)
                .collect();
            let all: Vec<f64> = recs
                .iter()
                .filter(|r| r.status != RunStatus::Error)
                .map(|r| r.planning_time)
                .collect();
            SuiteAggregate {
                suite: suite.to_string(),
                planner,
                success_forward,
                success_backward,
                failure: count(RunStatus::Failure),
                unsolvable: count(RunStatus::Unsolvable),
                errors,
                runs: recs.len(),
                success_rate: if attempted == 0 {
                    0.0
                } else {
                    (success_forward + success_backward) as f64 / attempted as f64
                },
                solved_time: TimeSummary::of(&solved),
                all_time: TimeSummary::of(&all),
                records: recs,
            }
        })
        .collect();
    Ok(BenchmarkReport { rows, workers: 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
}

pub const TABLE_HEADER: &str = "experiment, success_forward, success_backward, failure, unsolvable";
pub const CSV_HEADER: [&str; 6] = [
    "scenario",
    "planner",
    "seed",
    "status",
    "planning_time_s",
    "path_cost",
];

pub fn emit_report(report: &BenchmarkReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => emit_table(report),
        ReportFormat::Csv => emit_csv(report.records()),
    }
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

/// One block per planner: the outcome table, then timing per suite.
fn emit_table(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let mut planners: Vec<PlannerId> = Vec::new();
    for r in &report.rows {
        if !planners.contains(&r.planner) {
            planners.push(r.planner);
        }
    }
    for (k, planner) in planners.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        let rows: Vec<&SuiteAggregate> = report
            .rows
            .iter()
            .filter(|r| r.planner == *planner)
            .collect();
        let _ = writeln!(out, "# {planner}");
        let _ = writeln!(out, "{TABLE_HEADER}");
        for r in &rows {
            let _ = writeln!(out, "{}", r.table_row());
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "experiment, runs, errors, success_rate, solved_min_s, solved_median_s, solved_geomean_s, solved_max_s, all_median_s"
        );
        for r in &rows {
            let s = r.solved_time;
            let _ = writeln!(
                out,
                "{}, {}, {}, {:.3}, {}, {}, {}, {}, {}",
                r.suite,
                r.runs,
                r.errors,
                r.success_rate,
                fmt_time(s.map(|s| s.min)),
                fmt_time(s.map(|s| s.median)),
                fmt_time(s.map(|s| s.geometric_mean)),
                fmt_time(s.map(|s| s.max)),
                fmt_time(r.all_time.map(|s| s.median)),
            );
        }
    }
    if report.workers > 0 {
        let _ = writeln!(out, "\n# workers: {}", report.workers);
    }
    out
}

/// Per-run CSV. Times and costs use the shortest representation that
/// parses back to the same value.
pub fn emit_csv<'r>(records: impl IntoIterator<Item = &'r RunRecord>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to memory");
    for r in records {
        w.write_record([
            r.scenario.clone(),
            r.planner.to_string(),
            r.seed.to_string(),
            r.status.as_str().to_string(),
            r.planning_time.to_string(),
            r.path_cost.map_or_else(String::new, |c| c.to_string()),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is utf-8")
}

/// Parses [`emit_csv`] output. Stats, paths and messages are not part of the
/// CSV and come back empty.
pub fn parse_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: Some(1),
            message: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = Some(i + 2);
        let field = |k: usize| row.get(k).unwrap_or("");
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("invalid {what}"),
        };
        let cost = field(5);
        out.push(RunRecord {
            scenario: field(0).to_string(),
            planner: field(1).parse().map_err(|_| bad("planner"))?,
            seed: field(2).parse().map_err(|_| bad("seed"))?,
            status: field(3).parse().map_err(|_| bad("status"))?,
            planning_time: field(4).parse().map_err(|_| bad("planning_time_s"))?,
            path_cost: if cost.is_empty() {
                None
            } else {
                Some(cost.parse().map_err(|_| bad("path_cost"))?)
            },
            stats: BTreeMap::new(),
            path: None,
            message: None,
        });
    }
    Ok(out)
}
