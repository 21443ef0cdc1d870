//! Types and checks shared by every planner: queries, paths, results, goal
//! tests and query/path validation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collision::CollisionChecker;
use crate::error::{check_dim, Error, Result};
use crate::robot::{Configuration, RobotModel};
use crate::world::{GoalSpec, Scenario, WorldModel};

/// Wall-clock slack allowed beyond a query's budget.
pub const BUDGET_GRACE: f64 = 0.05;

/// Number of random samples (besides the center) tried for region goals.
pub const GOAL_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub start: Configuration,
    pub goal: GoalSpec,
    /// Seconds.
    pub time_budget: f64,
    pub seed: u64,
}

impl Query {
    pub fn new(start: impl Into<Configuration>, goal: GoalSpec, time_budget: f64) -> Self {
        Query {
            start: start.into(),
            goal,
            time_budget,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Builds a query from a scenario. Config-goal tolerances are raised to at
    /// least `min_tolerance`.
    pub fn from_scenario(scenario: &Scenario, seed: u64, min_tolerance: f64) -> Self {
        let goal = match &scenario.goal {
            GoalSpec::Config { target, tolerance } if min_tolerance > 0.0 => GoalSpec::Config {
                target: target.clone(),
                tolerance: tolerance.iter().map(|t| t.max(min_tolerance)).collect(),
            },
            g => g.clone(),
        };
        Query {
            start: scenario.start.clone(),
            goal,
            time_budget: scenario.time_budget,
            seed,
        }
    }

    pub fn check(&self, robot: &RobotModel) -> Result<()> {
        robot.check_dim(&self.start)?;
        check_dim(robot.dof(), self.goal.dim())?;
        if !(self.time_budget > 0.0) {
            return Err(Error::contract("time budget must be positive"));
        }
        Ok(())
    }
}

/// A polyline in configuration space.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub waypoints: Vec<Configuration>,
}

impl Path {
    pub fn new(waypoints: Vec<Configuration>) -> Result<Self> {
        let first = waypoints
            .first()
            .ok_or_else(|| Error::contract("a path needs at least one waypoint"))?;
        for w in &waypoints {
            check_dim(first.len(), w.len())?;
        }
        Ok(Path { waypoints })
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn first(&self) -> &Configuration {
        &self.waypoints[0]
    }

    pub fn last(&self) -> &Configuration {
        self.waypoints.last().expect("paths are never empty")
    }

    /// One waypoint per line, comma-separated joint values.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for w in &self.waypoints {
            let line: Vec<String> = w.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut waypoints = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let values = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: Some(i + 1),
                    message: e.to_string(),
                })?;
            waypoints.push(Configuration::new(values));
        }
        Path::new(waypoints)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnsolvableReason {
    StartInCollision,
    GoalInCollision,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanStatus {
    Solved { path: Path, direction: Direction },
    FailureTimeout,
    Unsolvable(UnsolvableReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerResult {
    pub status: PlanStatus,
    /// Seconds.
    pub planning_time: f64,
    pub stats: BTreeMap<String, u64>,
}

impl PlannerResult {
    pub fn path(&self) -> Option<&Path> {
        match &self.status {
            PlanStatus::Solved { path, .. } => Some(path),
            _ => None,
        }
    }

    pub fn direction(&self) -> Option<Direction> {
        match &self.status {
            PlanStatus::Solved { direction, .. } => Some(*direction),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerId {
    RrtConnect,
    AraStar,
}

impl PlannerId {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerId::RrtConnect => "rrt-connect",
            PlannerId::AraStar => "ara-star",
        }
    }
}

impl fmt::Display for PlannerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rrt-connect" => Ok(PlannerId::RrtConnect),
            "ara-star" => Ok(PlannerId::AraStar),
            other => Err(Error::validation(format!("unknown planner `{other}`"))),
        }
    }
}

/// Graph over configurations. Edge costs are the configuration distance
/// between the endpoints.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchGraph {
    pub nodes: Vec<Configuration>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl SearchGraph {
    pub fn add_node(&mut self, q: Configuration) -> usize {
        self.nodes.push(q);
        self.nodes.len() - 1
    }

    pub fn add_edge(&mut self, robot: &RobotModel, parent: usize, child: usize) -> Result<()> {
        if parent >= self.nodes.len() || child >= self.nodes.len() {
            return Err(Error::contract("edge references a missing node"));
        }
        if parent == child {
            return Err(Error::contract("self-loop edge"));
        }
        let cost = robot.distance(&self.nodes[parent], &self.nodes[child])?;
        self.edges.push((parent, child, cost));
        Ok(())
    }

    /// Checks index validity, absence of self-loops and edge costs.
    pub fn is_consistent(&self, robot: &RobotModel) -> bool {
        self.edges.iter().all(|&(p, c, cost)| {
            p < self.nodes.len()
                && c < self.nodes.len()
                && p != c
                && robot
                    .distance(&self.nodes[p], &self.nodes[c])
                    .is_ok_and(|d| (d - cost).abs() <= 1e-9)
        })
    }
}

/// Monotonic deadline for a planning call.
#[derive(Debug, Clone, Copy)]
pub struct Deadline(Instant);

impl Deadline {
    pub fn after(seconds: f64) -> Self {
        let now = Instant::now();
        Deadline(
            now.checked_add(Duration::from_secs_f64(seconds.max(0.0)))
                .unwrap_or(now + Duration::from_secs(86_400 * 365)),
        )
    }

    pub fn at(instant: Instant) -> Self {
        Deadline(instant)
    }

    pub fn instant(&self) -> Instant {
        self.0
    }

    pub fn expired(&self) -> bool {
        Instant::now() >= self.0
    }

    pub fn remaining(&self) -> Duration {
        self.0.saturating_duration_since(Instant::now())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryValidity {
    Ok,
    StartInCollision,
    GoalInCollision,
}

impl QueryValidity {
    pub fn reason(&self) -> Option<UnsolvableReason> {
        match self {
            QueryValidity::Ok => None,
            QueryValidity::StartInCollision => Some(UnsolvableReason::StartInCollision),
            QueryValidity::GoalInCollision => Some(UnsolvableReason::GoalInCollision),
        }
    }
}

pub fn goal_satisfied(goal: &GoalSpec, q: &[f64]) -> Result<bool> {
    check_dim(goal.dim(), q.len())?;
    Ok(goal_satisfied_unchecked(goal, q))
}

pub(crate) fn goal_satisfied_unchecked(goal: &GoalSpec, q: &[f64]) -> bool {
    match goal {
        GoalSpec::Config { target, tolerance } => q
            .iter()
            .zip(target.iter())
            .zip(tolerance)
            .all(|((v, t), e)| (v - t).abs() <= *e),
        GoalSpec::Region { lower, upper } => q
            .iter()
            .zip(lower.iter().zip(upper.iter()))
            .all(|(v, (l, u))| l <= v && v <= u),
    }
}

/// Goal box intersected with the joint limits.
pub(crate) fn goal_box(robot: &RobotModel, goal: &GoalSpec) -> (Vec<f64>, Vec<f64>) {
    let (lower, upper) = goal.bounds();
    let lo = robot
        .joints()
        .iter()
        .zip(&lower)
        .map(|(j, l)| l.max(j.lower))
        .collect();
    let hi = robot
        .joints()
        .iter()
        .zip(&upper)
        .map(|(j, u)| u.min(j.upper))
        .collect();
    (lo, hi)
}

fn sample_box<R: Rng>(lo: &[f64], hi: &[f64], rng: &mut R) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(&l, &h)| if l < h { rng.gen_range(l..=h) } else { l })
        .collect()
}

/// Free goal configuration to root a goal tree or a backward search at.
/// Config goals use their target; region goals use up to [`GOAL_SAMPLES`]
/// seeded uniform samples from the region.
pub(crate) fn goal_representative(
    checker: &CollisionChecker<'_>,
    goal: &GoalSpec,
    seed: u64,
) -> Option<Configuration> {
    match goal {
        GoalSpec::Config { target, .. } => checker.is_free(target).then(|| target.clone()),
        GoalSpec::Region { .. } => {
            let (lo, hi) = goal_box(checker.robot(), goal);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..GOAL_SAMPLES)
                .map(|_| sample_box(&lo, &hi, &mut rng))
                .find(|q| checker.is_free(q))
                .map(Configuration::new)
        }
    }
}

pub fn validate_query(
    robot: &RobotModel,
    world: &WorldModel,
    query: &Query,
) -> Result<QueryValidity> {
    query.check(robot)?;
    let checker = CollisionChecker::new(robot, world);
    Ok(validate_query_with(&checker, query))
}

pub(crate) fn validate_query_with(checker: &CollisionChecker<'_>, query: &Query) -> QueryValidity {
    if !checker.is_free(&query.start) {
        return QueryValidity::StartInCollision;
    }
    let goal_free = match &query.goal {
        GoalSpec::Config { target, .. } => checker.is_free(target),
        GoalSpec::Region { .. } => {
            let (lo, hi) = goal_box(checker.robot(), &query.goal);
            let center: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(query.seed);
            checker.is_free(&center)
                || (0..GOAL_SAMPLES).any(|_| checker.is_free(&sample_box(&lo, &hi, &mut rng)))
        }
    };
    if goal_free {
        QueryValidity::Ok
    } else {
        QueryValidity::GoalInCollision
    }
}

/// Sum of configuration distances between consecutive waypoints.
pub fn path_cost(robot: &RobotModel, path: &Path) -> Result<f64> {
    for w in &path.waypoints {
        robot.check_dim(w)?;
    }
    Ok(path
        .waypoints
        .windows(2)
        .map(|w| robot.distance_unchecked(&w[0], &w[1]))
        .sum())
}

/// True iff the path starts exactly at the query start, ends inside the goal
/// and every segment passes edge validation at `step`.
pub fn validate_path(
    robot: &RobotModel,
    world: &WorldModel,
    query: &Query,
    path: &Path,
    step: f64,
) -> Result<bool> {
    query.check(robot)?;
    if path.is_empty() {
        return Ok(false);
    }
    for w in &path.waypoints {
        if w.len() != robot.dof() {
            return Ok(false);
        }
    }
    if path.first() != &query.start || !goal_satisfied_unchecked(&query.goal, path.last()) {
        return Ok(false);
    }
    let checker = CollisionChecker::new(robot, world);
    if path.len() == 1 {
        return Ok(checker.is_free(path.first()));
    }
    for w in path.waypoints.windows(2) {
        if !checker.check_motion(&w[0], &w[1], step)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result with `planning_time` measured from `started`.
pub(crate) fn finish(
    status: PlanStatus,
    started: Instant,
    stats: BTreeMap<String, u64>,
) -> PlannerResult {
    PlannerResult {
        status,
        planning_time: started.elapsed().as_secs_f64(),
        stats,
    }
}
