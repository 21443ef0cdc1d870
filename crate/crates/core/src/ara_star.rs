//! Search-and-sample planning over a joint-space state lattice.
//!
//! States are integer joint indices (`value = lower + index * resolution`),
//! successors come from a set of integer motion primitives plus an adaptive
//! "snap" move that jumps straight to an off-lattice goal configuration, and
//! the lattice is searched with ARA*: weighted A* repeated over a decreasing
//! inflation schedule, reusing g-values and carrying inconsistent states
//! between iterations. [`plan_ara_star`] tries a forward search and, if it
//! fails within its share of the budget, a backward search from the goal.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::hash::{BuildHasher, RandomState};
use std::path::Path as FsPath;
use std::time::{Duration, Instant};

use hashbrown::HashTable;
use serde::Deserialize;

use crate::collision::CollisionChecker;
use crate::error::{read_file, Error, Result};
use crate::params::AraParams;
use crate::planning::{
    finish, goal_representative, goal_satisfied_unchecked, validate_query_with, Deadline,
    Direction, Path, PlanStatus, PlannerResult, Query, UnsolvableReason,
};
use crate::robot::{Configuration, RobotModel};
use crate::world::{GoalSpec, WorldModel};

/// Integer joint indices on the lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeState {
    pub coords: Vec<i32>,
}

impl LatticeState {
    pub fn new(coords: Vec<i32>) -> Self {
        LatticeState { coords }
    }
}

fn max_index(lower: f64, upper: f64, resolution: f64) -> i32 {
    ((upper - lower) / resolution + 1e-9).floor() as i32
}

/// Nearest lattice state, clamped to the lattice extent.
pub fn discretize(robot: &RobotModel, q: &[f64]) -> Result<LatticeState> {
    robot.check_dim(q)?;
    Ok(discretize_unchecked(robot, q))
}

fn discretize_unchecked(robot: &RobotModel, q: &[f64]) -> LatticeState {
    LatticeState::new(
        robot
            .joints()
            .iter()
            .zip(q)
            .map(|(j, &v)| {
                let c = ((v - j.lower) / j.resolution).round() as i32;
                c.clamp(0, max_index(j.lower, j.upper, j.resolution))
            })
            .collect(),
    )
}

/// Configuration of a lattice state. The topmost index of a joint whose range
/// is not a whole number of cells is clamped to the upper limit.
pub fn decode(robot: &RobotModel, s: &LatticeState) -> Configuration {
    Configuration::new(
        robot
            .joints()
            .iter()
            .zip(&s.coords)
            .map(|(j, &c)| (j.lower + c as f64 * j.resolution).min(j.upper))
            .collect(),
    )
}

fn on_lattice(robot: &RobotModel, coords: &[i32]) -> bool {
    robot
        .joints()
        .iter()
        .zip(coords)
        .all(|(j, &c)| c >= 0 && c <= max_index(j.lower, j.upper, j.resolution))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionPrimitiveSet {
    primitives: Vec<Vec<i32>>,
    /// Configuration distance within which the snap-to-goal move is tried.
    pub snap_radius: f64,
}

impl MotionPrimitiveSet {
    /// Builds a set from arbitrary vectors: duplicates are dropped and the
    /// negation of every vector is added.
    pub fn new(dof: usize, vectors: Vec<Vec<i32>>, snap_radius: f64) -> Result<Self> {
        if !(snap_radius >= 0.0) {
            return Err(Error::validation("snap_radius must be >= 0"));
        }
        let mut primitives: Vec<Vec<i32>> = Vec::new();
        for v in vectors {
            if v.len() != dof {
                return Err(Error::validation(format!(
                    "motion primitive {v:?} has {} entries, robot has {dof} joints",
                    v.len()
                )));
            }
            if v.iter().all(|&c| c == 0) {
                return Err(Error::validation("zero motion primitive"));
            }
            let neg: Vec<i32> = v.iter().map(|c| -c).collect();
            for p in [v, neg] {
                if !primitives.contains(&p) {
                    primitives.push(p);
                }
            }
        }
        Ok(MotionPrimitiveSet {
            primitives,
            snap_radius,
        })
    }

    pub fn primitives(&self) -> &[Vec<i32>] {
        &self.primitives
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    /// Parses a primitives file and merges it with the single-joint moves.
    pub fn from_yaml_str(robot: &RobotModel, text: &str) -> Result<Self> {
        let doc: PrimitivesDoc = serde_yaml::from_str(text)?;
        let mut set = with_extra(robot, doc.primitives)?;
        if let Some(r) = doc.snap_radius {
            if !(r >= 0.0) {
                return Err(Error::validation("snap_radius must be >= 0"));
            }
            set.snap_radius = r;
        }
        Ok(set)
    }

    pub fn load(robot: &RobotModel, path: &FsPath) -> Result<Self> {
        Self::from_yaml_str(robot, &read_file(path)?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimitivesDoc {
    #[serde(default)]
    primitives: Vec<Vec<i32>>,
    snap_radius: Option<f64>,
}

/// Default snap radius: the weighted diagonal of one lattice cell, so the
/// snap move is always available from the cell nearest to the goal.
pub fn default_snap_radius(robot: &RobotModel) -> f64 {
    robot
        .joints()
        .iter()
        .map(|j| j.weight * j.resolution * j.resolution)
        .sum::<f64>()
        .sqrt()
}

/// The `2n` single-joint moves of one cell.
pub fn default_primitives(robot: &RobotModel) -> MotionPrimitiveSet {
    with_extra(robot, Vec::new()).expect("unit moves are always valid")
}

fn with_extra(robot: &RobotModel, extra: Vec<Vec<i32>>) -> Result<MotionPrimitiveSet> {
    let n = robot.dof();
    let mut vectors: Vec<Vec<i32>> = (0..n)
        .map(|i| {
            let mut v = vec![0; n];
            v[i] = 1;
            v
        })
        .collect();
    vectors.extend(extra);
    MotionPrimitiveSet::new(n, vectors, default_snap_radius(robot))
}

/// A node of the search graph: a lattice state or the exact (off-lattice)
/// goal configuration reached by the snap move.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SearchNode {
    Lattice(LatticeState),
    GoalConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Successor {
    pub node: SearchNode,
    pub config: Configuration,
    pub cost: f64,
}

/// Valid moves out of `s`. `decode(s)` must be collision-free.
pub fn successors(
    checker: &CollisionChecker<'_>,
    primitives: &MotionPrimitiveSet,
    s: &LatticeState,
    goal_config: Option<&[f64]>,
    edge_step: f64,
) -> Vec<Successor> {
    let robot = checker.robot();
    let from = decode(robot, s);
    let mut buffers = SuccessorBuffers::new(robot.dof());
    let mut out = Vec::with_capacity(primitives.len() + 1);
    for_each_successor(
        checker,
        primitives,
        &s.coords,
        &from,
        goal_config,
        edge_step,
        &mut buffers,
        |next, config, cost| {
            out.push(Successor {
                node: match next {
                    Some(c) => SearchNode::Lattice(LatticeState::new(c.to_vec())),
                    None => SearchNode::GoalConfig,
                },
                config: Configuration::from(config),
                cost,
            })
        },
    );
    out
}

struct SuccessorBuffers {
    coords: Vec<i32>,
    config: Vec<f64>,
}

impl SuccessorBuffers {
    fn new(dof: usize) -> Self {
        SuccessorBuffers {
            coords: vec![0; dof],
            config: vec![0.0; dof],
        }
    }
}

/// Calls `visit(coords, config, cost)` for every valid primitive move and
/// `visit(None, goal, cost)` for a valid snap move.
#[allow(clippy::too_many_arguments)]
fn for_each_successor(
    checker: &CollisionChecker<'_>,
    primitives: &MotionPrimitiveSet,
    from_coords: &[i32],
    from: &[f64],
    goal_config: Option<&[f64]>,
    edge_step: f64,
    buffers: &mut SuccessorBuffers,
    mut visit: impl FnMut(Option<&[i32]>, &[f64], f64),
) {
    let robot = checker.robot();
    let joints = robot.joints();
    'moves: for delta in primitives.primitives() {
        for i in 0..from_coords.len() {
            let c = from_coords[i] + delta[i];
            let j = &joints[i];
            if c < 0 || c > max_index(j.lower, j.upper, j.resolution) {
                continue 'moves;
            }
            buffers.coords[i] = c;
            buffers.config[i] = (j.lower + c as f64 * j.resolution).min(j.upper);
        }
        if !checker.motion_free_from_free(from, &buffers.config, edge_step) {
            continue;
        }
        let cost = robot.distance_unchecked(from, &buffers.config);
        visit(Some(&buffers.coords), &buffers.config, cost);
    }
    if let Some(goal) = goal_config {
        let d = robot.distance_unchecked(from, goal);
        if d <= primitives.snap_radius && checker.motion_free_from_free(from, goal, edge_step) {
            visit(None, goal, d);
        }
    }
}

/// Distance from `q` to the nearest goal-satisfying configuration (per-joint
/// clamp into the goal box, then the configuration metric).
pub fn heuristic(robot: &RobotModel, goal: &GoalSpec, q: &[f64]) -> f64 {
    let (lo, hi) = goal.bounds();
    let clamped: Vec<f64> = q
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(v, (l, h))| v.clamp(*l, *h))
        .collect();
    robot.distance_unchecked(q, &clamped)
}

pub fn heuristic_for_state(robot: &RobotModel, goal: &GoalSpec, s: &LatticeState) -> f64 {
    heuristic(robot, goal, &decode(robot, s))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    /// `(epsilon, expansions)` for every iteration that was started.
    pub expansions: Vec<(f64, u64)>,
    /// States improved after being closed, carried over as inconsistent.
    pub reopened: u64,
    /// `(epsilon, cost)` for every iteration that finished with a solution.
    pub incumbents: Vec<(f64, f64)>,
    /// Inflation of the last completed iteration.
    pub final_epsilon: Option<f64>,
    pub hit_deadline: bool,
}

impl SearchStats {
    pub fn total_expansions(&self) -> u64 {
        self.expansions.iter().map(|(_, n)| n).sum()
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Decoded configurations from the start state to the goal, if found.
    pub path: Option<Vec<Configuration>>,
    pub cost: Option<f64>,
    pub stats: SearchStats,
}

/// Goal description for one search: the region to reach and, optionally,
/// an exact configuration reachable with the snap move.
#[derive(Debug, Clone, Copy)]
pub struct SearchGoal<'g> {
    pub spec: &'g GoalSpec,
    pub config: Option<&'g [f64]>,
}

#[derive(Debug)]
struct NodeData {
    g: f64,
    h: f64,
    parent: Option<usize>,
    /// Iteration (1-based) in which the node was last expanded; 0 if never.
    closed_in: u32,
    in_open: bool,
    in_incons: bool,
    is_goal: bool,
    /// Orders equal-priority nodes: packed lattice coordinates, so integer
    /// order is lexicographic state order.
    tie: u128,
}

#[derive(Debug)]
struct OpenEntry {
    f: f64,
    g: f64,
    tie: u128,
    id: usize,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    // BinaryHeap is a max-heap: "greater" pops first. Lowest f, then highest
    // g, then lexicographically smallest state.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.tie.cmp(&self.tie))
    }
}

/// Bits per joint for packing coordinates into a `u128` tie key, if every
/// joint's index range fits.
fn pack_bits(robot: &RobotModel) -> Option<u32> {
    let n = robot.dof() as u32;
    if n == 0 || n > 128 {
        return None;
    }
    let bits = 128 / n;
    let fits = robot.joints().iter().all(|j| {
        let m = max_index(j.lower, j.upper, j.resolution) as u128;
        bits >= 128 || m < (1u128 << bits)
    });
    fits.then_some(bits)
}

/// Node storage is flat (coordinates and configurations in shared arenas)
/// so a large search frees a handful of buffers rather than one allocation
/// per state; this keeps the time spent past the deadline small.
struct Ara<'c, 'a> {
    checker: &'c CollisionChecker<'a>,
    primitives: &'c MotionPrimitiveSet,
    goal: SearchGoal<'c>,
    goal_lo: Vec<f64>,
    goal_hi: Vec<f64>,
    edge_step: f64,
    dof: usize,
    pack_bits: Option<u32>,
    nodes: Vec<NodeData>,
    coords: Vec<i32>,
    configs: Vec<f64>,
    table: HashTable<usize>,
    hasher: RandomState,
    goal_config_node: Option<usize>,
    heap: BinaryHeap<OpenEntry>,
    goal_g: f64,
    goal_parent: Option<usize>,
}

impl<'c, 'a> Ara<'c, 'a> {
    fn new(
        checker: &'c CollisionChecker<'a>,
        primitives: &'c MotionPrimitiveSet,
        goal: SearchGoal<'c>,
        edge_step: f64,
    ) -> Self {
        let robot = checker.robot();
        let (goal_lo, goal_hi) = goal.spec.bounds();
        Ara {
            checker,
            primitives,
            goal,
            goal_lo,
            goal_hi,
            edge_step,
            dof: robot.dof(),
            pack_bits: pack_bits(robot),
            nodes: Vec::new(),
            coords: Vec::new(),
            configs: Vec::new(),
            table: HashTable::new(),
            hasher: RandomState::new(),
            goal_config_node: None,
            heap: BinaryHeap::new(),
            goal_g: f64::INFINITY,
            goal_parent: None,
        }
    }

    fn coords_of(&self, id: usize) -> &[i32] {
        &self.coords[id * self.dof..(id + 1) * self.dof]
    }

    fn config_of(&self, id: usize) -> &[f64] {
        &self.configs[id * self.dof..(id + 1) * self.dof]
    }

    fn heuristic(&self, q: &[f64]) -> f64 {
        self.checker
            .robot()
            .joints()
            .iter()
            .zip(q)
            .zip(self.goal_lo.iter().zip(&self.goal_hi))
            .map(|((j, &v), (&lo, &hi))| {
                let d = v - v.clamp(lo, hi);
                j.weight * d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    fn push_node(
        &mut self,
        coords: &[i32],
        config: &[f64],
        h: f64,
        is_goal: bool,
        tie: u128,
    ) -> usize {
        let id = self.nodes.len();
        self.coords.extend_from_slice(coords);
        self.configs.extend_from_slice(config);
        self.nodes.push(NodeData {
            g: f64::INFINITY,
            h,
            parent: None,
            closed_in: 0,
            in_open: false,
            in_incons: false,
            is_goal,
            tie,
        });
        id
    }

    fn intern_lattice(&mut self, coords: &[i32], config: &[f64]) -> usize {
        let hash = self.hasher.hash_one(coords);
        let n = self.dof;
        let arena = &self.coords;
        if let Some(&id) = self
            .table
            .find(hash, |&id| &arena[id * n..(id + 1) * n] == coords)
        {
            return id;
        }
        let tie = match self.pack_bits {
            Some(bits) => coords
                .iter()
                .fold(0u128, |acc, &c| (acc << bits) | c as u128),
            None => self.nodes.len() as u128,
        };
        let h = self.heuristic(config);
        let is_goal = goal_satisfied_unchecked(self.goal.spec, config);
        let id = self.push_node(coords, config, h, is_goal, tie);
        let (arena, hasher) = (&self.coords, &self.hasher);
        self.table.insert_unique(hash, id, |&id| {
            hasher.hash_one(&arena[id * n..(id + 1) * n])
        });
        id
    }

    fn intern_goal_config(&mut self, config: &[f64]) -> usize {
        if let Some(id) = self.goal_config_node {
            return id;
        }
        let zeros = vec![0; self.dof];
        let id = self.push_node(&zeros, config, 0.0, true, u128::MAX);
        self.goal_config_node = Some(id);
        id
    }

    fn push_open(&mut self, id: usize, eps: f64) {
        let n = &mut self.nodes[id];
        n.in_open = true;
        self.heap.push(OpenEntry {
            f: n.g + eps * n.h,
            g: n.g,
            tie: n.tie,
            id,
        });
    }

    fn rebuild_open(&mut self, eps: f64) {
        self.heap.clear();
        for id in 0..self.nodes.len() {
            let n = &mut self.nodes[id];
            if n.in_incons {
                n.in_incons = false;
                n.in_open = true;
            }
            if n.in_open {
                self.push_open(id, eps);
            }
        }
    }

    /// Drops stale heap entries and returns the best live one.
    fn peek_live(&mut self) -> Option<(f64, usize)> {
        while let Some(top) = self.heap.peek() {
            let n = &self.nodes[top.id];
            if n.in_open && n.g == top.g {
                return Some((top.f, top.id));
            }
            self.heap.pop();
        }
        None
    }

    fn relax(&mut self, from: usize, to: usize, candidate: f64, eps: f64, iteration: u32) -> bool {
        if candidate >= self.nodes[to].g {
            return false;
        }
        let n = &mut self.nodes[to];
        n.g = candidate;
        n.parent = Some(from);
        if n.closed_in == iteration {
            let newly = !n.in_incons;
            n.in_incons = true;
            return newly;
        }
        self.push_open(to, eps);
        false
    }

    /// One weighted-A* pass. Returns `(expansions, reopened, hit_deadline)`.
    fn improve_path(&mut self, eps: f64, iteration: u32, deadline: &Deadline) -> (u64, u64, bool) {
        let mut expansions = 0;
        let mut reopened = 0;
        let mut from_coords = vec![0; self.dof];
        let mut from_config = vec![0.0; self.dof];
        let mut buffers = SuccessorBuffers::new(self.dof);
        while let Some((f_min, id)) = self.peek_live() {
            if self.goal_g <= f_min {
                break;
            }
            if deadline.expired() {
                return (expansions, reopened, true);
            }
            self.heap.pop();
            expansions += 1;
            let (g, is_goal) = {
                let n = &mut self.nodes[id];
                n.in_open = false;
                n.closed_in = iteration;
                (n.g, n.is_goal)
            };
            if is_goal && g < self.goal_g {
                self.goal_g = g;
                self.goal_parent = Some(id);
            }
            if Some(id) == self.goal_config_node {
                continue;
            }
            from_coords.copy_from_slice(self.coords_of(id));
            from_config.copy_from_slice(self.config_of(id));
            let (checker, primitives, goal_config, step) = (
                self.checker,
                self.primitives,
                self.goal.config,
                self.edge_step,
            );
            for_each_successor(
                checker,
                primitives,
                &from_coords,
                &from_config,
                goal_config,
                step,
                &mut buffers,
                |next, config, cost| {
                    let sid = match next {
                        Some(coords) => self.intern_lattice(coords, config),
                        None => self.intern_goal_config(config),
                    };
                    if self.relax(id, sid, g + cost, eps, iteration) {
                        reopened += 1;
                    }
                },
            );
        }
        (expansions, reopened, false)
    }

    fn extract_path(&self) -> Option<Vec<Configuration>> {
        let mut id = self.goal_parent?;
        let mut out = vec![Configuration::from(self.config_of(id))];
        while let Some(p) = self.nodes[id].parent {
            id = p;
            out.push(Configuration::from(self.config_of(id)));
        }
        out.reverse();
        Some(out)
    }
}

/// ARA* over the lattice from `start` (which must decode to a free
/// configuration). Stops at the end of the schedule, at the deadline, or
/// after the first solution when `params.improve_solution` is false.
pub fn ara_search(
    checker: &CollisionChecker<'_>,
    start: &LatticeState,
    goal: SearchGoal<'_>,
    primitives: &MotionPrimitiveSet,
    params: &AraParams,
    deadline: &Deadline,
) -> Result<SearchOutcome> {
    params.validate()?;
    let robot = checker.robot();
    robot.check_dim(&decode(robot, start))?;
    let mut stats = SearchStats::default();

    let start_config = decode(robot, start);
    if goal_satisfied_unchecked(goal.spec, &start_config) {
        stats.final_epsilon = params.epsilon_schedule.last().copied();
        return Ok(SearchOutcome {
            path: Some(vec![start_config]),
            cost: Some(0.0),
            stats,
        });
    }

    let mut ara = Ara::new(checker, primitives, goal, params.edge_step);
    let start_id = ara.intern_lattice(&start.coords, &start_config);
    ara.nodes[start_id].g = 0.0;
    ara.nodes[start_id].in_open = true;

    let mut best: Option<(f64, Vec<Configuration>)> = None;
    for (i, &eps) in params.epsilon_schedule.iter().enumerate() {
        ara.rebuild_open(eps);
        let (expansions, reopened, hit_deadline) = ara.improve_path(eps, i as u32 + 1, deadline);
        stats.expansions.push((eps, expansions));
        stats.reopened += reopened;
        if hit_deadline {
            stats.hit_deadline = true;
            // a solution found mid-iteration is still a valid path
            if ara.goal_g.is_finite() && best.as_ref().is_none_or(|(c, _)| ara.goal_g < *c) {
                best = ara.extract_path().map(|p| (ara.goal_g, p));
            }
            break;
        }
        stats.final_epsilon = Some(eps);
        if ara.goal_g.is_finite() {
            stats.incumbents.push((eps, ara.goal_g));
            best = ara.extract_path().map(|p| (ara.goal_g, p));
            if !params.improve_solution {
                break;
            }
        }
    }

    Ok(SearchOutcome {
        cost: best.as_ref().map(|(c, _)| *c),
        path: best.map(|(_, p)| p),
        stats,
    })
}

/// Picks the lattice state to start from: the rounded cell if it is free and
/// reachable by a straight motion, else the nearest such corner of the
/// enclosing cell.
fn entry_state(checker: &CollisionChecker<'_>, q: &[f64], edge_step: f64) -> Option<LatticeState> {
    let robot = checker.robot();
    let rounded = discretize_unchecked(robot, q);
    let mut candidates = vec![rounded.clone()];
    let n = robot.dof();
    if n <= 12 {
        let floor: Vec<i32> = robot
            .joints()
            .iter()
            .zip(q)
            .map(|(j, &v)| ((v - j.lower) / j.resolution).floor() as i32)
            .collect();
        let mut corners: Vec<(f64, LatticeState)> = (0..1u32 << n)
            .filter_map(|mask| {
                let coords: Vec<i32> = (0..n)
                    .map(|i| floor[i] + ((mask >> i) & 1) as i32)
                    .collect();
                if !on_lattice(robot, &coords) {
                    return None;
                }
                let s = LatticeState::new(coords);
                let d = robot.distance_unchecked(q, &decode(robot, &s));
                Some((d, s))
            })
            .collect();
        corners.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        candidates.extend(
            corners
                .into_iter()
                .map(|(_, s)| s)
                .filter(|s| *s != rounded),
        );
    }
    candidates.into_iter().find(|s| {
        let c = decode(robot, s);
        checker.is_free(&c) && checker.motion_free(q, &c, edge_step)
    })
}

struct Attempt {
    waypoints: Option<Vec<Configuration>>,
    stats: SearchStats,
}

/// Searches from an arbitrary free configuration: enters the lattice through
/// a validated junction edge and returns a path starting exactly at `from`.
fn attempt(
    checker: &CollisionChecker<'_>,
    from: &Configuration,
    goal: SearchGoal<'_>,
    primitives: &MotionPrimitiveSet,
    params: &AraParams,
    deadline: &Deadline,
) -> Result<Attempt> {
    let Some(entry) = entry_state(checker, from, params.edge_step) else {
        return Ok(Attempt {
            waypoints: None,
            stats: SearchStats::default(),
        });
    };
    let outcome = ara_search(checker, &entry, goal, primitives, params, deadline)?;
    let waypoints = outcome.path.map(|lattice_path| {
        let mut out = vec![from.clone()];
        for q in lattice_path {
            if out.last() != Some(&q) {
                out.push(q);
            }
        }
        out
    });
    Ok(Attempt {
        waypoints,
        stats: outcome.stats,
    })
}

fn record(stats: &mut BTreeMap<String, u64>, prefix: &str, s: &SearchStats) {
    stats.insert(format!("{prefix}_expansions"), s.total_expansions());
    stats.insert(format!("{prefix}_reopened"), s.reopened);
    stats.insert(format!("{prefix}_iterations"), s.expansions.len() as u64);
}

/// Forward search with `budget_split` of the budget, then (if that fails) a
/// backward search from a goal representative to the start with the rest.
pub fn plan_ara_star(
    robot: &RobotModel,
    world: &WorldModel,
    query: &Query,
    primitives: &MotionPrimitiveSet,
    params: &AraParams,
) -> Result<PlannerResult> {
    let started = Instant::now();
    query.check(robot)?;
    params.validate()?;
    if primitives
        .primitives()
        .iter()
        .any(|p| p.len() != robot.dof())
    {
        return Err(Error::validation(
            "motion primitive dimension does not match robot",
        ));
    }
    let checker = CollisionChecker::new(robot, world);
    let mut stats = BTreeMap::new();
    let done = |status, stats: &mut BTreeMap<String, u64>| {
        stats.insert("collision_checks".to_string(), checker.checks());
        let expansions = stats.get("forward_expansions").copied().unwrap_or(0)
            + stats.get("backward_expansions").copied().unwrap_or(0);
        stats.insert("expansions".to_string(), expansions);
        Ok(finish(status, started, std::mem::take(stats)))
    };

    if let Some(reason) = validate_query_with(&checker, query).reason() {
        return done(PlanStatus::Unsolvable(reason), &mut stats);
    }
    if goal_satisfied_unchecked(&query.goal, &query.start) {
        let status = PlanStatus::Solved {
            path: Path::new(vec![query.start.clone()])?,
            direction: Direction::Forward,
        };
        return done(status, &mut stats);
    }

    let budget = Duration::from_secs_f64(query.time_budget);
    let forward_deadline = Deadline::at(started + budget.mul_f64(params.budget_split));
    let total_deadline = Deadline::at(started + budget);

    let target = match &query.goal {
        GoalSpec::Config { target, .. } => Some(target.values()),
        GoalSpec::Region { .. } => None,
    };
    let forward_goal = SearchGoal {
        spec: &query.goal,
        config: target,
    };
    let forward = attempt(
        &checker,
        &query.start,
        forward_goal,
        primitives,
        params,
        &forward_deadline,
    )?;
    record(&mut stats, "forward", &forward.stats);
    if let Some(waypoints) = forward.waypoints {
        let status = PlanStatus::Solved {
            path: Path::new(waypoints)?,
            direction: Direction::Forward,
        };
        return done(status, &mut stats);
    }

    let Some(goal_root) = goal_representative(&checker, &query.goal, params.seed) else {
        return done(
            PlanStatus::Unsolvable(UnsolvableReason::GoalInCollision),
            &mut stats,
        );
    };
    let backward_spec = GoalSpec::config(
        query.start.clone(),
        robot.joints().iter().map(|j| j.resolution / 2.0).collect(),
    );
    let backward_goal = SearchGoal {
        spec: &backward_spec,
        config: Some(query.start.values()),
    };
    let backward = attempt(
        &checker,
        &goal_root,
        backward_goal,
        primitives,
        params,
        &total_deadline,
    )?;
    record(&mut stats, "backward", &backward.stats);
    if let Some(mut waypoints) = backward.waypoints {
        waypoints.reverse();
        // the backward search may stop on the start's cell instead of the
        // exact start; close the gap with a validated junction edge
        if waypoints[0] != query.start {
            if checker.motion_free(&query.start, &waypoints[0], params.edge_step) {
                waypoints.insert(0, query.start.clone());
            } else {
                return done(PlanStatus::FailureTimeout, &mut stats);
            }
        }
        let status = PlanStatus::Solved {
            path: Path::new(waypoints)?,
            direction: Direction::Backward,
        };
        return done(status, &mut stats);
    }
    done(PlanStatus::FailureTimeout, &mut stats)
}
