//! Bidirectional RRT-Connect with uniform sampling.
//!
//! One tree grows from the start and one from a goal representative. Each
//! iteration extends one tree toward a uniform sample and then greedily
//! connects the other tree to the new node; the trees swap roles every
//! iteration.

use std::collections::BTreeMap;
use std::mem;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::collision::CollisionChecker;
use crate::error::Result;
use crate::params::RrtParams;
use crate::planning::{
    finish, goal_representative, goal_satisfied_unchecked, validate_query_with, Deadline,
    Direction, Path, PlanStatus, PlannerResult, Query, SearchGraph, UnsolvableReason,
};
use crate::robot::{lerp, Configuration, RobotModel};
use crate::world::WorldModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeRoot {
    Start,
    Goal,
}

#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Configuration>,
    parents: Vec<usize>,
    root: TreeRoot,
}

impl Tree {
    pub fn new(root_config: Configuration, root: TreeRoot) -> Self {
        Tree {
            nodes: vec![root_config],
            parents: vec![0],
            root,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_kind(&self) -> TreeRoot {
        self.root
    }

    pub fn nodes(&self) -> &[Configuration] {
        &self.nodes
    }

    /// Parent of node `i`; the root is its own parent.
    pub fn parent(&self, i: usize) -> usize {
        self.parents[i]
    }

    fn push(&mut self, q: Configuration, parent: usize) -> usize {
        self.nodes.push(q);
        self.parents.push(parent);
        self.nodes.len() - 1
    }

    /// Index of the node closest to `q`; ties go to the lowest index.
    pub fn nearest(&self, robot: &RobotModel, q: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = robot.distance_unchecked(n, q);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Configurations from the root down to node `i`.
    pub fn branch(&self, mut i: usize) -> Vec<Configuration> {
        let mut out = vec![self.nodes[i].clone()];
        while self.parents[i] != i {
            i = self.parents[i];
            out.push(self.nodes[i].clone());
        }
        out.reverse();
        out
    }

    pub fn to_graph(&self, robot: &RobotModel) -> SearchGraph {
        let mut graph = SearchGraph {
            nodes: self.nodes.clone(),
            edges: Vec::new(),
        };
        for (child, &parent) in self.parents.iter().enumerate().skip(1) {
            graph
                .add_edge(robot, parent, child)
                .expect("tree indices are valid and acyclic");
        }
        graph
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendOutcome {
    Reached(usize),
    Advanced(usize),
    Trapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectOutcome {
    Reached(usize),
    /// Last node added before getting stuck, if any.
    Trapped(Option<usize>),
}

/// Moves at most `step_eta` from the nearest node toward `target`.
pub fn extend(
    tree: &mut Tree,
    target: &[f64],
    params: &RrtParams,
    checker: &CollisionChecker<'_>,
) -> ExtendOutcome {
    let robot = checker.robot();
    let near = tree.nearest(robot, target);
    let d = robot.distance_unchecked(&tree.nodes[near], target);
    if d == 0.0 {
        return ExtendOutcome::Reached(near);
    }
    let reached = d <= params.step_eta;
    let q_new = if reached {
        target.to_vec()
    } else {
        lerp(&tree.nodes[near], target, params.step_eta / d)
    };
    if !checker.motion_free(&tree.nodes[near], &q_new, params.edge_step) {
        return ExtendOutcome::Trapped;
    }
    let idx = tree.push(Configuration::new(q_new), near);
    if reached {
        ExtendOutcome::Reached(idx)
    } else {
        ExtendOutcome::Advanced(idx)
    }
}

/// Extends toward `target` until it is reached or progress stops.
pub fn connect(
    tree: &mut Tree,
    target: &[f64],
    params: &RrtParams,
    checker: &CollisionChecker<'_>,
) -> ConnectOutcome {
    let mut last = None;
    loop {
        match extend(tree, target, params, checker) {
            ExtendOutcome::Advanced(i) => last = Some(i),
            ExtendOutcome::Reached(i) => return ConnectOutcome::Reached(i),
            ExtendOutcome::Trapped => return ConnectOutcome::Trapped(last),
        }
    }
}

pub fn plan_rrt_connect(
    robot: &RobotModel,
    world: &WorldModel,
    query: &Query,
    params: &RrtParams,
) -> Result<PlannerResult> {
    let started = Instant::now();
    query.check(robot)?;
    params.validate()?;
    let deadline = Deadline::at(started + std::time::Duration::from_secs_f64(query.time_budget));
    let checker = CollisionChecker::new(robot, world);
    let mut stats = BTreeMap::new();

    if let Some(reason) = validate_query_with(&checker, query).reason() {
        stats.insert("collision_checks".to_string(), checker.checks());
        return Ok(finish(PlanStatus::Unsolvable(reason), started, stats));
    }
    if goal_satisfied_unchecked(&query.goal, &query.start) {
        let path = Path::new(vec![query.start.clone()])?;
        stats.insert("collision_checks".to_string(), checker.checks());
        let status = PlanStatus::Solved {
            path,
            direction: Direction::Forward,
        };
        return Ok(finish(status, started, stats));
    }
    let Some(goal_root) = goal_representative(&checker, &query.goal, params.seed) else {
        stats.insert("collision_checks".to_string(), checker.checks());
        let status = PlanStatus::Unsolvable(UnsolvableReason::GoalInCollision);
        return Ok(finish(status, started, stats));
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut a = Tree::new(query.start.clone(), TreeRoot::Start);
    let mut b = Tree::new(goal_root, TreeRoot::Goal);
    let mut iterations = 0u64;
    let mut solution = None;

    while !deadline.expired() && params.max_iterations.is_none_or(|m| iterations < m) {
        iterations += 1;
        let q_rand = robot.sample_uniform(&mut rng);
        let new = match extend(&mut a, &q_rand, params, &checker) {
            ExtendOutcome::Trapped => None,
            ExtendOutcome::Reached(i) | ExtendOutcome::Advanced(i) => Some(i),
        };
        if let Some(i) = new {
            let q_new = a.nodes[i].clone();
            if let ConnectOutcome::Reached(j) = connect(&mut b, &q_new, params, &checker) {
                let (start_tree, start_idx, goal_tree, goal_idx) = match a.root {
                    TreeRoot::Start => (&a, i, &b, j),
                    TreeRoot::Goal => (&b, j, &a, i),
                };
                solution = Some(join_branches(start_tree, start_idx, goal_tree, goal_idx));
                break;
            }
        }
        mem::swap(&mut a, &mut b);
    }

    let (start_nodes, goal_nodes) = match a.root {
        TreeRoot::Start => (a.len(), b.len()),
        TreeRoot::Goal => (b.len(), a.len()),
    };
    stats.insert("iterations".to_string(), iterations);
    stats.insert("samples".to_string(), iterations);
    stats.insert("start_tree_nodes".to_string(), start_nodes as u64);
    stats.insert("goal_tree_nodes".to_string(), goal_nodes as u64);
    stats.insert("collision_checks".to_string(), checker.checks());

    let status = match solution {
        Some(waypoints) => PlanStatus::Solved {
            path: Path::new(waypoints)?,
            direction: Direction::Forward,
        },
        None => PlanStatus::FailureTimeout,
    };
    Ok(finish(status, started, stats))
}

fn join_branches(
    start_tree: &Tree,
    start_idx: usize,
    goal_tree: &Tree,
    goal_idx: usize,
) -> Vec<Configuration> {
    let mut waypoints = start_tree.branch(start_idx);
    let mut tail = goal_tree.branch(goal_idx);
    tail.reverse();
    for q in tail {
        if waypoints.last() != Some(&q) {
            waypoints.push(q);
        }
    }
    waypoints
}
