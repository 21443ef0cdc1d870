//! Motion planning for serial-chain manipulators among static obstacles,
//! with a sampling planner (RRT-Connect), a lattice search planner (ARA*)
//! and a benchmark harness that runs both over scenario suites.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ara_star;
pub mod bench;
pub mod collision;
mod error;
pub mod params;
pub mod planning;
pub mod robot;
pub mod rrt_connect;
pub mod world;

pub use ara_star::{default_primitives, plan_ara_star, MotionPrimitiveSet};
pub use bench::{
    aggregate, emit_report, run_suite, BenchmarkReport, ReportFormat, RunRecord, RunStatus,
};
pub use collision::{check_config, check_motion, CollisionChecker, CollisionStatus};
pub use error::{Error, Result};
pub use params::{AraParams, PlannerParams, RrtParams};
pub use planning::{
    goal_satisfied, path_cost, validate_path, validate_query, Direction, Path, PlanStatus,
    PlannerId, PlannerResult, Query, QueryValidity, UnsolvableReason,
};
pub use robot::{Configuration, RobotModel};
pub use rrt_connect::plan_rrt_connect;
pub use world::{load_scenario, GoalSpec, LoadedScenario, Obstacle, Scenario, Shape, WorldModel};
