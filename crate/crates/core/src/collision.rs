//! Sphere-body collision checking against primitive obstacles.
//!
//! Touching (signed distance exactly 0) is collision-free. When several
//! contacts exist the reported one is the first in scan order: world
//! contacts by lowest robot sphere then lowest obstacle index, self contacts
//! by lowest `(a, b)` pair.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::robot::{lerp, PlacedSphere, RobotModel};
use crate::world::{Obstacle, Shape, WorldModel};

/// Default configuration-space distance between consecutive edge checks.
pub const DEFAULT_EDGE_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionStatus {
    Free,
    WorldCollision { sphere: usize, obstacle: usize },
    SelfCollision { first: usize, second: usize },
    LimitsViolation { joint: usize },
}

impl CollisionStatus {
    pub fn is_free(&self) -> bool {
        matches!(self, CollisionStatus::Free)
    }
}

/// Signed distance from the surface of a sphere to the surface of an
/// obstacle; negative when they overlap.
pub fn sphere_obstacle_distance(center: &Vector3<f64>, radius: f64, obstacle: &Obstacle) -> f64 {
    let offset = center - obstacle.center;
    match obstacle.shape {
        Shape::Sphere { radius: r } => offset.norm() - radius - r,
        Shape::Box { half_extents } => {
            let p = to_local(&offset, obstacle.yaw);
            let q = p.abs() - half_extents;
            let outside = q.map(|v| v.max(0.0)).norm();
            let inside = q.max().min(0.0);
            outside + inside - radius
        }
        Shape::Cylinder {
            radius: r,
            half_height,
        } => {
            let p = to_local(&offset, obstacle.yaw);
            let radial = p.x.hypot(p.y) - r;
            let axial = p.z.abs() - half_height;
            let outside = radial.max(0.0).hypot(axial.max(0.0));
            let inside = radial.max(axial).min(0.0);
            outside + inside - radius
        }
    }
}

fn to_local(offset: &Vector3<f64>, yaw: f64) -> Vector3<f64> {
    if yaw == 0.0 {
        return *offset;
    }
    let (s, c) = yaw.sin_cos();
    Vector3::new(
        c * offset.x + s * offset.y,
        -s * offset.x + c * offset.y,
        offset.z,
    )
}

fn bounding_radius(obstacle: &Obstacle) -> f64 {
    match obstacle.shape {
        Shape::Sphere { radius } => radius,
        Shape::Box { half_extents } => half_extents.norm(),
        Shape::Cylinder {
            radius,
            half_height,
        } => radius.hypot(half_height),
    }
}

/// Collision checker bound to one robot and one world. Counts every
/// configuration check it performs; not shared between threads.
#[derive(Debug)]
pub struct CollisionChecker<'a> {
    robot: &'a RobotModel,
    world: &'a WorldModel,
    bounds: Vec<f64>,
    buffer: RefCell<Vec<PlacedSphere>>,
    checks: Cell<u64>,
}

impl<'a> CollisionChecker<'a> {
    pub fn new(robot: &'a RobotModel, world: &'a WorldModel) -> Self {
        CollisionChecker {
            robot,
            world,
            bounds: world.obstacles.iter().map(bounding_radius).collect(),
            buffer: RefCell::new(Vec::with_capacity(robot.spheres().len())),
            checks: Cell::new(0),
        }
    }

    pub fn robot(&self) -> &'a RobotModel {
        self.robot
    }

    pub fn world(&self) -> &'a WorldModel {
        self.world
    }

    /// Number of configuration checks performed so far.
    pub fn checks(&self) -> u64 {
        self.checks.get()
    }

    pub fn check_config(&self, q: &[f64]) -> Result<CollisionStatus> {
        self.robot.check_dim(q)?;
        Ok(self.status(q))
    }

    pub(crate) fn is_free(&self, q: &[f64]) -> bool {
        self.status(q).is_free()
    }

    pub(crate) fn status(&self, q: &[f64]) -> CollisionStatus {
        self.checks.set(self.checks.get() + 1);
        if let Some(joint) = self.robot.first_limit_violation(q) {
            return CollisionStatus::LimitsViolation { joint };
        }
        let mut placed = self.buffer.borrow_mut();
        self.robot.place_spheres(q, &mut placed);

        for (si, s) in placed.iter().enumerate() {
            for (oi, (o, bound)) in self.world.obstacles.iter().zip(&self.bounds).enumerate() {
                // cheap reject; the margin keeps the filter strictly conservative
                if (s.center - o.center).norm() - s.radius - bound > 1e-9 {
                    continue;
                }
                if sphere_obstacle_distance(&s.center, s.radius, o) < 0.0 {
                    return CollisionStatus::WorldCollision {
                        sphere: si,
                        obstacle: oi,
                    };
                }
            }
        }
        for &(a, b) in self.robot.self_collision_pairs() {
            let (sa, sb) = (&placed[a], &placed[b]);
            if (sa.center - sb.center).norm() < sa.radius + sb.radius {
                return CollisionStatus::SelfCollision {
                    first: a,
                    second: b,
                };
            }
        }
        CollisionStatus::Free
    }

    /// True iff every one of the `ceil(d(a, b) / step) + 1` evenly spaced
    /// configurations on the segment (both endpoints included) is free.
    /// Stops at the first colliding configuration.
    pub fn check_motion(&self, a: &[f64], b: &[f64], step: f64) -> Result<bool> {
        self.robot.check_dim(a)?;
        self.robot.check_dim(b)?;
        if !(step > 0.0) {
            return Err(Error::contract(format!(
                "edge step must be positive, got {step}"
            )));
        }
        Ok(self.motion_free(a, b, step))
    }

    pub(crate) fn motion_free(&self, a: &[f64], b: &[f64], step: f64) -> bool {
        self.motion_free_impl(a, b, step, false)
    }

    /// As [`Self::motion_free`] but skips re-checking `a`, which the caller
    /// already knows to be free. The remaining checked set is unchanged.
    pub(crate) fn motion_free_from_free(&self, a: &[f64], b: &[f64], step: f64) -> bool {
        self.motion_free_impl(a, b, step, true)
    }

    fn motion_free_impl(&self, a: &[f64], b: &[f64], step: f64, a_known_free: bool) -> bool {
        // interpolate from the lexicographically smaller endpoint so that both
        // directions test the identical set of configurations
        let swapped = lex_cmp(a, b) == Ordering::Greater;
        let (from, to) = if swapped { (b, a) } else { (a, b) };
        let segments = (self.robot.distance_unchecked(from, to) / step).ceil() as usize;
        if segments == 0 {
            return a_known_free || self.is_free(from);
        }
        let skip = a_known_free.then_some(if swapped { segments } else { 0 });
        (0..=segments).filter(|&k| Some(k) != skip).all(|k| {
            let t = k as f64 / segments as f64;
            self.is_free(&lerp(from, to, t))
        })
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

pub fn check_config(robot: &RobotModel, world: &WorldModel, q: &[f64]) -> Result<CollisionStatus> {
    CollisionChecker::new(robot, world).check_config(q)
}

pub fn check_motion(
    robot: &RobotModel,
    world: &WorldModel,
    a: &[f64],
    b: &[f64],
    step: f64,
) -> Result<bool> {
    CollisionChecker::new(robot, world).check_motion(a, b, step)
}
