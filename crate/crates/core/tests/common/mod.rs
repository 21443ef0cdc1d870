//! Reference implementations used by the integration tests. None of this
//! calls into the library's kinematics or distance code.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::path::PathBuf;

use nalgebra::Vector3;
use planbench::robot::{CollisionSphere, JointKind, JointSpec};
use planbench::{check_motion, GoalSpec, Obstacle, RobotModel, Shape, WorldModel};
use rand::Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn fetch8() -> RobotModel {
    RobotModel::load(&data_dir().join("robots/fetch8.yaml")).unwrap()
}

// --- forward kinematics as a chain of 4x4 matrices ------------------------

pub type Mat4 = [[f64; 4]; 4];

pub fn identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn translation(t: [f64; 3]) -> Mat4 {
    let mut m = identity();
    m[0][3] = t[0];
    m[1][3] = t[1];
    m[2][3] = t[2];
    m
}

fn rot_x(a: f64) -> Mat4 {
    let (s, c) = a.sin_cos();
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, c, -s, 0.0],
        [0.0, s, c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

fn rot_y(a: f64) -> Mat4 {
    let (s, c) = a.sin_cos();
    [
        [c, 0.0, s, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-s, 0.0, c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

fn rot_z(a: f64) -> Mat4 {
    let (s, c) = a.sin_cos();
    [
        [c, -s, 0.0, 0.0],
        [s, c, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// Rodrigues' formula for a unit axis.
fn rot_axis(k: [f64; 3], a: f64) -> Mat4 {
    let (s, c) = a.sin_cos();
    let v = 1.0 - c;
    let [x, y, z] = k;
    [
        [c + x * x * v, x * y * v - z * s, x * z * v + y * s, 0.0],
        [y * x * v + z * s, c + y * y * v, y * z * v - x * s, 0.0],
        [z * x * v - y * s, z * y * v + x * s, c + z * z * v, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// World transform of every link frame.
pub fn oracle_frames(robot: &RobotModel, q: &[f64]) -> Vec<Mat4> {
    let mut t = identity();
    let mut frames = Vec::with_capacity(q.len());
    for (j, &v) in robot.joints().iter().zip(q) {
        let o = j.origin_translation;
        let [r, p, y] = j.origin_rpy;
        let origin = mul(
            &translation([o.x, o.y, o.z]),
            &mul(&rot_z(y), &mul(&rot_y(p), &rot_x(r))),
        );
        let axis = [j.axis.x, j.axis.y, j.axis.z];
        let motion = match j.kind {
            JointKind::Revolute => rot_axis(axis, v),
            JointKind::Prismatic => translation([axis[0] * v, axis[1] * v, axis[2] * v]),
        };
        t = mul(&t, &mul(&origin, &motion));
        frames.push(t);
    }
    frames
}

pub fn oracle_sphere_centers(robot: &RobotModel, q: &[f64]) -> Vec<[f64; 3]> {
    let frames = oracle_frames(robot, q);
    robot
        .spheres()
        .iter()
        .map(|s| {
            let m = &frames[s.link];
            let c = [s.center.x, s.center.y, s.center.z, 1.0];
            let mut out = [0.0; 3];
            for (i, o) in out.iter_mut().enumerate() {
                *o = (0..4).map(|k| m[i][k] * c[k]).sum();
            }
            out
        })
        .collect()
}

// --- brute-force collision -------------------------------------------------

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Distance from `p` to the nearest point of the solid obstacle (0 inside).
pub fn point_to_solid(p: [f64; 3], o: &Obstacle) -> f64 {
    let d = [p[0] - o.center.x, p[1] - o.center.y, p[2] - o.center.z];
    let (s, c) = o.yaw.sin_cos();
    // world offset rotated by -yaw
    let local = [c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]];
    match o.shape {
        Shape::Sphere { radius } => (norm(d) - radius).max(0.0),
        Shape::Box { half_extents } => {
            let h = [half_extents.x, half_extents.y, half_extents.z];
            let mut gap = [0.0; 3];
            for i in 0..3 {
                let nearest = local[i].clamp(-h[i], h[i]);
                gap[i] = local[i] - nearest;
            }
            norm(gap)
        }
        Shape::Cylinder {
            radius,
            half_height,
        } => {
            let r = (local[0] * local[0] + local[1] * local[1]).sqrt();
            let radial = (r - radius).max(0.0);
            let axial = (local[2].abs() - half_height).max(0.0);
            (radial * radial + axial * axial).sqrt()
        }
    }
}

/// Whether a sphere overlaps a solid obstacle. A sphere whose center lies
/// inside the solid always overlaps it; otherwise overlap means the nearest
/// point is strictly closer than the radius.
pub fn sphere_hits(center: [f64; 3], radius: f64, o: &Obstacle) -> bool {
    point_to_solid(center, o) < radius
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleStatus {
    Free,
    Limits,
    World(ShapeKind),
    SelfHit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Box,
    Cylinder,
    Sphere,
}

pub fn shape_kind(o: &Obstacle) -> ShapeKind {
    match o.shape {
        Shape::Box { .. } => ShapeKind::Box,
        Shape::Cylinder { .. } => ShapeKind::Cylinder,
        Shape::Sphere { .. } => ShapeKind::Sphere,
    }
}

/// Checks every joint limit, every sphere against every obstacle and every
/// non-adjacent, non-ignored sphere pair.
pub fn oracle_status(robot: &RobotModel, world: &WorldModel, q: &[f64]) -> OracleStatus {
    for (j, &v) in robot.joints().iter().zip(q) {
        if v < j.lower || v > j.upper {
            return OracleStatus::Limits;
        }
    }
    let centers = oracle_sphere_centers(robot, q);
    let spheres = robot.spheres();
    for (c, s) in centers.iter().zip(spheres) {
        for o in &world.obstacles {
            if sphere_hits(*c, s.radius, o) {
                return OracleStatus::World(shape_kind(o));
            }
        }
    }
    let ignored = robot.self_collision_ignored();
    for a in 0..spheres.len() {
        for b in a + 1..spheres.len() {
            if spheres[a].link.abs_diff(spheres[b].link) <= 1 || ignored.contains(&(a, b)) {
                continue;
            }
            let (ca, cb) = (centers[a], centers[b]);
            let d = norm([ca[0] - cb[0], ca[1] - cb[1], ca[2] - cb[2]]);
            if d < spheres[a].radius + spheres[b].radius {
                return OracleStatus::SelfHit;
            }
        }
    }
    OracleStatus::Free
}

// --- random robots and worlds ----------------------------------------------

fn unit<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.2 && n <= 1.0 {
            return v / n;
        }
    }
}

/// A serial chain with arbitrary joint axes and origin rotations.
pub fn random_robot<R: Rng>(rng: &mut R, dof: usize) -> RobotModel {
    let joints: Vec<JointSpec> = (0..dof)
        .map(|i| {
            let kind = if rng.gen_bool(0.2) {
                JointKind::Prismatic
            } else {
                JointKind::Revolute
            };
            let (lower, upper) = match kind {
                JointKind::Revolute => (-rng.gen_range(0.5..3.1), rng.gen_range(0.5..3.1)),
                JointKind::Prismatic => (-rng.gen_range(0.0..0.3), rng.gen_range(0.1..0.4)),
            };
            JointSpec {
                name: format!("j{i}"),
                kind,
                axis: unit(rng),
                origin_translation: Vector3::new(
                    rng.gen_range(-0.1..0.25),
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.1..0.2),
                ),
                origin_rpy: [
                    rng.gen_range(-3.1..3.1),
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(-3.1..3.1),
                ],
                lower,
                upper,
                weight: 1.0,
                resolution: 0.05,
            }
        })
        .collect();
    let mut spheres = Vec::new();
    for link in 0..dof {
        for _ in 0..rng.gen_range(1..=3) {
            spheres.push(CollisionSphere {
                link,
                center: Vector3::new(
                    rng.gen_range(-0.05..0.2),
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.05..0.05),
                ),
                radius: rng.gen_range(0.02..0.08),
            });
        }
    }
    let n = spheres.len();
    let ignored: Vec<(usize, usize)> = (0..rng.gen_range(0..4))
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
        .filter(|(a, b)| a != b)
        .collect();
    RobotModel::new(joints, spheres, ignored).unwrap()
}

/// Uniform within limits, with an occasional joint pushed just outside.
pub fn random_config<R: Rng>(rng: &mut R, robot: &RobotModel, p_outside: f64) -> Vec<f64> {
    robot
        .joints()
        .iter()
        .map(|j| {
            if rng.gen_bool(p_outside) {
                if rng.gen_bool(0.5) {
                    j.lower - rng.gen_range(1e-6..0.1)
                } else {
                    j.upper + rng.gen_range(1e-6..0.1)
                }
            } else {
                rng.gen_range(j.lower..=j.upper)
            }
        })
        .collect()
}

pub fn random_obstacle<R: Rng>(rng: &mut R, lo: [f64; 3], hi: [f64; 3], size: f64) -> Obstacle {
    let c = [
        rng.gen_range(lo[0]..hi[0]),
        rng.gen_range(lo[1]..hi[1]),
        rng.gen_range(lo[2]..hi[2]),
    ];
    let yaw = rng.gen_range(-3.2..3.2);
    match rng.gen_range(0..3) {
        0 => Obstacle::cuboid(
            c,
            [
                rng.gen_range(0.01..size),
                rng.gen_range(0.01..size),
                rng.gen_range(0.01..size),
            ],
            yaw,
        ),
        1 => Obstacle::cylinder(c, rng.gen_range(0.01..size), rng.gen_range(0.01..size), yaw),
        _ => Obstacle::sphere(c, rng.gen_range(0.01..size)),
    }
}

// --- exhaustive lattice search ---------------------------------------------

/// A small lattice planning instance with exactly representable costs.
#[derive(Debug, Clone)]
pub struct LatticeInstance {
    pub robot: RobotModel,
    pub world: WorldModel,
    pub start: Vec<i32>,
    pub goal: Vec<i32>,
    pub primitives: Vec<Vec<i32>>,
    pub edge_step: f64,
}

impl LatticeInstance {
    pub fn res(&self) -> Vec<f64> {
        self.robot.joints().iter().map(|j| j.resolution).collect()
    }

    pub fn cells(&self) -> Vec<i32> {
        self.robot
            .joints()
            .iter()
            .map(|j| ((j.upper - j.lower) / j.resolution).round() as i32 + 1)
            .collect()
    }

    pub fn decode(&self, s: &[i32]) -> Vec<f64> {
        self.robot
            .joints()
            .iter()
            .zip(s)
            .map(|(j, &c)| j.lower + c as f64 * j.resolution)
            .collect()
    }

    pub fn goal_spec(&self) -> GoalSpec {
        GoalSpec::exact(self.decode(&self.goal))
    }

    fn edge_cost(&self, d: &[i32]) -> f64 {
        self.robot
            .joints()
            .iter()
            .zip(d)
            .map(|(j, &k)| j.weight * (k as f64 * j.resolution).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Optimal start-to-goal cost over the lattice, `None` if unreachable.
    pub fn dijkstra(&self) -> Option<f64> {
        let cells = self.cells();
        let free = |s: &[i32]| {
            let q = self.decode(s);
            oracle_status(&self.robot, &self.world, &q) == OracleStatus::Free
        };
        if !free(&self.start) || !free(&self.goal) {
            return None;
        }
        // costs are multiples of 1/64, so order by integer ticks
        let ticks = |c: f64| (c * 64.0).round() as u64;
        let mut best: HashMap<Vec<i32>, f64> = HashMap::new();
        let mut heap = BinaryHeap::new();
        best.insert(self.start.clone(), 0.0);
        heap.push(Reverse((0u64, self.start.clone())));
        while let Some(Reverse((t, s))) = heap.pop() {
            let g = best[&s];
            if ticks(g) != t {
                continue;
            }
            if s == self.goal {
                return Some(g);
            }
            for p in &self.primitives {
                let n: Vec<i32> = s.iter().zip(p).map(|(a, b)| a + b).collect();
                if n.iter().zip(&cells).any(|(&c, &m)| c < 0 || c >= m) {
                    continue;
                }
                let ng = g + self.edge_cost(p);
                if best.get(&n).is_some_and(|&old| old <= ng) {
                    continue;
                }
                let ok = check_motion(
                    &self.robot,
                    &self.world,
                    &self.decode(&s),
                    &self.decode(&n),
                    self.edge_step,
                )
                .unwrap();
                if ok {
                    best.insert(n.clone(), ng);
                    heap.push(Reverse((ticks(ng), n)));
                }
            }
        }
        None
    }
}

/// Point robot on `[-1, 1]^dof` with dyadic resolutions and weights 1 or 4,
/// axis moves of one to three cells, and a few random obstacles. Start and
/// goal are distinct free lattice states.
pub fn random_lattice_instance<R: Rng>(rng: &mut R, dof: usize) -> LatticeInstance {
    let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let joints: Vec<JointSpec> = (0..dof)
        .map(|i| JointSpec {
            name: format!("j{i}"),
            kind: JointKind::Prismatic,
            axis: Vector3::from(axes[i]),
            origin_translation: Vector3::zeros(),
            origin_rpy: [0.0; 3],
            lower: -1.0,
            upper: 1.0,
            weight: if rng.gen_bool(0.3) { 4.0 } else { 1.0 },
            resolution: if dof == 2 || rng.gen_bool(0.5) {
                0.125
            } else {
                0.25
            },
        })
        .collect();
    let robot = RobotModel::new(
        joints,
        vec![CollisionSphere {
            link: dof - 1,
            center: Vector3::zeros(),
            radius: 0.05,
        }],
        [],
    )
    .unwrap();

    let hi_z = if dof == 3 { 1.0 } else { 0.05 };
    let obstacles = (0..rng.gen_range(3..10))
        .map(|_| random_obstacle(rng, [-1.0, -1.0, -hi_z], [1.0, 1.0, hi_z], 0.4))
        .collect();
    let world = WorldModel::new(obstacles);

    let mut primitives = Vec::new();
    for axis in 0..dof {
        for len in 1..=rng.gen_range(1..=3) {
            for sign in [-1, 1] {
                let mut p = vec![0; dof];
                p[axis] = sign * len;
                primitives.push(p);
            }
        }
    }

    let mut inst = LatticeInstance {
        robot,
        world,
        start: vec![0; dof],
        goal: vec![0; dof],
        primitives,
        edge_step: 0.05,
    };
    let cells = inst.cells();
    let pick = |rng: &mut R, inst: &LatticeInstance| loop {
        let s: Vec<i32> = cells.iter().map(|&m| rng.gen_range(0..m)).collect();
        let q = inst.decode(&s);
        if oracle_status(&inst.robot, &inst.world, &q) == OracleStatus::Free {
            return s;
        }
    };
    inst.start = pick(rng, &inst);
    loop {
        let g = pick(rng, &inst);
        if g != inst.start {
            inst.goal = g;
            break;
        }
    }
    inst
}
