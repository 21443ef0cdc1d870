//! Serial-chain robot model: joints with limits, a sphere-set collision body,
//! forward kinematics and the weighted configuration-space metric.

use std::collections::BTreeSet;
use std::ops::{Deref, Index};
use std::path::Path;

use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, read_file, Error, Result};

const AXIS_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    /// Rotation axis (revolute) or translation direction (prismatic), in the
    /// joint's origin frame.
    pub axis: Vector3<f64>,
    pub origin_translation: Vector3<f64>,
    /// Roll, pitch, yaw of the fixed origin transform.
    pub origin_rpy: [f64; 3],
    pub lower: f64,
    pub upper: f64,
    pub weight: f64,
    /// Lattice cell width used by the search planner.
    pub resolution: f64,
}

impl JointSpec {
    fn validate(&self) -> Result<()> {
        let name = &self.name;
        if !(self.lower < self.upper) {
            return Err(Error::validation(format!(
                "joint {name}: lower limit {} must be below upper limit {}",
                self.lower, self.upper
            )));
        }
        if (self.axis.norm() - 1.0).abs() > AXIS_NORM_TOL {
            return Err(Error::validation(format!(
                "joint {name}: axis must have unit norm (got {})",
                self.axis.norm()
            )));
        }
        if !(self.weight > 0.0) {
            return Err(Error::validation(format!(
                "joint {name}: weight must be positive"
            )));
        }
        if !(self.resolution > 0.0) || self.resolution > self.upper - self.lower {
            return Err(Error::validation(format!(
                "joint {name}: resolution must be in (0, upper - lower]"
            )));
        }
        Ok(())
    }

    fn origin(&self) -> Isometry3<f64> {
        let [roll, pitch, yaw] = self.origin_rpy;
        Isometry3::from_parts(
            Translation3::from(self.origin_translation),
            UnitQuaternion::from_euler_angles(roll, pitch, yaw),
        )
    }

    fn motion(&self, value: f64) -> Isometry3<f64> {
        match self.kind {
            JointKind::Revolute => Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_axis_angle(&Unit::new_unchecked(self.axis), value),
            ),
            JointKind::Prismatic => Isometry3::from_parts(
                Translation3::from(self.axis * value),
                UnitQuaternion::identity(),
            ),
        }
    }
}

/// A collision sphere rigidly attached to the frame after joint `link`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionSphere {
    pub link: usize,
    pub center: Vector3<f64>,
    pub radius: f64,
}

/// A collision sphere placed in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedSphere {
    pub center: Vector3<f64>,
    pub radius: f64,
}

/// Joint values, one per degree of freedom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<f64>);

impl Configuration {
    pub fn new(values: Vec<f64>) -> Self {
        Configuration(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(v: Vec<f64>) -> Self {
        Configuration(v)
    }
}

impl From<&[f64]> for Configuration {
    fn from(v: &[f64]) -> Self {
        Configuration(v.to_vec())
    }
}

impl Deref for Configuration {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Configuration {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone)]
pub struct RobotModel {
    joints: Vec<JointSpec>,
    spheres: Vec<CollisionSphere>,
    ignored: BTreeSet<(usize, usize)>,
    origins: Vec<Isometry3<f64>>,
    self_pairs: Vec<(usize, usize)>,
}

impl RobotModel {
    /// Builds and validates a robot. Ignored pairs are stored unordered.
    pub fn new(
        joints: Vec<JointSpec>,
        spheres: Vec<CollisionSphere>,
        self_collision_ignored: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::validation("robot needs at least one joint"));
        }
        for j in &joints {
            j.validate()?;
        }
        for (i, s) in spheres.iter().enumerate() {
            if s.link >= joints.len() {
                return Err(Error::validation(format!(
                    "sphere {i}: link index {} out of range (robot has {} joints)",
                    s.link,
                    joints.len()
                )));
            }
            if !(s.radius > 0.0) {
                return Err(Error::validation(format!(
                    "sphere {i}: radius must be positive"
                )));
            }
        }
        let mut ignored = BTreeSet::new();
        for (a, b) in self_collision_ignored {
            if a >= spheres.len() || b >= spheres.len() {
                return Err(Error::validation(format!(
                    "self-collision ignore pair ({a}, {b}) references a missing sphere"
                )));
            }
            ignored.insert((a.min(b), a.max(b)));
        }

        let origins = joints.iter().map(JointSpec::origin).collect();
        let mut self_pairs = Vec::new();
        for a in 0..spheres.len() {
            for b in a + 1..spheres.len() {
                if spheres[a].link.abs_diff(spheres[b].link) <= 1 || ignored.contains(&(a, b)) {
                    continue;
                }
                self_pairs.push((a, b));
            }
        }

        Ok(RobotModel {
            joints,
            spheres,
            ignored,
            origins,
            self_pairs,
        })
    }

    pub fn from_yaml_str(text: &str) -> Result<Self> {
        let doc: RobotDoc = serde_yaml::from_str(text)?;
        doc.into_model()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_yaml_str(&read_file(path)?)
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn spheres(&self) -> &[CollisionSphere] {
        &self.spheres
    }

    pub fn self_collision_ignored(&self) -> &BTreeSet<(usize, usize)> {
        &self.ignored
    }

    /// Sphere pairs tested for self-collision: everything except pairs on the
    /// same or chain-adjacent links and explicitly ignored pairs. Each pair is
    /// `(a, b)` with `a < b`.
    pub fn self_collision_pairs(&self) -> &[(usize, usize)] {
        &self.self_pairs
    }

    pub fn check_dim(&self, q: &[f64]) -> Result<()> {
        check_dim(self.dof(), q.len())
    }

    /// Places every collision sphere in the world frame.
    pub fn forward_kinematics(&self, q: &[f64]) -> Result<Vec<PlacedSphere>> {
        self.check_dim(q)?;
        let mut out = Vec::with_capacity(self.spheres.len());
        self.place_spheres(q, &mut out);
        Ok(out)
    }

    /// World frame of every link (frame after each joint's motion).
    pub fn link_frames(&self, q: &[f64]) -> Result<Vec<Isometry3<f64>>> {
        self.check_dim(q)?;
        let mut frames = Vec::with_capacity(self.dof());
        let mut frame = Isometry3::identity();
        for ((joint, origin), &value) in self.joints.iter().zip(&self.origins).zip(q) {
            frame = frame * origin * joint.motion(value);
            frames.push(frame);
        }
        Ok(frames)
    }

    /// Unchecked FK into a reusable buffer. `q.len()` must equal `dof()`.
    pub(crate) fn place_spheres(&self, q: &[f64], out: &mut Vec<PlacedSphere>) {
        debug_assert_eq!(q.len(), self.dof());
        out.clear();
        let mut frame = Isometry3::identity();
        let mut next = 0;
        // spheres are not required to be sorted by link, so compute frames first
        // when they are not.
        if self.spheres.windows(2).all(|w| w[0].link <= w[1].link) {
            for (link, ((joint, origin), &value)) in
                self.joints.iter().zip(&self.origins).zip(q).enumerate()
            {
                frame = frame * origin * joint.motion(value);
                while next < self.spheres.len() && self.spheres[next].link == link {
                    let s = &self.spheres[next];
                    out.push(PlacedSphere {
                        center: (frame * Point3::from(s.center)).coords,
                        radius: s.radius,
                    });
                    next += 1;
                }
            }
        } else {
            let frames = self.link_frames(q).expect("dimension checked by caller");
            out.extend(self.spheres.iter().map(|s| PlacedSphere {
                center: (frames[s.link] * Point3::from(s.center)).coords,
                radius: s.radius,
            }));
        }
    }

    /// Weighted Euclidean distance `sqrt(sum_i w_i (a_i - b_i)^2)`.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.distance_unchecked(a, b))
    }

    pub(crate) fn distance_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        self.joints
            .iter()
            .zip(a.iter().zip(b))
            .map(|(j, (x, y))| j.weight * (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Per-joint linear interpolation; `t = 0` yields `a` and `t = 1` yields `b`
    /// exactly.
    pub fn interpolate(&self, a: &[f64], b: &[f64], t: f64) -> Result<Configuration> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::contract(format!(
                "interpolation parameter {t} outside [0, 1]"
            )));
        }
        Ok(Configuration(lerp(a, b, t)))
    }

    pub fn within_limits(&self, q: &[f64]) -> Result<bool> {
        self.check_dim(q)?;
        Ok(self.first_limit_violation(q).is_none())
    }

    pub(crate) fn first_limit_violation(&self, q: &[f64]) -> Option<usize> {
        self.joints
            .iter()
            .zip(q)
            .position(|(j, &v)| !(j.lower <= v && v <= j.upper))
    }

    /// Draws each joint independently and uniformly within its limits.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        Configuration(
            self.joints
                .iter()
                .map(|j| rng.gen_range(j.lower..=j.upper))
                .collect(),
        )
    }

    /// Clamps each value into its joint interval.
    pub fn clamp_to_limits(&self, q: &[f64]) -> Configuration {
        Configuration(
            self.joints
                .iter()
                .zip(q)
                .map(|(j, &v)| v.clamp(j.lower, j.upper))
                .collect(),
        )
    }
}

pub(crate) fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| (1.0 - t) * x + t * y)
        .collect()
}

// --- robot file ------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotDoc {
    joints: Vec<JointDoc>,
    #[serde(default)]
    collision_spheres: Vec<SphereDoc>,
    #[serde(default)]
    self_collision_ignore: Vec<[usize; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    name: String,
    #[serde(rename = "type")]
    kind: JointKind,
    axis: [f64; 3],
    #[serde(default)]
    origin_xyz: [f64; 3],
    #[serde(default)]
    origin_rpy: [f64; 3],
    limits: [f64; 2],
    #[serde(default = "default_weight")]
    weight: f64,
    resolution: f64,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SphereDoc {
    link: usize,
    center: [f64; 3],
    radius: f64,
}

impl RobotDoc {
    fn into_model(self) -> Result<RobotModel> {
        let joints = self
            .joints
            .into_iter()
            .map(|j| JointSpec {
                name: j.name,
                kind: j.kind,
                axis: Vector3::from(j.axis),
                origin_translation: Vector3::from(j.origin_xyz),
                origin_rpy: j.origin_rpy,
                lower: j.limits[0],
                upper: j.limits[1],
                weight: j.weight,
                resolution: j.resolution,
            })
            .collect();
        let spheres = self
            .collision_spheres
            .into_iter()
            .map(|s| CollisionSphere {
                link: s.link,
                center: Vector3::from(s.center),
                radius: s.radius,
            })
            .collect();
        RobotModel::new(
            joints,
            spheres,
            self.self_collision_ignore.into_iter().map(|[a, b]| (a, b)),
        )
    }
}
