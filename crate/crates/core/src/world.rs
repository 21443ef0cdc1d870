//! Obstacle world, planning scenarios and their file format, and generation
//! of shelf-style scenario variations.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, read_file, Error, Result};
use crate::robot::{Configuration, RobotModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Box {
        half_extents: Vector3<f64>,
    },
    /// Axis along the obstacle's local z.
    Cylinder {
        radius: f64,
        half_height: f64,
    },
    Sphere {
        radius: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub shape: Shape,
    pub center: Vector3<f64>,
    /// Rotation about world z. Ignored for spheres.
    pub yaw: f64,
}

impl Obstacle {
    pub fn sphere(center: [f64; 3], radius: f64) -> Self {
        Obstacle {
            shape: Shape::Sphere { radius },
            center: center.into(),
            yaw: 0.0,
        }
    }

    pub fn cuboid(center: [f64; 3], half_extents: [f64; 3], yaw: f64) -> Self {
        Obstacle {
            shape: Shape::Box {
                half_extents: half_extents.into(),
            },
            center: center.into(),
            yaw,
        }
    }

    pub fn cylinder(center: [f64; 3], radius: f64, half_height: f64, yaw: f64) -> Self {
        Obstacle {
            shape: Shape::Cylinder {
                radius,
                half_height,
            },
            center: center.into(),
            yaw,
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let sizes_ok = match self.shape {
            Shape::Box { half_extents } => half_extents.iter().all(|&h| h > 0.0 && h.is_finite()),
            Shape::Cylinder {
                radius,
                half_height,
            } => radius > 0.0 && half_height > 0.0 && radius.is_finite() && half_height.is_finite(),
            Shape::Sphere { radius } => radius > 0.0 && radius.is_finite(),
        };
        if !sizes_ok {
            return Err(Error::validation(format!(
                "obstacle {index}: all size parameters must be positive and finite"
            )));
        }
        if !self.center.iter().all(|c| c.is_finite()) || !self.yaw.is_finite() {
            return Err(Error::validation(format!(
                "obstacle {index}: non-finite pose"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorldModel {
    pub obstacles: Vec<Obstacle>,
}

impl WorldModel {
    pub fn new(obstacles: Vec<Obstacle>) -> Self {
        WorldModel { obstacles }
    }

    pub fn empty() -> Self {
        WorldModel::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GoalSpec {
    /// Satisfied when every joint is within `tolerance[i]` of `target[i]`.
    Config {
        target: Configuration,
        tolerance: Vec<f64>,
    },
    /// Satisfied inside the closed box `[lower, upper]`.
    Region {
        lower: Configuration,
        upper: Configuration,
    },
}

impl GoalSpec {
    pub fn config(target: impl Into<Configuration>, tolerance: Vec<f64>) -> Self {
        GoalSpec::Config {
            target: target.into(),
            tolerance,
        }
    }

    pub fn exact(target: impl Into<Configuration>) -> Self {
        let target = target.into();
        let tolerance = vec![0.0; target.len()];
        GoalSpec::Config { target, tolerance }
    }

    pub fn region(lower: impl Into<Configuration>, upper: impl Into<Configuration>) -> Self {
        GoalSpec::Region {
            lower: lower.into(),
            upper: upper.into(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GoalSpec::Config { target, .. } => target.len(),
            GoalSpec::Region { lower, .. } => lower.len(),
        }
    }

    /// Closed per-joint box of goal-satisfying values.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            GoalSpec::Config { target, tolerance } => (
                target.iter().zip(tolerance).map(|(t, e)| t - e).collect(),
                target.iter().zip(tolerance).map(|(t, e)| t + e).collect(),
            ),
            GoalSpec::Region { lower, upper } => (lower.to_vec(), upper.to_vec()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            GoalSpec::Config { target, tolerance } => {
                check_dim(target.len(), tolerance.len())?;
                if tolerance.iter().any(|&t| !(t >= 0.0)) {
                    return Err(Error::validation("goal tolerance entries must be >= 0"));
                }
                if target.iter().any(|v| !v.is_finite()) {
                    return Err(Error::validation("goal target must be finite"));
                }
            }
            GoalSpec::Region { lower, upper } => {
                check_dim(lower.len(), upper.len())?;
                if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
                    return Err(Error::validation(
                        "goal region needs lower <= upper per joint",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Ranges used by [`generate_variations`]. Shelf and object obstacles are
/// identified by their position in the world's obstacle list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationSpec {
    /// Half-widths of the uniform x and y jitter applied to each object.
    #[serde(default = "default_jitter")]
    pub object_jitter_xy: [f64; 2],
    /// Half-width of the uniform z shift of shelf and contents.
    #[serde(default = "default_height")]
    pub height_range: f64,
    /// Half-width, in degrees, of the uniform rotation of shelf and contents
    /// about the robot base z axis.
    #[serde(default = "default_yaw_deg")]
    pub yaw_range_deg: f64,
    #[serde(default)]
    pub shelf_indices: Vec<usize>,
    #[serde(default)]
    pub object_indices: Vec<usize>,
}

fn default_jitter() -> [f64; 2] {
    [0.1, 0.1]
}
fn default_height() -> f64 {
    0.15
}
fn default_yaw_deg() -> f64 {
    30.0
}

impl Default for VariationSpec {
    fn default() -> Self {
        VariationSpec {
            object_jitter_xy: default_jitter(),
            height_range: default_height(),
            yaw_range_deg: default_yaw_deg(),
            shelf_indices: Vec::new(),
            object_indices: Vec::new(),
        }
    }
}

impl VariationSpec {
    fn validate(&self, n_obstacles: usize) -> Result<()> {
        let ranges = [
            self.object_jitter_xy[0],
            self.object_jitter_xy[1],
            self.height_range,
            self.yaw_range_deg,
        ];
        if ranges.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::validation(
                "variation ranges must be finite and >= 0",
            ));
        }
        for &i in self.shelf_indices.iter().chain(&self.object_indices) {
            if i >= n_obstacles {
                return Err(Error::validation(format!(
                    "variation references obstacle {i}, world has {n_obstacles}"
                )));
            }
        }
        if self
            .shelf_indices
            .iter()
            .any(|i| self.object_indices.contains(i))
        {
            return Err(Error::validation(
                "an obstacle cannot be both shelf and object",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// As written in the file; relative paths resolve against the scenario's
    /// directory.
    pub robot_file: PathBuf,
    pub start: Configuration,
    pub goal: GoalSpec,
    pub world: WorldModel,
    /// Seconds.
    pub time_budget: f64,
    pub variation: Option<VariationSpec>,
}

impl Scenario {
    /// Checks dimensions and the goal region against a robot.
    pub fn check_robot(&self, robot: &RobotModel) -> Result<()> {
        let n = robot.dof();
        if self.start.len() != n {
            return Err(Error::validation(format!(
                "scenario {}: start has {} values, robot has {n} joints",
                self.name,
                self.start.len()
            )));
        }
        if self.goal.dim() != n {
            return Err(Error::validation(format!(
                "scenario {}: goal has {} values, robot has {n} joints",
                self.name,
                self.goal.dim()
            )));
        }
        if let GoalSpec::Region { lower, upper } = &self.goal {
            for (i, j) in robot.joints().iter().enumerate() {
                if upper[i] < j.lower || lower[i] > j.upper {
                    return Err(Error::validation(format!(
                        "scenario {}: goal region misses the limits of joint {i}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Robot file path resolved against `scenario_dir`.
    pub fn robot_path(&self, scenario_dir: &Path) -> PathBuf {
        if self.robot_file.is_absolute() {
            self.robot_file.clone()
        } else {
            scenario_dir.join(&self.robot_file)
        }
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(&ScenarioDoc::from(self))
            .expect("scenario documents always serialize")
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::validation("scenario name must not be empty"));
        }
        if self.start.is_empty() {
            return Err(Error::validation("start configuration is empty"));
        }
        if self.start.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("start configuration must be finite"));
        }
        self.goal.validate()?;
        check_dim(self.start.len(), self.goal.dim())?;
        if !(self.time_budget > 0.0) || !self.time_budget.is_finite() {
            return Err(Error::validation("time_budget_s must be positive"));
        }
        for (i, o) in self.world.obstacles.iter().enumerate() {
            o.validate(i)?;
        }
        if let Some(v) = &self.variation {
            v.validate(self.world.obstacles.len())?;
        }
        Ok(())
    }
}

/// Parses and validates a scenario document. Robot-dependent checks are done
/// by [`Scenario::check_robot`].
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_yaml::from_str(text)?;
    let scenario = doc.try_into_scenario()?;
    scenario.validate()?;
    Ok(scenario)
}

/// A scenario together with its resolved robot.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub path: PathBuf,
    pub scenario: Scenario,
    pub robot: RobotModel,
}

/// Loads a scenario file and its robot, checking them against each other.
pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let scenario = parse_scenario(&read_file(path)?)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let robot = RobotModel::load(&scenario.robot_path(dir))?;
    scenario.check_robot(&robot)?;
    Ok(LoadedScenario {
        path: path.to_path_buf(),
        scenario,
        robot,
    })
}

/// As [`load_scenario`] but without [`Scenario::check_robot`], so a mismatch
/// can be reported later (the benchmark harness records it per run).
pub fn load_scenario_unchecked(path: &Path) -> Result<LoadedScenario> {
    let scenario = parse_scenario(&read_file(path)?)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let robot = RobotModel::load(&scenario.robot_path(dir))?;
    Ok(LoadedScenario {
        path: path.to_path_buf(),
        scenario,
        robot,
    })
}

// --- variations ------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationFamily {
    /// Objects move, shelf stays.
    ObjectsOnly,
    /// Objects move; shelf and contents shift in z.
    PlusHeight,
    /// As `PlusHeight`, then shelf and contents rotate about the base z axis.
    PlusRotation,
}

/// Generates `count` perturbed copies of `base` (named `<base>_<iii>`).
///
/// Every variation draws the same random quantities in the same order
/// whatever the family, so equal seeds give nested perturbations across
/// families. Start and goal are never changed.
pub fn generate_variations(
    base: &Scenario,
    family: VariationFamily,
    count: usize,
    seed: u64,
) -> Result<Vec<Scenario>> {
    if count < 1 {
        return Err(Error::contract("variation count must be at least 1"));
    }
    let spec = base
        .variation
        .as_ref()
        .ok_or_else(|| Error::contract(format!("scenario {} has no variation block", base.name)))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sym = |half: f64| half * (2.0 * rng.gen::<f64>() - 1.0);

    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let jitters: Vec<(f64, f64)> = spec
            .object_indices
            .iter()
            .map(|_| (sym(spec.object_jitter_xy[0]), sym(spec.object_jitter_xy[1])))
            .collect();
        let dz = sym(spec.height_range);
        let dyaw = sym(spec.yaw_range_deg.to_radians());

        let mut scenario = base.clone();
        scenario.name = format!("{}_{:03}", base.name, i);
        let obstacles = &mut scenario.world.obstacles;
        for (&idx, (jx, jy)) in spec.object_indices.iter().zip(jitters) {
            obstacles[idx].center.x += jx;
            obstacles[idx].center.y += jy;
        }
        let group = spec.shelf_indices.iter().chain(&spec.object_indices);
        if family != VariationFamily::ObjectsOnly {
            for &idx in group.clone() {
                obstacles[idx].center.z += dz;
            }
        }
        if family == VariationFamily::PlusRotation {
            let (s, c) = dyaw.sin_cos();
            for &idx in group {
                let o = &mut obstacles[idx];
                let (x, y) = (o.center.x, o.center.y);
                o.center.x = c * x - s * y;
                o.center.y = s * x + c * y;
                if !matches!(o.shape, Shape::Sphere { .. }) {
                    o.yaw += dyaw;
                }
            }
        }
        out.push(scenario);
    }
    Ok(out)
}

// --- file format -----------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: String,
    robot: PathBuf,
    start: Vec<f64>,
    goal: GoalDoc,
    #[serde(default)]
    world: WorldDoc,
    time_budget_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variation: Option<VariationSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum GoalDoc {
    Config {
        target: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<Vec<f64>>,
    },
    Region {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldDoc {
    #[serde(default)]
    obstacles: Vec<ObstacleDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleDoc {
    shape: String,
    center: [f64; 3],
    #[serde(default)]
    yaw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    half_extents: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    half_height: Option<f64>,
}

impl ObstacleDoc {
    fn into_obstacle(self, index: usize) -> Result<Obstacle> {
        let missing = |key: &str| {
            Error::validation(format!(
                "obstacle {index} ({}): missing `{key}`",
                self.shape
            ))
        };
        let unexpected = |key: &str| {
            Error::validation(format!(
                "obstacle {index} ({}): unexpected `{key}`",
                self.shape
            ))
        };
        let shape = match self.shape.as_str() {
            "box" => {
                if self.radius.is_some() {
                    return Err(unexpected("radius"));
                }
                if self.half_height.is_some() {
                    return Err(unexpected("half_height"));
                }
                Shape::Box {
                    half_extents: self
                        .half_extents
                        .ok_or_else(|| missing("half_extents"))?
                        .into(),
                }
            }
            "cylinder" => {
                if self.half_extents.is_some() {
                    return Err(unexpected("half_extents"));
                }
                Shape::Cylinder {
                    radius: self.radius.ok_or_else(|| missing("radius"))?,
                    half_height: self.half_height.ok_or_else(|| missing("half_height"))?,
                }
            }
            "sphere" => {
                if self.half_extents.is_some() {
                    return Err(unexpected("half_extents"));
                }
                if self.half_height.is_some() {
                    return Err(unexpected("half_height"));
                }
                Shape::Sphere {
                    radius: self.radius.ok_or_else(|| missing("radius"))?,
                }
            }
            other => {
                return Err(Error::validation(format!(
                    "obstacle {index}: unknown shape `{other}`"
                )))
            }
        };
        Ok(Obstacle {
            shape,
            center: self.center.into(),
            yaw: self.yaw,
        })
    }
}

impl From<&Obstacle> for ObstacleDoc {
    fn from(o: &Obstacle) -> Self {
        let mut doc = ObstacleDoc {
            shape: String::new(),
            center: o.center.into(),
            yaw: o.yaw,
            half_extents: None,
            radius: None,
            half_height: None,
        };
        match o.shape {
            Shape::Box { half_extents } => {
                doc.shape = "box".into();
                doc.half_extents = Some(half_extents.into());
            }
            Shape::Cylinder {
                radius,
                half_height,
            } => {
                doc.shape = "cylinder".into();
                doc.radius = Some(radius);
                doc.half_height = Some(half_height);
            }
            Shape::Sphere { radius } => {
                doc.shape = "sphere".into();
                doc.radius = Some(radius);
            }
        }
        doc
    }
}

impl ScenarioDoc {
    fn try_into_scenario(self) -> Result<Scenario> {
        let goal = match self.goal {
            GoalDoc::Config { target, tolerance } => {
                let tolerance = tolerance.unwrap_or_else(|| vec![0.0; target.len()]);
                GoalSpec::config(target, tolerance)
            }
            GoalDoc::Region { lower, upper } => GoalSpec::region(lower, upper),
        };
        let obstacles = self
            .world
            .obstacles
            .into_iter()
            .enumerate()
            .map(|(i, o)| o.into_obstacle(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario {
            name: self.name,
            robot_file: self.robot,
            start: Configuration::new(self.start),
            goal,
            world: WorldModel::new(obstacles),
            time_budget: self.time_budget_s,
            variation: self.variation,
        })
    }
}

impl From<&Scenario> for ScenarioDoc {
    fn from(s: &Scenario) -> Self {
        let goal = match &s.goal {
            GoalSpec::Config { target, tolerance } => GoalDoc::Config {
                target: target.to_vec(),
                tolerance: Some(tolerance.clone()),
            },
            GoalSpec::Region { lower, upper } => GoalDoc::Region {
                lower: lower.to_vec(),
                upper: upper.to_vec(),
            },
        };
        ScenarioDoc {
            name: s.name.clone(),
            robot: s.robot_file.clone(),
            start: s.start.to_vec(),
            goal,
            world: WorldDoc {
                obstacles: s.world.obstacles.iter().map(ObstacleDoc::from).collect(),
            },
            time_budget_s: s.time_budget,
            variation: s.variation.clone(),
        }
    }
}
