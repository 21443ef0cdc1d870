//! Planner parameter file: a `common` section plus `rrt_connect` and
//! `ara_star` sections. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::collision::DEFAULT_EDGE_STEP;
use crate::error::{read_file, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RrtParams {
    /// Maximum extension length, in weighted configuration units.
    pub step_eta: f64,
    pub edge_step: f64,
    /// `None` means budget-limited only.
    pub max_iterations: Option<u64>,
    pub seed: u64,
}

impl Default for RrtParams {
    fn default() -> Self {
        RrtParams {
            step_eta: 0.5,
            edge_step: DEFAULT_EDGE_STEP,
            max_iterations: None,
            seed: 0,
        }
    }
}

impl RrtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.edge_step > 0.0) {
            return Err(Error::validation("rrt_connect.edge_step must be positive"));
        }
        if !(self.step_eta >= self.edge_step) {
            return Err(Error::validation(
                "rrt_connect.step_eta must be >= edge_step",
            ));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::validation(
                "rrt_connect.max_iterations must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AraParams {
    /// Strictly decreasing inflation factors, all >= 1.
    pub epsilon_schedule: Vec<f64>,
    pub edge_step: f64,
    pub seed: u64,
    /// Fraction of the budget given to the forward attempt.
    pub budget_split: f64,
    /// Keep lowering the inflation after the first solution. When false the
    /// search returns as soon as any solution is found.
    pub improve_solution: bool,
}

impl Default for AraParams {
    fn default() -> Self {
        AraParams {
            epsilon_schedule: vec![3.0, 2.0, 1.5, 1.0],
            edge_step: DEFAULT_EDGE_STEP,
            seed: 0,
            budget_split: 0.5,
            improve_solution: true,
        }
    }
}

impl AraParams {
    pub fn validate(&self) -> Result<()> {
        let s = &self.epsilon_schedule;
        if s.is_empty() {
            return Err(Error::validation(
                "ara_star.epsilon_schedule must not be empty",
            ));
        }
        if s.iter().any(|&e| !(e >= 1.0) || !e.is_finite()) {
            return Err(Error::validation(
                "ara_star.epsilon_schedule entries must be >= 1",
            ));
        }
        if s.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::validation(
                "ara_star.epsilon_schedule must be strictly decreasing",
            ));
        }
        if !(self.edge_step > 0.0) {
            return Err(Error::validation("ara_star.edge_step must be positive"));
        }
        if !(self.budget_split > 0.0 && self.budget_split < 1.0) {
            return Err(Error::validation("ara_star.budget_split must be in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    pub edge_step: f64,
    /// Lower bound applied to every config-goal tolerance.
    pub goal_tolerance_default: f64,
    pub seed: u64,
    pub rrt_connect: RrtParams,
    pub ara_star: AraParams,
    /// Extra motion primitives, resolved against the params file directory.
    pub primitives_file: Option<PathBuf>,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            edge_step: DEFAULT_EDGE_STEP,
            goal_tolerance_default: 0.0,
            seed: 0,
            rrt_connect: RrtParams::default(),
            ara_star: AraParams::default(),
            primitives_file: None,
        }
    }
}

impl PlannerParams {
    pub fn from_yaml_str(text: &str) -> Result<Self> {
        Self::from_doc(serde_yaml::from_str(text)?, None)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let doc: ParamsDoc = serde_yaml::from_str(&read_file(path)?)?;
        Self::from_doc(doc, path.parent())
    }

    /// Replaces every seed with `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.rrt_connect.seed = seed;
        self.ara_star.seed = seed;
        self
    }

    fn from_doc(doc: ParamsDoc, base_dir: Option<&Path>) -> Result<Self> {
        let common = doc.common.unwrap_or_default();
        let edge_step = common.edge_step.unwrap_or(DEFAULT_EDGE_STEP);
        let seed = common.seed.unwrap_or(0);
        let goal_tolerance_default = common.goal_tolerance_default.unwrap_or(0.0);
        if !(goal_tolerance_default >= 0.0) {
            return Err(Error::validation(
                "common.goal_tolerance_default must be >= 0",
            ));
        }

        let rrt = doc.rrt_connect.unwrap_or_default();
        let rrt_connect = RrtParams {
            step_eta: rrt.step_eta.unwrap_or(RrtParams::default().step_eta),
            edge_step: rrt.edge_step.unwrap_or(edge_step),
            max_iterations: rrt.max_iterations,
            seed: rrt.seed.unwrap_or(seed),
        };
        rrt_connect.validate()?;

        let ara = doc.ara_star.unwrap_or_default();
        let defaults = AraParams::default();
        let ara_star = AraParams {
            epsilon_schedule: ara.epsilon_schedule.unwrap_or(defaults.epsilon_schedule),
            edge_step: ara.edge_step.unwrap_or(edge_step),
            seed: ara.seed.unwrap_or(seed),
            budget_split: ara.budget_split.unwrap_or(defaults.budget_split),
            improve_solution: ara.improve_solution.unwrap_or(defaults.improve_solution),
        };
        ara_star.validate()?;

        let primitives_file = ara.primitives.map(|p| match base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        });

        Ok(PlannerParams {
            edge_step,
            goal_tolerance_default,
            seed,
            rrt_connect,
            ara_star,
            primitives_file,
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    common: Option<CommonDoc>,
    rrt_connect: Option<RrtDoc>,
    ara_star: Option<AraDoc>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommonDoc {
    edge_step: Option<f64>,
    goal_tolerance_default: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RrtDoc {
    step_eta: Option<f64>,
    edge_step: Option<f64>,
    max_iterations: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AraDoc {
    epsilon_schedule: Option<Vec<f64>>,
    edge_step: Option<f64>,
    seed: Option<u64>,
    budget_split: Option<f64>,
    improve_solution: Option<bool>,
    primitives: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let p = PlannerParams::from_yaml_str("{}").unwrap();
        assert_eq!(p, PlannerParams::default());
        assert_eq!(p.ara_star.epsilon_schedule, vec![3.0, 2.0, 1.5, 1.0]);
        assert_eq!(p.rrt_connect.step_eta, 0.5);
        assert_eq!(p.rrt_connect.edge_step, 0.05);
    }

    #[test]
    fn common_values_flow_into_sections() {
        let p = PlannerParams::from_yaml_str(
            "common: {edge_step: 0.02, seed: 9}\nrrt_connect: {step_eta: 0.3}\nara_star: {edge_step: 0.04, primitives: prims.yaml}\n",
        )
        .unwrap();
        assert_eq!(p.rrt_connect.edge_step, 0.02);
        assert_eq!(p.rrt_connect.seed, 9);
        assert_eq!(p.ara_star.edge_step, 0.04);
        assert_eq!(p.ara_star.seed, 9);
        assert_eq!(p.primitives_file, Some(PathBuf::from("prims.yaml")));
        let p = p.with_seed(4);
        assert_eq!((p.seed, p.rrt_connect.seed, p.ara_star.seed), (4, 4, 4));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PlannerParams::from_yaml_str("common: {edge_stp: 0.1}\n").is_err());
        assert!(PlannerParams::from_yaml_str("rrt_connect: {range: 0.1}\n").is_err());
        assert!(PlannerParams::from_yaml_str("prm: {}\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "ara_star: {epsilon_schedule: []}",
            "ara_star: {epsilon_schedule: [2.0, 2.0]}",
            "ara_star: {epsilon_schedule: [1.5, 0.5]}",
            "ara_star: {epsilon_schedule: [1.0, 2.0]}",
            "ara_star: {budget_split: 1.0}",
            "rrt_connect: {step_eta: 0.01, edge_step: 0.05}",
            "rrt_connect: {max_iterations: 0}",
            "common: {edge_step: 0}",
            "common: {goal_tolerance_default: -1}",
        ] {
            assert!(
                PlannerParams::from_yaml_str(text).is_err(),
                "accepted {text}"
            );
        }
    }
}
