use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{EvolveOptions, DENSE_LIMIT};
use crate::models::{build_jump_set, BoundaryBaths, Bath, Family, ModelSpec};

/// One unit of work in an experiment, in dependency order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Sectors,
    Steady,
    GibbsFit,
    Qdbc,
    Wdag,
    Fcs,
    Osee,
}

impl Task {
    pub const ALL: [Task; 7] = [
        Task::Sectors,
        Task::Steady,
        Task::GibbsFit,
        Task::Qdbc,
        Task::Wdag,
        Task::Fcs,
        Task::Osee,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Sectors => "sectors",
            Task::Steady => "steady",
            Task::GibbsFit => "gibbs-fit",
            Task::Qdbc => "qdbc",
            Task::Wdag => "wdag",
            Task::Fcs => "fcs",
            Task::Osee => "osee",
        }
    }

    pub fn parse(name: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Whether the task reads the steady state.
    pub fn needs_steady(self) -> bool {
        matches!(self, Task::Steady | Task::GibbsFit | Task::Qdbc | Task::Osee)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Dense,
    Evolve,
    #[default]
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub method: SolverMethod,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
}

fn default_tol() -> f64 {
    EvolveOptions::default().tol
}

fn default_max_steps() -> u64 {
    EvolveOptions::default().max_steps
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            tol: default_tol(),
            max_steps: default_max_steps(),
        }
    }
}

fn all_tasks() -> Vec<Task> {
    Task::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub bath: Bath,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "all_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Seeds the pair-flip couplings unless `model.params.coupling_seed` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, bath: Bath) -> Self {
        Self {
            model,
            bath,
            solver: SolverConfig::default(),
            tasks: all_tasks(),
            output_dir: None,
            seed: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The model with the top-level seed applied.
    pub fn model_spec(&self) -> ModelSpec {
        let mut spec = self.model.clone();
        if spec.params.coupling_seed.is_none() {
            spec.params.coupling_seed = self.seed;
        }
        spec
    }

    /// Tasks deduplicated and sorted into dependency order.
    pub fn ordered_tasks(&self) -> Vec<Task> {
        let mut tasks = self.tasks.clone();
        tasks.sort();
        tasks.dedup();
        tasks
    }

    pub fn dim(&self) -> usize {
        self.model.chain().dim()
    }

    /// `auto` resolves to dense when `d^N ≤ 100`.
    pub fn resolved_method(&self) -> SolverMethod {
        match self.solver.method {
            SolverMethod::Auto if self.dim() <= DENSE_LIMIT => SolverMethod::Dense,
            SolverMethod::Auto => SolverMethod::Evolve,
            m => m,
        }
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions {
            tol: self.solver.tol,
            max_steps: self.solver.max_steps,
            ..EvolveOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |e: Error| Error::InvalidConfig(e.to_string());
        let spec = self.model_spec();
        spec.validate().map_err(invalid)?;
        build_jump_set(&spec, &self.bath).map_err(invalid)?;
        if !(self.solver.tol > 0.0 && self.solver.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "solver.tol must be positive, got {}",
                self.solver.tol
            )));
        }
        if self.solver.max_steps == 0 {
            return Err(Error::InvalidConfig("solver.max_steps must be positive".into()));
        }
        if self.solver.method == SolverMethod::Dense && self.dim() > DENSE_LIMIT {
            return Err(invalid(Error::TooLargeForDense {
                dim: self.dim(),
                limit: DENSE_LIMIT,
            }));
        }
        let gibbs_tasks = self
            .tasks
            .iter()
            .any(|t| matches!(t, Task::GibbsFit | Task::Qdbc | Task::Fcs));
        if spec.family == Family::Fredkin
            && spec.n % 2 == 1
            && spec.params.boundary_baths == BoundaryBaths::Both
            && gibbs_tasks
        {
            return Err(invalid(Error::OddChain(spec.n)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FREDKIN: &str = r#"{
        "model": {"family": "fredkin", "n": 4},
        "bath": {"gamma1": 1.5, "gamma2": 0.5, "gamma3": 0.5, "gamma4": 1.5}
    }"#;

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::from_json(FREDKIN).unwrap();
        assert_eq!(cfg.tasks, Task::ALL.to_vec());
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.resolved_method(), SolverMethod::Dense);
    }

    #[test]
    fn auto_switches_to_evolve() {
        let text = FREDKIN.replace("\"n\": 4", "\"n\": 8");
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(cfg.resolved_method(), SolverMethod::Evolve);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = FREDKIN.replace("\"bath\"", "\"colour\": 1, \"bath\"");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::InvalidConfig(_))));
        let text = FREDKIN.replace("\"n\": 4", "\"n\": 4, \"sites\": 4");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::InvalidConfig(_))));
        let text = FREDKIN.replace("\"gamma1\"", "\"gamma5\": 1, \"gamma1\"");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn missing_rates_and_bad_solver_rejected() {
        let text = FREDKIN.replace("\"gamma4\": 1.5", "\"gamma4\": -1.0");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::InvalidConfig(_))));
        let text = FREDKIN.replace("}\n    }", "},\n \"solver\": {\"tol\": 0}\n}");
        assert!(ExperimentConfig::from_json(&text).is_err());
        let text = FREDKIN.replace("\"n\": 4", "\"n\": 8").replace(
            "\"bath\"",
            "\"solver\": {\"method\": \"dense\"}, \"bath\"",
        );
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn odd_fredkin_rejected_for_gibbs_tasks() {
        let text = FREDKIN.replace("\"n\": 4", "\"n\": 5");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::InvalidConfig(_))));
        let text = text.replace("\"bath\"", "\"tasks\": [\"sectors\", \"steady\"], \"bath\"");
        assert!(ExperimentConfig::from_json(&text).is_ok());
    }

    #[test]
    fn task_order_and_names() {
        let text = FREDKIN.replace("\"bath\"", "\"tasks\": [\"osee\", \"sectors\", \"osee\"], \"bath\"");
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(cfg.ordered_tasks(), vec![Task::Sectors, Task::Osee]);
        for t in Task::ALL {
            assert_eq!(Task::parse(t.name()), Some(t));
        }
    }

    #[test]
    fn seed_fills_coupling_seed() {
        let text = r#"{"model": {"family": "pairflip_spin1", "n": 3},
                       "bath": {"gamma1": 2, "gamma2": 1}, "seed": 9}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.model_spec().params.coupling_seed, Some(9));
    }

    #[test]
    fn roundtrip() {
        let cfg = ExperimentConfig::from_json(FREDKIN).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}
