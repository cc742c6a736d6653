//! Experiment configuration files.
//!
//! A config is one JSON document:
//!
//! ```json
//! {
//!   "experiment": "thm2-p2",
//!   "seed": 7,
//!   "trials": 200,
//!   "output_dir": "out/thm2-p2",
//!   "emit": ["csv", "json", "svg"]
//! }
//! ```
//!
//! `experiment` is either a preset name or an object
//! `{"stream": .., "learner": .., "analysis": ..}`. Unknown keys are rejected
//! everywhere.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use schatten_core::learners::StepSize;
use schatten_core::streams::StreamSpec;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{CliError, CliResult};
use crate::presets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerSpec {
    Zero,
    Ogd {
        p: schatten_core::SchattenIndex,
        c: f64,
        #[serde(default = "auto_step")]
        eta: StepSize,
    },
    Experts {
        #[serde(default = "auto_step")]
        eta: StepSize,
    },
}

fn auto_step() -> StepSize {
    StepSize::Auto
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparatorMode {
    /// Closed form carried by the stream; falls back to the solver when absent.
    ClosedForm,
    Solver,
    /// Closed form, after checking the solver does not beat it.
    Checked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    Orthogonal,
    Random,
    SignAligned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchLearnerKind {
    Erm,
    OnlineToBatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisSpec {
    /// One recorded run at the stream's own horizon, plus Monte-Carlo expected
    /// regret at each of `horizons` and a rate fit when they allow one.
    Regret {
        #[serde(default)]
        horizons: Vec<usize>,
        #[serde(default = "closed_form")]
        comparator: ComparatorMode,
        /// Solver tolerance and ball for solver-based comparators.
        #[serde(default)]
        comparator_ball: Option<BallConfig>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    RademacherTree {
        tree: TreeKind,
        #[serde(rename = "T")]
        horizon: usize,
        d: usize,
        #[serde(default = "one")]
        c1: f64,
        #[serde(default = "one")]
        c2: f64,
        qs: Vec<schatten_core::SchattenIndex>,
    },
    Witness {
        horizons: Vec<usize>,
    },
    BatchLowerBound {
        construction: schatten_core::analysis::Construction,
        learners: Vec<BatchLearnerKind>,
        ns: Vec<usize>,
        p: schatten_core::SchattenIndex,
        c: f64,
        #[serde(default = "default_tol")]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    pub p: schatten_core::SchattenIndex,
    pub c: f64,
}

fn closed_form() -> ComparatorMode {
    ComparatorMode::ClosedForm
}

fn default_tol() -> f64 {
    1e-10
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitExperiment {
    #[serde(default)]
    pub stream: Option<StreamSpec>,
    #[serde(default)]
    pub learner: Option<LearnerSpec>,
    pub analysis: AnalysisSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    Preset(String),
    Explicit(ExplicitExperiment),
}

impl<'de> Deserialize<'de> for Experiment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(name) => Ok(Experiment::Preset(name)),
            v @ serde_json::Value::Object(_) => serde_json::from_value(v)
                .map(Experiment::Explicit)
                .map_err(|e| D::Error::custom(format!("experiment: {e}"))),
            other => Err(D::Error::custom(format!(
                "experiment: expected a preset name or an object, got {other}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Experiment,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    trials: Option<usize>,
    output_dir: PathBuf,
    #[serde(default)]
    emit: Option<Vec<Emit>>,
}

/// A validated config, with preset defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub experiment: ExplicitExperiment,
    pub seed: u64,
    pub trials: usize,
    pub output_dir: PathBuf,
    pub emit: BTreeSet<Emit>,
    /// The document as written, for echoing into outputs.
    pub echo: serde_json::Value,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| CliError::config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        let echo: serde_json::Value = serde_json::from_str(text).expect("already parsed");
        let (name, experiment, default_trials) = match raw.experiment {
            Experiment::Preset(name) => {
                let preset = presets::lookup(&name)?;
                (name, preset.experiment, preset.trials)
            }
            Experiment::Explicit(e) => {
                let trials = default_trials(&e.analysis);
                ("custom".to_string(), e, trials)
            }
        };
        let trials = raw.trials.unwrap_or(default_trials);
        if trials < 2 {
            return Err(CliError::config(format!("trials: need at least 2, got {trials}")));
        }
        let emit = match raw.emit {
            Some(list) if list.is_empty() => return Err(CliError::config("emit: must list at least one format")),
            Some(list) => list.into_iter().collect(),
            None => [Emit::Csv, Emit::Json].into_iter().collect(),
        };
        let config = ExperimentConfig {
            name,
            experiment,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            trials,
            output_dir: raw.output_dir,
            emit,
            echo,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn validate(&self) -> CliResult<()> {
        let e = &self.experiment;
        if let AnalysisSpec::Regret { .. } = e.analysis {
            if e.stream.is_none() {
                return Err(CliError::config("experiment.stream: required by the regret analysis"));
            }
            if e.learner.is_none() {
                return Err(CliError::config("experiment.learner: required by the regret analysis"));
            }
        }
        Ok(())
    }
}

/// 200 for online experiments, 100 for batch ones and 500 paths for trees.
pub fn default_trials(analysis: &AnalysisSpec) -> usize {
    match analysis {
        AnalysisSpec::Regret { .. } => 200,
        AnalysisSpec::BatchLowerBound { .. } => 100,
        AnalysisSpec::RademacherTree { .. } => 500,
        AnalysisSpec::Witness { .. } => 1000,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_defaults_and_echo() {
        let text = r#"{"experiment": "lemma1-tree", "output_dir": "out"}"#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.name, "lemma1-tree");
        assert_eq!((c.seed, c.trials), (DEFAULT_SEED, 500));
        assert_eq!(c.emit, [Emit::Csv, Emit::Json].into_iter().collect());
        assert_eq!(c.echo, serde_json::from_str::<serde_json::Value>(text).unwrap());
    }

    #[test]
    fn explicit_experiment_with_overrides() {
        let text = r#"{
            "experiment": {
                "stream": {"kind": "separation_realizable", "T": 16, "d": 16, "k_star": 5, "seed": 0},
                "learner": {"kind": "experts", "eta": 0.1},
                "analysis": {"kind": "regret", "comparator": "solver", "comparator_ball": {"p": 1, "c": 1}}
            },
            "seed": 3, "trials": 7, "output_dir": "o", "emit": ["svg"]
        }"#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!((c.name.as_str(), c.seed, c.trials), ("custom", 3, 7));
        assert_eq!(c.experiment.learner, Some(LearnerSpec::Experts { eta: StepSize::Fixed(0.1) }));
        assert!(matches!(
            c.experiment.analysis,
            AnalysisSpec::Regret { comparator: ComparatorMode::Solver, comparator_ball: Some(_), .. }
        ));
    }

    #[test]
    fn errors_name_the_problem() {
        let err = |text: &str| match ExperimentConfig::parse(text) {
            Err(CliError::Config(msg)) => msg,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert!(err(r#"{"experiment": "thm2-p2"}"#).contains("output_dir"));
        assert!(err("{\n  \"experiment\": 3, \"output_dir\": \"o\"}").contains("line 2"));
        assert!(err(r#"{"experiment": "thm2-p2", "output_dir": "o", "emit": []}"#).contains("emit"));
        assert!(err(r#"{"experiment": "thm2-p2", "output_dir": "o", "emit": ["png"]}"#).contains("png"));
        let missing_learner = r#"{"experiment": {"stream": {"kind": "file", "path": "s.jsonl"},
            "analysis": {"kind": "regret"}}, "output_dir": "o"}"#;
        assert!(err(missing_learner).contains("experiment.learner"));
        let unknown = r#"{"experiment": {"analysis": {"kind": "witness", "horizons": [4], "extra": 1}}, "output_dir": "o"}"#;
        assert!(err(unknown).contains("extra"));
    }
}
