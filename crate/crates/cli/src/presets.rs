//! Named experiments.

use schatten_core::analysis::Construction;
use schatten_core::learners::StepSize;
use schatten_core::streams::{InstanceMode, Kernel, KernelSpec, StreamSpec};
use schatten_core::SchattenIndex;

use crate::config::{
    default_trials, AnalysisSpec, BatchLearnerKind, ComparatorMode, ExplicitExperiment, LearnerSpec, TreeKind,
};
use crate::error::{CliError, CliResult};

pub struct Preset {
    pub experiment: ExplicitExperiment,
    pub trials: usize,
    pub summary: &'static str,
}

pub const NAMES: [&str; 8] = [
    "thm2-p1",
    "thm2-p2",
    "thm2-pinf",
    "thm4-separation",
    "lemma1-tree",
    "b1-batch",
    "b2-batch",
    "kernel-hs",
];

fn sign_stream(p: SchattenIndex, horizons: Vec<usize>) -> ExplicitExperiment {
    let horizon = *horizons.last().expect("nonempty");
    ExplicitExperiment {
        stream: Some(StreamSpec::SchattenLower {
            horizon,
            d: None,
            p,
            c: 1.0,
            seed: 0,
        }),
        learner: Some(LearnerSpec::Ogd {
            p,
            c: 1.0,
            eta: StepSize::Auto,
        }),
        analysis: AnalysisSpec::Regret {
            horizons,
            comparator: ComparatorMode::ClosedForm,
            comparator_ball: None,
            tol: 1e-10,
        },
    }
}

fn batch(construction: Construction) -> ExplicitExperiment {
    ExplicitExperiment {
        stream: None,
        learner: None,
        analysis: AnalysisSpec::BatchLowerBound {
            construction,
            learners: vec![BatchLearnerKind::Erm, BatchLearnerKind::OnlineToBatch],
            ns: vec![8, 32],
            p: SchattenIndex::TWO,
            c: 1.0,
            tol: 1e-10,
        },
    }
}

pub fn lookup(name: &str) -> CliResult<Preset> {
    let doubling = |lo: usize, hi: usize| -> Vec<usize> { std::iter::successors(Some(lo), |t| Some(t * 2)).take_while(|&t| t <= hi).collect() };
    let (experiment, summary) = match name {
        "thm2-p1" => (
            sign_stream(SchattenIndex::ONE, doubling(16, 1024)),
            "projected OGD on the trace-norm ball against the random sign adversary",
        ),
        "thm2-p2" => (
            sign_stream(SchattenIndex::TWO, doubling(32, 1024)),
            "projected OGD on the Hilbert-Schmidt ball against the random sign adversary",
        ),
        "thm2-pinf" => (
            sign_stream(SchattenIndex::INFINITY, doubling(16, 1024)),
            "projected OGD on the operator-norm ball against the random sign adversary",
        ),
        "thm4-separation" => (
            ExplicitExperiment {
                stream: Some(StreamSpec::SeparationRealizable {
                    horizon: 256,
                    d: 256,
                    k_star: 181,
                    seed: 0,
                    instance_mode: InstanceMode::Dense,
                }),
                learner: Some(LearnerSpec::Experts { eta: StepSize::Auto }),
                analysis: AnalysisSpec::Regret {
                    horizons: doubling(16, 256),
                    comparator: ComparatorMode::ClosedForm,
                    comparator_ball: None,
                    tol: 1e-10,
                },
            },
            "multiplicative weights over binary-index experts on realizable streams",
        ),
        "lemma1-tree" => (
            ExplicitExperiment {
                stream: None,
                learner: None,
                analysis: AnalysisSpec::RademacherTree {
                    tree: TreeKind::Random,
                    horizon: 128,
                    d: 128,
                    c1: 1.0,
                    c2: 1.0,
                    qs: vec![SchattenIndex::ONE, SchattenIndex::TWO, SchattenIndex::new(4.0).expect("valid")],
                },
            },
            "Schatten norms of Rademacher sums of rank-one operators on a random predictable tree",
        ),
        "b1-batch" => (batch(Construction::Agnostic), "excess risk on the agnostic batch construction"),
        "b2-batch" => (batch(Construction::Realizable), "excess risk on the realizable batch construction"),
        "kernel-hs" => (
            ExplicitExperiment {
                stream: Some(StreamSpec::Kernel {
                    horizon: 256,
                    kernel: KernelSpec {
                        kernel: Kernel::Gaussian { bandwidth: 0.2 },
                        grid: 64,
                        c: 1.0,
                    },
                    seed: 0,
                }),
                learner: Some(LearnerSpec::Ogd {
                    p: SchattenIndex::TWO,
                    c: 1.0,
                    eta: StepSize::Auto,
                }),
                analysis: AnalysisSpec::Regret {
                    horizons: Vec::new(),
                    comparator: ComparatorMode::ClosedForm,
                    comparator_ball: None,
                    tol: 1e-10,
                },
            },
            "projected OGD learning a discretized Gaussian integral operator",
        ),
        other => {
            return Err(CliError::config(format!(
                "experiment: unknown preset {other:?}; expected one of {}",
                NAMES.join(", ")
            )))
        }
    };
    let trials = default_trials(&experiment.analysis);
    Ok(Preset {
        experiment,
        trials,
        summary,
    })
}
