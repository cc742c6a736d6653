//! Exact excess risk on the batch lower-bound populations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regret::McEstimate;
use crate::error::{Error, Result};
use crate::hilbert::LinOp;
use crate::learners::{erm_batch, online_to_batch, OgdConfig, OgdLearner};
use crate::rng::{split_seed, trial_rng};
use crate::spectral::{BallSpec, SchattenIndex};
use crate::streams::{batch_b1_sample, batch_b2_sample, BatchLowerBoundConfig, Example, Population, RademacherPath};

/// Population risk of `f` minus the best risk attainable in the ball.
pub fn excess_risk_exact(f: &LinOp, population: &Population) -> Result<f64> {
    Ok(population.risk(f)? - population.optimum)
}

/// A batch learner trained on an i.i.d. sample, with the ball it learns over.
pub trait BatchLearner: Sync {
    fn name(&self) -> &'static str;
    fn fit(&self, sample: &[Example], ball: &BallSpec) -> Result<LinOp>;
}

/// Constrained least squares over the ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Erm {
    pub tol: f64,
}

impl Default for Erm {
    fn default() -> Self {
        Erm { tol: 1e-10 }
    }
}

impl BatchLearner for Erm {
    fn name(&self) -> &'static str {
        "erm"
    }

    fn fit(&self, sample: &[Example], ball: &BallSpec) -> Result<LinOp> {
        Ok(erm_batch(sample, ball, self.tol)?.operator)
    }
}

/// Averaged iterates of one pass of OGD with the automatic step size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OnlineToBatch;

impl BatchLearner for OnlineToBatch {
    fn name(&self) -> &'static str {
        "online_to_batch"
    }

    fn fit(&self, sample: &[Example], ball: &BallSpec) -> Result<LinOp> {
        let first = sample.first().ok_or(Error::Empty("sample"))?;
        let mut learner = OgdLearner::new(OgdConfig::auto(*ball, sample.len()), first.x.dim(), first.y.dim())?;
        online_to_batch(&mut learner, sample)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// Labels `c σ_I e_I` on a support of size `⌈2 n^{1/(p-1)}⌉ n`.
    Agnostic,
    /// Labels `c (2n)^{-1/p} σ_I e_I` on a support of size `2n`.
    Realizable,
}

impl Construction {
    pub fn support(self, cfg: &BatchLowerBoundConfig) -> Result<usize> {
        match self {
            Construction::Agnostic => cfg.b1_size(),
            Construction::Realizable => cfg.b2_size(),
        }
    }

    /// `(c²/12) n^{-1/(p-1)}` or `(c²/12) n^{-2/p}`.
    pub fn bound(self, cfg: &BatchLowerBoundConfig) -> f64 {
        self.bound_with(cfg, 12.0)
    }

    /// The realizable construction also admits the constant `c²/8`; the
    /// agnostic one has only `c²/12`.
    pub fn recorded_bound(self, cfg: &BatchLowerBoundConfig) -> f64 {
        match self {
            Construction::Agnostic => self.bound_with(cfg, 12.0),
            Construction::Realizable => self.bound_with(cfg, 8.0),
        }
    }

    fn bound_with(self, cfg: &BatchLowerBoundConfig, denominator: f64) -> f64 {
        let n = cfg.n as f64;
        let p = cfg.p;
        let exponent = match self {
            Construction::Agnostic if p.is_infinite() => 0.0,
            Construction::Agnostic => -1.0 / (p.value() - 1.0),
            Construction::Realizable => -2.0 * p.reciprocal(),
        };
        cfg.c * cfg.c / denominator * n.powf(exponent)
    }

    pub fn sample(self, cfg: &BatchLowerBoundConfig, sigma: &RademacherPath, seed: u64) -> Result<(Vec<Example>, Population)> {
        match self {
            Construction::Agnostic => batch_b1_sample(cfg, sigma, seed),
            Construction::Realizable => batch_b2_sample(cfg, sigma, seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchCheck {
    pub construction: Construction,
    pub learner: String,
    pub n: usize,
    pub p: SchattenIndex,
    pub c: f64,
    pub support: usize,
    pub mean_excess: f64,
    pub stderr: f64,
    pub bound: f64,
    pub recorded_bound: f64,
}

impl BatchCheck {
    pub fn holds(&self) -> bool {
        self.mean_excess + 3.0 * self.stderr >= self.bound
    }
}

/// Draws `σ` and a sample per trial, trains `learner` on the ball of radius
/// `c`, and averages the exact excess risk.
pub fn batch_lower_bound_check(
    learner: &dyn BatchLearner,
    construction: Construction,
    cfg: &BatchLowerBoundConfig,
    trials: usize,
    seed: u64,
) -> Result<BatchCheck> {
    if cfg.n < 2 {
        return Err(Error::param("n", format!("sample size must be at least 2, got {}", cfg.n)));
    }
    let support = construction.support(cfg)?;
    let ball = BallSpec::new(cfg.p, cfg.c)?;
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let sigma = RademacherPath::sample(support, &mut trial_rng(seed, i));
            let (sample, population) = construction.sample(cfg, &sigma, split_seed(seed, i))?;
            let f = learner.fit(&sample, &ball)?;
            excess_risk_exact(&f, &population)
        })
        .collect::<Result<Vec<f64>>>()?;
    let est = McEstimate::from_values(values)?;
    Ok(BatchCheck {
        construction,
        learner: learner.name().to_string(),
        n: cfg.n,
        p: cfg.p,
        c: cfg.c,
        support,
        mean_excess: est.mean,
        stderr: est.stderr,
        bound: construction.bound(cfg),
        recorded_bound: construction.recorded_bound(cfg),
    })
}
