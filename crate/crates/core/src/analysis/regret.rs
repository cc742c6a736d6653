use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::LinOp;
use crate::learners::{erm_batch, OnlineLearner};
use crate::rng::split_seed;
use crate::spectral::BallSpec;
use crate::streams::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub learner_loss: f64,
    pub cumulative: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparatorSource {
    ClosedForm,
    Solver,
}

/// How the best-in-class loss is obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum Comparator {
    ClosedForm(f64),
    /// Loss of a known comparator operator on the stream.
    Operator(LinOp),
    /// Constrained least squares over the full stream.
    Solver { ball: BallSpec, tol: f64 },
    /// Closed form, after checking the solver does not beat it by more than `tol`.
    Checked { closed_form: f64, ball: BallSpec, tol: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub per_round: Vec<RoundRecord>,
    pub comparator_loss: f64,
    pub regret: f64,
    pub comparator_source: ComparatorSource,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl RegretReport {
    pub fn learner_loss(&self) -> f64 {
        self.per_round.last().map_or(0.0, |r| r.cumulative)
    }
}

fn comparator_loss(stream: &Stream, comparator: &Comparator) -> Result<(f64, ComparatorSource)> {
    match comparator {
        Comparator::ClosedForm(v) => Ok((*v, ComparatorSource::ClosedForm)),
        Comparator::Operator(f) => Ok((stream.loss_of(f)?, ComparatorSource::ClosedForm)),
        Comparator::Solver { ball, tol } => Ok((erm_batch(&stream.rounds, ball, *tol)?.objective, ComparatorSource::Solver)),
        Comparator::Checked { closed_form, ball, tol } => {
            let solver = erm_batch(&stream.rounds, ball, *tol)?.objective;
            if solver > closed_form + tol {
                return Err(Error::param(
                    "comparator",
                    format!("solver loss {solver} exceeds the closed form {closed_form} by more than {tol}"),
                ));
            }
            Ok((*closed_form, ComparatorSource::ClosedForm))
        }
    }
}

/// Plays `learner` through `stream` and compares against the comparator.
pub fn run_regret(learner: &mut dyn OnlineLearner, stream: &Stream, comparator: &Comparator) -> Result<RegretReport> {
    if stream.is_empty() {
        return Err(Error::Empty("stream"));
    }
    let d = stream.dim();
    if learner.d_in() != d || learner.d_out() != d {
        return Err(Error::dims("learner dimension", d, learner.d_in()));
    }
    let mut per_round = Vec::with_capacity(stream.len());
    let mut cumulative = 0.0;
    for (t, ex) in stream.rounds.iter().enumerate() {
        let loss = learner.play_round(&ex.x, &ex.y)?;
        cumulative += loss;
        per_round.push(RoundRecord {
            t: t + 1,
            learner_loss: loss,
            cumulative,
        });
    }
    let (comparator_loss, comparator_source) = comparator_loss(stream, comparator)?;
    Ok(RegretReport {
        per_round,
        comparator_loss,
        regret: cumulative - comparator_loss,
        comparator_source,
        metadata: serde_json::Value::Null,
    })
}

/// Sample mean and standard error over independent trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub values: Vec<f64>,
}

impl McEstimate {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::param("trials", format!("need at least 2 trials, got {n}")));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(McEstimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            values,
        })
    }

    pub fn trials(&self) -> usize {
        self.values.len()
    }
}

/// Runs `trial(seed_i)` for `i < trials` in parallel, where `seed_i` is split
/// from `seed`. Results are gathered and summed in trial order.
pub fn mc_estimate<F>(trials: usize, seed: u64, trial: F) -> Result<McEstimate>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|i| trial(split_seed(seed, i)))
        .collect::<Result<Vec<f64>>>()?;
    McEstimate::from_values(values)
}

/// Expected regret over a seeded family of streams. `family` maps a trial seed
/// to a stream and its comparator; `factory` builds a fresh learner per trial.
pub fn mc_expected_regret<L, S>(factory: L, family: S, trials: usize, seed: u64) -> Result<McEstimate>
where
    L: Fn(&Stream) -> Result<Box<dyn OnlineLearner>> + Sync,
    S: Fn(u64) -> Result<(Stream, Comparator)> + Sync,
{
    mc_estimate(trials, seed, |trial_seed| {
        let (stream, comparator) = family(trial_seed)?;
        let mut learner = factory(&stream)?;
        Ok(run_regret(learner.as_mut(), &stream, &comparator)?.regret)
    })
}
