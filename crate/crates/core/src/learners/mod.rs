//! Online learners for the squared-loss regret protocol, plus batch learners.
//!
//! Every round the learner sees an instance `x`, predicts `ŷ`, and then
//! receives the target `y`, suffering `‖ŷ - y‖²`. All learners here predict
//! with a linear operator that only changes on `update`, so `operator()` is
//! always the map that the next `predict` will use.

mod batch;
mod experts;
mod ogd;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{HVector, LinOp};

pub use batch::{erm_batch, online_to_batch, ErmFit};
pub use experts::{binary_index_operator, BinaryIndexOperator, ExpertWeight, ExpertsConfig, ExpertsLearner};
pub use ogd::{OgdConfig, OgdLearner, StepSize};

/// One round of the protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerRound {
    pub x: HVector,
    pub y_hat: HVector,
    pub y: HVector,
    pub loss: f64,
}

impl LearnerRound {
    pub fn new(x: HVector, y_hat: HVector, y: HVector) -> Result<Self> {
        let loss = y_hat.sub(&y)?.norm2_sq();
        Ok(LearnerRound { x, y_hat, y, loss })
    }
}

/// Persistable learner state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Snapshot {
    Operator { operator: LinOp },
    ExpertWeights { rounds_seen: usize, weights: Vec<ExpertWeight> },
}

pub trait OnlineLearner: Send {
    fn name(&self) -> &'static str;
    fn d_in(&self) -> usize;
    fn d_out(&self) -> usize;

    /// Prediction for `x` under the current state. Never mutates.
    fn predict(&self, x: &HVector) -> Result<HVector>;

    fn update(&mut self, x: &HVector, y: &HVector) -> Result<()>;

    /// The linear map currently used for prediction.
    fn operator(&self) -> LinOp;

    /// `acc += weight * operator()`, without materializing when the learner
    /// can do better.
    fn accumulate_operator(&self, acc: &mut LinOp, weight: f64) -> Result<()> {
        acc.axpy(weight, &self.operator())
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot::Operator {
            operator: self.operator(),
        }
    }

    /// Predict, score and update in one step.
    fn play_round(&mut self, x: &HVector, y: &HVector) -> Result<f64> {
        let y_hat = self.predict(x)?;
        let loss = y_hat.sub(y)?.norm2_sq();
        self.update(x, y)?;
        Ok(loss)
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, v: &HVector) -> Result<()> {
    if v.dim() != expected {
        return Err(Error::dims(context, expected, v.dim()));
    }
    Ok(())
}

/// Always predicts zero.
#[derive(Clone, Debug)]
pub struct ZeroLearner {
    d_in: usize,
    d_out: usize,
}

impl ZeroLearner {
    pub fn new(d_in: usize, d_out: usize) -> Self {
        ZeroLearner { d_in, d_out }
    }
}

impl OnlineLearner for ZeroLearner {
    fn name(&self) -> &'static str {
        "zero"
    }
    fn d_in(&self) -> usize {
        self.d_in
    }
    fn d_out(&self) -> usize {
        self.d_out
    }
    fn predict(&self, x: &HVector) -> Result<HVector> {
        check_dim("zero learner instance", self.d_in, x)?;
        Ok(HVector::zeros(self.d_out))
    }
    fn update(&mut self, x: &HVector, y: &HVector) -> Result<()> {
        check_dim("zero learner instance", self.d_in, x)?;
        check_dim("zero learner target", self.d_out, y)
    }
    fn operator(&self) -> LinOp {
        LinOp::zeros(self.d_out, self.d_in)
    }
    fn accumulate_operator(&self, _acc: &mut LinOp, _weight: f64) -> Result<()> {
        Ok(())
    }
}

/// Predicts with a fixed operator and ignores feedback.
#[derive(Clone, Debug)]
pub struct FixedOperatorLearner {
    operator: LinOp,
}

impl FixedOperatorLearner {
    pub fn new(operator: LinOp) -> Self {
        FixedOperatorLearner { operator }
    }
}

impl OnlineLearner for FixedOperatorLearner {
    fn name(&self) -> &'static str {
        "fixed"
    }
    fn d_in(&self) -> usize {
        self.operator.d_in()
    }
    fn d_out(&self) -> usize {
        self.operator.d_out()
    }
    fn predict(&self, x: &HVector) -> Result<HVector> {
        self.operator.apply(x)
    }
    fn update(&mut self, x: &HVector, y: &HVector) -> Result<()> {
        check_dim("fixed learner instance", self.d_in(), x)?;
        check_dim("fixed learner target", self.d_out(), y)
    }
    fn operator(&self) -> LinOp {
        self.operator.clone()
    }
}
