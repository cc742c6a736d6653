//! Multiplicative weights over the binary-index experts.
//!
//! For `k >= 1`, `f_k = e_k ⊗ Σ_n b_k[n] e_n` where `b_k[n]` is bit `n` of `k`
//! (least significant bit is `n = 1`), and `f_0 = 0`. Coordinates are 1-based
//! in this vocabulary and 0-based in storage, so `e_k` is `HVector::basis(d, k - 1)`.
//!
//! After round `i` the learner records `S_i`, the coordinates of `y_i` with
//! magnitude at least `1/(2 sqrt(T))`, sorted in descending order and
//! zero-padded to length `4T`. Expert `(i, j)` predicts zero up to and
//! including round `i` and `f_k` afterwards, with `k = sort(S_i)[j]`.
//!
//! The `4T^2` experts are never instantiated. Experts that have only ever
//! predicted zero share one cumulative loss, and experts that predict with the
//! same `f_k` differ only by a constant offset fixed at activation, so the
//! weights are tracked per class.

use serde::{Deserialize, Serialize};

use super::{check_dim, OnlineLearner, Snapshot, StepSize};
use crate::error::{Error, Result};
use crate::hilbert::{HVector, LinOp};

const BALL_SLACK: f64 = 1e-9;

/// The operator `f_k`, applied without materializing it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryIndexOperator {
    k: usize,
    d: usize,
}

impl BinaryIndexOperator {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        if k > d {
            return Err(Error::Underprovisioned {
                what: format!("binary index operator f_{k}"),
                required: k,
                available: d,
            });
        }
        Ok(BinaryIndexOperator { k, d })
    }

    pub fn index(&self) -> usize {
        self.k
    }

    /// 0-based input coordinates `n - 1` with `b_k[n] = 1`.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..usize::BITS as usize).filter(move |&bit| (self.k >> bit) & 1 == 1)
    }

    /// `a_k(x) = Σ_n b_k[n] x[n]`, so that `f_k(x) = a_k(x) e_k`.
    pub fn coefficient(&self, x: &HVector) -> f64 {
        self.support().map(|n| x.get(n)).sum()
    }

    pub fn apply(&self, x: &HVector) -> Result<HVector> {
        check_dim("binary index operator input", self.d, x)?;
        let mut out = vec![0.0; self.d];
        if self.k > 0 {
            out[self.k - 1] = self.coefficient(x);
        }
        Ok(HVector::from_vec_unchecked(out))
    }

    pub fn materialize(&self) -> LinOp {
        let mut f = LinOp::zeros(self.d, self.d);
        if self.k > 0 {
            for n in self.support() {
                f.set(self.k - 1, n, 1.0);
            }
        }
        f
    }
}

/// `f_k` as a `d x d` matrix. Fails when `e_k` does not exist in dimension `d`.
pub fn binary_index_operator(k: usize, d: usize) -> Result<LinOp> {
    Ok(BinaryIndexOperator::new(k, d)?.materialize())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertsConfig {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub d: usize,
    #[serde(default = "auto_step")]
    pub eta: StepSize,
}

fn auto_step() -> StepSize {
    StepSize::Auto
}

impl ExpertsConfig {
    pub fn new(horizon: usize, d: usize) -> Self {
        ExpertsConfig {
            horizon,
            d,
            eta: StepSize::Auto,
        }
    }

    pub fn threshold(&self) -> f64 {
        1.0 / (2.0 * (self.horizon as f64).sqrt())
    }

    /// `4T^2`: `T` activation rounds times `4T` slots.
    pub fn expert_count(&self) -> u64 {
        4 * (self.horizon as u64).pow(2)
    }

    /// `(1/4) sqrt(8 ln N / T)`, the Hedge rate for losses in `[0, 4]`.
    pub fn learning_rate(&self) -> Result<f64> {
        match self.eta {
            StepSize::Fixed(eta) if eta > 0.0 && eta.is_finite() => Ok(eta),
            StepSize::Fixed(eta) => Err(Error::param("eta", format!("must be positive, got {eta}"))),
            StepSize::Auto => {
                let t = self.horizon as f64;
                Ok(0.25 * (8.0 * (self.expert_count() as f64).ln() / t).sqrt())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::param("T", "horizon must be positive"));
        }
        if self.d == 0 {
            return Err(Error::param("d", "dimension must be positive"));
        }
        Ok(())
    }
}

/// Normalized weight carried by all experts predicting with `f_k`
/// (`k = 0` collects every expert that currently predicts zero).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpertWeight {
    pub k: usize,
    pub experts: u64,
    pub weight: f64,
}

#[derive(Clone, Debug)]
struct Member {
    round: usize,
    slot: usize,
    /// Cumulative loss is `offset + class running loss`.
    offset: f64,
}

#[derive(Clone, Debug)]
struct Class {
    operator: BinaryIndexOperator,
    running: f64,
    log_mass: f64,
    min_offset: f64,
    members: Vec<Member>,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[derive(Clone, Debug)]
pub struct ExpertsLearner {
    config: ExpertsConfig,
    eta: f64,
    threshold: f64,
    rounds: usize,
    zero_count: u64,
    zero_loss: f64,
    classes: Vec<Class>,
    class_of: Vec<Option<usize>>,
    index_sets: Vec<Vec<usize>>,
}

impl ExpertsLearner {
    pub fn new(config: ExpertsConfig) -> Result<Self> {
        config.validate()?;
        let eta = config.learning_rate()?;
        Ok(ExpertsLearner {
            eta,
            threshold: config.threshold(),
            rounds: 0,
            zero_count: config.expert_count(),
            zero_loss: 0.0,
            classes: Vec::new(),
            class_of: vec![None; config.d + 1],
            index_sets: Vec::new(),
            config,
        })
    }

    pub fn config(&self) -> &ExpertsConfig {
        &self.config
    }

    pub fn learning_rate(&self) -> f64 {
        self.eta
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// `S_t` in descending order (without padding), `t` 1-based.
    pub fn index_set(&self, t: usize) -> Option<&[usize]> {
        t.checked_sub(1).and_then(|i| self.index_sets.get(i)).map(Vec::as_slice)
    }

    /// `sort(S_i)[j]` with zero padding, both indices 1-based.
    pub fn sorted_index(&self, i: usize, j: usize) -> Option<usize> {
        if j == 0 || j > 4 * self.config.horizon {
            return None;
        }
        self.index_set(i).map(|s| s.get(j - 1).copied().unwrap_or(0))
    }

    /// What expert `(i, j)` predicts at round `t` for instance `x`.
    pub fn expert_prediction(&self, i: usize, j: usize, t: usize, x: &HVector) -> Result<HVector> {
        check_dim("expert instance", self.config.d, x)?;
        if t <= i {
            return Ok(HVector::zeros(self.config.d));
        }
        let k = self
            .sorted_index(i, j)
            .ok_or_else(|| Error::param("expert", format!("expert ({i}, {j}) is not defined yet")))?;
        BinaryIndexOperator::new(k, self.config.d)?.apply(x)
    }

    /// Cumulative loss of expert `(i, j)` over the rounds seen so far.
    pub fn expert_loss(&self, i: usize, j: usize) -> Option<f64> {
        if i == 0 || j == 0 || j > 4 * self.config.horizon {
            return None;
        }
        if i > self.rounds {
            return Some(self.zero_loss);
        }
        let k = self.sorted_index(i, j)?;
        if k == 0 {
            return Some(self.zero_loss);
        }
        let class = &self.classes[self.class_of[k]?];
        class
            .members
            .iter()
            .find(|m| m.round == i && m.slot == j)
            .map(|m| m.offset + class.running)
    }

    /// Smallest cumulative loss over all experts.
    pub fn best_expert_loss(&self) -> f64 {
        let zero = if self.zero_count > 0 { self.zero_loss } else { f64::INFINITY };
        self.classes
            .iter()
            .map(|c| c.min_offset + c.running)
            .fold(zero, f64::min)
    }

    fn log_weights(&self) -> (f64, Vec<f64>) {
        let zero = if self.zero_count > 0 {
            (self.zero_count as f64).ln() - self.eta * self.zero_loss
        } else {
            f64::NEG_INFINITY
        };
        let classes = self.classes.iter().map(|c| c.log_mass - self.eta * c.running).collect();
        (zero, classes)
    }

    /// Normalized class weights; they sum to one.
    pub fn weights(&self) -> Vec<ExpertWeight> {
        let (zero, classes) = self.log_weights();
        let max = classes.iter().copied().fold(zero, f64::max);
        let raw_zero = (zero - max).exp();
        let raw: Vec<f64> = classes.iter().map(|w| (w - max).exp()).collect();
        let total = raw_zero + raw.iter().sum::<f64>();
        let mut out = vec![ExpertWeight {
            k: 0,
            experts: self.zero_count,
            weight: raw_zero / total,
        }];
        out.extend(self.classes.iter().zip(raw).map(|(c, w)| ExpertWeight {
            k: c.operator.index(),
            experts: c.members.len() as u64,
            weight: w / total,
        }));
        out
    }

    fn validate_example(&self, x: &HVector, y: &HVector) -> Result<()> {
        check_dim("experts instance", self.config.d, x)?;
        check_dim("experts target", self.config.d, y)?;
        let round = self.rounds + 1;
        let nx = x.norm1();
        if nx > 1.0 + BALL_SLACK {
            return Err(Error::BallViolation {
                what: "experts instance l1 norm",
                round,
                norm: nx,
                bound: 1.0,
            });
        }
        let ny = y.norm2();
        if ny > 1.0 + BALL_SLACK {
            return Err(Error::BallViolation {
                what: "experts target norm",
                round,
                norm: ny,
                bound: 1.0,
            });
        }
        Ok(())
    }
}

impl OnlineLearner for ExpertsLearner {
    fn name(&self) -> &'static str {
        "experts"
    }

    fn d_in(&self) -> usize {
        self.config.d
    }

    fn d_out(&self) -> usize {
        self.config.d
    }

    fn predict(&self, x: &HVector) -> Result<HVector> {
        check_dim("experts instance", self.config.d, x)?;
        let mut out = vec![0.0; self.config.d];
        for (class, w) in self.classes.iter().zip(self.weights().iter().skip(1)) {
            let k = class.operator.index();
            out[k - 1] += w.weight * class.operator.coefficient(x);
        }
        Ok(HVector::from_vec_unchecked(out))
    }

    fn update(&mut self, x: &HVector, y: &HVector) -> Result<()> {
        if self.rounds >= self.config.horizon {
            return Err(Error::HorizonExceeded {
                horizon: self.config.horizon,
            });
        }
        self.validate_example(x, y)?;
        let y_energy = y.norm2_sq();
        for class in &mut self.classes {
            let k = class.operator.index();
            let a = class.operator.coefficient(x);
            class.running += y_energy - 2.0 * a * y.get(k - 1) + a * a;
        }
        self.zero_loss += y_energy;
        self.rounds += 1;

        let mut set: Vec<usize> = y
            .nonzeros()
            .filter(|&(_, c)| c.abs() >= self.threshold)
            .map(|(n, _)| n + 1)
            .collect();
        set.reverse();
        set.truncate(4 * self.config.horizon);
        for (slot, &k) in set.iter().enumerate() {
            let id = match self.class_of[k] {
                Some(id) => id,
                None => {
                    self.classes.push(Class {
                        operator: BinaryIndexOperator::new(k, self.config.d)?,
                        running: 0.0,
                        log_mass: f64::NEG_INFINITY,
                        min_offset: f64::INFINITY,
                        members: Vec::new(),
                    });
                    self.class_of[k] = Some(self.classes.len() - 1);
                    self.classes.len() - 1
                }
            };
            let class = &mut self.classes[id];
            let offset = self.zero_loss - class.running;
            class.log_mass = log_add_exp(class.log_mass, -self.eta * offset);
            class.min_offset = class.min_offset.min(offset);
            class.members.push(Member {
                round: self.rounds,
                slot: slot + 1,
                offset,
            });
        }
        self.zero_count -= set.len() as u64;
        self.index_sets.push(set);
        Ok(())
    }

    fn operator(&self) -> LinOp {
        let mut f = LinOp::zeros(self.config.d, self.config.d);
        self.accumulate_operator(&mut f, 1.0).expect("dimensions match by construction");
        f
    }

    fn accumulate_operator(&self, acc: &mut LinOp, weight: f64) -> Result<()> {
        let d = self.config.d;
        if acc.d_in() != d || acc.d_out() != d {
            return Err(Error::dims("experts accumulator", d * d, acc.d_in() * acc.d_out()));
        }
        for (class, w) in self.classes.iter().zip(self.weights().iter().skip(1)) {
            let row = class.operator.index() - 1;
            for n in class.operator.support() {
                acc.set(row, n, acc.get(row, n) + weight * w.weight);
            }
        }
        Ok(())
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot::ExpertWeights {
            rounds_seen: self.rounds,
            weights: self.weights(),
        }
    }
}
