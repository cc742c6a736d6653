//! Projected online gradient descent over a Schatten ball.
//!
//! The iterate is stored column by column (indexed by input coordinate) as
//! sparse vectors times a global scale. Streams built from basis vectors touch
//! one column per round, so a round costs time proportional to the number of
//! nonzeros involved rather than `d_in * d_out`.

use serde::{Deserialize, Serialize};

use super::{check_dim, OnlineLearner};
use crate::error::{Error, Result};
use crate::hilbert::{HVector, LinOp};
use crate::spectral::{project_schatten_ball, project_signed_entries, BallSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    /// `D / (G sqrt(T))` with diameter `D = 2c` and gradient bound `G = 2(c + c_y)`.
    Auto,
}

impl Serialize for StepSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StepSize::Fixed(eta) => s.serialize_f64(*eta),
            StepSize::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for StepSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(eta) if eta > 0.0 && eta.is_finite() => Ok(StepSize::Fixed(eta)),
            Repr::Number(eta) => Err(D::Error::custom(format!("step size must be positive, got {eta}"))),
            Repr::Word(w) if w == "auto" => Ok(StepSize::Auto),
            Repr::Word(w) => Err(D::Error::custom(format!("expected a number or \"auto\", got {w:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OgdConfig {
    pub ball: BallSpec,
    pub eta: StepSize,
    /// Horizon used by the automatic step size.
    pub horizon: usize,
    /// Bound on target norms; defaults to the ball radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_radius: Option<f64>,
}

impl OgdConfig {
    pub fn auto(ball: BallSpec, horizon: usize) -> Self {
        OgdConfig {
            ball,
            eta: StepSize::Auto,
            horizon,
            target_radius: None,
        }
    }

    pub fn fixed(ball: BallSpec, eta: f64) -> Self {
        OgdConfig {
            ball,
            eta: StepSize::Fixed(eta),
            horizon: 1,
            target_radius: None,
        }
    }

    pub fn step_size(&self) -> Result<f64> {
        match self.eta {
            StepSize::Fixed(eta) if eta > 0.0 && eta.is_finite() => Ok(eta),
            StepSize::Fixed(eta) => Err(Error::param("eta", format!("must be positive, got {eta}"))),
            StepSize::Auto => {
                if self.horizon == 0 {
                    return Err(Error::param("horizon", "automatic step size needs a positive horizon"));
                }
                let c = self.ball.radius();
                let c_y = self.target_radius.unwrap_or(c);
                if !(c_y >= 0.0 && c_y.is_finite()) {
                    return Err(Error::param("target_radius", format!("must be nonnegative, got {c_y}")));
                }
                let diameter = 2.0 * c;
                let gradient = 2.0 * (c + c_y);
                Ok(diameter / (gradient * (self.horizon as f64).sqrt()))
            }
        }
    }
}

type SparseColumn = Vec<(usize, f64)>;

#[derive(Clone, Debug)]
pub struct OgdLearner {
    config: OgdConfig,
    eta: f64,
    d_in: usize,
    d_out: usize,
    /// `f = scale * stored`, `columns[j]` sorted by row.
    columns: Vec<SparseColumn>,
    scale: f64,
    stored_frob_sq: f64,
    rounds: usize,
}

fn column_norm_sq(col: &SparseColumn) -> f64 {
    col.iter().map(|(_, v)| v * v).sum()
}

/// `col + a * r`, both sorted by row; exact zeros are dropped.
fn merge_scaled(col: &SparseColumn, a: f64, r: &SparseColumn) -> SparseColumn {
    let mut out = Vec::with_capacity(col.len() + r.len());
    let (mut p, mut q) = (0, 0);
    while p < col.len() || q < r.len() {
        let next = match (col.get(p), r.get(q)) {
            (Some(&(i, u)), Some(&(k, v))) if i == k => {
                p += 1;
                q += 1;
                (i, u + a * v)
            }
            (Some(&(i, u)), Some(&(k, _))) if i < k => {
                p += 1;
                (i, u)
            }
            (Some(&(i, u)), None) => {
                p += 1;
                (i, u)
            }
            (_, Some(&(k, v))) => {
                q += 1;
                (k, a * v)
            }
            (None, None) => unreachable!(),
        };
        if next.1 != 0.0 {
            out.push(next);
        }
    }
    out
}

impl OgdLearner {
    pub fn new(config: OgdConfig, d_in: usize, d_out: usize) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::param("d", "dimensions must be positive"));
        }
        let eta = config.step_size()?;
        Ok(OgdLearner {
            config,
            eta,
            d_in,
            d_out,
            columns: vec![Vec::new(); d_in],
            scale: 1.0,
            stored_frob_sq: 0.0,
            rounds: 0,
        })
    }

    pub fn config(&self) -> &OgdConfig {
        &self.config
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    fn frobenius(&self) -> f64 {
        self.scale * self.stored_frob_sq.max(0.0).sqrt()
    }

    fn fold_scale(&mut self) {
        let s = self.scale;
        for col in &mut self.columns {
            col.iter_mut().for_each(|e| e.1 *= s);
            col.retain(|e| e.1 != 0.0);
        }
        self.scale = 1.0;
        self.recompute_frobenius();
    }

    fn recompute_frobenius(&mut self) {
        self.stored_frob_sq = self.columns.iter().map(column_norm_sq).sum();
    }

    /// Entries of the iterate if it is monomial (at most one nonzero per row and column).
    fn monomial(&self) -> Option<Vec<(usize, usize, f64)>> {
        let mut row_used = vec![false; self.d_out];
        let mut entries = Vec::new();
        for (j, col) in self.columns.iter().enumerate() {
            match col.as_slice() {
                [] => {}
                [(i, v)] if !row_used[*i] => {
                    row_used[*i] = true;
                    entries.push((*i, j, *v * self.scale));
                }
                _ => return None,
            }
        }
        Some(entries)
    }

    fn project(&mut self) -> Result<()> {
        let ball = self.config.ball;
        let (p, c) = (ball.p().value(), ball.radius());
        let frob = self.frobenius();
        if p == 2.0 {
            if frob > c {
                self.scale *= c / frob;
            }
            return Ok(());
        }
        if p >= 2.0 && frob <= c {
            return Ok(());
        }
        // ‖f‖_p <= ‖f‖_1 <= Σ_j ‖f e_j‖ for every p
        let trace_bound: f64 = self.scale * self.columns.iter().map(|col| column_norm_sq(col).sqrt()).sum::<f64>();
        if trace_bound <= c {
            return Ok(());
        }
        if let Some(entries) = self.monomial() {
            let values: Vec<f64> = entries.iter().map(|e| e.2).collect();
            if let Some(shrunk) = project_signed_entries(&values, &ball)? {
                for (&(i, j, _), v) in entries.iter().zip(shrunk) {
                    self.columns[j] = if v == 0.0 { Vec::new() } else { vec![(i, v)] };
                }
                self.scale = 1.0;
                self.recompute_frobenius();
            }
            return Ok(());
        }
        let dense = self.operator();
        let projected = project_schatten_ball(&dense, &ball)?;
        for (j, col) in self.columns.iter_mut().enumerate() {
            *col = (0..self.d_out)
                .map(|i| (i, projected.get(i, j)))
                .filter(|e| e.1 != 0.0)
                .collect();
        }
        self.scale = 1.0;
        self.recompute_frobenius();
        Ok(())
    }
}

impl OnlineLearner for OgdLearner {
    fn name(&self) -> &'static str {
        "ogd"
    }

    fn d_in(&self) -> usize {
        self.d_in
    }

    fn d_out(&self) -> usize {
        self.d_out
    }

    fn predict(&self, x: &HVector) -> Result<HVector> {
        check_dim("ogd instance", self.d_in, x)?;
        let mut out = vec![0.0; self.d_out];
        for (j, xj) in x.nonzeros() {
            for &(i, v) in &self.columns[j] {
                out[i] += xj * v;
            }
        }
        if self.scale != 1.0 {
            out.iter_mut().for_each(|o| *o *= self.scale);
        }
        Ok(HVector::from_vec_unchecked(out))
    }

    fn update(&mut self, x: &HVector, y: &HVector) -> Result<()> {
        check_dim("ogd target", self.d_out, y)?;
        let residual: SparseColumn = self.predict(x)?.sub(y)?.nonzeros().collect();
        self.rounds += 1;
        if residual.is_empty() {
            return Ok(());
        }
        // f <- f - eta * 2 (f x - y) ⊗ x, written in stored coordinates
        for (j, xj) in x.nonzeros() {
            let a = -2.0 * self.eta * xj / self.scale;
            let old = column_norm_sq(&self.columns[j]);
            let merged = merge_scaled(&self.columns[j], a, &residual);
            self.stored_frob_sq += column_norm_sq(&merged) - old;
            self.columns[j] = merged;
        }
        self.project()?;
        if self.scale < 1e-12 || self.scale > 1e12 {
            self.fold_scale();
        }
        Ok(())
    }

    fn operator(&self) -> LinOp {
        let mut f = LinOp::zeros(self.d_out, self.d_in);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                f.set(i, j, v * self.scale);
            }
        }
        f
    }

    fn accumulate_operator(&self, acc: &mut LinOp, weight: f64) -> Result<()> {
        if acc.d_in() != self.d_in || acc.d_out() != self.d_out {
            return Err(Error::dims("ogd accumulator", self.d_in * self.d_out, acc.d_in() * acc.d_out()));
        }
        let w = weight * self.scale;
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                acc.set(i, j, acc.get(i, j) + w * v);
            }
        }
        Ok(())
    }
}
