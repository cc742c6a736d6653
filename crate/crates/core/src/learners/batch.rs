//! Batch learners: online-to-batch conversion and constrained least squares.

use super::OnlineLearner;
use crate::error::{Error, Result};
use crate::hilbert::{dot, LinOp};
use crate::spectral::{project_schatten_ball, BallSpec};
use crate::streams::Example;

const MAX_ITERATIONS: usize = 10_000;

/// Runs `learner` once over `sample` and returns the average of the iterates
/// after each update.
pub fn online_to_batch(learner: &mut dyn OnlineLearner, sample: &[Example]) -> Result<LinOp> {
    if sample.is_empty() {
        return Err(Error::Empty("online-to-batch sample"));
    }
    let weight = 1.0 / sample.len() as f64;
    let mut average = LinOp::zeros(learner.d_out(), learner.d_in());
    for ex in sample {
        learner.update(&ex.x, &ex.y)?;
        learner.accumulate_operator(&mut average, weight)?;
    }
    Ok(average)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErmFit {
    pub operator: LinOp,
    /// `Σ ‖f(x_i) - y_i‖²` at the returned operator.
    pub objective: f64,
    pub iterations: usize,
}

/// Orthonormal basis of the span of `vectors` (modified Gram-Schmidt, two passes).
fn orthonormal_basis<'a>(vectors: impl Iterator<Item = &'a [f64]>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let scale = dot(v, v).sqrt();
        if scale == 0.0 {
            continue;
        }
        let mut r = v.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let proj = dot(&r, q);
                if proj != 0.0 {
                    r.iter_mut().zip(q).for_each(|(a, b)| *a -= proj * b);
                }
            }
        }
        let norm = dot(&r, &r).sqrt();
        if norm > 1e-10 * scale {
            r.iter_mut().for_each(|a| *a /= norm);
            basis.push(r);
        }
    }
    basis
}

fn coordinates(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    basis.iter().map(|q| dot(q, v)).collect()
}

struct Reduced {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    /// Energy of the targets outside the target basis (zero up to rounding).
    residual: f64,
}

impl Reduced {
    fn objective(&self, g: &LinOp) -> f64 {
        let mut total = self.residual;
        for (a, b) in self.a.iter().zip(&self.b) {
            for (i, bi) in b.iter().enumerate() {
                let r = dot(g.row(i), a) - bi;
                total += r * r;
            }
        }
        total
    }

    fn gradient(&self, g: &LinOp) -> LinOp {
        let mut grad = LinOp::zeros(g.d_out(), g.d_in());
        for (a, b) in self.a.iter().zip(&self.b) {
            for (i, bi) in b.iter().enumerate() {
                let r = 2.0 * (dot(g.row(i), a) - bi);
                if r == 0.0 {
                    continue;
                }
                for (j, aj) in a.iter().enumerate() {
                    grad.set(i, j, grad.get(i, j) + r * aj);
                }
            }
        }
        grad
    }
}

/// `Q_y G Q_x*` as a `d_out x d_in` operator.
fn lift(g: &LinOp, qx: &[Vec<f64>], qy: &[Vec<f64>], d_in: usize, d_out: usize) -> LinOp {
    let mut f = LinOp::zeros(d_out, d_in);
    for (a, qa) in qy.iter().enumerate() {
        let mut row = vec![0.0; d_in];
        for (b, qb) in qx.iter().enumerate() {
            let gab = g.get(a, b);
            if gab != 0.0 {
                row.iter_mut().zip(qb).for_each(|(r, q)| *r += gab * q);
            }
        }
        for (i, &qai) in qa.iter().enumerate() {
            if qai == 0.0 {
                continue;
            }
            for (j, &r) in row.iter().enumerate() {
                if r != 0.0 {
                    f.set(i, j, f.get(i, j) + qai * r);
                }
            }
        }
    }
    f
}

/// Least squares over a Schatten ball by projected gradient descent with
/// backtracking, stopping once an iteration improves the objective by less
/// than `tol`.
///
/// Only the restriction of `f` to the span of the instances matters, and
/// compressing the output onto the span of the targets never increases the
/// loss or the Schatten norm, so the problem is solved in those coordinates.
pub fn erm_batch(sample: &[Example], ball: &BallSpec, tol: f64) -> Result<ErmFit> {
    let first = sample.first().ok_or(Error::Empty("ERM sample"))?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::param("tol", format!("must be positive, got {tol}")));
    }
    let (d_in, d_out) = (first.x.dim(), first.y.dim());
    for ex in sample {
        if ex.x.dim() != d_in {
            return Err(Error::dims("ERM instance", d_in, ex.x.dim()));
        }
        if ex.y.dim() != d_out {
            return Err(Error::dims("ERM target", d_out, ex.y.dim()));
        }
    }
    let qx = orthonormal_basis(sample.iter().map(|ex| ex.x.as_slice()));
    let qy = orthonormal_basis(sample.iter().map(|ex| ex.y.as_slice()));
    let mut reduced = Reduced {
        a: Vec::with_capacity(sample.len()),
        b: Vec::with_capacity(sample.len()),
        residual: 0.0,
    };
    for ex in sample {
        let b = coordinates(&qy, ex.y.as_slice());
        reduced.residual += (ex.y.norm2_sq() - dot(&b, &b)).max(0.0);
        reduced.a.push(coordinates(&qx, ex.x.as_slice()));
        reduced.b.push(b);
    }
    if qx.is_empty() || qy.is_empty() {
        return Ok(ErmFit {
            operator: LinOp::zeros(d_out, d_in),
            objective: reduced.objective(&LinOp::zeros(qy.len(), qx.len())),
            iterations: 0,
        });
    }

    let mut g = LinOp::zeros(qy.len(), qx.len());
    let mut objective = reduced.objective(&g);
    let mut step = 1.0;
    for iteration in 1..=MAX_ITERATIONS {
        let grad = reduced.gradient(&g);
        let (candidate, value) = loop {
            let mut trial = g.clone();
            trial.axpy(-step, &grad)?;
            let trial = project_schatten_ball(&trial, ball)?;
            let delta = trial.sub(&g)?;
            let value = reduced.objective(&trial);
            let model = objective + grad.frobenius_inner(&delta)? + delta.frobenius().powi(2) / (2.0 * step);
            if value <= model + 1e-14 * objective.abs().max(1.0) || step < 1e-30 {
                break (trial, value);
            }
            step *= 0.5;
        };
        let improvement = objective - value;
        if value <= objective {
            g = candidate;
            objective = value;
        }
        if improvement < tol {
            return Ok(ErmFit {
                operator: lift(&g, &qx, &qy, d_in, d_out),
                objective,
                iterations: iteration,
            });
        }
        step *= 2.0;
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        objective,
        last: Box::new(lift(&g, &qx, &qy, d_in, d_out)),
    })
}
