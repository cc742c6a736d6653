//! Distributions behind the batch lower bounds.
//!
//! Both constructions draw `x = e_I` with `I` uniform on `{1, ..., mn}` and
//! label it with a diagonal sign operator. In the agnostic construction the
//! label is `c σ_I e_I`; in the realizable one it is `c (mn)^{-1/p} σ_I e_I`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{comparator_operator, horizon_factor, Example, RademacherPath};
use crate::error::{Error, Result};
use crate::hilbert::{HVector, LinOp};
use crate::rng::seeded;
use crate::spectral::SchattenIndex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchLowerBoundConfig {
    pub n: usize,
    pub p: SchattenIndex,
    pub c: f64,
    /// Block multiplier; chosen automatically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

impl BatchLowerBoundConfig {
    pub fn new(n: usize, p: SchattenIndex, c: f64) -> Self {
        BatchLowerBoundConfig { n, p, c, m: None }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "sample size must be positive"));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param("c", format!("radius must be positive, got {}", self.c)));
        }
        if self.m == Some(0) {
            return Err(Error::param("m", "block multiplier must be positive"));
        }
        Ok(())
    }

    /// `m = ⌈2 n^{1/(p-1)}⌉` unless given explicitly.
    pub fn b1_block(&self) -> Result<usize> {
        self.validate()?;
        if let Some(m) = self.m {
            return Ok(m);
        }
        if self.p.value() <= 1.0 {
            return Err(Error::param("p", "the agnostic construction needs p > 1"));
        }
        let exponent = if self.p.is_infinite() { 0.0 } else { 1.0 / (self.p.value() - 1.0) };
        let m = (2.0 * (self.n as f64).powf(exponent)).ceil();
        if m > 1e9 {
            return Err(Error::param("p", format!("block multiplier {m} is too large")));
        }
        Ok(m as usize)
    }

    /// `m = 2` unless given explicitly.
    pub fn b2_block(&self) -> Result<usize> {
        self.validate()?;
        Ok(self.m.unwrap_or(2))
    }

    pub fn b1_size(&self) -> Result<usize> {
        checked_size(self.b1_block()?, self.n)
    }

    pub fn b2_size(&self) -> Result<usize> {
        checked_size(self.b2_block()?, self.n)
    }
}

fn checked_size(m: usize, n: usize) -> Result<usize> {
    m.checked_mul(n)
        .ok_or_else(|| Error::param("m", "support size overflows"))
}

/// The full population: pairs `(e_i, magnitude σ_i e_i)` for `i < support`,
/// each with probability `1 / support`.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub sigma: RademacherPath,
    pub magnitude: f64,
    /// Smallest population risk over the Schatten ball.
    pub optimum: f64,
}

impl Population {
    pub fn support(&self) -> usize {
        self.sigma.len()
    }

    /// Truncation dimension of the instances and targets.
    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn pair(&self, i: usize) -> Example {
        let d = self.dim();
        Example::new(
            HVector::basis(d, i),
            HVector::basis(d, i).scale(self.magnitude * self.sigma.sign(i)),
        )
    }

    pub fn pairs(&self) -> impl Iterator<Item = Example> + '_ {
        (0..self.support()).map(|i| self.pair(i))
    }

    /// The diagonal operator generating the labels.
    pub fn label_operator(&self) -> LinOp {
        let diag: Vec<f64> = self.sigma.signs().iter().map(|&s| self.magnitude * f64::from(s)).collect();
        LinOp::diagonal(self.dim(), self.dim(), &diag)
    }

    /// `(1/N) Σ_i ‖f(e_i) - y_i‖²`, computed exactly from the columns of `f`.
    pub fn risk(&self, f: &LinOp) -> Result<f64> {
        let n = self.support();
        if n == 0 {
            return Err(Error::Empty("population"));
        }
        if f.d_in() < n || f.d_out() < n {
            return Err(Error::dims("population operator", n, f.d_in().min(f.d_out())));
        }
        let mut total = 0.0;
        for i in 0..n {
            let mut col_sq = 0.0;
            for r in 0..f.d_out() {
                let v = f.get(r, i);
                col_sq += v * v;
            }
            let target = self.magnitude * self.sigma.sign(i);
            total += col_sq - 2.0 * target * f.get(i, i) + target * target;
        }
        Ok((total / n as f64).max(0.0))
    }
}

fn draw_sample(population: &Population, n: usize, seed: u64) -> Vec<Example> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| population.pair(rng.gen_range(0..population.support())))
        .collect()
}

/// Agnostic construction: labels `c σ_I e_I`, with `sigma` of length `mn`.
pub fn batch_b1_sample(
    cfg: &BatchLowerBoundConfig,
    sigma: &RademacherPath,
    seed: u64,
) -> Result<(Vec<Example>, Population)> {
    let size = cfg.b1_size()?;
    if sigma.len() != size {
        return Err(Error::dims("agnostic sign path", size, sigma.len()));
    }
    let population = Population {
        sigma: sigma.clone(),
        magnitude: cfg.c,
        optimum: cfg.c * cfg.c * (1.0 - horizon_factor(size, cfg.p)).powi(2),
    };
    Ok((draw_sample(&population, cfg.n, seed), population))
}

/// Realizable construction: labels `c (mn)^{-1/p} σ_I e_I`, with `sigma` of length `mn`.
pub fn batch_b2_sample(
    cfg: &BatchLowerBoundConfig,
    sigma: &RademacherPath,
    seed: u64,
) -> Result<(Vec<Example>, Population)> {
    let size = cfg.b2_size()?;
    if sigma.len() != size {
        return Err(Error::dims("realizable sign path", size, sigma.len()));
    }
    let population = Population {
        sigma: sigma.clone(),
        magnitude: cfg.c * horizon_factor(size, cfg.p),
        optimum: 0.0,
    };
    Ok((draw_sample(&population, cfg.n, seed), population))
}

impl Population {
    /// `Σ_i c σ_i N^{-1/p} e_i ⊗ e_i`, the best operator in the ball.
    pub fn comparator(&self, p: SchattenIndex, c: f64) -> Result<LinOp> {
        comparator_operator(&self.sigma, p, c, self.dim())
    }
}
