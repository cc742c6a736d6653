//! Labeled streams and sample distributions.
//!
//! Streams are materialized lists of `(x, y)` pairs. Every generator is a pure
//! function of its parameters and seed, and fails if the truncation dimension
//! is too small for the construction.

mod batch;
mod file;
mod kernel;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{HVector, LinOp};
use crate::learners::BinaryIndexOperator;
use crate::rng::{seeded, Rng};
use crate::spectral::SchattenIndex;

pub use batch::{batch_b1_sample, batch_b2_sample, BatchLowerBoundConfig, Population};
pub use file::{parse_stream, read_stream, write_stream};
pub use kernel::{kernel_l2_norm, kernel_operator, Kernel, KernelSpec};

pub(crate) const BALL_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub x: HVector,
    pub y: HVector,
}

impl Example {
    pub fn new(x: HVector, y: HVector) -> Self {
        Example { x, y }
    }
}

/// Which unit ball the instances are declared to live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSpace {
    L2Unit,
    L1Unit,
}

impl InstanceSpace {
    pub fn norm(self, x: &HVector) -> f64 {
        match self {
            InstanceSpace::L2Unit => x.norm2(),
            InstanceSpace::L1Unit => x.norm1(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamHeader {
    pub d: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub instance_space: InstanceSpace,
    pub target_radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stream {
    pub header: StreamHeader,
    pub rounds: Vec<Example>,
}

impl Stream {
    pub fn new(d: usize, instance_space: InstanceSpace, target_radius: f64, rounds: Vec<Example>) -> Result<Self> {
        let stream = Stream {
            header: StreamHeader {
                d,
                horizon: rounds.len(),
                instance_space,
                target_radius,
            },
            rounds,
        };
        stream.validate()?;
        Ok(stream)
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.header.d
    }

    /// Checks dimensions, the declared horizon and ball membership of every round.
    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        if !(h.target_radius >= 0.0 && h.target_radius.is_finite()) {
            return Err(Error::param("target_radius", format!("must be nonnegative, got {}", h.target_radius)));
        }
        if h.horizon != self.rounds.len() {
            return Err(Error::dims("stream horizon", h.horizon, self.rounds.len()));
        }
        for (t, ex) in self.rounds.iter().enumerate() {
            if ex.x.dim() != h.d {
                return Err(Error::dims("stream instance", h.d, ex.x.dim()));
            }
            if ex.y.dim() != h.d {
                return Err(Error::dims("stream target", h.d, ex.y.dim()));
            }
            let nx = h.instance_space.norm(&ex.x);
            if nx > 1.0 + BALL_SLACK {
                return Err(Error::BallViolation {
                    what: "instance",
                    round: t + 1,
                    norm: nx,
                    bound: 1.0,
                });
            }
            let ny = ex.y.norm2();
            if ny > h.target_radius * (1.0 + BALL_SLACK) {
                return Err(Error::BallViolation {
                    what: "target",
                    round: t + 1,
                    norm: ny,
                    bound: h.target_radius,
                });
            }
        }
        Ok(())
    }

    /// `Σ_t ‖f(x_t) - y_t‖²`.
    pub fn loss_of(&self, f: &LinOp) -> Result<f64> {
        let mut total = 0.0;
        for ex in &self.rounds {
            total += f.apply(&ex.x)?.sub(&ex.y)?.norm2_sq();
        }
        Ok(total)
    }
}

/// A sequence of independent uniform signs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct RademacherPath {
    signs: Vec<i8>,
}

impl TryFrom<Vec<i8>> for RademacherPath {
    type Error = Error;

    fn try_from(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::param("signs", format!("entries must be +1 or -1, got {bad}")));
        }
        Ok(RademacherPath { signs })
    }
}

impl From<RademacherPath> for Vec<i8> {
    fn from(p: RademacherPath) -> Self {
        p.signs
    }
}

impl RademacherPath {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        Self::try_from(signs)
    }

    pub fn sample(len: usize, rng: &mut Rng) -> Self {
        let signs = (0..len).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        RademacherPath { signs }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn sign(&self, t: usize) -> f64 {
        f64::from(self.signs[t])
    }

    pub fn negated(&self) -> Self {
        RademacherPath {
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }

    pub fn count_positive(&self) -> usize {
        self.signs.iter().filter(|&&s| s == 1).count()
    }
}

fn require_dim(what: &str, required: usize, d: usize) -> Result<()> {
    if d < required {
        return Err(Error::Underprovisioned {
            what: what.to_string(),
            required,
            available: d,
        });
    }
    Ok(())
}

/// `T^{-1/p}`, which is 1 for `p = ∞`.
pub fn horizon_factor(horizon: usize, p: SchattenIndex) -> f64 {
    (horizon as f64).powf(-p.reciprocal())
}

/// The sign stream `(e_t, c σ_t e_t)` together with its signs.
#[derive(Clone, Debug, PartialEq)]
pub struct SignStream {
    pub stream: Stream,
    pub sigma: RademacherPath,
    pub c: f64,
}

impl SignStream {
    /// `Σ_t (c σ_t T^{-1/p}) e_t ⊗ e_t` in dimension `d`.
    pub fn comparator(&self, p: SchattenIndex) -> Result<LinOp> {
        comparator_operator(&self.sigma, p, self.c, self.stream.dim())
    }

    /// `c² T (1 - T^{-1/p})²`, the loss of the comparator on this stream.
    pub fn comparator_loss(&self, p: SchattenIndex) -> f64 {
        sign_stream_comparator_loss(self.stream.len(), p, self.c)
    }
}

pub fn sign_stream_comparator_loss(horizon: usize, p: SchattenIndex, c: f64) -> f64 {
    c * c * horizon as f64 * (1.0 - horizon_factor(horizon, p)).powi(2)
}

/// Round `t` is `(e_t, c σ_t e_t)` with uniform random signs.
pub fn schatten_lower_stream(horizon: usize, d: usize, c: f64, seed: u64) -> Result<SignStream> {
    require_dim("sign stream", horizon, d)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("c", format!("radius must be positive, got {c}")));
    }
    let sigma = RademacherPath::sample(horizon, &mut seeded(seed));
    let rounds = (0..horizon)
        .map(|t| Example::new(HVector::basis(d, t), HVector::basis(d, t).scale(c * sigma.sign(t))))
        .collect();
    let stream = Stream::new(d, InstanceSpace::L2Unit, c, rounds)?;
    Ok(SignStream { stream, sigma, c })
}

/// `Σ_t (c σ_t T^{-1/p}) e_t ⊗ e_t` with `T = sigma.len()`, as a `d x d` operator.
/// Its Schatten-p norm is exactly `c`.
pub fn comparator_operator(sigma: &RademacherPath, p: SchattenIndex, c: f64, d: usize) -> Result<LinOp> {
    require_dim("comparator operator", sigma.len(), d)?;
    let magnitude = c * horizon_factor(sigma.len(), p);
    let diag: Vec<f64> = sigma.signs().iter().map(|&s| magnitude * f64::from(s)).collect();
    Ok(LinOp::diagonal(d, d, &diag))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceMode {
    /// Uniformly chosen basis vectors.
    Basis,
    /// Random signed vectors with unit ℓ1 norm.
    Dense,
}

/// Number of input coordinates any representable `f_k` can read in dimension `d`.
pub fn bit_window(d: usize) -> usize {
    (usize::BITS - d.leading_zeros()) as usize
}

/// Realizable stream `y_t = f_{k*}(x_t)` with instances in the ℓ1 unit ball,
/// supported on the first [`bit_window`] coordinates.
pub fn separation_stream(horizon: usize, d: usize, k_star: usize, seed: u64, mode: InstanceMode) -> Result<Stream> {
    let f = BinaryIndexOperator::new(k_star, d)?;
    let window = bit_window(d).min(d).max(1);
    let mut rng = seeded(seed);
    let mut rounds = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let x = match mode {
            InstanceMode::Basis => HVector::basis(d, rng.gen_range(0..window)),
            InstanceMode::Dense => {
                let mut coeffs = vec![0.0; d];
                let raw: Vec<f64> = (0..window).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let total: f64 = raw.iter().map(|v: &f64| v.abs()).sum();
                if total > 0.0 {
                    for (c, r) in coeffs.iter_mut().zip(&raw) {
                        *c = r / total;
                    }
                }
                HVector::new(coeffs)?
            }
        };
        let y = f.apply(&x)?;
        rounds.push(Example::new(x, y));
    }
    Stream::new(d, InstanceSpace::L1Unit, 1.0, rounds)
}

/// The constant tree `x_t = e_t`, `y_t = 0`.
pub fn rad_witness_stream(horizon: usize, d: usize) -> Result<Stream> {
    require_dim("witness stream", horizon, d)?;
    let rounds = (0..horizon)
        .map(|t| Example::new(HVector::basis(d, t), HVector::zeros(d)))
        .collect();
    Stream::new(d, InstanceSpace::L1Unit, 1.0, rounds)
}

/// Stream `(x_t, f_K x_t)` with `x_t` uniform on the unit sphere.
pub fn kernel_stream(spec: &KernelSpec, horizon: usize, seed: u64) -> Result<Stream> {
    let f = kernel_operator(spec)?;
    let d = spec.grid;
    let mut rng = seeded(seed);
    let mut rounds = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let x = loop {
            let v: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-12 {
                break HVector::new(v.iter().map(|a| a / n).collect())?;
            }
        };
        let y = f.apply(&x)?;
        rounds.push(Example::new(x, y));
    }
    Stream::new(d, InstanceSpace::L2Unit, spec.c, rounds)
}

/// Box-Muller.
fn standard_normal(rng: &mut Rng) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen::<f64>();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Declarative description of a stream, as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StreamSpec {
    SchattenLower {
        #[serde(rename = "T")]
        horizon: usize,
        #[serde(default)]
        d: Option<usize>,
        p: SchattenIndex,
        c: f64,
        seed: u64,
    },
    SeparationRealizable {
        #[serde(rename = "T")]
        horizon: usize,
        d: usize,
        k_star: usize,
        seed: u64,
        #[serde(default = "default_mode")]
        instance_mode: InstanceMode,
    },
    BatchB1 {
        n: usize,
        p: SchattenIndex,
        c: f64,
        #[serde(default)]
        m: Option<usize>,
        seed: u64,
    },
    BatchB2 {
        n: usize,
        p: SchattenIndex,
        c: f64,
        #[serde(default)]
        m: Option<usize>,
        seed: u64,
    },
    Kernel {
        #[serde(rename = "T")]
        horizon: usize,
        kernel: KernelSpec,
        seed: u64,
    },
    File {
        path: std::path::PathBuf,
    },
}

fn default_mode() -> InstanceMode {
    InstanceMode::Basis
}

/// A stream plus the comparator loss known in closed form, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct BuiltStream {
    pub stream: Stream,
    pub closed_form_comparator: Option<f64>,
}

impl StreamSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            StreamSpec::SchattenLower { .. } => "schatten_lower",
            StreamSpec::SeparationRealizable { .. } => "separation_realizable",
            StreamSpec::BatchB1 { .. } => "batch_b1",
            StreamSpec::BatchB2 { .. } => "batch_b2",
            StreamSpec::Kernel { .. } => "kernel",
            StreamSpec::File { .. } => "file",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            StreamSpec::SchattenLower { seed, .. }
            | StreamSpec::SeparationRealizable { seed, .. }
            | StreamSpec::BatchB1 { seed, .. }
            | StreamSpec::BatchB2 { seed, .. }
            | StreamSpec::Kernel { seed, .. } => Some(*seed),
            StreamSpec::File { .. } => None,
        }
    }

    /// Same spec with the seed replaced; file streams are returned unchanged.
    pub fn with_seed(&self, new_seed: u64) -> StreamSpec {
        let mut spec = self.clone();
        match &mut spec {
            StreamSpec::SchattenLower { seed, .. }
            | StreamSpec::SeparationRealizable { seed, .. }
            | StreamSpec::BatchB1 { seed, .. }
            | StreamSpec::BatchB2 { seed, .. }
            | StreamSpec::Kernel { seed, .. } => *seed = new_seed,
            StreamSpec::File { .. } => {}
        }
        spec
    }

    /// Materializes the stream. Batch kinds yield their i.i.d. sample as a stream.
    pub fn build(&self) -> Result<BuiltStream> {
        match self {
            StreamSpec::SchattenLower { horizon, d, p, c, seed } => {
                let s = schatten_lower_stream(*horizon, d.unwrap_or(*horizon), *c, *seed)?;
                Ok(BuiltStream {
                    closed_form_comparator: Some(s.comparator_loss(*p)),
                    stream: s.stream,
                })
            }
            StreamSpec::SeparationRealizable {
                horizon,
                d,
                k_star,
                seed,
                instance_mode,
            } => Ok(BuiltStream {
                stream: separation_stream(*horizon, *d, *k_star, *seed, *instance_mode)?,
                closed_form_comparator: Some(0.0),
            }),
            StreamSpec::BatchB1 { n, p, c, m, seed } | StreamSpec::BatchB2 { n, p, c, m, seed } => {
                let cfg = BatchLowerBoundConfig {
                    n: *n,
                    p: *p,
                    c: *c,
                    m: *m,
                };
                let mut rng = seeded(*seed);
                let b1 = matches!(self, StreamSpec::BatchB1 { .. });
                let len = if b1 { cfg.b1_size()? } else { cfg.b2_size()? };
                let sigma = RademacherPath::sample(len, &mut rng);
                let sample_seed = crate::rng::split_seed(*seed, 1);
                let (sample, population) = if b1 {
                    batch_b1_sample(&cfg, &sigma, sample_seed)?
                } else {
                    batch_b2_sample(&cfg, &sigma, sample_seed)?
                };
                Ok(BuiltStream {
                    stream: Stream::new(population.dim(), InstanceSpace::L2Unit, *c, sample)?,
                    closed_form_comparator: None,
                })
            }
            StreamSpec::Kernel { horizon, kernel, seed } => Ok(BuiltStream {
                stream: kernel_stream(kernel, *horizon, *seed)?,
                closed_form_comparator: Some(0.0),
            }),
            StreamSpec::File { path } => Ok(BuiltStream {
                stream: read_stream(path)?,
                closed_form_comparator: None,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::schatten_norm;

    fn idx(p: f64) -> SchattenIndex {
        SchattenIndex::new(p).unwrap()
    }

    #[test]
    fn sign_stream_basics() {
        let s = schatten_lower_stream(16, 16, 1.0, 3).unwrap();
        assert_eq!(s.stream.len(), 16);
        for (t, ex) in s.stream.rounds.iter().enumerate() {
            assert_eq!(ex.x, HVector::basis(16, t));
            assert_eq!(ex.y, HVector::basis(16, t).scale(s.sigma.sign(t)));
        }
        assert_eq!(s.comparator_loss(idx(2.0)), 9.0);
        assert_eq!(s.comparator_loss(SchattenIndex::INFINITY), 0.0);
        assert!(schatten_lower_stream(8, 7, 1.0, 0).is_err());
        assert_eq!(schatten_lower_stream(16, 16, 1.0, 3).unwrap(), s);
    }

    #[test]
    fn comparator_norm_and_loss() {
        let s = schatten_lower_stream(4, 6, 1.0, 9).unwrap();
        for &p in &[1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let f = s.comparator(idx(p)).unwrap();
            assert!((schatten_norm(&f, idx(p)).unwrap() - 1.0).abs() < 1e-12);
            let loss = s.stream.loss_of(&f).unwrap();
            assert!((loss - s.comparator_loss(idx(p))).abs() < 1e-12);
        }
        let f1 = s.comparator(idx(1.0)).unwrap();
        for t in 0..4 {
            assert_eq!(f1.get(t, t).abs(), 0.25);
        }
        let neg = comparator_operator(&s.sigma.negated(), idx(2.0), 1.0, 6).unwrap();
        assert_eq!(neg, s.comparator(idx(2.0)).unwrap().scale(-1.0));
    }

    #[test]
    fn separation_streams() {
        let zero = separation_stream(10, 8, 0, 1, InstanceMode::Basis).unwrap();
        assert!(zero.rounds.iter().all(|ex| ex.y == HVector::zeros(8)));
        for mode in [InstanceMode::Basis, InstanceMode::Dense] {
            let s = separation_stream(50, 64, 5, 2, mode).unwrap();
            for ex in &s.rounds {
                assert!(ex.x.norm1() <= 1.0 + 1e-12);
                assert!(ex.y.norm2() <= 1.0 + 1e-12);
                if ex.x == HVector::basis(64, 0) {
                    assert_eq!(ex.y, HVector::basis(64, 4));
                }
            }
        }
        assert!(separation_stream(4, 8, 9, 0, InstanceMode::Basis).is_err());
    }

    #[test]
    fn witness_stream() {
        let s = rad_witness_stream(3, 3).unwrap();
        let expected: Vec<Example> = (0..3).map(|t| Example::new(HVector::basis(3, t), HVector::zeros(3))).collect();
        assert_eq!(s.rounds, expected);
    }

    #[test]
    fn validation_reports_round() {
        let rounds = vec![
            Example::new(HVector::basis(2, 0), HVector::zeros(2)),
            Example::new(HVector::new(vec![0.6, 0.6]).unwrap(), HVector::zeros(2)),
        ];
        assert!(Stream::new(2, InstanceSpace::L2Unit, 1.0, rounds.clone()).is_ok());
        assert!(matches!(
            Stream::new(2, InstanceSpace::L1Unit, 1.0, rounds),
            Err(Error::BallViolation { round: 2, .. })
        ));
    }

    #[test]
    fn spec_serde_and_seeds() {
        let json = r#"{"kind":"schatten_lower","T":8,"p":2,"c":1.0,"seed":5}"#;
        let spec: StreamSpec = serde_json::from_str(json).unwrap();
        let a = spec.build().unwrap();
        assert_eq!(a, spec.build().unwrap());
        assert_eq!(a.closed_form_comparator, Some(8.0 * (1.0 - 8f64.powf(-0.5)).powi(2)));
        assert_ne!(a.stream, spec.with_seed(6).build().unwrap().stream);
        assert!(serde_json::from_str::<StreamSpec>(r#"{"kind":"schatten_lower","T":8,"p":2,"c":1.0,"seed":5,"x":1}"#).is_err());
        let path = RademacherPath::new(vec![1, -1, 1]).unwrap();
        assert_eq!(serde_json::to_string(&path).unwrap(), "[1,-1,1]");
        assert!(serde_json::from_str::<RademacherPath>("[1,0]").is_err());
    }
}
