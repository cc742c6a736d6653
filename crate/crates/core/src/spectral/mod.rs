//! Singular values, Schatten norms and Euclidean projections onto Schatten balls.
//!
//! For a compact operator the p-Schatten norm is the l_p norm of its singular
//! values; `p = 2` is the Hilbert-Schmidt (Frobenius) norm, `p = ∞` the
//! operator norm and `p = 1` the trace norm.

mod projection;
mod svd;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::LinOp;

pub use projection::{lp_norm, project_lp_ball, project_schatten_ball};
pub use svd::{singular_values, svd, SvdFactors};
pub(crate) use projection::project_signed_entries;

/// Relative floor below which singular values count as zero when counting rank.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Schatten index `p ∈ [1, ∞]`. Serialises as a number, or `"inf"` for `p = ∞`.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct SchattenIndex(f64);

impl SchattenIndex {
    pub const ONE: SchattenIndex = SchattenIndex(1.0);
    pub const TWO: SchattenIndex = SchattenIndex(2.0);
    pub const INFINITY: SchattenIndex = SchattenIndex(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::param("p", format!("Schatten index must be in [1, inf], got {p}")));
        }
        Ok(SchattenIndex(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/p`, which is 0 for `p = ∞`.
    pub fn reciprocal(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> SchattenIndex {
        if self.0 == 1.0 {
            SchattenIndex::INFINITY
        } else if self.is_infinite() {
            SchattenIndex::ONE
        } else {
            SchattenIndex(self.0 / (self.0 - 1.0))
        }
    }
}

impl fmt::Debug for SchattenIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SchattenIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl TryFrom<f64> for SchattenIndex {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        SchattenIndex::new(p)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IndexRepr {
    Number(f64),
    Name(String),
}

impl Serialize for SchattenIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for SchattenIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let p = match IndexRepr::deserialize(d)? {
            IndexRepr::Number(p) => p,
            IndexRepr::Name(name) => match name.as_str() {
                "inf" | "infinity" | "Infinity" => f64::INFINITY,
                other => return Err(D::Error::custom(format!("unknown Schatten index `{other}`"))),
            },
        };
        SchattenIndex::new(p).map_err(D::Error::custom)
    }
}

/// The feasible set `{f : ||f||_p <= c}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BallRepr", into = "BallRepr")]
pub struct BallSpec {
    p: SchattenIndex,
    c: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BallRepr {
    p: SchattenIndex,
    c: f64,
}

impl TryFrom<BallRepr> for BallSpec {
    type Error = Error;

    fn try_from(b: BallRepr) -> Result<Self> {
        BallSpec::new(b.p, b.c)
    }
}

impl From<BallSpec> for BallRepr {
    fn from(b: BallSpec) -> Self {
        BallRepr { p: b.p, c: b.c }
    }
}

impl BallSpec {
    pub fn new(p: SchattenIndex, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::param("c", format!("radius must be positive and finite, got {c}")));
        }
        Ok(BallSpec { p, c })
    }

    pub fn p(&self) -> SchattenIndex {
        self.p
    }

    pub fn radius(&self) -> f64 {
        self.c
    }

    /// Membership with a relative slack of `1e-9`.
    pub fn contains(&self, f: &LinOp) -> Result<bool> {
        Ok(schatten_norm(f, self.p)? <= self.c * (1.0 + 1e-9))
    }
}

/// `||f||_p`: the l_p norm of the singular values of `f`.
pub fn schatten_norm(f: &LinOp, p: SchattenIndex) -> Result<f64> {
    Ok(lp_norm(&singular_values(f)?, p))
}

/// `||f||_op`, the largest singular value.
pub fn operator_norm(f: &LinOp) -> Result<f64> {
    schatten_norm(f, SchattenIndex::INFINITY)
}

/// `tr(|f|^p) = sum_n s_n^p` for finite `p >= 1`.
pub fn abs_power_trace(f: &LinOp, p: SchattenIndex) -> Result<f64> {
    if p.is_infinite() {
        return Err(Error::param("p", "tr(|f|^p) needs a finite exponent"));
    }
    Ok(singular_values(f)?.iter().map(|s| s.powf(p.value())).sum())
}

/// Number of singular values above `RANK_TOLERANCE * s_max`.
pub fn numerical_rank(f: &LinOp) -> Result<usize> {
    let s = singular_values(f)?;
    let floor = s.first().copied().unwrap_or(0.0) * RANK_TOLERANCE;
    Ok(s.iter().filter(|&&x| x > floor).count())
}
