//! Truncated Hilbert space arithmetic.
//!
//! Elements of `V` and `W` are stored by their coefficients in the standard
//! orthonormal bases `{e_n}` and `{psi_n}`; operators are dense row-major
//! matrices with entry `(i, j) = <psi_i, f(e_j)>`. Indices are 0-based, so the
//! basis vector usually written `e_1` is `HVector::basis(d, 0)`.
//!
//! Tensor convention: `w ⊗ v` is the rank-one map `u ↦ <v, u> w`, i.e. the
//! matrix with entries `w[i] * v[j]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient vector of an element of a truncated Hilbert space.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct HVector(Vec<f64>);

impl HVector {
    /// Builds a vector from raw coefficients, rejecting NaN and infinities.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("vector coefficients"));
        }
        Ok(HVector(coeffs))
    }

    pub fn zeros(d: usize) -> Self {
        HVector(vec![0.0; d])
    }

    /// The `index`-th standard basis vector (0-based).
    pub fn basis(d: usize, index: usize) -> Self {
        assert!(index < d, "basis index {index} out of range for dimension {d}");
        let mut v = vec![0.0; d];
        v[index] = 1.0;
        HVector(v)
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        HVector(coeffs)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn norm2_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, a: f64) -> HVector {
        HVector(self.0.iter().map(|c| a * c).collect())
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &HVector, b: f64) -> Result<HVector> {
        check_dims("lin_comb", self.dim(), other.dim())?;
        Ok(HVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(u, v)| a * u + b * v)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &HVector) -> Result<HVector> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &HVector) -> Result<HVector> {
        self.lin_comb(1.0, other, 1.0)
    }

    /// Indices and values of the nonzero coefficients.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.0
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, c)| c != 0.0)
    }
}

impl fmt::Debug for HVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("HVector").field(&self.0).finish()
    }
}

impl std::ops::Index<usize> for HVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn check_dims(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::dims(context, expected, found));
    }
    Ok(())
}

/// `<u, v> = sum_n u[n] v[n]`.
pub fn inner(u: &HVector, v: &HVector) -> Result<f64> {
    check_dims("inner", u.dim(), v.dim())?;
    Ok(dot(&u.0, &v.0))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense linear operator `V_{d_in} -> W_{d_out}`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct LinOp {
    d_in: usize,
    d_out: usize,
    data: Vec<f64>,
}

impl LinOp {
    pub fn zeros(d_out: usize, d_in: usize) -> Self {
        LinOp {
            d_in,
            d_out,
            data: vec![0.0; d_in * d_out],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut f = LinOp::zeros(d, d);
        for i in 0..d {
            f.data[i * d + i] = 1.0;
        }
        f
    }

    pub fn diagonal(d_out: usize, d_in: usize, diag: &[f64]) -> Self {
        let mut f = LinOp::zeros(d_out, d_in);
        for (i, &s) in diag.iter().enumerate().take(d_out.min(d_in)) {
            f.data[i * d_in + i] = s;
        }
        f
    }

    /// Builds an operator from row-major data, validating shape and finiteness.
    pub fn from_row_major(d_out: usize, d_in: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != d_in * d_out {
            return Err(Error::dims("operator data length", d_in * d_out, data.len()));
        }
        if data.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("operator entries"));
        }
        Ok(LinOp { d_in, d_out, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d_out = rows.len();
        let d_in = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(d_in * d_out);
        for row in rows {
            check_dims("from_rows", d_in, row.len())?;
            data.extend_from_slice(row);
        }
        LinOp::from_row_major(d_out, d_in, data)
    }

    pub(crate) fn from_raw(d_out: usize, d_in: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), d_in * d_out);
        LinOp { d_in, d_out, data }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d_in + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.d_in + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d_in..(i + 1) * self.d_in]
    }

    pub fn column(&self, j: usize) -> HVector {
        HVector((0..self.d_out).map(|i| self.get(i, j)).collect())
    }

    pub fn is_square(&self) -> bool {
        self.d_in == self.d_out
    }

    /// `f(v)`. Sparse inputs (e.g. basis vectors) are handled column-wise.
    pub fn apply(&self, v: &HVector) -> Result<HVector> {
        check_dims("apply", self.d_in, v.dim())?;
        let nnz = v.0.iter().filter(|c| **c != 0.0).count();
        let out = if nnz * 4 < self.d_in {
            let mut out = vec![0.0; self.d_out];
            for (j, vj) in v.nonzeros() {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += self.data[i * self.d_in + j] * vj;
                }
            }
            out
        } else {
            (0..self.d_out).map(|i| dot(self.row(i), &v.0)).collect()
        };
        Ok(HVector(out))
    }

    /// `f*`, the transpose in orthonormal coordinates.
    pub fn adjoint(&self) -> LinOp {
        let mut t = LinOp::zeros(self.d_in, self.d_out);
        for i in 0..self.d_out {
            for j in 0..self.d_in {
                t.data[j * self.d_out + i] = self.data[i * self.d_in + j];
            }
        }
        t
    }

    /// `self ∘ f` (apply `f` first).
    pub fn compose(&self, f: &LinOp) -> Result<LinOp> {
        check_dims("compose", self.d_in, f.d_out)?;
        let mut out = LinOp::zeros(self.d_out, f.d_in);
        for i in 0..self.d_out {
            let orow = &mut out.data[i * f.d_in..(i + 1) * f.d_in];
            for k in 0..self.d_in {
                let a = self.data[i * self.d_in + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in orow.iter_mut().zip(f.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `tr(g) = sum_n <g(e_n), e_n>`; requires a square operator.
    pub fn trace(&self) -> Result<f64> {
        check_dims("trace", self.d_out, self.d_in)?;
        Ok((0..self.d_in).map(|n| self.get(n, n)).sum())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scale(&self, a: f64) -> LinOp {
        LinOp {
            d_in: self.d_in,
            d_out: self.d_out,
            data: self.data.iter().map(|c| a * c).collect(),
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &LinOp) -> Result<()> {
        check_dims("axpy rows", self.d_out, other.d_out)?;
        check_dims("axpy columns", self.d_in, other.d_in)?;
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
        Ok(())
    }

    pub fn sub(&self, other: &LinOp) -> Result<LinOp> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// `self += a * (w ⊗ v)` without materialising the rank-one term.
    pub fn add_rank_one(&mut self, a: f64, w: &HVector, v: &HVector) -> Result<()> {
        check_dims("rank-one update (output)", self.d_out, w.dim())?;
        check_dims("rank-one update (input)", self.d_in, v.dim())?;
        for (j, vj) in v.nonzeros() {
            for (i, wi) in w.nonzeros() {
                self.data[i * self.d_in + j] += a * wi * vj;
            }
        }
        Ok(())
    }

    /// Frobenius inner product `tr(self* other)`.
    pub fn frobenius_inner(&self, other: &LinOp) -> Result<f64> {
        check_dims("frobenius_inner rows", self.d_out, other.d_out)?;
        check_dims("frobenius_inner columns", self.d_in, other.d_in)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn max_abs_diff(&self, other: &LinOp) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl fmt::Debug for LinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinOp")
            .field("d_out", &self.d_out)
            .field("d_in", &self.d_in)
            .field("data", &self.data)
            .finish()
    }
}

/// `w ⊗ v`, kept factored.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOne {
    pub left: HVector,
    pub right: HVector,
}

impl RankOne {
    pub fn new(left: HVector, right: HVector) -> Self {
        RankOne { left, right }
    }

    /// `<right, u> * left`.
    pub fn apply(&self, u: &HVector) -> Result<HVector> {
        Ok(self.left.scale(inner(&self.right, u)?))
    }

    pub fn materialize(&self) -> LinOp {
        tensor(&self.left, &self.right)
    }
}

/// Materialised `w ⊗ v`: entry `(i, j) = w[i] * v[j]`.
pub fn tensor(w: &HVector, v: &HVector) -> LinOp {
    let mut data = Vec::with_capacity(w.dim() * v.dim());
    for &wi in &w.0 {
        data.extend(v.0.iter().map(|vj| wi * vj));
    }
    LinOp::from_raw(w.dim(), v.dim(), data)
}

pub fn apply(f: &LinOp, v: &HVector) -> Result<HVector> {
    f.apply(v)
}

pub fn adjoint(f: &LinOp) -> LinOp {
    f.adjoint()
}

/// `g ∘ f`.
pub fn compose(g: &LinOp, f: &LinOp) -> Result<LinOp> {
    g.compose(f)
}

pub fn trace(g: &LinOp) -> Result<f64> {
    g.trace()
}

/// `tr(f ∘ (v ⊗ w))` for `f: V -> W`, `v ∈ V`, `w ∈ W`.
///
/// `v ⊗ w` maps `W` back into `V`, so the composition is an endomorphism of
/// `W` and its trace equals `<f(v), w>`.
pub fn trace_pairing(f: &LinOp, v: &HVector, w: &HVector) -> Result<f64> {
    check_dims("trace_pairing input", f.d_in(), v.dim())?;
    check_dims("trace_pairing output", f.d_out(), w.dim())?;
    f.compose(&tensor(v, w))?.trace()
}

/// Flat JSON form shared by vectors and operators:
/// `{"d_in": .., "d_out": .., "data": [row-major]}`. Vectors are columns (`d_in = 1`).
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    d_in: usize,
    d_out: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixJson> for LinOp {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        if m.d_in == 0 || m.d_out == 0 {
            return Err(Error::param("d_in/d_out", "dimensions must be positive"));
        }
        let expected = m
            .d_in
            .checked_mul(m.d_out)
            .ok_or_else(|| Error::param("d_in/d_out", "dimension product overflows"))?;
        if expected != m.data.len() {
            return Err(Error::dims("operator data length", expected, m.data.len()));
        }
        LinOp::from_row_major(m.d_out, m.d_in, m.data)
    }
}

impl From<LinOp> for MatrixJson {
    fn from(f: LinOp) -> Self {
        MatrixJson {
            d_in: f.d_in,
            d_out: f.d_out,
            data: f.data,
        }
    }
}

impl TryFrom<MatrixJson> for HVector {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        if m.d_in != 1 {
            return Err(Error::dims("vector JSON d_in", 1, m.d_in));
        }
        if m.d_out != m.data.len() {
            return Err(Error::dims("vector data length", m.d_out, m.data.len()));
        }
        HVector::new(m.data)
    }
}

impl From<HVector> for MatrixJson {
    fn from(v: HVector) -> Self {
        MatrixJson {
            d_in: 1,
            d_out: v.dim(),
            data: v.0,
        }
    }
}

impl LinOp {
    pub fn from_json_str(s: &str) -> Result<LinOp> {
        serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("operator serialization is infallible")
    }
}

impl HVector {
    pub fn from_json_str(s: &str) -> Result<HVector> {
        serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("vector serialization is infallible")
    }
}
