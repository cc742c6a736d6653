//! Integral operators on `L²[0, 1]`, discretized on a uniform grid.
//!
//! The basis is the orthonormal family of scaled step functions
//! `e_j = sqrt(d) 1[j/d, (j+1)/d)`. With midpoint quadrature the matrix entry
//! is `K(r_i, s_j) / d`, and the Frobenius norm of the matrix equals the
//! grid L² norm of the kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::LinOp;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kernel {
    /// `exp(-(r - s)² / (2 h²))`.
    Gaussian { bandwidth: f64 },
    Constant { value: f64 },
    /// `min(r, s)`, the Brownian motion covariance.
    BrownianMin,
}

impl Kernel {
    pub fn eval(&self, r: f64, s: f64) -> f64 {
        match *self {
            Kernel::Gaussian { bandwidth } => (-(r - s).powi(2) / (2.0 * bandwidth * bandwidth)).exp(),
            Kernel::Constant { value } => value,
            Kernel::BrownianMin => r.min(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub kernel: Kernel,
    /// Grid resolution, also the truncation dimension.
    pub grid: usize,
    /// Claimed bound on the kernel's L² norm.
    pub c: f64,
}

fn midpoint(i: usize, d: usize) -> f64 {
    (i as f64 + 0.5) / d as f64
}

fn kernel_matrix(kernel: &Kernel, d: usize) -> Result<LinOp> {
    if d < 2 {
        return Err(Error::param("grid", format!("resolution must be at least 2, got {d}")));
    }
    let scale = 1.0 / d as f64;
    let mut data = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let v = kernel.eval(midpoint(i, d), midpoint(j, d));
            if !v.is_finite() {
                return Err(Error::NonFinite("kernel value"));
            }
            data.push(v * scale);
        }
    }
    LinOp::from_row_major(d, d, data)
}

/// `sqrt((1/d²) Σ_{i,j} K(r_i, s_j)²)`, the midpoint-rule L² norm of the kernel.
pub fn kernel_l2_norm(kernel: &Kernel, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::param("grid", format!("resolution must be at least 2, got {d}")));
    }
    let mut sum = 0.0;
    for i in 0..d {
        for j in 0..d {
            let v = kernel.eval(midpoint(i, d), midpoint(j, d));
            if !v.is_finite() {
                return Err(Error::NonFinite("kernel value"));
            }
            sum += v * v;
        }
    }
    Ok(sum.sqrt() / d as f64)
}

/// The discretized integral operator. Fails if the kernel's grid L² norm
/// exceeds the claimed bound `spec.c`.
pub fn kernel_operator(spec: &KernelSpec) -> Result<LinOp> {
    if !(spec.c >= 0.0 && spec.c.is_finite()) {
        return Err(Error::param("c", format!("bound must be nonnegative, got {}", spec.c)));
    }
    let norm = kernel_l2_norm(&spec.kernel, spec.grid)?;
    if norm > spec.c * (1.0 + 1e-12) {
        return Err(Error::param(
            "c",
            format!("kernel L2 norm {norm} exceeds the claimed bound {}", spec.c),
        ));
    }
    kernel_matrix(&spec.kernel, spec.grid)
}
