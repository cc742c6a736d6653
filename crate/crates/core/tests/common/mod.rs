#![allow(dead_code)]

use proptest::prelude::*;
use schatten_core::{HVector, LinOp};

pub fn op(d_out: usize, d_in: usize, data: Vec<f64>) -> LinOp {
    LinOp::from_row_major(d_out, d_in, data).unwrap()
}

pub fn vector(max_dim: usize) -> impl Strategy<Value = HVector> {
    (1..=max_dim).prop_flat_map(|d| prop::collection::vec(-3.0..3.0f64, d).prop_map(|v| HVector::new(v).unwrap()))
}

pub fn vec_of(d: usize) -> impl Strategy<Value = HVector> {
    prop::collection::vec(-3.0..3.0f64, d).prop_map(|v| HVector::new(v).unwrap())
}

pub fn matrix_of(d_out: usize, d_in: usize) -> impl Strategy<Value = LinOp> {
    prop::collection::vec(-2.0..2.0f64, d_out * d_in).prop_map(move |v| op(d_out, d_in, v))
}

pub fn matrix(max_dim: usize) -> impl Strategy<Value = LinOp> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| matrix_of(r, c))
}

/// Matrices with repeated singular values, zero rows or tiny entries.
pub fn awkward_matrix(max_dim: usize) -> impl Strategy<Value = LinOp> {
    prop_oneof![
        matrix(max_dim),
        (1..=max_dim, 1..=max_dim, 1..=3usize).prop_flat_map(|(r, c, rank)| {
            (prop::collection::vec(vec_of(r), rank), prop::collection::vec(vec_of(c), rank)).prop_map(move |(ws, vs)| {
                let mut f = LinOp::zeros(r, c);
                for (w, v) in ws.iter().zip(&vs) {
                    f.add_rank_one(1.0, w, v).unwrap();
                }
                f
            })
        }),
        (1..=max_dim, prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), Just(-1.0), -1.0..1.0f64], max_dim))
            .prop_map(|(d, diag)| LinOp::diagonal(d, d, &diag[..d])),
    ]
}

pub fn mat_vec(f: &LinOp, v: &[f64]) -> Vec<f64> {
    (0..f.d_out()).map(|i| (0..f.d_in()).map(|j| f.get(i, j) * v[j]).sum()).collect()
}

/// `fᵀ f` computed entrywise.
pub fn gram(f: &LinOp) -> Vec<Vec<f64>> {
    let n = f.d_in();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = (0..f.d_out()).map(|r| f.get(r, i) * f.get(r, j)).sum();
        }
    }
    g
}

/// Eigenvalues of a symmetric matrix by classical cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let total: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eig
}

/// `Σ_i λ_i(fᵀ f)^{p/2}` from the oracle eigensolver.
pub fn oracle_power_trace(f: &LinOp, p: f64) -> f64 {
    symmetric_eigenvalues(gram(f)).iter().map(|&l| l.max(0.0).powf(p / 2.0)).sum()
}

pub fn oracle_singular_values(f: &LinOp) -> Vec<f64> {
    symmetric_eigenvalues(gram(f)).iter().map(|&l| l.max(0.0).sqrt()).collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
