//! Reference computations that share no code with the library's spectral routines.

use schatten_core::LinOp;

/// Eigenvalues of a symmetric matrix, descending, by cyclic two-sided Jacobi rotations.
pub fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let mut off = 0.0;
        let mut total = 0.0;
        for (i, row) in a.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                total += x * x;
                if i != j {
                    off += x * x;
                }
            }
        }
        if off <= 1e-30 * total || total == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

/// `fᵀ f`, entry by entry.
pub fn gram(f: &LinOp) -> Vec<Vec<f64>> {
    let n = f.d_in();
    (0..n)
        .map(|i| (0..n).map(|j| (0..f.d_out()).map(|r| f.get(r, i) * f.get(r, j)).sum()).collect())
        .collect()
}

/// `Σ λ_i(fᵀ f)^{p/2}`, from the smaller of `fᵀ f` and `f fᵀ` (same nonzero
/// spectrum). Eigenvalues below `n ε λ_max` are rounding noise of zero and are
/// dropped, since their square roots would be of order `sqrt(ε)`.
pub fn power_trace(f: &LinOp, p: f64) -> f64 {
    let g = if f.d_in() <= f.d_out() { gram(f) } else { gram(&f.adjoint()) };
    let n = g.len();
    let eig = symmetric_eigenvalues(g);
    let floor = eig.first().copied().unwrap_or(0.0).max(0.0) * n as f64 * f64::EPSILON;
    eig.iter().filter(|&&l| l > floor).map(|&l| l.powf(p / 2.0)).sum()
}

/// `sqrt(∫∫ K²)` by midpoint summation on a `d x d` grid.
pub fn grid_l2_norm(kernel: impl Fn(f64, f64) -> f64, d: usize) -> f64 {
    let h = 1.0 / d as f64;
    let mut sum = 0.0;
    for i in 0..d {
        for j in 0..d {
            sum += kernel((i as f64 + 0.5) * h, (j as f64 + 0.5) * h).powi(2);
        }
    }
    (sum * h * h).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_spectra() {
        let eig = symmetric_eigenvalues(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((eig[0] - 3.0).abs() < 1e-14 && (eig[1] - 1.0).abs() < 1e-14);
        let f = LinOp::diagonal(3, 2, &[3.0, -4.0]);
        assert!((power_trace(&f, 2.0) - 25.0).abs() < 1e-12);
        assert!((power_trace(&f, 1.0) - 7.0).abs() < 1e-12);
        let wide = LinOp::from_rows(&[vec![1.0, 2.0, 2.0]]).unwrap();
        assert!((power_trace(&wide, 1.0) - 3.0).abs() < 1e-14);
        assert_eq!(power_trace(&LinOp::zeros(2, 3), 1.0), 0.0);
        assert!((grid_l2_norm(|_, _| 1.0, 8) - 1.0).abs() < 1e-15);
    }
}
