//! One-sided (Hestenes) Jacobi SVD with a fixed cyclic sweep order.
//!
//! The working matrix always has at least as many rows as columns; wider
//! inputs are transposed first and the factors swapped at the end. Each sweep
//! visits the column pairs `(p, q)`, `p < q`, in lexicographic order, which
//! makes the decomposition a deterministic function of the input.

use serde::{Deserialize, Serialize};

use super::RANK_TOLERANCE;
use crate::error::{Error, Result};
use crate::hilbert::{dot, LinOp};

/// Stop once the relative off-diagonal mass of the column Gram matrix drops below this.
const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
/// Pairs whose relative coupling is below this are left alone.
const ROTATION_THRESHOLD: f64 = 1e-15;
const MAX_SWEEPS: usize = 60;

/// `f = U diag(s) V*` with `r = min(d_in, d_out)` columns in `U` and `V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdFactors {
    /// `d_out x r`, orthonormal columns.
    pub u: LinOp,
    /// Descending, nonnegative.
    pub s: Vec<f64>,
    /// `d_in x r`, orthonormal columns.
    pub v: LinOp,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> LinOp {
        let (d_out, d_in, r) = (self.u.d_out(), self.v.d_out(), self.s.len());
        let mut data = vec![0.0; d_out * d_in];
        for k in 0..r {
            let s = self.s[k];
            if s == 0.0 {
                continue;
            }
            for i in 0..d_out {
                let a = s * self.u.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let row = &mut data[i * d_in..(i + 1) * d_in];
                for (j, x) in row.iter_mut().enumerate() {
                    *x += a * self.v.get(j, k);
                }
            }
        }
        LinOp::from_raw(d_out, d_in, data)
    }

    /// Count of singular values above `RANK_TOLERANCE * s[0]`.
    pub fn rank(&self) -> usize {
        let floor = self.s.first().copied().unwrap_or(0.0) * RANK_TOLERANCE;
        self.s.iter().filter(|&&x| x > floor).count()
    }
}

fn check_finite(f: &LinOp) -> Result<()> {
    if f.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("svd input"));
    }
    Ok(())
}

/// Columns of `f` (or of `f*` when `f` is wide), so that there are at most as
/// many working columns as rows. Returns `(columns, transposed)`.
fn working_columns(f: &LinOp) -> (Vec<Vec<f64>>, bool) {
    let (m, n) = (f.d_out(), f.d_in());
    if m >= n {
        let cols = (0..n).map(|j| (0..m).map(|i| f.get(i, j)).collect()).collect();
        (cols, false)
    } else {
        (f.data().chunks(n).map(<[f64]>::to_vec).collect(), true)
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (a, b) = (&mut head[p], &mut tail[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Orthogonalises the columns in place; applies the same rotations to `v` if given.
fn jacobi_sweeps(cols: &mut [Vec<f64>], mut v: Option<&mut [Vec<f64>]>) {
    let n = cols.len();
    if n < 2 {
        return;
    }
    let mut norms_sq: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    for _ in 0..MAX_SWEEPS {
        let mut off_mass = 0.0;
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norms_sq[p];
                let beta = norms_sq[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                let rel = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                off_mass += rel * rel;
                if rel <= ROTATION_THRESHOLD {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(cols, p, q, c, s);
                if let Some(v) = v.as_deref_mut() {
                    rotate(v, p, q, c, s);
                }
                norms_sq[p] = dot(&cols[p], &cols[p]);
                norms_sq[q] = dot(&cols[q], &cols[q]);
                rotated = true;
            }
        }
        if !rotated || off_mass.sqrt() <= OFF_DIAGONAL_TOLERANCE {
            break;
        }
    }
}

/// Descending order of `values`, ties broken by index.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Fills the `None` slots with unit vectors orthogonal to everything else,
/// drawn from the standard basis by Gram-Schmidt (two passes). Takes the
/// first candidate whose residual norm exceeds 1/2, else the largest residual.
fn complete_basis(dim: usize, cols: &mut [Option<Vec<f64>>]) {
    let residual = |cols: &[Option<Vec<f64>>], j: usize| {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        for _ in 0..2 {
            for other in cols.iter().flatten() {
                let proj = dot(&e, other);
                for (x, o) in e.iter_mut().zip(other) {
                    *x -= proj * o;
                }
            }
        }
        let norm = dot(&e, &e).sqrt();
        (e, norm)
    };
    let mut candidate = 0;
    for slot in 0..cols.len() {
        if cols[slot].is_some() {
            continue;
        }
        let mut chosen = None;
        while candidate < dim {
            let (e, norm) = residual(cols, candidate);
            candidate += 1;
            if norm > 0.5 {
                chosen = Some((e, norm));
                break;
            }
        }
        let (mut e, norm) = chosen.unwrap_or_else(|| {
            (0..dim)
                .map(|j| residual(cols, j))
                .fold((Vec::new(), f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        });
        e.iter_mut().for_each(|x| *x /= norm);
        cols[slot] = Some(e);
    }
}

fn columns_to_linop(rows: usize, cols: &[Vec<f64>]) -> LinOp {
    let mut data = vec![0.0; rows * cols.len()];
    for (j, col) in cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            data[i * cols.len() + j] = x;
        }
    }
    LinOp::from_raw(rows, cols.len(), data)
}

/// Full SVD with `r = min(d_in, d_out)` singular triplets.
pub fn svd(f: &LinOp) -> Result<SvdFactors> {
    check_finite(f)?;
    let (mut cols, transposed) = working_columns(f);
    let n = cols.len();
    let m = if transposed { f.d_in() } else { f.d_out() };
    let mut right: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    jacobi_sweeps(&mut cols, Some(&mut right));

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let order = descending_order(&norms);
    let floor = order.first().map_or(0.0, |&k| norms[k]) * RANK_TOLERANCE;
    let s: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let mut left: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&k| {
            (norms[k] > floor && norms[k] > 0.0)
                .then(|| cols[k].iter().map(|x| x / norms[k]).collect())
        })
        .collect();
    complete_basis(m, &mut left);
    let left: Vec<Vec<f64>> = left.into_iter().map(Option::unwrap).collect();
    let right: Vec<Vec<f64>> = order.iter().map(|&k| right[k].clone()).collect();

    let (u, v) = if transposed {
        (columns_to_linop(n, &right), columns_to_linop(m, &left))
    } else {
        (columns_to_linop(m, &left), columns_to_linop(n, &right))
    };
    Ok(SvdFactors { u, s, v })
}

/// Indices of the rows and columns of `f` that contain a nonzero entry, and
/// the submatrix they span. Singular values are unaffected by dropping zero
/// rows and columns.
pub(crate) fn compact(f: &LinOp) -> (Vec<usize>, Vec<usize>, LinOp) {
    let (m, n) = (f.d_out(), f.d_in());
    let mut col_used = vec![false; n];
    let mut rows = Vec::new();
    for i in 0..m {
        let mut any = false;
        for (j, &x) in f.row(i).iter().enumerate() {
            if x != 0.0 {
                col_used[j] = true;
                any = true;
            }
        }
        if any {
            rows.push(i);
        }
    }
    let cols: Vec<usize> = (0..n).filter(|&j| col_used[j]).collect();
    let mut data = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        data.extend(cols.iter().map(|&j| f.get(i, j)));
    }
    let sub = LinOp::from_raw(rows.len(), cols.len(), data);
    (rows, cols, sub)
}

/// Singular values in descending order, padded with zeros to `min(d_in, d_out)`.
pub fn singular_values(f: &LinOp) -> Result<Vec<f64>> {
    check_finite(f)?;
    let r = f.d_in().min(f.d_out());
    let (_, _, sub) = compact(f);
    let mut s = if sub.d_in() == 0 {
        Vec::new()
    } else {
        let (mut cols, _) = working_columns(&sub);
        jacobi_sweeps(&mut cols, None);
        let mut s: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    s.resize(r, 0.0);
    Ok(s)
}

/// SVD of the compacted submatrix together with the row and column indices
/// it lives on. `None` for the zero operator.
pub(crate) fn compact_svd(f: &LinOp) -> Result<Option<(Vec<usize>, Vec<usize>, SvdFactors)>> {
    check_finite(f)?;
    let (rows, cols, sub) = compact(f);
    if sub.d_in() == 0 {
        return Ok(None);
    }
    Ok(Some((rows, cols, svd(&sub)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{tensor, HVector};
    use rand::Rng;

    fn assert_orthonormal_columns(q: &LinOp, tol: f64) {
        let g = q.adjoint().compose(q).unwrap();
        let id = LinOp::identity(q.d_in());
        assert!(g.max_abs_diff(&id) < tol, "gram deviates by {}", g.max_abs_diff(&id));
    }

    fn check_factors(f: &LinOp) {
        let sv = svd(f).unwrap();
        assert_eq!(sv.s.len(), f.d_in().min(f.d_out()));
        assert!(sv.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(sv.s.iter().all(|&x| x >= 0.0));
        assert_orthonormal_columns(&sv.u, 1e-8);
        assert_orthonormal_columns(&sv.v, 1e-8);
        assert!(sv.reconstruct().max_abs_diff(f) < 1e-8);
    }

    #[test]
    fn identity_and_rank_one() {
        let sv = svd(&LinOp::identity(3)).unwrap();
        assert_eq!(sv.s, vec![1.0, 1.0, 1.0]);
        let w = HVector::new(vec![3.0, 0.0, 4.0]).unwrap();
        let v = HVector::new(vec![0.0, 2.0]).unwrap();
        let sv = svd(&tensor(&w, &v)).unwrap();
        assert!((sv.s[0] - 10.0).abs() < 1e-12);
        assert_eq!(sv.s[1], 0.0);
        check_factors(&tensor(&w, &v));
    }

    #[test]
    fn zero_and_degenerate_shapes() {
        check_factors(&LinOp::zeros(3, 2));
        check_factors(&LinOp::zeros(2, 5));
        check_factors(&LinOp::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap());
        check_factors(&LinOp::from_rows(&[vec![1.0], vec![-2.0]]).unwrap());
        assert_eq!(singular_values(&LinOp::zeros(4, 3)).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn random_rectangular_matrices() {
        let mut rng = crate::rng::seeded(7);
        for _ in 0..40 {
            let m = rng.gen_range(1..12);
            let n = rng.gen_range(1..12);
            let data = (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = LinOp::from_row_major(m, n, data).unwrap();
            check_factors(&f);
            let s_full = svd(&f).unwrap().s;
            let s_vals = singular_values(&f).unwrap();
            for (a, b) in s_full.iter().zip(&s_vals) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repeated_singular_values() {
        let f = LinOp::diagonal(4, 4, &[2.0, 2.0, 2.0, 0.0]);
        check_factors(&f);
    }

    #[test]
    fn dense_null_direction_is_completed() {
        // I - u u* with u spread over all coordinates: no basis vector has a
        // residual above 1/2 against the 63 kept directions.
        let d = 64;
        let u = HVector::new(vec![1.0 / (d as f64).sqrt(); d]).unwrap();
        let mut f = LinOp::identity(d);
        f.axpy(-1.0, &tensor(&u, &u)).unwrap();
        check_factors(&f);
        assert!(svd(&f).unwrap().s[d - 1] < 1e-12);
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut f = LinOp::identity(2);
        f.set(0, 1, f64::NAN);
        assert!(matches!(svd(&f), Err(Error::NonFinite(_))));
        assert!(singular_values(&f).is_err());
    }

    #[test]
    fn compaction_keeps_spectrum() {
        let mut f = LinOp::zeros(6, 5);
        f.set(1, 3, 2.0);
        f.set(4, 3, 1.0);
        f.set(4, 0, -1.0);
        let (rows, cols, sub) = compact(&f);
        assert_eq!(rows, vec![1, 4]);
        assert_eq!(cols, vec![0, 3]);
        assert_eq!(sub.d_out(), 2);
        let a = singular_values(&f).unwrap();
        let b = svd(&f).unwrap().s;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
