//! Euclidean projections onto nonnegative ℓp balls and their spectral lift
//! onto Schatten balls.

use super::svd::compact_svd;
use super::{BallSpec, SchattenIndex, SvdFactors};
use crate::error::{Error, Result};
use crate::hilbert::LinOp;

const NORM_TOLERANCE: f64 = 1e-12;
const MAX_BISECTIONS: usize = 400;
const MAX_NEWTON: usize = 200;

/// ℓp norm of a sequence, computed with a max-rescaling to avoid overflow.
pub fn lp_norm(s: &[f64], p: SchattenIndex) -> f64 {
    let max = s.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 || p.is_infinite() {
        return max;
    }
    let p = p.value();
    if p == 1.0 {
        return s.iter().map(|x| x.abs()).sum();
    }
    if p == 2.0 {
        let sum: f64 = s.iter().map(|x| (x / max) * (x / max)).sum();
        return max * sum.sqrt();
    }
    let sum: f64 = s.iter().map(|x| (x.abs() / max).powf(p)).sum();
    max * sum.powf(1.0 / p)
}

/// Euclidean projection of a nonnegative sequence onto `{x >= 0 : ‖x‖_p <= c}`.
pub fn project_lp_ball(s: &[f64], p: SchattenIndex, c: f64) -> Result<Vec<f64>> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("c", format!("radius must be positive and finite, got {c}")));
    }
    if let Some(bad) = s.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::param("s", format!("entries must be finite and nonnegative, got {bad}")));
    }
    if lp_norm(s, p) <= c {
        return Ok(s.to_vec());
    }
    let out = if p.is_infinite() {
        s.iter().map(|&x| x.min(c)).collect()
    } else if p.value() == 2.0 {
        let scale = c / lp_norm(s, p);
        s.iter().map(|&x| x * scale).collect()
    } else if p.value() == 1.0 {
        project_l1(s, c)
    } else {
        project_general(s, p.value(), c)
    };
    Ok(out)
}

/// Soft thresholding at the level that puts the result on the ℓ1 sphere.
fn project_l1(s: &[f64], c: f64) -> Vec<f64> {
    let mut sorted = s.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumulative += x;
        let candidate = (cumulative - c) / (k + 1) as f64;
        if x > candidate {
            tau = candidate;
        } else {
            break;
        }
    }
    s.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Solves `x + mu * x^(p-1) = v` for `x` in `(0, v]`, working in `y = ln x`
/// where the residual is convex and increasing. Newton from the upper bracket
/// then decreases monotonically to the root.
fn shrink_coordinate(v: f64, log_mu: f64, p: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let log_v = v.ln();
    let mut y = log_v.min((log_v - log_mu) / (p - 1.0));
    for _ in 0..MAX_NEWTON {
        let a = y.exp();
        let b = (log_mu + (p - 1.0) * y).exp();
        let h = a + b - v;
        if h <= 0.0 {
            break;
        }
        let step = h / (a + (p - 1.0) * b);
        y -= step;
        if step <= 1e-15 * y.abs().max(1.0) {
            break;
        }
    }
    y.exp()
}

fn project_general(s: &[f64], p: f64, c: f64) -> Vec<f64> {
    let max = s.iter().fold(0.0_f64, |m, &x| m.max(x));
    let v: Vec<f64> = s.iter().map(|x| x / max).collect();
    let radius = c / max;
    let norm_at = |log_mu: f64| -> (Vec<f64>, f64) {
        let x: Vec<f64> = v.iter().map(|&vi| shrink_coordinate(vi, log_mu, p)).collect();
        let n = lp_norm(&x, SchattenIndex(p));
        (x, n)
    };

    let (mut lo, mut hi) = (-50.0_f64, 50.0_f64);
    while norm_at(lo).1 < radius && lo > -1e4 {
        lo -= 50.0;
    }
    while norm_at(hi).1 > radius && hi < 1e4 {
        hi += 50.0;
    }
    let mut best = norm_at(hi).0;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let (x, n) = norm_at(mid);
        let close = (n - radius).abs() <= NORM_TOLERANCE * radius;
        if n > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if n <= radius || close {
            best = x;
        }
        if close || hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    let n = lp_norm(&best, SchattenIndex(p));
    let shrink = if n > radius { radius / n } else { 1.0 };
    best.iter().map(|x| x * shrink * max).collect()
}

/// Nonzero entries `(row, col, value)` when every row and every column of `f`
/// holds at most one of them. The singular values of such an operator are the
/// absolute values of its entries.
pub(crate) fn monomial_entries(f: &LinOp) -> Option<Vec<(usize, usize, f64)>> {
    let mut col_used = vec![false; f.d_in()];
    let mut entries = Vec::new();
    for i in 0..f.d_out() {
        let mut found = false;
        for (j, &x) in f.row(i).iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            if found || col_used[j] {
                return None;
            }
            found = true;
            col_used[j] = true;
            entries.push((i, j, x));
        }
    }
    Some(entries)
}

/// Projects the singular values `|values|` of a monomial operator, keeping
/// signs. `None` when already inside the ball.
pub(crate) fn project_signed_entries(values: &[f64], ball: &BallSpec) -> Result<Option<Vec<f64>>> {
    let s: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    if lp_norm(&s, ball.p()) <= ball.radius() {
        return Ok(None);
    }
    let shrunk = project_lp_ball(&s, ball.p(), ball.radius())?;
    Ok(Some(
        values
            .iter()
            .zip(shrunk)
            .map(|(v, m)| m.copysign(*v))
            .collect(),
    ))
}

/// Euclidean (Frobenius) projection onto the Schatten ball, obtained by
/// projecting the singular values.
pub fn project_schatten_ball(f: &LinOp, ball: &BallSpec) -> Result<LinOp> {
    let (p, c) = (ball.p(), ball.radius());
    if f.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("projection input"));
    }
    let frob = f.frobenius();
    if p.value() == 2.0 {
        return Ok(if frob <= c { f.clone() } else { f.scale(c / frob) });
    }
    if p.value() >= 2.0 && frob <= c {
        return Ok(f.clone());
    }
    if let Some(entries) = monomial_entries(f) {
        let values: Vec<f64> = entries.iter().map(|e| e.2).collect();
        let mut out = LinOp::zeros(f.d_out(), f.d_in());
        if let Some(shrunk) = project_signed_entries(&values, ball)? {
            for (&(i, j, _), v) in entries.iter().zip(shrunk) {
                out.set(i, j, v);
            }
            return Ok(out);
        }
        return Ok(f.clone());
    }
    let Some((rows, cols, factors)) = compact_svd(f)? else {
        return Ok(f.clone());
    };
    if lp_norm(&factors.s, p) <= c {
        return Ok(f.clone());
    }
    let projected = SvdFactors {
        s: project_lp_ball(&factors.s, p, c)?,
        ..factors
    };
    let sub = projected.reconstruct();
    let mut out = LinOp::zeros(f.d_out(), f.d_in());
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            out.set(i, j, sub.get(a, b));
        }
    }
    Ok(out)
}
