mod common;

use common::{awkward_matrix, close, matrix, matrix_of, oracle_power_trace, oracle_singular_values, symmetric_eigenvalues};
use proptest::prelude::*;
use schatten_core::spectral::{
    lp_norm, numerical_rank, operator_norm, project_lp_ball, project_schatten_ball, schatten_norm, singular_values, svd,
};
use schatten_core::{BallSpec, HVector, LinOp, SchattenIndex};

fn index() -> impl Strategy<Value = SchattenIndex> {
    prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY), 1.0..8.0f64].prop_map(|p| SchattenIndex::new(p).unwrap())
}

fn orthonormality_error(q: &LinOp) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..q.d_in() {
        for b in 0..q.d_in() {
            let dot: f64 = (0..q.d_out()).map(|i| q.get(i, a) * q.get(i, b)).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn svd_factors_are_valid(f in awkward_matrix(12)) {
        let fac = svd(&f).unwrap();
        prop_assert!(orthonormality_error(&fac.u) <= 1e-10);
        prop_assert!(orthonormality_error(&fac.v) <= 1e-10);
        prop_assert!(fac.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(fac.s.iter().all(|&s| s >= 0.0));
        prop_assert!(fac.reconstruct().max_abs_diff(&f) <= 1e-8);
    }

    #[test]
    fn singular_values_match_oracle(f in awkward_matrix(10)) {
        let s = singular_values(&f).unwrap();
        let oracle = oracle_singular_values(&f);
        let scale = oracle.first().copied().unwrap_or(0.0).max(1.0);
        for (a, b) in s.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-6 * scale, "{:?} vs {:?}", s, oracle);
        }
    }

    #[test]
    fn power_trace_matches_oracle(f in matrix(10), p in 1.0..6.0f64) {
        let norm = schatten_norm(&f, SchattenIndex::new(p).unwrap()).unwrap();
        let oracle = oracle_power_trace(&f, p);
        prop_assert!(close(norm.powf(p), oracle, 1e-8));
    }

    #[test]
    fn holder_inequality(
        (f, g) in (1..8usize, 1..8usize).prop_flat_map(|(r, c)| (matrix_of(r, c), matrix_of(r, c))),
        p in index(),
    ) {
        let q = p.conjugate();
        let pairing = f.frobenius_inner(&g).unwrap().abs();
        let bound = schatten_norm(&f, p).unwrap() * schatten_norm(&g, q).unwrap();
        prop_assert!(pairing <= bound * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn gram_norm_is_at_most_squared_norm(f in matrix(8), p in index()) {
        let gram = f.adjoint().compose(&f).unwrap();
        let lhs = schatten_norm(&gram, p).unwrap();
        let rhs = schatten_norm(&f, p).unwrap().powi(2);
        prop_assert!(lhs <= rhs * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn norms_are_monotone_in_p(f in matrix(8), a in 1.0..8.0f64, b in 1.0..8.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let n_lo = schatten_norm(&f, SchattenIndex::new(lo).unwrap()).unwrap();
        let n_hi = schatten_norm(&f, SchattenIndex::new(hi).unwrap()).unwrap();
        prop_assert!(n_hi <= n_lo * (1.0 + 1e-10) + 1e-12);
        prop_assert!(operator_norm(&f).unwrap() <= n_hi * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn operator_norm_bounds_every_direction(f in matrix(8), v in prop::collection::vec(-1.0..1.0f64, 8)) {
        let x = HVector::new(v[..f.d_in()].to_vec()).unwrap();
        let n = x.norm2();
        prop_assume!(n > 1e-6);
        let ratio = f.apply(&x).unwrap().norm2() / n;
        prop_assert!(ratio <= operator_norm(&f).unwrap() * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn rank_is_bounded(f in awkward_matrix(8)) {
        let r = numerical_rank(&f).unwrap();
        prop_assert!(r <= f.d_in().min(f.d_out()));
    }

    #[test]
    fn projection_is_feasible_idempotent_and_optimal(
        (f, g) in (1..7usize, 1..7usize).prop_flat_map(|(r, c)| (matrix_of(r, c), matrix_of(r, c))),
        p in index(),
        c in 0.1..3.0f64,
    ) {
        let ball = BallSpec::new(p, c).unwrap();
        let proj = project_schatten_ball(&f, &ball).unwrap();
        let norm = schatten_norm(&proj, p).unwrap();
        prop_assert!(norm <= c * (1.0 + 1e-9));
        let again = project_schatten_ball(&proj, &ball).unwrap();
        prop_assert!(again.max_abs_diff(&proj) <= 1e-9 * (1.0 + c));
        // any feasible g: <f - P f, g - P f> <= 0
        let gn = schatten_norm(&g, p).unwrap();
        let feasible = if gn > c { g.scale(c / gn) } else { g };
        let lhs = f.sub(&proj).unwrap().frobenius_inner(&feasible.sub(&proj).unwrap()).unwrap();
        let scale = f.frobenius() * (feasible.frobenius() + proj.frobenius()) + 1.0;
        prop_assert!(lhs <= 1e-8 * scale, "variational inequality violated by {}", lhs);
    }

    #[test]
    fn vector_projection_is_optimal(
        (s, z) in (1..10usize).prop_flat_map(|n| (prop::collection::vec(0.0..3.0f64, n), prop::collection::vec(-3.0..3.0f64, n))),
        p in index(),
        c in 0.1..2.0f64,
    ) {
        let proj = project_lp_ball(&s, p, c).unwrap();
        prop_assert!(lp_norm(&proj, p) <= c * (1.0 + 1e-9));
        let zn = lp_norm(&z.iter().map(|a| a.abs()).collect::<Vec<_>>(), p);
        let scale = if zn > c { c / zn } else { 1.0 };
        let lhs: f64 = (0..s.len()).map(|i| (s[i] - proj[i]) * (scale * z[i] - proj[i])).sum();
        prop_assert!(lhs <= 1e-8 * (1.0 + s.iter().map(|a| a * a).sum::<f64>()), "{}", lhs);
    }
}

#[test]
fn oracle_eigensolver_examples() {
    let eig = symmetric_eigenvalues(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
    assert!((eig[0] - 3.0).abs() < 1e-14 && (eig[1] - 1.0).abs() < 1e-14);
    let eig = symmetric_eigenvalues(vec![vec![4.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 2.0]]);
    assert_eq!(eig, vec![4.0, 2.0, -1.0]);
}

#[test]
fn projection_closed_forms() {
    let f = LinOp::diagonal(2, 2, &[3.0, 1.0]);
    let trace_ball = BallSpec::new(SchattenIndex::ONE, 1.0).unwrap();
    let p1 = project_schatten_ball(&f, &trace_ball).unwrap();
    assert!(p1.max_abs_diff(&LinOp::diagonal(2, 2, &[1.0, 0.0])) < 1e-12);
    let op_ball = BallSpec::new(SchattenIndex::INFINITY, 2.0).unwrap();
    let pinf = project_schatten_ball(&f, &op_ball).unwrap();
    assert!(pinf.max_abs_diff(&LinOp::diagonal(2, 2, &[2.0, 1.0])) < 1e-12);
    let hs_ball = BallSpec::new(SchattenIndex::TWO, 1.0).unwrap();
    let p2 = project_schatten_ball(&f, &hs_ball).unwrap();
    assert!(p2.max_abs_diff(&f.scale(1.0 / 10f64.sqrt())) < 1e-12);
}
