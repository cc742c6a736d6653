mod common;

use common::{close, mat_vec, matrix_of, vec_of};
use proptest::prelude::*;
use schatten_core::hilbert::{inner, tensor, trace_pairing};
use schatten_core::spectral::singular_values;
use schatten_core::{HVector, LinOp};

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1..=10usize, 1..=10usize)
}

fn op_with_vectors() -> impl Strategy<Value = (LinOp, HVector, HVector, HVector)> {
    dims().prop_flat_map(|(r, c)| (matrix_of(r, c), vec_of(c), vec_of(c), vec_of(r)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn apply_is_linear((f, u, v, _) in op_with_vectors(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let lhs = f.apply(&u.lin_comb(a, &v, b).unwrap()).unwrap();
        let rhs = f.apply(&u).unwrap().lin_comb(a, &f.apply(&v).unwrap(), b).unwrap();
        let direct = mat_vec(&f, u.as_slice());
        let fu = f.apply(&u).unwrap();
        for i in 0..f.d_out() {
            prop_assert!(close(lhs.get(i), rhs.get(i), 1e-12));
            prop_assert!(close(fu.get(i), direct[i], 1e-12));
        }
    }

    #[test]
    fn adjoint_pairs_inner_products((f, u, _, w) in op_with_vectors()) {
        let lhs = inner(&f.apply(&u).unwrap(), &w).unwrap();
        let rhs = inner(&u, &f.adjoint().apply(&w).unwrap()).unwrap();
        prop_assert!(close(lhs, rhs, 1e-12));
        prop_assert_eq!(f.adjoint().adjoint(), f);
    }

    #[test]
    fn trace_identity((f, v, _, w) in op_with_vectors()) {
        let lhs = inner(&f.apply(&v).unwrap(), &w).unwrap();
        let rhs = trace_pairing(&f, &v, &w).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn tensor_is_rank_one((_, v, u, w) in op_with_vectors()) {
        let t = tensor(&w, &v);
        let applied = t.apply(&u).unwrap();
        let expected = w.scale(inner(&v, &u).unwrap());
        for i in 0..w.dim() {
            prop_assert!(close(applied.get(i), expected.get(i), 1e-12));
        }
        let s = singular_values(&t).unwrap();
        if s.len() > 1 {
            prop_assert!(s[1] <= 1e-10 * s[0]);
        }
        prop_assert!(close(s[0], w.norm2() * v.norm2(), 1e-10));
    }

    #[test]
    fn composition_is_associative(
        (f, g, h) in (1..6usize, 1..6usize, 1..6usize, 1..6usize)
            .prop_flat_map(|(a, b, c, d)| (matrix_of(b, a), matrix_of(c, b), matrix_of(d, c)))
    ) {
        let left = h.compose(&g).unwrap().compose(&f).unwrap();
        let right = h.compose(&g.compose(&f).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) <= 1e-10);
    }

    #[test]
    fn json_round_trip_is_exact((f, v, _, _) in op_with_vectors()) {
        prop_assert_eq!(LinOp::from_json_str(&f.to_json_string()).unwrap(), f);
        prop_assert_eq!(HVector::from_json_str(&v.to_json_string()).unwrap(), v);
    }
}

#[test]
fn trace_identity_examples() {
    let e1 = HVector::basis(3, 0);
    assert_eq!(trace_pairing(&LinOp::identity(3), &e1, &e1).unwrap(), 1.0);
    let psi2 = HVector::basis(4, 1);
    let f = tensor(&psi2, &e1);
    assert_eq!(trace_pairing(&f, &e1, &psi2).unwrap(), 1.0);
    assert!(trace_pairing(&f, &psi2, &e1).is_err());
}
