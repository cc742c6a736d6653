//! Rademacher sums along predictable trees, and the separation witness.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regret::McEstimate;
use crate::error::{Error, Result};
use crate::hilbert::{HVector, LinOp};
use crate::rng::{seeded, splitmix64, trial_rng};
use crate::spectral::{lp_norm, singular_values, SchattenIndex};
use crate::streams::RademacherPath;

const NORM_SLACK: f64 = 1e-12;

/// A depth-`T` tree whose node at round `t` (0-based) is a pair `(v_t, w_t)`
/// chosen as a function of the signs `σ_0 .. σ_{t-1}` only.
pub trait PredictableTree: Sync {
    fn depth(&self) -> usize;
    /// Dimension of the `v_t` (output side).
    fn d_out(&self) -> usize;
    /// Dimension of the `w_t` (input side).
    fn d_in(&self) -> usize;
    fn radii(&self) -> (f64, f64);
    fn node(&self, t: usize, prefix: &[i8]) -> Result<(HVector, HVector)>;
}

fn check_depth(depth: usize, d: usize) -> Result<()> {
    if depth > d {
        return Err(Error::Underprovisioned {
            what: "predictable tree".into(),
            required: depth,
            available: d,
        });
    }
    Ok(())
}

/// `v_t = c1 e_t`, `w_t = c2 e_t` regardless of the signs.
#[derive(Clone, Debug)]
pub struct OrthogonalTree {
    depth: usize,
    d: usize,
    c1: f64,
    c2: f64,
}

impl OrthogonalTree {
    pub fn new(depth: usize, d: usize, c1: f64, c2: f64) -> Result<Self> {
        check_depth(depth, d)?;
        Ok(OrthogonalTree { depth, d, c1, c2 })
    }
}

impl PredictableTree for OrthogonalTree {
    fn depth(&self) -> usize {
        self.depth
    }
    fn d_out(&self) -> usize {
        self.d
    }
    fn d_in(&self) -> usize {
        self.d
    }
    fn radii(&self) -> (f64, f64) {
        (self.c1, self.c2)
    }
    fn node(&self, t: usize, _prefix: &[i8]) -> Result<(HVector, HVector)> {
        Ok((HVector::basis(self.d, t).scale(self.c1), HVector::basis(self.d, t).scale(self.c2)))
    }
}

/// Nodes drawn from an RNG keyed by a hash of `(seed, t, prefix)`: random
/// directions with radii uniform in `[0, c]`.
#[derive(Clone, Debug)]
pub struct RandomTree {
    depth: usize,
    d: usize,
    c1: f64,
    c2: f64,
    seed: u64,
}

impl RandomTree {
    pub fn new(depth: usize, d: usize, c1: f64, c2: f64, seed: u64) -> Result<Self> {
        check_depth(depth, d)?;
        Ok(RandomTree { depth, d, c1, c2, seed })
    }

    fn random_vector(rng: &mut crate::rng::Rng, d: usize, radius: f64) -> HVector {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let r = radius * rng.gen::<f64>();
        let scale = if norm > 0.0 { r / norm } else { 0.0 };
        HVector::from_vec_unchecked(v.iter().map(|a| a * scale).collect())
    }
}

impl PredictableTree for RandomTree {
    fn depth(&self) -> usize {
        self.depth
    }
    fn d_out(&self) -> usize {
        self.d
    }
    fn d_in(&self) -> usize {
        self.d
    }
    fn radii(&self) -> (f64, f64) {
        (self.c1, self.c2)
    }
    fn node(&self, t: usize, prefix: &[i8]) -> Result<(HVector, HVector)> {
        let mut h = splitmix64(self.seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        for &s in prefix {
            h = splitmix64(h ^ if s > 0 { 0xA5A5 } else { 0x5A5A });
        }
        let mut rng = seeded(h);
        let v = Self::random_vector(&mut rng, self.d, self.c1);
        let w = Self::random_vector(&mut rng, self.d, self.c2);
        Ok((v, w))
    }
}

/// Every node uses the same pair of directions, with the sign of `v_t` set to
/// the sign of the running sum so far, so that increments push along the
/// current partial sum whenever `σ_t = +1`.
#[derive(Clone, Debug)]
pub struct SignAlignedTree {
    depth: usize,
    d: usize,
    c1: f64,
    c2: f64,
}

impl SignAlignedTree {
    pub fn new(depth: usize, d: usize, c1: f64, c2: f64) -> Result<Self> {
        check_depth(depth, d)?;
        Ok(SignAlignedTree { depth, d, c1, c2 })
    }
}

impl PredictableTree for SignAlignedTree {
    fn depth(&self) -> usize {
        self.depth
    }
    fn d_out(&self) -> usize {
        self.d
    }
    fn d_in(&self) -> usize {
        self.d
    }
    fn radii(&self) -> (f64, f64) {
        (self.c1, self.c2)
    }
    fn node(&self, _t: usize, prefix: &[i8]) -> Result<(HVector, HVector)> {
        // running sum of σ_s * sign_s, where sign_s is this node's own choice at s
        let mut sum: i64 = 0;
        for &s in prefix {
            let sign = if sum >= 0 { 1 } else { -1 };
            sum += i64::from(s) * sign;
        }
        let sign = if sum >= 0 { 1.0 } else { -1.0 };
        Ok((HVector::basis(self.d, 0).scale(sign * self.c1), HVector::basis(self.d, 0).scale(self.c2)))
    }
}

/// `c1 c2 T^{max(1/2, 1/q)}`.
pub fn tree_sum_bound(c1: f64, c2: f64, depth: usize, q: SchattenIndex) -> f64 {
    c1 * c2 * (depth as f64).powf(q.reciprocal().max(0.5))
}

/// `Σ_t σ_t v_t ⊗ w_t` along the path `sigma`.
pub fn rademacher_sum(tree: &dyn PredictableTree, sigma: &RademacherPath) -> Result<LinOp> {
    let (c1, c2) = tree.radii();
    let mut sum = LinOp::zeros(tree.d_out(), tree.d_in());
    for t in 0..tree.depth() {
        let prefix = &sigma.signs()[..t];
        let (v, w) = tree.node(t, prefix)?;
        for (what, vec, bound) in [("v", &v, c1), ("w", &w, c2)] {
            let n = vec.norm2();
            if n > bound * (1.0 + NORM_SLACK) {
                return Err(Error::param(
                    "tree",
                    format!("node {what}_{} after prefix {prefix:?} has norm {n} above {bound}", t + 1),
                ));
            }
        }
        sum.add_rank_one(sigma.sign(t), &v, &w)?;
    }
    Ok(sum)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSumCheck {
    pub q: SchattenIndex,
    pub mean: f64,
    pub stderr: f64,
    pub bound: f64,
}

impl TreeSumCheck {
    pub fn holds(&self) -> bool {
        self.mean + 3.0 * self.stderr <= self.bound * (1.0 + 1e-9)
    }
}

/// Monte-Carlo estimate of `E ‖Σ_t σ_t v_t ⊗ w_t‖_q` for each `q`, sharing the paths.
pub fn rademacher_sum_check(
    tree: &dyn PredictableTree,
    qs: &[SchattenIndex],
    trials: usize,
    seed: u64,
) -> Result<Vec<TreeSumCheck>> {
    let norms: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let sigma = RademacherPath::sample(tree.depth(), &mut trial_rng(seed, i));
            let s = singular_values(&rademacher_sum(tree, &sigma)?)?;
            Ok(qs.iter().map(|&q| lp_norm(&s, q)).collect())
        })
        .collect::<Result<_>>()?;
    let (c1, c2) = tree.radii();
    qs.iter()
        .enumerate()
        .map(|(k, &q)| {
            let est = McEstimate::from_values(norms.iter().map(|row| row[k]).collect())?;
            Ok(TreeSumCheck {
                q,
                mean: est.mean,
                stderr: est.stderr,
                bound: tree_sum_bound(c1, c2, tree.depth(), q),
            })
        })
        .collect()
}

/// `sup_k Σ_t σ_t b_k[t]`: the best `k` sets exactly the bits where `σ_t = +1`.
pub fn witness_value(sigma: &RademacherPath) -> usize {
    sigma.count_positive()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub exact: f64,
}

impl WitnessEstimate {
    pub fn consistent(&self) -> bool {
        (self.mean - self.exact).abs() <= 3.0 * self.stderr
    }
}

/// Monte-Carlo mean of the witness value against its exact expectation `T/2`.
pub fn rad_separation_witness(depth: usize, trials: usize, seed: u64) -> Result<WitnessEstimate> {
    if depth == 0 {
        return Err(Error::param("T", "depth must be positive"));
    }
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| witness_value(&RademacherPath::sample(depth, &mut trial_rng(seed, i))) as f64)
        .collect();
    let est = McEstimate::from_values(values)?;
    Ok(WitnessEstimate {
        mean: est.mean,
        stderr: est.stderr,
        exact: depth as f64 / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: f64) -> SchattenIndex {
        SchattenIndex::new(p).unwrap()
    }

    #[test]
    fn orthogonal_tree_is_the_equality_case() {
        let tree = OrthogonalTree::new(9, 9, 1.0, 1.0).unwrap();
        let checks = rademacher_sum_check(&tree, &[q(1.0), q(2.0)], 20, 1).unwrap();
        assert!((checks[0].mean - 9.0).abs() < 1e-9 && checks[0].bound == 9.0);
        assert!((checks[1].mean - 3.0).abs() < 1e-9 && checks[1].bound == 3.0);
        assert!(checks.iter().all(|c| c.stderr < 1e-12 && c.holds()));
    }

    #[test]
    fn depth_one_tree() {
        let tree = RandomTree::new(1, 4, 0.5, 2.0, 3).unwrap();
        let sigma = RademacherPath::new(vec![-1]).unwrap();
        let (v, w) = tree.node(0, &[]).unwrap();
        let s = singular_values(&rademacher_sum(&tree, &sigma).unwrap()).unwrap();
        assert!((s[0] - v.norm2() * w.norm2()).abs() < 1e-12);
        assert!(s[0] <= 1.0);
    }

    #[test]
    fn random_nodes_depend_only_on_prefix() {
        let tree = RandomTree::new(4, 4, 1.0, 1.0, 9).unwrap();
        assert_eq!(tree.node(2, &[1, -1]).unwrap(), tree.node(2, &[1, -1]).unwrap());
        assert_ne!(tree.node(2, &[1, -1]).unwrap(), tree.node(2, &[1, 1]).unwrap());
    }

    #[test]
    fn witness_examples() {
        assert_eq!(witness_value(&RademacherPath::new(vec![1, -1, 1]).unwrap()), 2);
        assert_eq!(witness_value(&RademacherPath::new(vec![-1; 4]).unwrap()), 0);
        let est = rad_separation_witness(8, 400, 5).unwrap();
        assert_eq!(est.exact, 4.0);
        assert!(est.consistent());
    }

    #[test]
    fn oversized_nodes_are_reported() {
        struct Bad;
        impl PredictableTree for Bad {
            fn depth(&self) -> usize {
                2
            }
            fn d_out(&self) -> usize {
                2
            }
            fn d_in(&self) -> usize {
                2
            }
            fn radii(&self) -> (f64, f64) {
                (1.0, 1.0)
            }
            fn node(&self, t: usize, _p: &[i8]) -> Result<(HVector, HVector)> {
                Ok((HVector::basis(2, t).scale(2.0), HVector::basis(2, t)))
            }
        }
        let err = rademacher_sum(&Bad, &RademacherPath::new(vec![1, 1]).unwrap()).unwrap_err();
        assert!(err.to_string().contains("v_1"));
    }
}
