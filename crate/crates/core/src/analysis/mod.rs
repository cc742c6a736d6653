//! Regret, Monte-Carlo verifiers, exact excess risk and rate fitting.

mod rademacher;
mod rate;
mod regret;
mod risk;

pub use rademacher::{
    tree_sum_bound, rad_separation_witness, rademacher_sum, rademacher_sum_check, witness_value, TreeSumCheck,
    OrthogonalTree, PredictableTree, RandomTree, SignAlignedTree, WitnessEstimate,
};
pub use rate::{rate_fit, RateFit};
pub use regret::{
    mc_estimate, mc_expected_regret, run_regret, Comparator, ComparatorSource, McEstimate, RegretReport, RoundRecord,
};
pub use risk::{batch_lower_bound_check, excess_risk_exact, BatchCheck, BatchLearner, Construction, Erm, OnlineToBatch};

use crate::spectral::SchattenIndex;

/// `c² T^{1-1/p}`, the expected regret floor on the sign streams.
pub fn sign_stream_lower_bound(horizon: usize, p: SchattenIndex, c: f64) -> f64 {
    c * c * (horizon as f64).powf(1.0 - p.reciprocal())
}

/// `8 c² √T`, the regret envelope of projected gradient descent on the
/// radius-`c` Hilbert–Schmidt ball.
pub fn ogd_envelope(horizon: usize, c: f64) -> f64 {
    8.0 * c * c * (horizon as f64).sqrt()
}

/// `2 + 8 √(T ln 2T)`, the regret guarantee of the experts learner on
/// realizable separation streams.
pub fn experts_envelope(horizon: usize) -> f64 {
    let t = horizon as f64;
    2.0 + 8.0 * (t * (2.0 * t).ln()).sqrt()
}

/// `6 c² T^{max(1/2, 1-1/p)}`, the minimax regret order over the Schatten ball.
pub fn minimax_envelope(horizon: usize, p: SchattenIndex, c: f64) -> f64 {
    6.0 * c * c * (horizon as f64).powf((1.0 - p.reciprocal()).max(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelopes() {
        let p2 = SchattenIndex::TWO;
        assert!((sign_stream_lower_bound(256, p2, 1.0) - 16.0).abs() < 1e-12);
        assert_eq!(sign_stream_lower_bound(256, SchattenIndex::INFINITY, 1.0), 256.0);
        assert_eq!(sign_stream_lower_bound(256, SchattenIndex::ONE, 1.0), 1.0);
        assert_eq!(ogd_envelope(64, 0.5), 16.0);
        assert!((experts_envelope(1) - (2.0 + 8.0 * 2f64.ln().sqrt())).abs() < 1e-12);
        assert_eq!(minimax_envelope(100, SchattenIndex::ONE, 1.0), 60.0);
    }
}
