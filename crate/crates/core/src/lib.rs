//! Online and batch learning of linear operators between truncated Hilbert spaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`hilbert`]: coefficient vectors, dense operators, rank-one tensors, traces.
//! - [`spectral`]: one-sided Jacobi SVD, Schatten norms and Schatten-ball projections.
//! - [`learners`]: the online learner contract, projected OGD, the binary-index
//!   experts learner, online-to-batch conversion and a constrained ERM solver.
//! - [`streams`]: adversarial streams, batch lower-bound distributions, kernel
//!   integral operators and the JSON-lines stream format.
//! - [`analysis`]: regret accounting, Monte-Carlo estimators and rate fitting.
//!
//! Infinite-dimensional objects are represented in a truncation dimension `d`
//! chosen per experiment. All the constructions here only touch the first few
//! basis vectors, so the truncation is exact rather than approximate.

pub mod analysis;
pub mod error;
pub mod hilbert;
pub mod learners;
pub mod rng;
pub mod spectral;
pub mod streams;

pub use error::{Error, Result};
pub use hilbert::{HVector, LinOp, RankOne};
pub use spectral::{BallSpec, SchattenIndex, SvdFactors};

/// Library version string embedded in every emitted report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
