//! Sampled limited-memory SR1 with a zero initial matrix: compact Hessian
//! representation, Gram-only pair acceptance, truncated-CG trust-region
//! steps, and the finite-sum objectives they are exercised on.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the element type.

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod problems;
pub mod sampling;
pub mod scalar;
pub mod sr1;
pub mod trust_region;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use metrics::{amdahl_bound, jaccard_similarity};
pub use problems::{Dataset, Objective, ObjectiveShard, ProblemKind, SyntheticSpec};
pub use sampling::{CurvatureFactory, Distribution, PRNG_ID};
pub use scalar::Scalar;
pub use sr1::{
    accept_pairs, build_gram, compact_hessvec, compact_spectrum, minverse_append, AcceptOutcome, CompactHessian,
    GramTriple, MInverseLadder,
};
pub use trust_region::{adjust_tr, boundary_tau, cg_steihaug, CgResult, CgStatus, TrustRegionParams, TrustRegionState};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type GramTriple64 = GramTriple<f64>;
pub type GramTriple32 = GramTriple<f32>;
pub type MInverseLadder64 = MInverseLadder<f64>;
pub type MInverseLadder32 = MInverseLadder<f32>;
pub type CompactHessian64 = CompactHessian<f64>;
pub type CompactHessian32 = CompactHessian<f32>;
pub type CgResult64 = CgResult<f64>;
pub type CgResult32 = CgResult<f32>;
pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type ObjectiveShard64 = ObjectiveShard<f64>;
pub type ObjectiveShard32 = ObjectiveShard<f32>;
