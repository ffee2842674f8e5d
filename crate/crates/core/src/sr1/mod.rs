//! Compact sampled-SR1 representation with a zero initial matrix.

pub mod accept;
pub mod compact;
pub mod gram;
pub mod ladder;

pub use accept::{accept_candidates, accept_pairs, ladder_residual, AcceptDiagnostics, AcceptOutcome, DEFAULT_ETA};
pub use compact::{compact_hessvec, compact_spectrum, expand, project, CompactHessian};
pub use gram::{build_gram, sketch_yy, CandidateGram, GramTriple};
pub use ladder::{minverse_append, MInverseLadder, SINGULAR_GUARD};
