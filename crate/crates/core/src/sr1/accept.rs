//! Recursive pair acceptance from inner products alone.
//!
//! Candidates are visited in column order. Before candidate `j` is examined
//! the current approximation is `B = Y_a M_a⁻¹ Y_aᵀ` over the accepted set
//! `a` (`B = 0` while `a` is empty). With
//!
//! ```text
//! q = Y_aᵀ s_j      (q_l = sy[j, a_l])
//! r = Y_aᵀ y_j      (r_l = yy[j, a_l])
//! t = M_a⁻¹ q
//! ```
//!
//! every quantity in the SR1 safeguard reduces to `m × m` data:
//!
//! ```text
//! sᵀ B s      = qᵀ t
//! yᵀ B s      = rᵀ t
//! sᵀ B² s     = tᵀ (Y_aᵀ Y_a) t = tᵀ yy[a, a] t
//! sᵀ(y − Bs)  = sy[j, j] − qᵀ t
//! ‖y − Bs‖²   = yy[j, j] − 2 rᵀ t + tᵀ yy[a, a] t
//! ‖s‖²        = ss[j, j]
//! ```
//!
//! The pair is kept when `|sᵀ(y − Bs)| ≥ η ‖s‖ ‖y − Bs‖`. Note that the
//! bordering denominator `c − qᵀ M_a⁻¹ q` of the ladder update equals
//! `sᵀ(y − Bs)`, so an accepted pair also has a well-defined inverse update
//! unless the safeguard passes with a denominator too close to zero; such
//! pairs are rejected and counted separately.
//!
//! Both `sᵀ(y − Bs)` and `‖y − Bs‖²` are differences of Gram terms. When
//! either is within [`CANCELLATION_FACTOR`]·ε of the magnitude of its terms,
//! `y_j` carries no curvature beyond roundoff and the pair is rejected. The
//! η test alone is scale-invariant, so it cannot tell such noise from signal.
//!
//! Only `yy` may be sketched; `sy` is always exact.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;
use crate::sr1::gram::{CandidateGram, GramTriple};
use crate::sr1::ladder::{minverse_append, MInverseLadder};

pub const DEFAULT_ETA: f64 = 1e-8;

/// Multiple of machine epsilon below which a Gram difference counts as zero.
pub const CANCELLATION_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AcceptDiagnostics {
    /// Candidates that failed the SR1 safeguard.
    pub condition_rejections: usize,
    /// Candidates that passed the safeguard but had a near-singular
    /// bordering denominator.
    pub safety_rejections: usize,
    /// Floating-point operations spent (multiply and add counted separately).
    pub flops: u64,
}

#[derive(Debug, Clone)]
pub struct AcceptOutcome<T: Scalar> {
    pub accepted: Vec<usize>,
    pub ladder: MInverseLadder<T>,
    pub diagnostics: AcceptDiagnostics,
}

pub fn accept_pairs<T: Scalar>(gram: &GramTriple<T>, eta: T) -> Result<AcceptOutcome<T>> {
    gram.validate()?;
    accept_candidates(&gram.candidates(), eta)
}

pub fn accept_candidates<T: Scalar>(cand: &CandidateGram<'_, T>, eta: T) -> Result<AcceptOutcome<T>> {
    if !(eta > T::zero()) {
        return Err(invalid(format!("eta must be positive, got {eta}")));
    }
    let m = cand.m();
    let (sy, yy) = (cand.sy, cand.yy);
    let mut ladder = MInverseLadder::empty();
    let mut diag = AcceptDiagnostics::default();
    let two = T::lit(2.0);

    for j in 0..m {
        let a = &ladder.accepted;
        let k = a.len() as u64;
        let q: Vec<T> = a.iter().map(|&l| sy.get(j, l)).collect();
        let r: Vec<T> = a.iter().map(|&l| yy.get(j, l)).collect();
        let t = ladder.inv.mul_vec(&q)?;
        let s_b_s = dot(&q, &t);
        let y_b_s = dot(&r, &t);
        let yy_aa_t: Vec<T> = (0..a.len())
            .map(|p| (0..a.len()).fold(T::zero(), |acc, l| acc + yy.get(a[p], a[l]) * t[l]))
            .collect();
        let s_b2_s = dot(&t, &yy_aa_t);
        let abs_dot = |x: &[T], y: &[T]| x.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + (*a * *b).abs());
        let numer_scale = sy.get(j, j).abs() + abs_dot(&q, &t);
        let resid_scale = yy.get(j, j).abs() + two * abs_dot(&r, &t) + s_b2_s.abs();
        diag.flops += 4 * k * k + 10 * k + 18;

        let numer = sy.get(j, j) - s_b_s;
        let resid_sq = (yy.get(j, j) - two * y_b_s + s_b2_s).max(T::zero());
        let s_norm = cand.s_norm_sq[j].max(T::zero()).sqrt();
        let floor = T::lit(CANCELLATION_FACTOR) * T::epsilon();
        if numer.abs() < eta * s_norm * resid_sq.sqrt()
            || numer.abs() <= floor * numer_scale
            || resid_sq <= floor * resid_scale
        {
            diag.condition_rejections += 1;
            continue;
        }
        match minverse_append(&ladder, j, &q, sy.get(j, j)) {
            Ok(next) => {
                diag.flops += 6 * k * k + 4 * k + 4;
                ladder = next;
            }
            Err(Error::SingularUpdate { .. }) => diag.safety_rejections += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(AcceptOutcome {
        accepted: ladder.accepted.clone(),
        ladder,
        diagnostics: diag,
    })
}

/// `M⁻¹ · M − I` in max-abs norm, with `M` rebuilt from `sy`.
pub fn ladder_residual<T: Scalar>(ladder: &MInverseLadder<T>, sy: &Matrix<T>) -> T {
    let m = ladder.rebuild_m(sy);
    let prod = ladder.inv.matmul(&m).expect("ladder dimensions agree");
    prod.sub(&Matrix::identity(ladder.j())).expect("square").max_abs()
}
