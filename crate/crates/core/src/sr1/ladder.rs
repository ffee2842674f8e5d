use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;

/// Relative size below which a bordering denominator counts as singular.
pub const SINGULAR_GUARD: f64 = 1e-12;

/// `(M⁽ʲ⁾)⁻¹` for the `j` pairs accepted so far, grown by bordering.
///
/// `M⁽ʲ⁾ = D + L + Lᵀ` over the accepted pairs (zero initial Hessian), where
/// `D` holds `s_iᵀ y_i` and the strictly lower part `L` holds `s_pᵀ y_q` for
/// accepted positions `p > q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MInverseLadder<T: Scalar> {
    pub inv: Matrix<T>,
    pub accepted: Vec<usize>,
}

impl<T: Scalar> Default for MInverseLadder<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Scalar> MInverseLadder<T> {
    pub fn empty() -> Self {
        MInverseLadder {
            inv: Matrix::zeros(0, 0),
            accepted: Vec::new(),
        }
    }

    pub fn j(&self) -> usize {
        self.accepted.len()
    }

    /// Rebuilds `M⁽ʲ⁾` for the accepted set from `sy = SᵀY`.
    pub fn rebuild_m(&self, sy: &Matrix<T>) -> Matrix<T> {
        let a = &self.accepted;
        Matrix::from_fn(a.len(), a.len(), |p, q| {
            if p >= q {
                sy.get(a[p], a[q])
            } else {
                sy.get(a[q], a[p])
            }
        })
    }
}

/// Borders the ladder with one more accepted pair.
///
/// `v` holds `s_newᵀ y_a` for the accepted columns `a` (in ladder order) and
/// `c = s_newᵀ y_new`. With `ζ = 1/(c − vᵀ M⁻¹ v)` the new inverse is
///
/// ```text
/// [ M⁻¹ + ζ M⁻¹ v vᵀ M⁻¹   −ζ M⁻¹ v ]
/// [ −ζ vᵀ M⁻¹              ζ        ]
/// ```
///
/// Existing entries change only through the rank-one term.
pub fn minverse_append<T: Scalar>(
    ladder: &MInverseLadder<T>,
    index: usize,
    v: &[T],
    c: T,
) -> Result<MInverseLadder<T>> {
    let j = ladder.j();
    if v.len() != j {
        return Err(invalid(format!(
            "bordering vector has length {}, ladder holds {j} pairs",
            v.len()
        )));
    }
    let inv = &ladder.inv;
    // u = v, so M⁻¹u and vᵀM⁻¹ are both formed from v
    let inv_u: Vec<T> = (0..j)
        .map(|p| (0..j).fold(T::zero(), |acc, q| acc + inv.get(p, q) * v[q]))
        .collect();
    let vt_inv: Vec<T> = (0..j).map(|q| dot(inv.col(q), v)).collect();
    let denom = c - dot(v, &inv_u);
    let guard = T::lit(SINGULAR_GUARD) * (c.abs() + T::one());
    if !(denom.abs() >= guard) {
        return Err(Error::SingularUpdate {
            denominator: denom.as_f64(),
            guard: guard.as_f64(),
        });
    }
    let zeta = T::one() / denom;
    let next = Matrix::from_fn(j + 1, j + 1, |p, q| match (p < j, q < j) {
        (true, true) => inv.get(p, q) + zeta * inv_u[p] * vt_inv[q],
        (true, false) => -zeta * inv_u[p],
        (false, true) => -zeta * vt_inv[q],
        (false, false) => zeta,
    });
    let mut accepted = ladder.accepted.clone();
    accepted.push(index);
    Ok(MInverseLadder { inv: next, accepted })
}
