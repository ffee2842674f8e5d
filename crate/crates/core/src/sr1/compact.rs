use crate::error::{invalid, Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::Scalar;
use crate::sr1::gram::GramTriple;
use crate::sr1::ladder::MInverseLadder;

/// `B = Y M⁻¹ Yᵀ` with a zero initial matrix; rank at most `j`.
#[derive(Debug, Clone)]
pub struct CompactHessian<T: Scalar> {
    /// Gram blocks restricted to the accepted pairs (ladder order).
    pub gram: GramTriple<T>,
    pub ladder: MInverseLadder<T>,
    /// Accepted `y` columns, `d × j`.
    pub y: Matrix<T>,
}

impl<T: Scalar> CompactHessian<T> {
    /// `y_all` and `gram_all` cover every candidate; both are restricted to
    /// the ladder's accepted set.
    pub fn new(y_all: &Matrix<T>, gram_all: &GramTriple<T>, ladder: MInverseLadder<T>) -> Result<Self> {
        if y_all.ncols() != gram_all.m() {
            return Err(invalid(format!(
                "{} y columns for {} candidates",
                y_all.ncols(),
                gram_all.m()
            )));
        }
        if ladder.accepted.iter().any(|&i| i >= y_all.ncols()) {
            return Err(invalid("accepted index out of range"));
        }
        Ok(CompactHessian {
            gram: gram_all.restrict(&ladder.accepted),
            y: y_all.select_columns(&ladder.accepted),
            ladder,
        })
    }

    pub fn d(&self) -> usize {
        self.y.nrows()
    }

    pub fn j(&self) -> usize {
        self.ladder.j()
    }

    pub fn hessvec(&self, v: &[T]) -> Result<Vec<T>> {
        compact_hessvec(self, v)
    }
}

/// `Yᵀ v`: the first half of a compact product. Also the worker-side
/// contribution in the distributed schedule.
pub fn project<T: Scalar>(y: &Matrix<T>, v: &[T]) -> Result<Vec<T>> {
    y.tr_mul_vec(v)
}

/// `Y c`: the second half.
pub fn expand<T: Scalar>(y: &Matrix<T>, c: &[T]) -> Result<Vec<T>> {
    y.mul_vec(c)
}

/// `Y (M⁻¹ (Yᵀ v))`; `O(jd + j²)`.
pub fn compact_hessvec<T: Scalar>(h: &CompactHessian<T>, v: &[T]) -> Result<Vec<T>> {
    if v.len() != h.d() {
        return Err(invalid(format!(
            "vector of length {} for a {}-dimensional compact Hessian",
            v.len(),
            h.d()
        )));
    }
    if h.j() == 0 {
        return Ok(vec![T::zero(); h.d()]);
    }
    let t = project(&h.y, v)?;
    let c = h.ladder.inv.mul_vec(&t)?;
    expand(&h.y, &c)
}

/// Nonzero spectrum of `B`, sorted descending.
///
/// These are the eigenvalues of `M⁻¹ (YᵀY)`, computed through the symmetric
/// similar matrix `G^{1/2} M⁻¹ G^{1/2}` with `G = YᵀY`. Requires an exact
/// `YᵀY`.
pub fn compact_spectrum<T: Scalar>(h: &CompactHessian<T>) -> Result<Vec<T>> {
    if h.gram.sketched {
        return Err(Error::UnsupportedDiagnostic(
            "spectrum needs an exact YᵀY; the sketch is only valid for pair acceptance".into(),
        ));
    }
    let j = h.j();
    if j == 0 {
        return Err(invalid("spectrum of an empty memory"));
    }
    let (gvals, gvecs) = symmetric_eigen(&h.gram.yy)?;
    let root = Matrix::from_fn(j, j, |p, q| {
        (0..j).fold(T::zero(), |acc, k| {
            acc + gvecs.get(p, k) * gvals[k].max(T::zero()).sqrt() * gvecs.get(q, k)
        })
    });
    let sym = root.matmul(&h.ladder.inv)?.matmul(&root)?;
    let (mut vals, _) = symmetric_eigen(&sym)?;
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(vals)
}
