use crate::error::{invalid, Result};
use crate::linalg::{gram, Matrix};
use crate::scalar::Scalar;

/// Inner products of a candidate pair set.
///
/// `sy[(i, j)] = s_iᵀ y_j`. When `sketched` is set, `yy` is the sketch
/// `Yᵀ S Sᵀ Y = syᵀ · sy` rather than the exact `Yᵀ Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramTriple<T: Scalar> {
    pub ss: Matrix<T>,
    pub sy: Matrix<T>,
    pub yy: Matrix<T>,
    pub sketched: bool,
}

impl<T: Scalar> GramTriple<T> {
    /// Candidate pair count.
    pub fn m(&self) -> usize {
        self.sy.nrows()
    }

    /// Assembles a sketched triple from `SᵀS` and the reduced `SᵀY`.
    pub fn sketched(ss: Matrix<T>, sy: Matrix<T>) -> Result<Self> {
        let yy = sketch_yy(&sy, &ss)?;
        Ok(GramTriple {
            ss,
            sy,
            yy,
            sketched: true,
        })
    }

    /// Rows and columns of all three blocks restricted to `idx`, in order.
    pub fn restrict(&self, idx: &[usize]) -> Self {
        GramTriple {
            ss: self.ss.submatrix(idx, idx),
            sy: self.sy.submatrix(idx, idx),
            yy: self.yy.submatrix(idx, idx),
            sketched: self.sketched,
        }
    }

    /// The view consumed by pair acceptance.
    pub fn candidates(&self) -> CandidateGram<'_, T> {
        CandidateGram {
            s_norm_sq: (0..self.m()).map(|i| self.ss.get(i, i)).collect(),
            sy: &self.sy,
            yy: &self.yy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        for (name, blk) in [("ss", &self.ss), ("sy", &self.sy), ("yy", &self.yy)] {
            if blk.shape() != (m, m) {
                return Err(invalid(format!(
                    "gram block {name} is {}x{}, expected {m}x{m}",
                    blk.nrows(),
                    blk.ncols()
                )));
            }
        }
        Ok(())
    }
}

/// Pair-acceptance inputs: squared column norms of `S`, `SᵀY`, and a
/// (possibly sketched) `YᵀY`.
///
/// The distributed master never holds `S`; it supplies the column norms the
/// sampler guarantees by construction instead of a full `SᵀS`.
#[derive(Debug, Clone)]
pub struct CandidateGram<'a, T: Scalar> {
    pub s_norm_sq: Vec<T>,
    pub sy: &'a Matrix<T>,
    pub yy: &'a Matrix<T>,
}

impl<'a, T: Scalar> CandidateGram<'a, T> {
    pub fn new(s_norm_sq: Vec<T>, sy: &'a Matrix<T>, yy: &'a Matrix<T>) -> Result<Self> {
        let m = s_norm_sq.len();
        if sy.shape() != (m, m) || yy.shape() != (m, m) {
            return Err(invalid(format!(
                "candidate gram blocks must be {m}x{m} (sy {:?}, yy {:?})",
                sy.shape(),
                yy.shape()
            )));
        }
        Ok(CandidateGram { s_norm_sq, sy, yy })
    }

    pub fn m(&self) -> usize {
        self.s_norm_sq.len()
    }
}

/// Exact `SᵀS`, `SᵀY`, `YᵀY` from explicit pair columns.
pub fn build_gram<T: Scalar>(s_cols: &Matrix<T>, y_cols: &Matrix<T>) -> Result<GramTriple<T>> {
    if s_cols.shape() != y_cols.shape() {
        return Err(invalid(format!(
            "S is {:?} but Y is {:?}",
            s_cols.shape(),
            y_cols.shape()
        )));
    }
    if s_cols.ncols() == 0 {
        return Err(invalid("at least one candidate pair is required"));
    }
    Ok(GramTriple {
        ss: gram(s_cols, s_cols)?,
        sy: gram(s_cols, y_cols)?,
        yy: gram(y_cols, y_cols)?,
        sketched: false,
    })
}

/// Sketched `YᵀY ≈ Yᵀ S Sᵀ Y`.
///
/// `sy = SᵀY` already contracts over the `d` coordinates, so the sketch is
/// `syᵀ · sy`; `ss` only fixes the expected dimension.
pub fn sketch_yy<T: Scalar>(sy: &Matrix<T>, ss: &Matrix<T>) -> Result<Matrix<T>> {
    if !sy.is_square() || sy.shape() != ss.shape() {
        return Err(invalid(format!(
            "sketch needs square blocks of equal size (sy {:?}, ss {:?})",
            sy.shape(),
            ss.shape()
        )));
    }
    gram(sy, sy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, i: usize, scale: f64) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = scale;
        v
    }

    #[test]
    fn identity_pair() {
        let s = Matrix::from_columns(&[e(3, 0, 1.0)]).unwrap();
        let g = build_gram(&s, &s).unwrap();
        assert_eq!(g.ss.get(0, 0), 1.0);
        assert_eq!(g.sy.get(0, 0), 1.0);
        assert_eq!(g.yy.get(0, 0), 1.0);
        assert!(!g.sketched);
    }

    #[test]
    fn orthogonal_pair() {
        let s = Matrix::from_columns(&[e(3, 0, 1.0)]).unwrap();
        let y = Matrix::from_columns(&[e(3, 1, 2.0)]).unwrap();
        let g = build_gram(&s, &y).unwrap();
        assert_eq!(g.ss.get(0, 0), 1.0);
        assert_eq!(g.sy.get(0, 0), 0.0);
        assert_eq!(g.yy.get(0, 0), 4.0);
    }

    #[test]
    fn shape_mismatch_is_invalid() {
        let s = Matrix::<f64>::zeros(3, 2);
        let y = Matrix::<f64>::zeros(3, 1);
        assert!(matches!(build_gram(&s, &y), Err(crate::Error::InvalidArgument(_))));
        assert!(build_gram(&Matrix::<f64>::zeros(3, 0), &Matrix::zeros(3, 0)).is_err());
    }

    #[test]
    fn sketch_small_cases() {
        let one = Matrix::from_rows(&[&[1.0]]).unwrap();
        assert_eq!(sketch_yy(&one, &one).unwrap(), one);
        let sy = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap();
        let ss = Matrix::identity(2);
        let yy = sketch_yy(&sy, &ss).unwrap();
        assert_eq!(yy, Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 4.0]]).unwrap());
        assert!(sketch_yy(&sy, &one).is_err());
    }

    #[test]
    fn sketched_triple_reconstructs_from_sy() {
        let sy = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let g = GramTriple::sketched(Matrix::identity(2), sy.clone()).unwrap();
        assert!(g.sketched);
        assert_eq!(g.yy, gram(&sy, &sy).unwrap());
        assert!(g.yy.asymmetry() < 1e-12);
    }
}
