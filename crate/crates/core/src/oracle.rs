//! Dense reference implementations used as test oracles.
//!
//! Nothing here is on a production path. Everything materializes `d × d`
//! matrices, so dimensions are capped at [`MAX_ORACLE_DIM`].

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::scalar::Scalar;

pub const MAX_ORACLE_DIM: usize = 64;

fn check_pairs<T: Scalar>(s: &Matrix<T>, y: &Matrix<T>, accepted: &[usize]) -> Result<()> {
    if s.shape() != y.shape() {
        return Err(invalid("S and Y shapes differ"));
    }
    if s.nrows() > MAX_ORACLE_DIM {
        return Err(invalid(format!(
            "dense oracle limited to d <= {MAX_ORACLE_DIM}, got {}",
            s.nrows()
        )));
    }
    if accepted.iter().any(|&i| i >= s.ncols()) {
        return Err(invalid("accepted index out of range"));
    }
    Ok(())
}

/// Applies the rank-one SR1 recursion `B ← B + r rᵀ / (rᵀ s)`,
/// `r = y − B s`, over `accepted` in order, starting from `γ I`.
pub fn dense_sr1_oracle<T: Scalar>(
    s_cols: &Matrix<T>,
    y_cols: &Matrix<T>,
    accepted: &[usize],
    gamma: T,
) -> Result<Matrix<T>> {
    check_pairs(s_cols, y_cols, accepted)?;
    if gamma < T::zero() {
        return Err(invalid("gamma must be nonnegative"));
    }
    let d = s_cols.nrows();
    let mut b = Matrix::identity(d).scaled(gamma);
    for &i in accepted {
        sr1_update(&mut b, s_cols.col(i), y_cols.col(i))?;
    }
    Ok(b)
}

fn sr1_update<T: Scalar>(b: &mut Matrix<T>, s: &[T], y: &[T]) -> Result<()> {
    let bs = b.mul_vec(s)?;
    let r: Vec<T> = y.iter().zip(&bs).map(|(&a, &c)| a - c).collect();
    let den = dot(&r, s);
    if den.abs() < T::lit(1e-12) {
        return Err(Error::SingularUpdate {
            denominator: den.as_f64(),
            guard: 1e-12,
        });
    }
    let d = s.len();
    for q in 0..d {
        for p in 0..d {
            let v = b.get(p, q) + r[p] * r[q] / den;
            b.set(p, q, v);
        }
    }
    Ok(())
}

/// Acceptance decisions made on the materialized matrix: candidate `j` is
/// kept when `|sᵀ(y − B s)| ≥ η ‖s‖ ‖y − B s‖`, then absorbed into `B`.
pub fn dense_accept<T: Scalar>(s_cols: &Matrix<T>, y_cols: &Matrix<T>, eta: T) -> Result<Vec<usize>> {
    check_pairs(s_cols, y_cols, &[])?;
    let d = s_cols.nrows();
    let mut b = Matrix::zeros(d, d);
    let mut accepted = Vec::new();
    for j in 0..s_cols.ncols() {
        let s = s_cols.col(j);
        let bs = b.mul_vec(s)?;
        let r: Vec<T> = y_cols.col(j).iter().zip(&bs).map(|(&a, &c)| a - c).collect();
        let lhs = dot(s, &r).abs();
        if lhs >= eta * norm(s) * norm(&r) && lhs > T::zero() && sr1_update(&mut b, s, y_cols.col(j)).is_ok() {
            accepted.push(j);
        }
    }
    Ok(accepted)
}

/// Compact evaluation with a general initial matrix `B₀ = γ I`:
/// `B v = γ v + (Y − γS) (D + L + Lᵀ − γ SᵀS)⁻¹ (Y − γS)ᵀ v`.
pub fn compact_general_hessvec<T: Scalar>(
    s_cols: &Matrix<T>,
    y_cols: &Matrix<T>,
    accepted: &[usize],
    gamma: T,
    v: &[T],
) -> Result<Vec<T>> {
    check_pairs(s_cols, y_cols, accepted)?;
    let s = s_cols.select_columns(accepted);
    let y = y_cols.select_columns(accepted);
    let j = accepted.len();
    let d = s.nrows();
    let w = Matrix::from_fn(d, j, |p, q| y.get(p, q) - gamma * s.get(p, q));
    let m = Matrix::from_fn(j, j, |p, q| {
        let lower = if p >= q {
            dot(s.col(p), y.col(q))
        } else {
            dot(s.col(q), y.col(p))
        };
        lower - gamma * dot(s.col(p), s.col(q))
    });
    let rhs = w.tr_mul_vec(v)?;
    let coef = solve(&m, &rhs)?;
    let tail = w.mul_vec(&coef)?;
    Ok(v.iter().zip(&tail).map(|(&a, &b)| gamma * a + b).collect())
}

/// Gaussian elimination with partial pivoting.
fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&p, &q| m.get(p, k).abs().partial_cmp(&m.get(q, k).abs()).unwrap())
            .unwrap();
        if m.get(piv, k) == T::zero() {
            return Err(Error::SingularUpdate {
                denominator: m.get(piv, k).as_f64(),
                guard: 0.0,
            });
        }
        if piv != k {
            for c in 0..n {
                let t = m.get(k, c);
                m.set(k, c, m.get(piv, c));
                m.set(piv, c, t);
            }
            x.swap(k, piv);
        }
        for r in (k + 1)..n {
            let f = m.get(r, k) / m.get(k, k);
            for c in k..n {
                let v = m.get(r, c) - f * m.get(k, c);
                m.set(r, c, v);
            }
            x[r] = x[r] - f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut acc = x[k];
        for c in (k + 1)..n {
            acc = acc - m.get(k, c) * x[c];
        }
        x[k] = acc / m.get(k, k);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_acceptance_with_zero_gamma_is_zero() {
        let s = Matrix::<f64>::identity(3);
        let b = dense_sr1_oracle(&s, &s, &[], 0.0).unwrap();
        assert_eq!(b, Matrix::zeros(3, 3));
    }

    #[test]
    fn one_identity_pair_gives_projector() {
        let s = Matrix::from_columns(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let b = dense_sr1_oracle(&s, &s, &[0], 0.0).unwrap();
        let mut want = Matrix::zeros(3, 3);
        want.set(0, 0, 1.0);
        assert_eq!(b, want);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let s = Matrix::<f64>::zeros(65, 1);
        assert!(dense_sr1_oracle(&s, &s, &[], 0.0).is_err());
    }

    #[test]
    fn singular_denominator_errors() {
        let s = Matrix::from_columns(&[vec![1.0, 0.0]]).unwrap();
        let y = Matrix::from_columns(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            dense_sr1_oracle(&s, &y, &[0], 0.0),
            Err(Error::SingularUpdate { .. })
        ));
    }
}
