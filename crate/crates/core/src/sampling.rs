//! Seed-shared construction of sampled curvature directions.
//!
//! Every node that holds the same [`CurvatureFactory`] regenerates the same
//! `S` for a given iteration, so `S` itself is never communicated.
//!
//! Generator: ChaCha20 (`rand_chacha` 0.9, seeded with `seed_from_u64(seed)`),
//! with the iteration number selecting the ChaCha stream. Normal deviates
//! come from `rand_distr` 0.5 `StandardNormal` (ziggurat). Entries are drawn
//! in column-major order, column index outer. Both crate versions are pinned
//! exactly in the workspace manifest; [`PRNG_ID`] names this combination and
//! run configurations must match it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm, Matrix};
use crate::problems::Objective;
use crate::scalar::Scalar;

pub const PRNG_ID: &str = "chacha20-stream/rand_chacha-0.9.0/standard-normal/rand_distr-0.5.1";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// Entries iid `N(0, 1/m)`.
    GaussianOverM,
    #[default]
    /// Columns drawn as `N(0, I/m)` and rescaled to norm exactly `√(d/m)`.
    /// `E[S Sᵀ] = I` still holds, and every node (including a master that
    /// never materializes `S`) knows `‖s_j‖²` without computing it.
    NormalizedGaussianOverM,
    /// `s = −r σ` for a direction `σ` uniform on the unit sphere.
    Radius { r: f64 },
}

pub const DEFAULT_RADIUS: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureFactory {
    pub seed: u64,
    pub d: usize,
    pub m: usize,
    pub distribution: Distribution,
}

impl CurvatureFactory {
    pub fn new(seed: u64, d: usize, m: usize, distribution: Distribution) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(invalid(format!("sampler needs d, m >= 1 (d={d}, m={m})")));
        }
        if let Distribution::Radius { r } = distribution {
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid(format!("sampling radius must be positive, got {r}")));
            }
        }
        Ok(CurvatureFactory {
            seed,
            d,
            m,
            distribution,
        })
    }

    fn rng(&self, iteration: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(iteration);
        rng
    }

    /// `d × m` sample directions for `iteration`.
    pub fn generate_s<T: Scalar>(&self, iteration: u64) -> Matrix<T> {
        let mut rng = self.rng(iteration);
        let (d, m) = (self.d, self.m);
        let sd = (1.0 / m as f64).sqrt();
        let mut data = Vec::with_capacity(d * m);
        let mut col = vec![0.0f64; d];
        for _ in 0..m {
            for x in col.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x = z;
            }
            match self.distribution {
                Distribution::GaussianOverM => col.iter_mut().for_each(|x| *x *= sd),
                Distribution::NormalizedGaussianOverM => {
                    let target = (d as f64 / m as f64).sqrt();
                    let nrm = norm(&col);
                    col.iter_mut().for_each(|x| *x = *x / nrm * target);
                }
                Distribution::Radius { r } => {
                    let nrm = norm(&col);
                    col.iter_mut().for_each(|x| *x = -r * (*x / nrm));
                }
            }
            data.extend(col.iter().map(|&x| T::lit(x)));
        }
        Matrix::from_col_major(d, m, data).expect("buffer sized d*m")
    }

    /// `‖s_j‖²` when the distribution fixes it by construction.
    pub fn nominal_norm_sq(&self) -> Option<f64> {
        match self.distribution {
            Distribution::GaussianOverM => None,
            Distribution::NormalizedGaussianOverM => Some(self.d as f64 / self.m as f64),
            Distribution::Radius { r } => Some(r * r),
        }
    }
}

/// Applies the local Hessian to every column of `s`.
pub fn local_y<T: Scalar, O: Objective<T> + ?Sized>(shard: &O, w: &[T], s_cols: &Matrix<T>) -> Result<Matrix<T>> {
    if s_cols.nrows() != shard.dim() || w.len() != shard.dim() {
        return Err(invalid(format!(
            "local_y dimension mismatch: shard {}, w {}, S {:?}",
            shard.dim(),
            w.len(),
            s_cols.shape()
        )));
    }
    let mut cols = Vec::with_capacity(s_cols.ncols());
    for j in 0..s_cols.ncols() {
        let y = shard.hessvec(w, s_cols.col(j))?;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical {
                what: format!("non-finite Hessian-vector product in column {j}"),
                iterate_norm: norm(w).as_f64(),
            });
        }
        cols.push(y);
    }
    Matrix::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_iteration_is_bitwise_identical() {
        for dist in [
            Distribution::GaussianOverM,
            Distribution::NormalizedGaussianOverM,
            Distribution::Radius { r: 0.01 },
        ] {
            let f = CurvatureFactory::new(42, 17, 5, dist).unwrap();
            let a: Matrix<f64> = f.generate_s(0);
            let b: Matrix<f64> = f.clone().generate_s(0);
            assert!(a
                .as_slice()
                .iter()
                .zip(b.as_slice())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn iterations_use_different_streams() {
        let f = CurvatureFactory::new(42, 8, 3, Distribution::GaussianOverM).unwrap();
        let a: Matrix<f64> = f.generate_s(0);
        let b: Matrix<f64> = f.generate_s(1);
        assert_ne!(a, b);
    }

    #[test]
    fn nominal_norms_hold() {
        let f = CurvatureFactory::new(3, 40, 4, Distribution::NormalizedGaussianOverM).unwrap();
        let s: Matrix<f64> = f.generate_s(7);
        for j in 0..4 {
            let n2 = crate::linalg::dot(s.col(j), s.col(j));
            assert!((n2 - 10.0).abs() < 1e-12);
        }
        let f = CurvatureFactory::new(3, 40, 4, Distribution::Radius { r: 0.01 }).unwrap();
        let s: Matrix<f64> = f.generate_s(7);
        assert!((norm(s.col(2)) - 0.01).abs() < 1e-15);
        assert_eq!(f.nominal_norm_sq(), Some(0.01 * 0.01));
    }

    #[test]
    fn rejects_degenerate_factories() {
        assert!(CurvatureFactory::new(1, 0, 2, Distribution::GaussianOverM).is_err());
        assert!(CurvatureFactory::new(1, 2, 0, Distribution::GaussianOverM).is_err());
        assert!(CurvatureFactory::new(1, 2, 2, Distribution::Radius { r: 0.0 }).is_err());
    }

    #[test]
    fn moments_of_gaussian_over_m() {
        // 50 iterations of a 1000 x 10 draw: N = 500 000 entries
        let (d, m) = (1000, 10);
        let f = CurvatureFactory::new(99, d, m, Distribution::GaussianOverM).unwrap();
        let mut sum = 0.0;
        let mut sq = 0.0;
        let mut n = 0.0;
        for it in 0..50 {
            let s: Matrix<f64> = f.generate_s(it);
            for &x in s.as_slice() {
                sum += x;
                sq += x * x;
                n += 1.0;
            }
        }
        let var_true = 1.0 / m as f64;
        let mean = sum / n;
        let var = sq / n - mean * mean;
        // sd of the sample mean is √(σ²/N); of the sample variance √(2σ⁴/N)
        assert!(mean.abs() < 3.0 * (var_true / n).sqrt(), "mean {mean}");
        assert!(
            (var - var_true).abs() < 3.0 * (2.0 * var_true * var_true / n).sqrt(),
            "var {var}"
        );
    }
}
