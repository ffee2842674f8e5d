#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use slsr1_core::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `Q diag(eigs) Qᵀ` with a Haar-ish random orthogonal `Q`.
pub fn symmetric_with_spectrum(rng: &mut ChaCha8Rng, eigs: &[f64]) -> Matrix<f64> {
    let d = eigs.len();
    let g = gaussian(rng, d, d);
    let q = nalgebra::DMatrix::from_column_slice(d, d, g.as_slice()).qr().q();
    Matrix::from_fn(d, d, |i, j| (0..d).map(|k| q[(i, k)] * eigs[k] * q[(j, k)]).sum())
}

/// Random symmetric matrix with eigenvalues of both signs bounded away from
/// zero; `rank < d` zeroes the remaining eigenvalues.
pub fn random_hessian(rng: &mut ChaCha8Rng, d: usize, rank: usize, indefinite: bool) -> Matrix<f64> {
    let eigs: Vec<f64> = (0..d)
        .map(|k| {
            if k >= rank {
                0.0
            } else {
                let mag = 0.5 + 4.5 * rng.random::<f64>();
                if indefinite && rng.random::<bool>() {
                    -mag
                } else {
                    mag
                }
            }
        })
        .collect();
    symmetric_with_spectrum(rng, &eigs)
}

pub fn to_na(m: &Matrix<f64>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_column_slice(m.nrows(), m.ncols(), m.as_slice())
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}
