#![allow(dead_code)]

use itrd_core::{Matrix, NpdMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let b = gaussian(n, n, rng);
    Matrix::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]))
}

/// `B Bᵀ / tr(B Bᵀ)` for a Gaussian `n x k` factor; rank `min(n, k)`.
pub fn random_npd(n: usize, k: usize, rng: &mut ChaCha8Rng) -> NpdMatrix {
    let b = gaussian(n, k, rng);
    let mut k_mat = b.matmul_transpose(&b).unwrap();
    let tr = k_mat.trace();
    k_mat = k_mat.scale(1.0 / tr);
    // Symmetrize exactly to keep round-off out of the validation.
    let sym = Matrix::from_fn(n, n, |i, j| 0.5 * (k_mat[(i, j)] + k_mat[(j, i)]));
    NpdMatrix::new(sym).unwrap()
}

pub fn permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Central finite differences of `f` with respect to every entry of `x`.
pub fn central_differences(x: &Matrix, h: f64, f: impl Fn(&Matrix) -> f64) -> Matrix {
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + h;
            let up = f(&probe);
            probe[(i, j)] = orig - h;
            let down = f(&probe);
            probe[(i, j)] = orig;
            grad[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    grad
}

/// Largest entrywise `|a - b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(analytic: &Matrix, numeric: &Matrix, floor: f64) -> f64 {
    analytic
        .as_slice()
        .iter()
        .zip(numeric.as_slice())
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}
