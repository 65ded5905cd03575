//! Cyclic Jacobi eigensolver for real symmetric matrices.
//!
//! Each sweep visits every off-diagonal pair `(p, q)` once and applies the
//! plane rotation that annihilates `a_pq`. Accumulating the rotations gives
//! the eigenvectors. Convergence is declared when the off-diagonal
//! Frobenius norm drops below `OFF_DIAGONAL_TOL * ||A||_F`.

use crate::error::{ItrdError, Result};
use crate::tensor::Matrix;

const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Inputs may deviate from symmetry by this much (relative to the largest
/// entry) before being rejected.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Eigenvalues below `-PSD_TOL` mean the input was not positive semidefinite.
/// Values in `[-PSD_TOL, 0)` are treated as round-off and clamped to zero.
pub const PSD_TOL: f64 = 1e-9;

/// Eigenvalues sorted in descending order, with the matching orthonormal
/// eigenvectors stored as columns when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Matrix>,
}

impl SpectralDecomposition {
    /// Applies the PSD policy: rejects eigenvalues below `-PSD_TOL` and
    /// clamps the remaining negative ones to zero.
    pub fn clamp_psd(mut self) -> Result<Self> {
        for lambda in &mut self.eigenvalues {
            if *lambda < -PSD_TOL {
                return Err(ItrdError::Domain(format!(
                    "matrix is not positive semidefinite: eigenvalue {lambda:e}"
                )));
            }
            if *lambda < 0.0 {
                *lambda = 0.0;
            }
        }
        Ok(self)
    }

    /// `Q diag(f(lambda)) Q^T`. Panics if eigenvectors were not retained.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let q = self
            .eigenvectors
            .as_ref()
            .expect("reconstruction requires eigenvectors");
        let n = q.rows();
        let w: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    s += q[(i, k)] * wk * q[(j, k)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_with(|l| l)
    }
}

/// Eigenvalues (descending) of a symmetric matrix.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<SpectralDecomposition> {
    jacobi(a, false)
}

/// Eigenvalues and eigenvectors of a symmetric matrix.
pub fn symmetric_eigen(a: &Matrix) -> Result<SpectralDecomposition> {
    jacobi(a, true)
}

/// Eigenvalues of a symmetric PSD matrix with the clamping policy applied.
pub fn psd_eigenvalues(a: &Matrix) -> Result<SpectralDecomposition> {
    symmetric_eigenvalues(a)?.clamp_psd()
}

fn jacobi(a: &Matrix, want_vectors: bool) -> Result<SpectralDecomposition> {
    if !a.is_square() {
        return Err(ItrdError::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scale = a.as_slice().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if !a.is_symmetric(SYMMETRY_TOL * scale) {
        return Err(ItrdError::Domain(
            "eigendecomposition needs a symmetric matrix".into(),
        ));
    }
    let n = a.rows();
    let mut m = a.symmetrize()?;
    let mut v = want_vectors.then(|| Matrix::identity(n));

    let norm = m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = OFF_DIAGONAL_TOL * norm;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                rotate(&mut m, p, q, c, s);
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                if let Some(v) = v.as_mut() {
                    rotate_columns(v, p, q, c, s);
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&m) > target {
        return Err(ItrdError::Numerical(format!(
            "Jacobi iteration did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let eigenvectors = v.map(|v| Matrix::from_fn(n, n, |i, k| v[(i, order[k])]));
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

// A <- P^T A P for the rotation P in the (p, q) plane.
fn rotate(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    rotate_columns(m, p, q, c, s);
    let n = m.cols();
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
}

fn rotate_columns(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.rows() {
        let row = m.row_mut(k);
        let akp = row[p];
        let akq = row[q];
        row[p] = c * akp - s * akq;
        row[q] = s * akp + c * akq;
    }
}
