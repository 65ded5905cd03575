//! Matrix-based Rényi α-entropy on normalized kernel matrices.
//!
//! Given a Gram matrix `K` over `n` samples, `A = K / tr(K)` is a
//! symmetric PSD matrix with unit trace whose spectrum behaves like a
//! probability distribution. The entropy of order α is
//!
//! ```text
//! S_α(A) = 1/(1-α) · log2 Σ_i λ_i(A)^α
//! ```
//!
//! in bits, with the Shannon form `-Σ λ log2 λ` as the α → 1 limit. Joint
//! entropy uses the trace-normalized Hadamard product of two such matrices,
//! and mutual information is `S(A) + S(B) - S(A, B)`.
//!
//! Everything is evaluated from eigenvalues, never through fractional
//! matrix powers, so any α > 0 is handled the same way.

use serde::{Deserialize, Serialize};

use crate::eigen::{psd_eigenvalues, SYMMETRY_TOL};
use crate::error::{ItrdError, Result};
use crate::tensor::{hadamard, l2_normalize_rows, trace_normalize, FeatureBatch, Matrix};

/// Orders closer to 1 than this use the Shannon form.
pub const SHANNON_ROUTING_TOL: f64 = 1e-6;

const TRACE_TOL: f64 = 1e-9;

/// Entropy order α > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(ItrdError::Argument(format!(
                "entropy order must be finite and positive, got {value}"
            )));
        }
        Ok(Self(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// True when the α-form would lose precision and the Shannon limit is used.
    #[inline]
    pub fn is_shannon(self) -> bool {
        (self.0 - 1.0).abs() < SHANNON_ROUTING_TOL
    }
}

impl TryFrom<f64> for Alpha {
    type Error = ItrdError;

    fn try_from(value: f64) -> Result<Self> {
        Alpha::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// Kernel used to build Gram matrices from feature batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    /// Degree-1 polynomial kernel on L2-normalized rows (cosine similarity).
    #[default]
    LinearOnL2Rows,
}

impl KernelSpec {
    pub fn degree(self) -> usize {
        match self {
            KernelSpec::LinearOnL2Rows => 1,
        }
    }
}

/// Builds the `n x n` Gram matrix of a batch under `kernel`.
pub fn gram_matrix(z: &FeatureBatch, kernel: KernelSpec) -> Matrix {
    match kernel {
        KernelSpec::LinearOnL2Rows => {
            let u = l2_normalize_rows(z);
            u.matmul_transpose(&u)
                .expect("a matrix times its own transpose is always conformable")
        }
    }
}

/// A symmetric PSD matrix with unit trace, together with its clamped
/// spectrum (computed once at construction).
#[derive(Debug, Clone, PartialEq)]
pub struct NpdMatrix {
    matrix: Matrix,
    eigenvalues: Vec<f64>,
}

impl NpdMatrix {
    /// Validates `matrix` as an NPD matrix.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(ItrdError::Domain(format!(
                "NPD matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_symmetric(SYMMETRY_TOL) {
            return Err(ItrdError::Domain("NPD matrix must be symmetric".into()));
        }
        let tr = matrix.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(ItrdError::Domain(format!(
                "NPD matrix must have unit trace, got {tr}"
            )));
        }
        let mut eigenvalues = psd_eigenvalues(&matrix)?.eigenvalues;
        // Eigenvalues within round-off of zero are zero; for α < 1 even
        // 1e-17 would otherwise contribute λ^α ≈ 1e-9.
        let cutoff = f64::EPSILON * matrix.rows() as f64 * eigenvalues[0].max(0.0);
        for l in &mut eigenvalues {
            if *l <= cutoff {
                *l = 0.0;
            }
        }
        Ok(Self {
            matrix,
            eigenvalues,
        })
    }

    /// Trace-normalizes a PSD kernel matrix.
    pub fn from_kernel(k: &Matrix) -> Result<Self> {
        Self::new(trace_normalize(k)?)
    }

    /// Gram matrix of `z` under `kernel`, trace-normalized.
    pub fn from_features(z: &FeatureBatch, kernel: KernelSpec) -> Result<Self> {
        Self::from_kernel(&gram_matrix(z, kernel))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Eigenvalues in descending order. Values within round-off of zero
    /// (or slightly negative) are set to zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }
}

// 0^α is taken as 0 for every α > 0.
#[inline]
fn pow_clamped(lambda: f64, alpha: f64) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else {
        lambda.powf(alpha)
    }
}

/// `tr(A^α) = Σ λ_i^α`.
pub fn information_potential(a: &NpdMatrix, alpha: Alpha) -> f64 {
    a.eigenvalues
        .iter()
        .map(|&l| pow_clamped(l, alpha.value()))
        .sum()
}

/// Rényi α-entropy of an NPD matrix, in bits.
pub fn matrix_entropy(a: &NpdMatrix, alpha: Alpha) -> f64 {
    if alpha.is_shannon() {
        return shannon_entropy_limit(a);
    }
    let alpha = alpha.value();
    information_potential(a, Alpha(alpha)).log2() / (1.0 - alpha)
}

/// `-Σ λ log2 λ` with `0 log 0 = 0`.
pub fn shannon_entropy_limit(a: &NpdMatrix) -> f64 {
    -a.eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.log2())
        .sum::<f64>()
}

/// Trace-normalized Hadamard product `A∘B / tr(A∘B)`.
pub fn joint_matrix(a: &NpdMatrix, b: &NpdMatrix) -> Result<NpdMatrix> {
    let prod = hadamard(&a.matrix, &b.matrix)?;
    let tr = prod.trace();
    if tr.is_nan() || tr <= 1e-12 {
        return Err(ItrdError::DegenerateKernel(format!(
            "Hadamard product trace {tr:e} is not above 1e-12"
        )));
    }
    let m = prod.scale(1.0 / tr);
    NpdMatrix::new(m)
}

/// Joint entropy `S_α(A∘B / tr(A∘B))`.
pub fn joint_entropy(a: &NpdMatrix, b: &NpdMatrix, alpha: Alpha) -> Result<f64> {
    Ok(matrix_entropy(&joint_matrix(a, b)?, alpha))
}

/// The three entropies and the resulting mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MutualInformation {
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub joint: f64,
    pub mutual_information: f64,
}

pub fn mutual_information_breakdown(
    a: &NpdMatrix,
    b: &NpdMatrix,
    alpha: Alpha,
) -> Result<MutualInformation> {
    let joint = joint_entropy(a, b, alpha)?;
    let entropy_a = matrix_entropy(a, alpha);
    let entropy_b = matrix_entropy(b, alpha);
    Ok(MutualInformation {
        entropy_a,
        entropy_b,
        joint,
        mutual_information: entropy_a + entropy_b - joint,
    })
}

/// `I_α(A; B) = S_α(A) + S_α(B) - S_α(A, B)`.
pub fn mutual_information(a: &NpdMatrix, b: &NpdMatrix, alpha: Alpha) -> Result<f64> {
    Ok(mutual_information_breakdown(a, b, alpha)?.mutual_information)
}
