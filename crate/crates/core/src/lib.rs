//! Information-theoretic representation distillation.
//!
//! * [`tensor`] and [`eigen`]: dense matrices, normalization, and a Jacobi
//!   eigensolver for symmetric matrices.
//! * [`entropy`]: matrix-based Rényi α-entropy, joint entropy and mutual
//!   information on trace-normalized Gram matrices.
//! * [`losses`]: the correlation and mutual-information distillation losses
//!   with analytic gradients.
//! * [`harness`]: a small MLP teacher/student setup on synthetic data.

pub mod eigen;
pub mod entropy;
pub mod error;
pub mod harness;
pub mod losses;
pub mod nn;
pub mod tensor;

pub use eigen::{psd_eigenvalues, symmetric_eigen, symmetric_eigenvalues, SpectralDecomposition};
pub use entropy::{
    gram_matrix, information_potential, joint_entropy, matrix_entropy, mutual_information,
    shannon_entropy_limit, Alpha, KernelSpec, NpdMatrix,
};
pub use error::{ItrdError, Result};
pub use losses::{
    correlation_loss, correlation_loss_and_grad, correlation_loss_grad, cross_correlation_diag,
    itrd_loss, itrd_loss_and_grad, mi_loss, mi_loss_and_grad, mi_loss_grad, CorrelationDiagonal,
    ItrdConfig, LossBreakdown, MiVariant,
};
pub use nn::{EmbeddingLayer, Linear};
pub use tensor::{
    batch_normalize, frobenius_norm_sq, hadamard, l2_normalize_rows, trace_normalize, FeatureBatch,
    Matrix, StdConvention,
};
