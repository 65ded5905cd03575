//! Feature-wise correlation loss between student and teacher batches.
//!
//! Both batches are standardized per column, and `v_i` is the correlation
//! of column `i` across the batch. Columns are divided by `max(std, eps)`:
//! eps only guards constant columns, so a batch correlated with itself
//! gives exactly `v_i = 1` and per-column affine rescaling leaves `v`
//! unchanged. The loss is `log2 Σ_i |v_i - 1|^{2α}`,
//! with the log argument clamped from below so perfect correlation gives a
//! finite minimum.

use std::f64::consts::LN_2;

use crate::error::{ItrdError, Result};
use crate::tensor::{column_stats, FeatureBatch, Matrix, StdConvention};

use super::ItrdConfig;

// Added inside the power so |v - 1|^{2α} stays differentiable at v = 1.
const POWER_SMOOTHING: f64 = 1e-30;

/// Diagonal of the student/teacher cross-correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationDiagonal(pub Vec<f64>);

impl CorrelationDiagonal {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_shapes(zs: &FeatureBatch, zt: &FeatureBatch) -> Result<()> {
    if zs.shape() != zt.shape() {
        return Err(ItrdError::Dimension(format!(
            "student batch is {:?} but teacher batch is {:?}",
            zs.shape(),
            zt.shape()
        )));
    }
    if zs.rows() < 2 {
        return Err(ItrdError::Dimension(format!(
            "correlation needs at least 2 samples, got {}",
            zs.rows()
        )));
    }
    Ok(())
}

/// Column-standardized copy of `z` along with the statistics used.
struct Standardized {
    centered: Matrix,
    std: Vec<f64>,
    normalized: Matrix,
}

fn standardize(z: &FeatureBatch, eps: f64, convention: StdConvention) -> Standardized {
    let stats = column_stats(z, convention);
    let centered = Matrix::from_fn(z.rows(), z.cols(), |i, j| z[(i, j)] - stats.mean[j]);
    let normalized = Matrix::from_fn(z.rows(), z.cols(), |i, j| {
        centered[(i, j)] / stats.std[j].max(eps)
    });
    Standardized {
        centered,
        std: stats.std,
        normalized,
    }
}

fn diag_of(zs_hat: &Matrix, zt_hat: &Matrix) -> CorrelationDiagonal {
    let (n, d) = zs_hat.shape();
    let mut v = vec![0.0; d];
    for b in 0..n {
        for ((acc, s), t) in v.iter_mut().zip(zs_hat.row(b)).zip(zt_hat.row(b)) {
            *acc += s * t;
        }
    }
    v.iter_mut().for_each(|x| *x /= n as f64);
    CorrelationDiagonal(v)
}

/// `v_i = (1/n) Σ_b ẑs[b,i] ẑt[b,i]` over population-standardized columns.
/// Only the diagonal is formed.
pub fn cross_correlation_diag(
    zs: &FeatureBatch,
    zt: &FeatureBatch,
    std_eps: f64,
) -> Result<CorrelationDiagonal> {
    cross_correlation_diag_with(zs, zt, std_eps, StdConvention::Population)
}

pub fn cross_correlation_diag_with(
    zs: &FeatureBatch,
    zt: &FeatureBatch,
    std_eps: f64,
    convention: StdConvention,
) -> Result<CorrelationDiagonal> {
    check_shapes(zs, zt)?;
    if std_eps.is_nan() || std_eps <= 0.0 {
        return Err(ItrdError::Argument(format!(
            "std_eps must be positive, got {std_eps}"
        )));
    }
    let s = standardize(zs, std_eps, convention);
    let t = standardize(zt, std_eps, convention);
    Ok(diag_of(&s.normalized, &t.normalized))
}

#[inline]
fn smoothed_term(v: f64, alpha: f64) -> f64 {
    let sq = (v - 1.0) * (v - 1.0) + POWER_SMOOTHING;
    (alpha * sq.ln()).exp()
}

fn term_sum(v: &CorrelationDiagonal, alpha: f64) -> f64 {
    v.0.iter().map(|&x| smoothed_term(x, alpha)).sum()
}

/// `log2(max(Σ_i |v_i - 1|^{2α}, log_floor))`.
pub fn correlation_loss(v: &CorrelationDiagonal, alpha_corr: f64, log_floor: f64) -> f64 {
    term_sum(v, alpha_corr).max(log_floor).log2()
}

/// Loss value and its gradient with respect to the raw student batch.
pub fn correlation_loss_and_grad(
    zs: &FeatureBatch,
    zt: &FeatureBatch,
    cfg: &ItrdConfig,
) -> Result<(f64, FeatureBatch)> {
    check_shapes(zs, zt)?;
    let (n, d) = zs.shape();
    let eps = cfg.std_eps;
    let s = standardize(zs, eps, cfg.std_convention);
    let t = standardize(zt, eps, cfg.std_convention);
    let v = diag_of(&s.normalized, &t.normalized);

    let alpha = cfg.alpha_corr;
    let sum = term_sum(&v, alpha);
    let loss = sum.max(cfg.corr_log_floor).log2();
    let mut grad = Matrix::zeros(n, d);
    if sum <= cfg.corr_log_floor {
        return Ok((loss, grad));
    }

    // dL/dv_i
    let dv: Vec<f64> =
        v.0.iter()
            .map(|&x| {
                let sq = (x - 1.0) * (x - 1.0) + POWER_SMOOTHING;
                let dterm = alpha * (alpha * sq.ln()).exp() / sq * 2.0 * (x - 1.0);
                dterm / (sum * LN_2)
            })
            .collect();

    let m = cfg.std_convention.divisor(n);
    let mut dc = vec![0.0; n];
    for j in 0..d {
        let sigma = s.std[j];
        let guarded = sigma <= eps;
        let denom = if guarded { eps } else { sigma };
        // Upstream gradient on the standardized student column.
        let g = |b: usize| dv[j] * t.normalized[(b, j)] / n as f64;
        let gc: f64 = (0..n).map(|b| g(b) * s.centered[(b, j)]).sum();
        for (b, out) in dc.iter_mut().enumerate() {
            let mut val = g(b) / denom;
            if !guarded {
                val -= gc / (denom * denom) * s.centered[(b, j)] / (m * sigma);
            }
            *out = val;
        }
        let mean = dc.iter().sum::<f64>() / n as f64;
        for (b, &val) in dc.iter().enumerate() {
            grad[(b, j)] = val - mean;
        }
    }
    Ok((loss, grad))
}

/// Gradient of the correlation loss with respect to the raw student batch,
/// including the dependence of the column mean and deviation on it.
/// Zero when the loss sits at its floor.
pub fn correlation_loss_grad(
    zs: &FeatureBatch,
    zt: &FeatureBatch,
    cfg: &ItrdConfig,
) -> Result<FeatureBatch> {
    Ok(correlation_loss_and_grad(zs, zt, cfg)?.1)
}
