//! Distillation losses: feature-wise correlation, batch-wise mutual
//! information, and their weighted combination with cross entropy.

mod correlation;
mod mutual_info;

pub use correlation::{
    correlation_loss, correlation_loss_and_grad, correlation_loss_grad, cross_correlation_diag,
    cross_correlation_diag_with, CorrelationDiagonal,
};
pub use mutual_info::{mi_loss, mi_loss_and_grad, mi_loss_grad, MiVariant};

use serde::{Deserialize, Serialize};

use crate::error::{ItrdError, Result};
use crate::nn::{EmbeddingLayer, LinearGrads};
use crate::tensor::{FeatureBatch, StdConvention};

/// Correlation-loss order for student/teacher pairs of the same architecture family.
pub const ALPHA_CORR_SAME_ARCH: f64 = 1.01;
/// Correlation-loss order for cross-architecture pairs.
pub const ALPHA_CORR_CROSS_ARCH: f64 = 1.50;

/// Loss hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItrdConfig {
    pub alpha_corr: f64,
    pub beta_corr: f64,
    pub beta_mi: f64,
    pub mi_variant: MiVariant,
    /// Lower clamp on the correlation-loss log argument.
    pub corr_log_floor: f64,
    pub std_eps: f64,
    pub std_convention: StdConvention,
}

impl Default for ItrdConfig {
    fn default() -> Self {
        Self {
            alpha_corr: ALPHA_CORR_SAME_ARCH,
            beta_corr: 2.0,
            beta_mi: 1.0,
            mi_variant: MiVariant::NoLog,
            corr_log_floor: 1e-12,
            std_eps: 1e-5,
            std_convention: StdConvention::Population,
        }
    }
}

impl ItrdConfig {
    /// Config with both distillation weights at zero (cross entropy only).
    pub fn xent_only() -> Self {
        Self {
            beta_corr: 0.0,
            beta_mi: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.alpha_corr,
            self.beta_corr,
            self.beta_mi,
            self.corr_log_floor,
            self.std_eps,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(ItrdError::Argument("config values must be finite".into()));
        }
        if self.alpha_corr <= 0.0 {
            return Err(ItrdError::Argument(format!(
                "alpha_corr must be positive, got {}",
                self.alpha_corr
            )));
        }
        if self.beta_corr < 0.0 || self.beta_mi < 0.0 {
            return Err(ItrdError::Argument(
                "loss weights must be non-negative".into(),
            ));
        }
        if self.corr_log_floor <= 0.0 || self.std_eps <= 0.0 {
            return Err(ItrdError::Argument(
                "corr_log_floor and std_eps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Components of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub corr: f64,
    pub mi: f64,
    pub xent: f64,
}

impl LossBreakdown {
    fn combine(xent: f64, corr: f64, mi: f64, cfg: &ItrdConfig) -> Self {
        Self {
            total: xent + cfg.beta_corr * corr + cfg.beta_mi * mi,
            corr,
            mi,
            xent,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
            && self.corr.is_finite()
            && self.mi.is_finite()
            && self.xent.is_finite()
    }
}

/// Loss breakdown with gradients of the distillation terms.
#[derive(Debug, Clone)]
pub struct ItrdGradients {
    pub breakdown: LossBreakdown,
    /// `d(β_corr L_corr + β_mi L_mi) / dZs_raw`.
    pub student: FeatureBatch,
    /// Gradient for the embedding parameters, when an embedding was applied.
    pub embedding: Option<LinearGrads>,
}

fn embed_student(
    zs_raw: &FeatureBatch,
    zt: &FeatureBatch,
    embed: Option<&EmbeddingLayer>,
) -> Result<FeatureBatch> {
    let zs = match embed {
        Some(e) => e.forward(zs_raw)?,
        None => zs_raw.clone(),
    };
    if zs.shape() != zt.shape() {
        return Err(ItrdError::Dimension(format!(
            "student representation {:?} does not match teacher {:?}; an embedding is required",
            zs.shape(),
            zt.shape()
        )));
    }
    Ok(zs)
}

/// `xent + β_corr L_corr + β_mi L_mi` on the (optionally embedded) student
/// representation. The teacher batch is a constant.
pub fn itrd_loss(
    zs_raw: &FeatureBatch,
    zt: &FeatureBatch,
    embed: Option<&EmbeddingLayer>,
    xent: f64,
    cfg: &ItrdConfig,
) -> Result<LossBreakdown> {
    cfg.validate()?;
    let zs = embed_student(zs_raw, zt, embed)?;
    let v = cross_correlation_diag_with(&zs, zt, cfg.std_eps, cfg.std_convention)?;
    let corr = correlation_loss(&v, cfg.alpha_corr, cfg.corr_log_floor);
    let mi = mi_loss(&zs, zt, cfg.mi_variant)?;
    Ok(LossBreakdown::combine(xent, corr, mi, cfg))
}

/// [`itrd_loss`] together with gradients of the weighted distillation terms
/// with respect to the raw student representation and the embedding.
pub fn itrd_loss_and_grad(
    zs_raw: &FeatureBatch,
    zt: &FeatureBatch,
    embed: Option<&EmbeddingLayer>,
    xent: f64,
    cfg: &ItrdConfig,
) -> Result<ItrdGradients> {
    cfg.validate()?;
    let zs = embed_student(zs_raw, zt, embed)?;
    let (corr, g_corr) = correlation_loss_and_grad(&zs, zt, cfg)?;
    let (mi, g_mi) = mi_loss_and_grad(&zs, zt, cfg.mi_variant)?;
    let d_embedded = g_corr.scale(cfg.beta_corr).add(&g_mi.scale(cfg.beta_mi))?;
    let (student, embedding) = match embed {
        Some(e) => {
            let (dx, grads) = e.linear.backward(zs_raw, &d_embedded)?;
            (dx, e.trainable.then_some(grads))
        }
        None => (d_embedded, None),
    };
    Ok(ItrdGradients {
        breakdown: LossBreakdown::combine(xent, corr, mi, cfg),
        student,
        embedding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Linear;
    use crate::tensor::Matrix;

    fn student() -> Matrix {
        Matrix::from_fn(8, 4, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 - 1.7 + 0.1 * j as f64
        })
    }

    fn teacher() -> Matrix {
        Matrix::from_fn(8, 4, |i, j| ((i * 5 + j * 2) % 7) as f64 * 0.3 - 0.8)
    }

    #[test]
    fn defaults() {
        let cfg = ItrdConfig::default();
        assert_eq!(cfg.beta_corr, 2.0);
        assert_eq!(cfg.beta_mi, 1.0);
        assert_eq!(cfg.alpha_corr, 1.01);
        assert_eq!(ALPHA_CORR_CROSS_ARCH, 1.5);
        assert_eq!(cfg.mi_variant, MiVariant::NoLog);
        assert!(cfg.validate().is_ok());
        let bad = ItrdConfig {
            beta_mi: -1.0,
            ..ItrdConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_weights_leave_cross_entropy() {
        let out = itrd_loss(&student(), &teacher(), None, 0.75, &ItrdConfig::xent_only()).unwrap();
        assert_eq!(out.total, 0.75);
    }

    #[test]
    fn breakdown_recombines() {
        let cfg = ItrdConfig::default();
        let out = itrd_loss(&student(), &teacher(), None, 1.3, &cfg).unwrap();
        let recombined = out.xent + 2.0 * out.corr + 1.0 * out.mi;
        assert!((out.total - recombined).abs() < 1e-10);
        let with_grad = itrd_loss_and_grad(&student(), &teacher(), None, 1.3, &cfg).unwrap();
        assert_eq!(with_grad.breakdown, out);
    }

    #[test]
    fn dimension_mismatch_needs_embedding() {
        let zs = Matrix::from_fn(8, 2, |i, j| (i + 2 * j) as f64 * 0.37 - 1.0);
        let cfg = ItrdConfig::default();
        assert!(matches!(
            itrd_loss(&zs, &teacher(), None, 0.0, &cfg),
            Err(ItrdError::Dimension(_))
        ));
        let embed = EmbeddingLayer::new(
            Linear::new(
                Matrix::from_rows(&[[1.0, 0.0, 0.5, -0.3], [0.0, 1.0, 0.2, 0.8]]).unwrap(),
                vec![0.1; 4],
            )
            .unwrap(),
            true,
        );
        let out = itrd_loss_and_grad(&zs, &teacher(), Some(&embed), 0.0, &cfg).unwrap();
        assert_eq!(out.student.shape(), (8, 2));
        assert!(out.embedding.is_some());
        let frozen = EmbeddingLayer {
            trainable: false,
            ..embed
        };
        let out = itrd_loss_and_grad(&zs, &teacher(), Some(&frozen), 0.0, &cfg).unwrap();
        assert!(out.embedding.is_none());
    }
}
