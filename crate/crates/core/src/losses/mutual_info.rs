//! Batch-wise mutual-information loss between student and teacher Gram
//! matrices.
//!
//! Rows are L2-normalized and the linear Gram matrices `G_s`, `G_t` are
//! formed. With `G_st = G_s ∘ G_t` and hats denoting trace normalization,
//! the variants are
//!
//! * `NoLog`:        `‖Ĝ_s‖_F² − ‖Ĝ_st‖_F²`
//! * `LogPotential`: `log2 ‖Ĝ_s‖_F² − log2 ‖Ĝ_st‖_F²`
//! * `EigenExact`:   `S_α(Ĝ_st) − S_α(Ĝ_s)` from the eigenvalues
//!
//! The teacher marginal entropy is constant with respect to the student and
//! is left out. At α = 2 the last two variants coincide.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::eigen::symmetric_eigen;
use crate::entropy::{matrix_entropy, Alpha, NpdMatrix};
use crate::error::{ItrdError, Result};
use crate::tensor::{dot, frobenius_norm_sq, hadamard, l2_normalize_rows, FeatureBatch, Matrix};

/// How the mutual-information term is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "alpha")]
pub enum MiVariant {
    /// Difference of information potentials at α = 2.
    #[default]
    NoLog,
    /// Difference of α = 2 entropies via the Frobenius norm.
    LogPotential,
    /// Difference of α-entropies computed from eigenvalues.
    EigenExact(Alpha),
}

impl MiVariant {
    pub fn name(&self) -> &'static str {
        match self {
            MiVariant::NoLog => "no_log",
            MiVariant::LogPotential => "log_potential",
            MiVariant::EigenExact(_) => "eigen_exact",
        }
    }
}

/// Intermediate quantities of the forward pass, kept for the backward pass.
struct Forward {
    u: Matrix,
    norms: Vec<f64>,
    gs: Matrix,
    gt: Matrix,
    gst: Matrix,
    trace_s: f64,
    trace_st: f64,
}

impl Forward {
    fn new(zs: &FeatureBatch, zt: &FeatureBatch) -> Result<Self> {
        if zs.rows() != zt.rows() {
            return Err(ItrdError::Dimension(format!(
                "student batch has {} rows but teacher batch has {}",
                zs.rows(),
                zt.rows()
            )));
        }
        if zs.rows() < 2 {
            return Err(ItrdError::Dimension(format!(
                "mutual information needs at least 2 samples, got {}",
                zs.rows()
            )));
        }
        let norms: Vec<f64> = (0..zs.rows())
            .map(|i| dot(zs.row(i), zs.row(i)).sqrt())
            .collect();
        let u = l2_normalize_rows(zs);
        let gs = u.matmul_transpose(&u)?;
        let ut = l2_normalize_rows(zt);
        let gt = ut.matmul_transpose(&ut)?;
        let gst = hadamard(&gs, &gt)?;
        let trace_s = gs.trace();
        let trace_st = gst.trace();
        if trace_s.is_nan() || trace_s <= 1e-12 {
            return Err(ItrdError::DegenerateKernel(
                "student Gram matrix has zero trace (all rows are zero)".into(),
            ));
        }
        if trace_st.is_nan() || trace_st <= 1e-12 {
            return Err(ItrdError::DegenerateKernel(
                "joint Gram matrix has zero trace".into(),
            ));
        }
        Ok(Self {
            u,
            norms,
            gs,
            gt,
            gst,
            trace_s,
            trace_st,
        })
    }

    fn gs_hat(&self) -> Matrix {
        self.gs.scale(1.0 / self.trace_s)
    }

    fn gst_hat(&self) -> Matrix {
        self.gst.scale(1.0 / self.trace_st)
    }
}

/// Value of the loss plus `dL/dĜ_s` and `dL/dĜ_st`.
struct Upstream {
    loss: f64,
    d_gs_hat: Matrix,
    d_gst_hat: Matrix,
}

fn upstream(fwd: &Forward, variant: MiVariant, with_grad: bool) -> Result<Upstream> {
    let gs_hat = fwd.gs_hat();
    let gst_hat = fwd.gst_hat();
    let n = gs_hat.rows();
    match variant {
        MiVariant::NoLog => {
            let loss = frobenius_norm_sq(&gs_hat) - frobenius_norm_sq(&gst_hat);
            Ok(Upstream {
                loss,
                d_gs_hat: gs_hat.scale(2.0),
                d_gst_hat: gst_hat.scale(-2.0),
            })
        }
        MiVariant::LogPotential => {
            let ps = frobenius_norm_sq(&gs_hat);
            let pst = frobenius_norm_sq(&gst_hat);
            Ok(Upstream {
                loss: ps.log2() - pst.log2(),
                d_gs_hat: gs_hat.scale(2.0 / (ps * LN_2)),
                d_gst_hat: gst_hat.scale(-2.0 / (pst * LN_2)),
            })
        }
        MiVariant::EigenExact(alpha) => {
            if !with_grad {
                let s = NpdMatrix::new(gs_hat)?;
                let st = NpdMatrix::new(gst_hat)?;
                return Ok(Upstream {
                    loss: matrix_entropy(&st, alpha) - matrix_entropy(&s, alpha),
                    d_gs_hat: Matrix::zeros(n, n),
                    d_gst_hat: Matrix::zeros(n, n),
                });
            }
            let a = alpha.value();
            if a <= 1.0 || alpha.is_shannon() {
                return Err(ItrdError::Argument(format!(
                    "eigen_exact gradient needs α > 1, got {a}"
                )));
            }
            let (hs, d_hs) = entropy_and_grad(&gs_hat, a)?;
            let (hst, d_hst) = entropy_and_grad(&gst_hat, a)?;
            Ok(Upstream {
                loss: hst - hs,
                d_gs_hat: d_hs.scale(-1.0),
                d_gst_hat: d_hst,
            })
        }
    }
}

// S_α(X) and dS_α/dX = α / ((1-α) ln2 tr(X^α)) · X^{α-1} for α > 1.
fn entropy_and_grad(x: &Matrix, alpha: f64) -> Result<(f64, Matrix)> {
    let sd = symmetric_eigen(x)?.clamp_psd()?;
    let potential: f64 = sd
        .eigenvalues
        .iter()
        .map(|&l| if l > 0.0 { l.powf(alpha) } else { 0.0 })
        .sum();
    let entropy = potential.log2() / (1.0 - alpha);
    let coeff = alpha / ((1.0 - alpha) * LN_2 * potential);
    let grad = sd
        .reconstruct_with(|l| if l > 0.0 { l.powf(alpha - 1.0) } else { 0.0 })
        .scale(coeff);
    Ok((entropy, grad))
}

// Chain rule from (dL/dĜ_s, dL/dĜ_st) back to the raw student batch.
fn backward(fwd: &Forward, up: &Upstream) -> Result<Matrix> {
    let n = fwd.gs.rows();
    // Ĝ = G / tr(G): dL/dG = A / t - <A, G> / t² · I
    let mut d_gs = up.d_gs_hat.scale(1.0 / fwd.trace_s);
    let shift_s = up.d_gs_hat.frobenius_dot(&fwd.gs)? / (fwd.trace_s * fwd.trace_s);
    let mut d_gst = up.d_gst_hat.scale(1.0 / fwd.trace_st);
    let shift_st = up.d_gst_hat.frobenius_dot(&fwd.gst)? / (fwd.trace_st * fwd.trace_st);
    for i in 0..n {
        d_gs[(i, i)] -= shift_s;
        d_gst[(i, i)] -= shift_st;
    }
    // G_st = G_s ∘ G_t with G_t constant.
    let d_g = d_gs.add(&hadamard(&d_gst, &fwd.gt)?)?;
    // G = U Uᵀ: dL/dU = (M + Mᵀ) U
    let sym = d_g.add(&d_g.transpose())?;
    let d_u = sym.matmul(&fwd.u)?;
    // u = z / ‖z‖: dL/dz = (dL/du − u (u · dL/du)) / ‖z‖
    let mut grad = Matrix::zeros(fwd.u.rows(), fwd.u.cols());
    for b in 0..n {
        let r = fwd.norms[b];
        if r == 0.0 {
            continue;
        }
        let u = fwd.u.row(b);
        let du = d_u.row(b);
        let proj = dot(u, du);
        for ((g, &dui), &ui) in grad.row_mut(b).iter_mut().zip(du).zip(u) {
            *g = (dui - ui * proj) / r;
        }
    }
    Ok(grad)
}

/// Mutual-information loss of the student batch against the fixed teacher batch.
pub fn mi_loss(zs: &FeatureBatch, zt: &FeatureBatch, variant: MiVariant) -> Result<f64> {
    let fwd = Forward::new(zs, zt)?;
    Ok(upstream(&fwd, variant, false)?.loss)
}

/// Loss value and its gradient with respect to the student batch.
pub fn mi_loss_and_grad(
    zs: &FeatureBatch,
    zt: &FeatureBatch,
    variant: MiVariant,
) -> Result<(f64, FeatureBatch)> {
    let fwd = Forward::new(zs, zt)?;
    let up = upstream(&fwd, variant, true)?;
    let grad = backward(&fwd, &up)?;
    Ok((up.loss, grad))
}

/// Gradient of [`mi_loss`] with respect to the student batch. The teacher
/// batch is treated as a constant.
pub fn mi_loss_grad(
    zs: &FeatureBatch,
    zt: &FeatureBatch,
    variant: MiVariant,
) -> Result<FeatureBatch> {
    Ok(mi_loss_and_grad(zs, zt, variant)?.1)
}
