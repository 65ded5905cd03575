use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::{Split, SyntheticDataset};
use super::mlp::MlpModel;
use super::{stream_rng, Stream};
use crate::error::{ItrdError, Result};
use crate::losses::{itrd_loss_and_grad, ItrdConfig, LossBreakdown};
use crate::nn::{EmbeddingLayer, Linear, LinearGrads};
use crate::tensor::Matrix;

/// Mean softmax cross entropy (natural log) and its gradient
/// `(softmax - onehot) / n` with respect to the logits.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (n, c) = logits.shape();
    if labels.len() != n {
        return Err(ItrdError::Dimension(format!(
            "{} labels for {n} rows of logits",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
        return Err(ItrdError::Argument(format!(
            "label {bad} out of range for {c} classes"
        )));
    }
    let mut grad = Matrix::zeros(n, c);
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_sum = sum.ln() + max;
        loss += log_sum - row[y];
        for (j, g) in grad.row_mut(i).iter_mut().enumerate() {
            let p = (row[j] - log_sum).exp();
            *g = (p - if j == y { 1.0 } else { 0.0 }) / n as f64;
        }
    }
    Ok((loss / n as f64, grad))
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Fraction of rows whose arg-max logit equals the label.
pub fn accuracy(logits: &Matrix, labels: &[usize]) -> f64 {
    let hits = labels
        .iter()
        .enumerate()
        .filter(|&(i, &y)| argmax(logits.row(i)) == y)
        .count();
    hits as f64 / labels.len() as f64
}

/// Arg-max accuracy of `model` on one split of `dataset`.
pub fn evaluate(model: &MlpModel, dataset: &SyntheticDataset, split: Split) -> Result<f64> {
    let (x, y) = dataset.split(split);
    let (_, logits) = model.forward(&x)?;
    Ok(accuracy(&logits, &y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LrSchedule {
    Constant {
        lr: f64,
    },
    /// Multiply by `gamma` every `every` epochs.
    Step {
        lr: f64,
        gamma: f64,
        every: usize,
    },
    /// Multiply by `gamma` at each listed epoch.
    MultiStep {
        lr: f64,
        gamma: f64,
        milestones: Vec<usize>,
    },
}

impl LrSchedule {
    pub fn at(&self, epoch: usize) -> f64 {
        match *self {
            LrSchedule::Constant { lr } => lr,
            LrSchedule::Step { lr, gamma, every } => lr * gamma.powi((epoch / every.max(1)) as i32),
            LrSchedule::MultiStep {
                lr,
                gamma,
                ref milestones,
            } => lr * gamma.powi(milestones.iter().filter(|&&m| epoch >= m).count() as i32),
        }
    }

    /// `lr`, decayed tenfold at 5/8, 3/4 and 7/8 of `epochs`.
    pub fn staged(lr: f64, epochs: usize) -> Self {
        LrSchedule::MultiStep {
            lr,
            gamma: 0.1,
            milestones: [5, 6, 7].iter().map(|k| epochs * k / 8).collect(),
        }
    }
}

/// Optimizer and schedule settings shared by teacher and student training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub lr: LrSchedule,
    pub momentum: f64,
    pub batch_size: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: LrSchedule::staged(0.05, 200),
            momentum: 0.9,
            batch_size: 64,
        }
    }
}

impl TrainOptions {
    /// Same options over `epochs`; a staged schedule is rescaled to the new length.
    pub fn with_epochs(self, epochs: usize) -> Self {
        let lr = match self.lr {
            LrSchedule::MultiStep { lr, .. } if self.lr == LrSchedule::staged(lr, self.epochs) => {
                LrSchedule::staged(lr, epochs)
            }
            other => other,
        };
        Self { epochs, lr, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(ItrdError::Argument("batch size must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(ItrdError::Argument(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}

/// Metrics recorded after each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean over the epoch's mini-batches.
    pub train_loss: LossBreakdown,
    pub test_accuracy: f64,
}

/// Outcome of one student training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub seed: u64,
    pub epochs: usize,
    pub lr: LrSchedule,
    pub metrics: Vec<EpochMetrics>,
    pub final_accuracy: f64,
    pub student: MlpModel,
    pub embedding: Option<EmbeddingLayer>,
}

// SGD with heavy-ball momentum: v <- mu v + g; p <- p - lr v.
struct Momentum {
    velocity: Vec<LinearGrads>,
}

impl Momentum {
    fn new(layers: &[Linear]) -> Self {
        Self {
            velocity: layers.iter().map(LinearGrads::zeros_like).collect(),
        }
    }

    fn step(&mut self, layers: &mut [&mut Linear], grads: &[LinearGrads], lr: f64, mu: f64) {
        for ((layer, g), v) in layers.iter_mut().zip(grads).zip(&mut self.velocity) {
            for ((p, gv), vv) in layer
                .weight
                .as_mut_slice()
                .iter_mut()
                .zip(g.weight.as_slice())
                .zip(v.weight.as_mut_slice())
            {
                *vv = mu * *vv + gv;
                *p -= lr * *vv;
            }
            for ((p, gv), vv) in layer.bias.iter_mut().zip(&g.bias).zip(&mut v.bias) {
                *vv = mu * *vv + gv;
                *p -= lr * *vv;
            }
        }
    }
}

fn minibatches(indices: &[usize], batch_size: usize) -> impl Iterator<Item = &[usize]> {
    // A trailing batch of one sample cannot be standardized; drop it.
    indices.chunks(batch_size).filter(|b| b.len() >= 2)
}

fn diverged(epoch: usize, what: &str) -> ItrdError {
    ItrdError::Training {
        epoch,
        message: format!("non-finite {what}"),
    }
}

/// Trains a classifier with cross entropy only. Deterministic per seed.
pub fn train_teacher(
    dataset: &SyntheticDataset,
    arch: &[usize],
    opts: &TrainOptions,
    seed: u64,
) -> Result<MlpModel> {
    opts.validate()?;
    check_arch(arch, dataset)?;
    let mut model = MlpModel::glorot(arch, &mut stream_rng(seed, Stream::TeacherInit))?;
    let mut shuffle = stream_rng(seed, Stream::TeacherShuffle);
    let mut opt = Momentum::new(model.layers());
    let mut order = dataset.train.clone();
    for epoch in 0..opts.epochs {
        order.shuffle(&mut shuffle);
        let lr = opts.lr.at(epoch);
        for batch in minibatches(&order, opts.batch_size) {
            let (x, y) = dataset.gather(batch);
            let cache = model.forward_cached(&x)?;
            let (loss, d_logits) = softmax_cross_entropy(&cache.logits, &y)?;
            if !loss.is_finite() {
                return Err(diverged(epoch, "cross-entropy loss"));
            }
            let grads = model.backward(&cache, &d_logits, None)?;
            let mut params: Vec<&mut Linear> = model.layers_mut().iter_mut().collect();
            opt.step(&mut params, &grads, lr, opts.momentum);
        }
        if !model.is_finite() {
            return Err(diverged(epoch, "teacher parameters"));
        }
    }
    Ok(model)
}

fn check_arch(arch: &[usize], dataset: &SyntheticDataset) -> Result<()> {
    if arch.first() != Some(&dataset.points.cols()) || arch.last() != Some(&dataset.classes) {
        return Err(ItrdError::Argument(format!(
            "architecture {arch:?} does not map {} inputs to {} classes",
            dataset.points.cols(),
            dataset.classes
        )));
    }
    Ok(())
}

/// Trains a student against a frozen teacher with
/// `L_XE + β_corr L_corr + β_mi L_mi`.
///
/// When the student representation is narrower than the teacher's, a
/// trainable linear embedding maps it to the teacher's width and is
/// optimized jointly with the student.
pub fn distill_student(
    dataset: &SyntheticDataset,
    teacher: &MlpModel,
    student_arch: &[usize],
    cfg: &ItrdConfig,
    opts: &TrainOptions,
    seed: u64,
) -> Result<TrainRun> {
    cfg.validate()?;
    train_student(dataset, Some((teacher, cfg)), student_arch, opts, seed)
}

/// Cross-entropy-only student with the same initialization and batch order
/// as [`distill_student`] for the same seed.
pub fn train_student_xent(
    dataset: &SyntheticDataset,
    student_arch: &[usize],
    opts: &TrainOptions,
    seed: u64,
) -> Result<TrainRun> {
    train_student(dataset, None, student_arch, opts, seed)
}

fn train_student(
    dataset: &SyntheticDataset,
    distill: Option<(&MlpModel, &ItrdConfig)>,
    student_arch: &[usize],
    opts: &TrainOptions,
    seed: u64,
) -> Result<TrainRun> {
    opts.validate()?;
    check_arch(student_arch, dataset)?;
    let mut student = MlpModel::glorot(student_arch, &mut stream_rng(seed, Stream::StudentInit))?;
    let mut shuffle = stream_rng(seed, Stream::StudentShuffle);

    let mut embedding = match distill {
        Some((teacher, _)) => {
            let (ds, dt) = (student.representation_dim(), teacher.representation_dim());
            if ds > dt {
                return Err(ItrdError::Argument(format!(
                    "student representation ({ds}) is wider than the teacher's ({dt})"
                )));
            }
            (ds != dt).then(|| {
                EmbeddingLayer::glorot(ds, dt, &mut stream_rng(seed, Stream::EmbeddingInit))
            })
        }
        None => None,
    };

    let mut opt = Momentum::new(student.layers());
    let mut embed_opt = embedding
        .as_ref()
        .map(|e| Momentum::new(std::slice::from_ref(&e.linear)));
    let mut metrics = Vec::with_capacity(opts.epochs);
    let mut order = dataset.train.clone();

    for epoch in 0..opts.epochs {
        order.shuffle(&mut shuffle);
        let lr = opts.lr.at(epoch);
        let mut sum = LossBreakdown::default();
        let mut batches = 0usize;
        for batch in minibatches(&order, opts.batch_size) {
            let (x, y) = dataset.gather(batch);
            let cache = student.forward_cached(&x)?;
            let (xent, d_logits) = softmax_cross_entropy(&cache.logits, &y)?;

            let (breakdown, d_rep, d_embed) = match distill {
                Some((teacher, cfg)) => {
                    let (zt, _) = teacher.forward(&x)?;
                    let out = itrd_loss_and_grad(
                        cache.representation(),
                        &zt,
                        embedding.as_ref(),
                        xent,
                        cfg,
                    )?;
                    (out.breakdown, Some(out.student), out.embedding)
                }
                None => (
                    LossBreakdown {
                        total: xent,
                        xent,
                        ..LossBreakdown::default()
                    },
                    None,
                    None,
                ),
            };
            if !breakdown.is_finite() {
                return Err(diverged(epoch, "loss"));
            }

            let grads = student.backward(&cache, &d_logits, d_rep.as_ref())?;
            let mut params: Vec<&mut Linear> = student.layers_mut().iter_mut().collect();
            opt.step(&mut params, &grads, lr, opts.momentum);
            if let (Some(e), Some(eo), Some(g)) = (embedding.as_mut(), embed_opt.as_mut(), d_embed)
            {
                eo.step(
                    &mut [&mut e.linear],
                    std::slice::from_ref(&g),
                    lr,
                    opts.momentum,
                );
            }

            sum.total += breakdown.total;
            sum.corr += breakdown.corr;
            sum.mi += breakdown.mi;
            sum.xent += breakdown.xent;
            batches += 1;
        }
        if !student.is_finite() || embedding.as_ref().is_some_and(|e| !e.linear.is_finite()) {
            return Err(diverged(epoch, "student parameters"));
        }
        let k = batches.max(1) as f64;
        metrics.push(EpochMetrics {
            epoch,
            train_loss: LossBreakdown {
                total: sum.total / k,
                corr: sum.corr / k,
                mi: sum.mi / k,
                xent: sum.xent / k,
            },
            test_accuracy: evaluate(&student, dataset, Split::Test)?,
        });
    }

    let final_accuracy = evaluate(&student, dataset, Split::Test)?;
    Ok(TrainRun {
        seed,
        epochs: opts.epochs,
        lr: opts.lr.clone(),
        metrics,
        final_accuracy,
        student,
        embedding,
    })
}
