//! Desk-scale teacher → student distillation on synthetic blobs.
//!
//! Every run derives independent ChaCha streams from its seed, one per
//! purpose, so that e.g. changing the number of epochs never changes the
//! dataset or the initial weights.

mod data;
mod mlp;
mod train;

pub use data::{generate_blobs, Split, SyntheticDataset, CENTER_RADIUS, TEST_FRACTION};
pub use mlp::{ForwardCache, MlpModel};
pub use train::{
    accuracy, distill_student, evaluate, softmax_cross_entropy, train_student_xent, train_teacher,
    EpochMetrics, LrSchedule, TrainOptions, TrainRun,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::losses::ItrdConfig;

/// Disjoint random streams drawn from a run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Data = 0,
    TeacherInit = 1,
    TeacherShuffle = 2,
    StudentInit = 3,
    StudentShuffle = 4,
    EmbeddingInit = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub const DEFAULT_TEACHER_ARCH: [usize; 5] = [2, 64, 64, 16, 3];
pub const DEFAULT_STUDENT_ARCH: [usize; 4] = [2, 16, 8, 3];

/// Whether the student is distilled or trained on labels alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoVariant {
    Itrd,
    Xent,
}

impl DemoVariant {
    pub fn name(self) -> &'static str {
        match self {
            DemoVariant::Itrd => "itrd",
            DemoVariant::Xent => "xent",
        }
    }
}

/// Everything a demo run depends on besides the seed and variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub classes: usize,
    pub n_per_class: usize,
    pub spread: f64,
    pub teacher_arch: Vec<usize>,
    pub student_arch: Vec<usize>,
    pub teacher_epochs: usize,
    pub student: TrainOptions,
    pub loss: ItrdConfig,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            classes: 3,
            n_per_class: 256,
            spread: 1.2,
            teacher_arch: DEFAULT_TEACHER_ARCH.to_vec(),
            student_arch: DEFAULT_STUDENT_ARCH.to_vec(),
            teacher_epochs: 200,
            student: TrainOptions::default(),
            loss: ItrdConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoOutcome {
    pub dataset: SyntheticDataset,
    pub teacher: MlpModel,
    pub teacher_accuracy: f64,
    pub run: TrainRun,
}

/// Generates the dataset, trains the teacher, then trains the student
/// either with the distillation objective or with cross entropy alone.
pub fn run_demo(seed: u64, variant: DemoVariant, cfg: &DemoConfig) -> Result<DemoOutcome> {
    let dataset = generate_blobs(seed, cfg.n_per_class, cfg.classes, cfg.spread)?;
    let teacher_opts = cfg.student.clone().with_epochs(cfg.teacher_epochs);
    let teacher = train_teacher(&dataset, &cfg.teacher_arch, &teacher_opts, seed)?;
    let teacher_accuracy = evaluate(&teacher, &dataset, Split::Test)?;
    let run = match variant {
        DemoVariant::Itrd => distill_student(
            &dataset,
            &teacher,
            &cfg.student_arch,
            &cfg.loss,
            &cfg.student,
            seed,
        )?,
        DemoVariant::Xent => train_student_xent(&dataset, &cfg.student_arch, &cfg.student, seed)?,
    };
    Ok(DemoOutcome {
        dataset,
        teacher,
        teacher_accuracy,
        run,
    })
}
