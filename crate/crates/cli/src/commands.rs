use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use itrd_core::entropy::mutual_information_breakdown;
use itrd_core::harness::{run_demo, stream_rng, DemoConfig, DemoVariant, Stream};
use itrd_core::losses::ALPHA_CORR_SAME_ARCH;
use itrd_core::{
    itrd_loss, matrix_entropy, Alpha, EmbeddingLayer, ItrdConfig, KernelSpec, MiVariant, NpdMatrix,
};
use serde_json::json;

use crate::error::{CliError, Result};
use crate::features::FeatureFile;
use crate::report::MetricsReport;

#[derive(Debug, Parser)]
#[command(
    name = "itrd",
    version,
    about = "Matrix-based information measures and distillation losses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rényi α-entropy (bits) of the normalized Gram matrix of a feature file.
    Entropy(EntropyArgs),
    /// Marginal, joint and mutual information between two feature files.
    Mi(MiArgs),
    /// Correlation and mutual-information distillation losses between two feature dumps.
    Loss(LossArgs),
    /// Train a teacher on synthetic blobs and distill a student.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct MiArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum MiVariantArg {
    NoLog,
    LogPotential,
    /// Exact eigenvalue form at α = 2.
    EigenExact,
}

impl MiVariantArg {
    fn to_core(self) -> MiVariant {
        match self {
            MiVariantArg::NoLog => MiVariant::NoLog,
            MiVariantArg::LogPotential => MiVariant::LogPotential,
            MiVariantArg::EigenExact => {
                MiVariant::EigenExact(Alpha::new(2.0).expect("valid order"))
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub student: PathBuf,
    #[arg(long)]
    pub teacher: PathBuf,
    #[arg(long, default_value_t = ALPHA_CORR_SAME_ARCH)]
    pub alpha_corr: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta_corr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta_mi: f64,
    #[arg(long, value_enum, default_value_t = MiVariantArg::NoLog)]
    pub mi_variant: MiVariantArg,
    /// Seed for a random frozen embedding; required when the student has
    /// fewer columns than the teacher.
    #[arg(long)]
    pub embed_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Itrd,
    Xent,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Student training epochs (the teacher always uses the default schedule).
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Itrd)]
    pub variant: VariantArg,
    #[arg(long)]
    pub out: PathBuf,
}

fn alpha(value: f64) -> Result<Alpha> {
    Ok(Alpha::new(value)?)
}

fn path_str(p: &std::path::Path) -> String {
    p.display().to_string()
}

pub fn cmd_entropy(args: &EntropyArgs) -> Result<MetricsReport> {
    let start = Instant::now();
    let a = alpha(args.alpha)?;
    let file = FeatureFile::read(&args.input)?;
    let npd = NpdMatrix::from_features(&file.data, KernelSpec::default())?;
    let s = matrix_entropy(&npd, a);
    log::info!("S_{} = {s} bits over {} samples", args.alpha, file.rows());
    Ok(MetricsReport::new("entropy")
        .config("input", path_str(&args.input))
        .config("alpha", args.alpha)
        .config("rows", file.rows())
        .config("cols", file.cols())
        .result("entropy", s)
        .timed(start.elapsed().as_secs_f64()))
}

pub fn cmd_mi(args: &MiArgs) -> Result<MetricsReport> {
    let start = Instant::now();
    let al = alpha(args.alpha)?;
    let fa = FeatureFile::read(&args.a)?;
    let fb = FeatureFile::read(&args.b)?;
    if fa.rows() != fb.rows() {
        return Err(CliError::Usage(format!(
            "row counts differ: {} has {} rows, {} has {}",
            args.a.display(),
            fa.rows(),
            args.b.display(),
            fb.rows()
        )));
    }
    let a = NpdMatrix::from_features(&fa.data, KernelSpec::default())?;
    let b = NpdMatrix::from_features(&fb.data, KernelSpec::default())?;
    let mi = mutual_information_breakdown(&a, &b, al)?;
    Ok(MetricsReport::new("mi")
        .config("a", path_str(&args.a))
        .config("b", path_str(&args.b))
        .config("alpha", args.alpha)
        .config("rows", fa.rows())
        .result("entropy_a", mi.entropy_a)
        .result("entropy_b", mi.entropy_b)
        .result("joint_entropy", mi.joint)
        .result("mutual_information", mi.mutual_information)
        .timed(start.elapsed().as_secs_f64()))
}

pub fn cmd_loss(args: &LossArgs) -> Result<MetricsReport> {
    let start = Instant::now();
    let cfg = ItrdConfig {
        alpha_corr: args.alpha_corr,
        beta_corr: args.beta_corr,
        beta_mi: args.beta_mi,
        mi_variant: args.mi_variant.to_core(),
        ..ItrdConfig::default()
    };
    cfg.validate()?;
    let zs = FeatureFile::read(&args.student)?;
    let zt = FeatureFile::read(&args.teacher)?;
    if zs.rows() != zt.rows() {
        return Err(CliError::Usage(format!(
            "row counts differ: student has {}, teacher has {}",
            zs.rows(),
            zt.rows()
        )));
    }
    let embed = match (zs.cols().cmp(&zt.cols()), args.embed_seed) {
        (std::cmp::Ordering::Greater, _) => {
            return Err(CliError::Usage(format!(
                "student has more columns ({}) than the teacher ({})",
                zs.cols(),
                zt.cols()
            )))
        }
        (std::cmp::Ordering::Less, None) => {
            return Err(CliError::Usage(format!(
                "student has {} columns and teacher {}; pass --embed-seed to map them with a random embedding",
                zs.cols(),
                zt.cols()
            )))
        }
        (std::cmp::Ordering::Less, Some(seed)) => {
            let mut rng = stream_rng(seed, Stream::EmbeddingInit);
            let mut e = EmbeddingLayer::glorot(zs.cols(), zt.cols(), &mut rng);
            e.trainable = false;
            Some(e)
        }
        (std::cmp::Ordering::Equal, seed) => {
            if seed.is_some() {
                log::warn!("dimensions match; --embed-seed ignored");
            }
            None
        }
    };
    let out = itrd_loss(&zs.data, &zt.data, embed.as_ref(), 0.0, &cfg)?;
    let embed_seed = embed.as_ref().and(args.embed_seed);
    Ok(MetricsReport::new("loss")
        .config("student", path_str(&args.student))
        .config("teacher", path_str(&args.teacher))
        .config("alpha_corr", cfg.alpha_corr)
        .config("beta_corr", cfg.beta_corr)
        .config("beta_mi", cfg.beta_mi)
        .config("mi_variant", cfg.mi_variant.name())
        .config("embed_seed", json!(embed_seed))
        .config("corr_log_floor", cfg.corr_log_floor)
        .config("std_eps", cfg.std_eps)
        .result("corr", out.corr)
        .result("mi", out.mi)
        .result("total", out.total)
        .timed(start.elapsed().as_secs_f64()))
}

/// Runs the demo, writes the report to `--out`, and returns it with the
/// one-line summary.
pub fn cmd_demo(args: &DemoArgs) -> Result<(MetricsReport, String)> {
    let start = Instant::now();
    let mut cfg = DemoConfig::default();
    cfg.student = cfg.student.with_epochs(args.epochs);
    let variant = match args.variant {
        VariantArg::Itrd => DemoVariant::Itrd,
        VariantArg::Xent => DemoVariant::Xent,
    };
    let out = run_demo(args.seed, variant, &cfg)?;
    let run = &out.run;
    log::info!(
        "teacher test accuracy {:.4}, student {:.4}",
        out.teacher_accuracy,
        run.final_accuracy
    );
    let series = |f: fn(&itrd_core::harness::EpochMetrics) -> f64| -> Vec<f64> {
        run.metrics.iter().map(f).collect()
    };
    let mut report = MetricsReport::new("demo")
        .config("seed", args.seed)
        .config("epochs", args.epochs)
        .config("variant", variant.name())
        .config("teacher_epochs", cfg.teacher_epochs)
        .config("teacher_arch", cfg.teacher_arch.clone())
        .config("student_arch", cfg.student_arch.clone())
        .config("classes", cfg.classes)
        .config("n_per_class", cfg.n_per_class)
        .config("spread", cfg.spread)
        .config("lr", serde_json::to_value(&cfg.student.lr)?)
        .config("momentum", cfg.student.momentum)
        .config("batch_size", cfg.student.batch_size)
        .result("test_acc", run.final_accuracy)
        .result("teacher_test_acc", out.teacher_accuracy)
        .series("test_accuracy", series(|m| m.test_accuracy))
        .series("loss_total", series(|m| m.train_loss.total))
        .series("loss_xent", series(|m| m.train_loss.xent))
        .series("loss_corr", series(|m| m.train_loss.corr))
        .series("loss_mi", series(|m| m.train_loss.mi));
    if variant == DemoVariant::Itrd {
        report = report
            .config("alpha_corr", cfg.loss.alpha_corr)
            .config("beta_corr", cfg.loss.beta_corr)
            .config("beta_mi", cfg.loss.beta_mi)
            .config("mi_variant", cfg.loss.mi_variant.name());
    }
    let report = report.timed(start.elapsed().as_secs_f64());
    report.write(&args.out)?;
    let summary = format!(
        "{} seed={} test_acc={:.4}",
        variant.name(),
        args.seed,
        run.final_accuracy
    );
    Ok((report, summary))
}

/// Executes a parsed command line and returns what should go to stdout.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Entropy(a) => cmd_entropy(a)?.to_json(),
        Command::Mi(a) => cmd_mi(a)?.to_json(),
        Command::Loss(a) => cmd_loss(a)?.to_json(),
        Command::Demo(a) => cmd_demo(a).map(|(_, summary)| summary + "\n"),
    }
}
