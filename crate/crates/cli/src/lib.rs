//! Command-line front end for `itrd-core`: information measures over CSV
//! feature files, distillation losses between representation dumps, and
//! the synthetic distillation demo.

pub mod commands;
pub mod error;
pub mod features;
pub mod report;

pub use commands::{cmd_demo, cmd_entropy, cmd_loss, cmd_mi, run, Cli, Command};
pub use error::{exit, CliError, Result};
pub use features::{parse, write_features, write_features_to_path, FeatureFile};
pub use report::MetricsReport;
