//! Library side of the `spanner` command: instance files, seeded families,
//! and the build, verify and bench pipelines.

pub mod commands;
pub mod error;
pub mod families;
pub mod instance;

pub use commands::{bench, bench_csv, build, verify, BuildConfig, Mode, SpannerFile, SweepSpec};
pub use error::{CliError, CliResult};
pub use families::{generate, Family, GenOptions};
pub use instance::InstanceFile;
