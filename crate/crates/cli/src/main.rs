use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use disk_spanner::params::Overrides;
use disk_spanner::spanner::BlockerScope;
use spanner_cli::commands::{bench, bench_csv, build, verify, BuildConfig, Mode, SpannerFile, SweepSpec};
use spanner_cli::instance::{to_json, write_json};
use spanner_cli::{generate, CliError, CliResult, Family, GenOptions, InstanceFile};

const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "spanner", version, about = "Spanners for directed disk graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance file.
    Gen(GenArgs),
    /// Build a spanner and certify its stretch.
    Build(BuildArgs),
    /// Re-certify a spanner file against its instance.
    Verify(VerifyArgs),
    /// Run a benchmark sweep and write CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    family: Family,
    #[arg(long)]
    n: usize,
    /// Instance eps (lowerbound only).
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Chain length (multiscale-chain only).
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    rmin: Option<f64>,
    /// Upper radius; the common radius for unitdisk.
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<usize>,
    /// Which selected edges may block a candidate (experiment flag).
    #[arg(long, value_enum, default_value_t = ScopeArg::CurrentLevelBig)]
    blocker_scope: ScopeArg,
    /// Include the per-edge stretch table in the report.
    #[arg(long)]
    per_edge: bool,
    #[arg(short = 'i', long = "input")]
    input: PathBuf,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ScopeArg {
    AllSelected,
    CurrentLevel,
    CurrentLevelBig,
}

impl From<ScopeArg> for BlockerScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::AllSelected => BlockerScope::AllSelected,
            ScopeArg::CurrentLevel => BlockerScope::CurrentLevel,
            ScopeArg::CurrentLevelBig => BlockerScope::CurrentLevelBig,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(short = 'i', long = "input")]
    input: PathBuf,
    #[arg(short = 's', long = "spanner")]
    spanner: PathBuf,
    #[arg(long)]
    bound: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
    /// Record wall-clock build times (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Gen(a) => {
            let opts = GenOptions {
                n: a.n,
                eps: a.eps,
                dim: a.dim,
                seed: a.seed,
                levels: a.levels,
                rmin: a.rmin,
                rmax: a.rmax,
            };
            let inst = generate(a.family, &opts)?;
            inst.write(&a.output)?;
            if let Some(s) = inst.metadata.get("summary").and_then(|v| v.as_str()) {
                eprintln!("{s}");
            }
            Ok(0)
        }
        Command::Build(a) => {
            let inst = InstanceFile::read(&a.input)?;
            let cfg = BuildConfig {
                mode: a.mode,
                eps: a.eps,
                overrides: Overrides {
                    alpha: a.alpha,
                    beta: a.beta,
                    gamma: a.gamma,
                },
                blocker_scope: a.blocker_scope.into(),
                per_edge: a.per_edge,
            };
            let out = build(&inst, &cfg)?;
            write_json(&a.output, &out.spanner)?;
            if let Some(path) = &a.report {
                write_json(path, &out.report)?;
            }
            let r = &out.report;
            eprintln!(
                "{} edges, max stretch {} (bound {}), {}{}",
                out.spanner.edges.iter().filter(|e| e.survived).count(),
                r.stretch.max_ratio,
                r.stretch.bound,
                if r.certified { "certified" } else { "NOT certified" },
                if r.outside_proof_regime { ", outside proof regime" } else { "" }
            );
            Ok(r.exit_code())
        }
        Command::Verify(a) => {
            let inst = InstanceFile::read(&a.input)?;
            let text = fs::read_to_string(&a.spanner).map_err(|e| CliError::io(&a.spanner, e))?;
            let spanner: SpannerFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("malformed spanner {}: {e}", a.spanner.display())))?;
            let report = verify(&inst, &spanner, a.bound)?;
            match &a.report {
                Some(path) => write_json(path, &report)?,
                None => print!("{}", to_json(&report)?),
            }
            Ok(report.exit_code())
        }
        Command::Bench(a) => {
            let text = fs::read_to_string(&a.spec).map_err(|e| CliError::io(&a.spec, e))?;
            let mut spec: SweepSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("malformed sweep {}: {e}", a.spec.display())))?;
            spec.timing |= a.timing;
            let rows = bench(&spec)?;
            fs::write(&a.output, bench_csv(&rows)?).map_err(|e| CliError::io(&a.output, e))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
