use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mildcone::commands::{run_command, Command, Status};
use mildcone::load_config;

#[derive(Parser)]
#[command(name = "mildcone", version, about = "Positive eigenpairs of nonlocal semilinear heat problems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random choice; overrides `solver.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Only report errors on standard error.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for one eigenpair at `solver.rho`.
    Solve(Common),
    /// Solve at every radius of `solver.rho_list`.
    Sweep(Common),
    /// Sample the hypotheses and report margins.
    Check(Common),
    /// Recompute a certificate's residual on an independent discretization.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        certificate: PathBuf,
        /// Accepted residual, relative to rho.
        #[arg(long, default_value_t = 1e-4)]
        strict_tol: f64,
    },
    /// Compare the semigroup and quadrature implementations.
    OracleCompare(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, command) = match cli.command {
        Cmd::Solve(c) => (c, Command::Solve),
        Cmd::Sweep(c) => (c, Command::Sweep),
        Cmd::Check(c) => (c, Command::Check),
        Cmd::Verify {
            common,
            certificate,
            strict_tol,
        } => (common, Command::Verify { certificate, strict_tol }),
        Cmd::OracleCompare(c) => (c, Command::OracleCompare),
    };

    let level = if common.quiet {
        log::LevelFilter::Error
    } else {
        log::LevelFilter::Info
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();

    let doc = match load_config(&common.config) {
        Ok(doc) => doc,
        Err(e) => {
            log::error!("{}: {e}", common.config.display());
            return exit(Status::ConfigError);
        }
    };
    let doc = match common.seed {
        Some(seed) => doc.with_seed(seed),
        None => doc,
    };
    exit(run_command(&command, &doc, common.out.as_deref()))
}

fn exit(status: Status) -> ExitCode {
    ExitCode::from(status.code() as u8)
}
