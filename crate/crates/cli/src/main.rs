//! `entropic-bespoke`: batch calibration and bespoke tranche pricing.
//!
//! One TOML config drives a run. Flags only pick the config, override the mode, set verbosity
//! and the worker count, and redirect the output directory.

mod config;
mod error;
mod output;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use config::{Mode, RunConfig};
use error::CliError;
use output::RunOutputs;
use run::Context;

#[derive(Debug, Parser)]
#[command(name = "entropic-bespoke", version, about = "Minimum cross-entropy calibration and bespoke tranche pricing")]
struct Args {
    /// Run configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Overrides the mode set in the config.
    #[arg(long, value_name = "M", value_enum)]
    mode: Option<Mode>,

    /// Worker threads (0 or unset: one per core).
    #[arg(long, value_name = "N", env = "ENTROPIC_BESPOKE_THREADS")]
    threads: Option<usize>,

    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Log progress to stderr.
    #[arg(long)]
    verbose: bool,
}

fn init_logging(verbose: bool) {
    let level = if verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format(|buf, record| writeln!(buf, "{}: {}", record.level().as_str().to_lowercase(), record.args()))
        .init();
}

fn execute(args: Args) -> Result<(), CliError> {
    if let Some(n) = args.threads.filter(|n| *n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new("E_INTERNAL", format!("thread pool: {e}")))?;
    }
    let mut config = RunConfig::load(&args.config)?;
    let mode = args
        .mode
        .or(config.mode)
        .ok_or_else(|| CliError::config("no mode given in the config or on the command line"))?;
    config.mode = Some(mode);
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| CliError::config("no output directory given (use --out or output_dir)"))?;
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let out = if args.out.is_some() { out } else { RunConfig::resolve(&base, &out) };

    let mut outputs = RunOutputs::default();
    outputs.record_input("config", &args.config, &args.config)?;
    let mut ctx = Context {
        config,
        base,
        mode,
        outputs,
    };
    log::info!("mode {}", mode.as_str());
    run::run(&mut ctx)?;
    let files = ctx.outputs.finish(mode.as_str(), &ctx.config)?;
    output::commit(&out, &files)?;
    log::info!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            let err = CliError::usage(first);
            eprintln!("{err}");
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    init_logging(args.verbose);
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
