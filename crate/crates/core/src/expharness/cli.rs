//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime
//! error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use super::{builtin_config, run_experiment, to_csv, write_atomic, ExperimentConfig, MethodKind};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::oracleopt::optimal_region;

/// Default directory for CSV output when `--out` is absent.
pub const OUT_DIR_ENV: &str = "DISTFDR_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "distfdr", version, about = "Distributed FDR control simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, clap::Args)]
struct RunOpts {
    /// Override the number of trials per sweep value.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path. Without it the CSV goes to $DISTFDR_OUT_DIR if set,
    /// else to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of no_comm,pooled_bh,prop_matching,greedy,optimal.
    #[arg(long)]
    methods: Option<String>,
    /// Run trials on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a built-in study: 1, 2a, 2b, 2c or 3.
    Experiment {
        id: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a study described by a key = value config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Print the optimal rejection regions of a config's model.
    OptimalRegion {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Time a small study with sequential and parallel execution.
    Bench {
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Normal output goes to `out`, diagnostics to `err`.
pub fn run_with(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let target: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.cmd, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::UnknownExperiment(_) | Error::Config { .. } => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            }
        }
    }
}

/// Entry point used by the binary.
pub fn run(args: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Experiment { id, opts } => run_and_emit(builtin_config(&id)?, opts, out),
        Command::Simulate { config, opts } => run_and_emit(read_config(&config)?, opts, out),
        Command::OptimalRegion { config, alpha } => {
            let cfg = read_config(&config)?;
            let alpha = alpha.unwrap_or(cfg.alpha);
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::Config { line: 0, msg: format!("alpha = {alpha} not in (0, 1)") });
            }
            let point = cfg.point(cfg.grid[0])?;
            let opt = optimal_region(&point.net, alpha, cfg.resolution)?;
            let text = format!(
                "alpha\t{alpha}\nc_alpha\t{}\nfdr\t{}\npower\t{}\n{}\n",
                opt.c_alpha, opt.fdr, opt.power, opt.regions
            );
            out.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string()))
        }
        Command::Bench { trials } => {
            let mut cfg = builtin_config("2b")?;
            cfg.trials = trials.max(1);
            cfg.methods.retain(|&m| m != MethodKind::Optimal);
            let mut lines = String::new();
            for exec in [Execution::Sequential, Execution::Parallel] {
                let start = Instant::now();
                run_experiment(&cfg, exec)?;
                lines.push_str(&format!("{exec:?}\t{:.3} s\n", start.elapsed().as_secs_f64()));
            }
            out.write_all(lines.as_bytes()).map_err(|e| Error::Io(e.to_string()))
        }
    }
}

fn run_and_emit(mut cfg: ExperimentConfig, opts: RunOpts, out: &mut dyn Write) -> Result<()> {
    if let Some(t) = opts.trials {
        cfg.trials = t;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(m) = &opts.methods {
        cfg.methods = MethodKind::parse_list(m)?;
    }
    let exec = if opts.sequential { Execution::Sequential } else { Execution::Parallel };
    let rows = run_experiment(&cfg, exec)?;
    let csv = to_csv(&rows);
    let path = opts.out.or_else(|| {
        std::env::var_os(OUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(format!("exp_{}.csv", cfg.id)))
    });
    match path {
        Some(p) => write_atomic(&p, &csv),
        None => out.write_all(csv.as_bytes()).map_err(|e| Error::Io(e.to_string())),
    }
}
