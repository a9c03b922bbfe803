//! `qsuff`: batch sufficiency analyses on JSON experiment files.

mod commands;
mod input;
mod report;
mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qsuff_core::settings::default_t_grid;
use qsuff_core::{Settings, DEFAULT_SEED};

use commands::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "qsuff",
    version,
    about = "Sufficiency of subalgebras and channels for families of quantum states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Is the subalgebra generated by `subalgebra_generators` sufficient for the states?
    CheckSubalgebra(FileArgs),
    /// Is the channel sufficient for the states?
    CheckChannel(FileArgs),
    /// Minimal sufficient subalgebra and the block decomposition of the states.
    Decompose(FileArgs),
    /// Strong subadditivity gap and, at equality, the block structure on H_B.
    Ssa(FileArgs),
    /// Exponential families.
    Expfam {
        #[command(subcommand)]
        command: ExpfamCommand,
    },
    /// Re-check every decomposition stored in a report.
    Verify(FileArgs),
}

#[derive(Debug, Subcommand)]
enum ExpfamCommand {
    /// Parameters whose mean values match the targets.
    Fit {
        #[command(flatten)]
        args: FileArgs,
        /// Mean values to fit, comma separated; replaces the targets in the file.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        target: Vec<f64>,
    },
    /// Sufficiency of the subalgebra or channel in the file for the family.
    CheckSufficiency(FileArgs),
}

#[derive(Debug, Args)]
struct FileArgs {
    file: PathBuf,
    #[command(flatten)]
    opts: Options,
}

#[derive(Debug, Args)]
struct Options {
    /// Times for cocycles and modular flows, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t_grid: Option<Vec<f64>>,
    /// Seed for randomized steps.
    #[arg(long, env = "QSUFF_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Residual below which a condition holds.
    #[arg(long)]
    tol: Option<f64>,
    /// Residual above which a condition fails; values in between are borderline.
    #[arg(long)]
    borderline: Option<f64>,
    /// Relative tolerance for rank decisions.
    #[arg(long)]
    rank_tol: Option<f64>,
    /// Reconstruction tolerance for decompositions.
    #[arg(long)]
    reconstruction_tol: Option<f64>,
    /// Gap below which strong subadditivity counts as saturated.
    #[arg(long)]
    ssa_tol: Option<f64>,
    /// Reconstruction tolerance for the block form of a saturating state.
    #[arg(long)]
    ssa_reconstruction_tol: Option<f64>,
    /// Emit JSON (the default).
    #[arg(long, conflicts_with = "human")]
    json: bool,
    /// Emit a plain-text summary.
    #[arg(long)]
    human: bool,
    /// Leave the timings out of the report.
    #[arg(long)]
    no_timings: bool,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl Options {
    fn settings(&self) -> Result<Settings, String> {
        let mut s = Settings::default().with_seed(self.seed);
        if let Some(grid) = &self.t_grid {
            if grid.is_empty() || grid.iter().any(|t| !t.is_finite() || *t == 0.0) {
                return Err("--t-grid needs finite, nonzero times".into());
            }
            s.t_grid = grid.clone();
        } else {
            s.t_grid = default_t_grid();
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(format!("{name} must be positive")),
            _ => Ok(v),
        };
        if let Some(t) = positive("--tol", self.tol)? {
            s.tol.sufficiency = t;
            s.tol.borderline = s.tol.borderline.max(10.0 * t);
        }
        if let Some(b) = positive("--borderline", self.borderline)? {
            s.tol.borderline = b;
        }
        if s.tol.borderline < s.tol.sufficiency {
            return Err("--borderline must not be below --tol".into());
        }
        if let Some(x) = positive("--rank-tol", self.rank_tol)? {
            s.tol.rank = x;
        }
        if let Some(x) = positive("--reconstruction-tol", self.reconstruction_tol)? {
            s.tol.reconstruction = x;
        }
        if let Some(x) = positive("--ssa-tol", self.ssa_tol)? {
            s.tol.ssa_equality = x;
        }
        if let Some(x) = positive("--ssa-reconstruction-tol", self.ssa_reconstruction_tol)? {
            s.tol.ssa_reconstruction = x;
        }
        Ok(s)
    }
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomically(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("report");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)
}

fn run(args: &FileArgs, f: impl FnOnce(&Path, &Settings) -> commands::Outcome) -> Result<i32, CliError> {
    let settings = args
        .opts
        .settings()
        .map_err(|m| CliError::Input(input::InputError::field("flags", m)))?;
    let start = Instant::now();
    let (mut report, code) = f(&args.file, &settings)?;
    if !args.opts.no_timings {
        report.timings = Some(report::Timings {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    let text = if args.opts.human {
        report::to_human(&report)
    } else {
        report::to_json(&report)
    };
    match &args.opts.output {
        Some(path) => {
            write_atomically(path, &text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Output(e.to_string()))?;
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::CheckSubalgebra(a) => run(a, commands::check_subalgebra),
        Command::CheckChannel(a) => run(a, commands::check_channel),
        Command::Decompose(a) => run(a, commands::decompose),
        Command::Ssa(a) => run(a, commands::ssa),
        Command::Verify(a) => run(a, commands::verify),
        Command::Expfam { command } => match command {
            ExpfamCommand::Fit { args, target } => {
                let targets: Vec<Vec<f64>> = if target.is_empty() {
                    vec![]
                } else {
                    vec![target.clone()]
                };
                run(args, |p, s| commands::expfam_fit(p, s, &targets))
            }
            ExpfamCommand::CheckSufficiency(a) => run(a, commands::expfam_check),
        },
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("qsuff: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
