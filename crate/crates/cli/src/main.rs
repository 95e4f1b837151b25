use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlgs::app::{execute, AppError};
use nlgs::config::{ConfigError, Mode, Overrides, RunConfig};

/// Nonlocal Gray-Scott solver.
#[derive(Parser)]
#[command(name = "nlgs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refinement study of a manufactured-solution case.
    Converge(Common),
    /// Steady pulses for several kernel ranges plus the local reference.
    Pulse(Common),
    /// FEM against the spectral Galerkin solver.
    Oracle(Common),
    /// One run to the final time.
    Single(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file with [run], [domain], [kernel], [params], [grid] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manufactured-solution case (dirichlet1, neumann1).
    #[arg(long)]
    case: Option<String>,
    /// Number of refinement levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Kernel range parameter(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    /// Mesh size (coarsest level for studies).
    #[arg(long)]
    h: Option<f64>,
    /// Fixed time step.
    #[arg(long)]
    tau: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(mode: Mode, args: &Common) -> Result<RunConfig, AppError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError::Parse(format!("{}: {e}", path.display()))
            })?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(m) = cfg.run.mode {
        if m != mode {
            return Err(ConfigError::Invalid(format!(
                "config file is for mode {m:?} but the {mode:?} subcommand was used"
            ))
            .into());
        }
    }
    cfg.run.mode = Some(mode);
    cfg.apply(&Overrides {
        case: args.case.clone(),
        levels: args.levels,
        a: args.a.clone(),
        h: args.h,
        tau: args.tau,
        out: args.out.clone(),
    });
    Ok(cfg)
}

fn run(mode: Mode, args: &Common) -> Result<(), AppError> {
    let plan = load(mode, args)?.resolve()?;
    let summary = execute(&plan)?;
    for line in &summary.lines {
        println!("{line}");
    }
    println!("results written to {}", summary.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Converge(a) => (Mode::Mms, a),
        Command::Pulse(a) => (Mode::Pulse, a),
        Command::Oracle(a) => (Mode::Oracle, a),
        Command::Single(a) => (Mode::Single, a),
    };
    match run(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
