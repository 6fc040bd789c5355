//! `lansing` — command-line front end for the three-scale ageing-evolution
//! toolkit: closed-form demography, the individual-based simulator, the
//! age-structured density dynamics, the trait substitution sequence, and the
//! limiting canonical flow.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "lansing",
    version,
    about = "Three-scale model of ageing evolution under the Lansing effect",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form demographic summary of one life trait as JSON
    Demog {
        /// End of the fertile span
        #[arg(long)]
        xb: f64,
        /// Onset of senescence
        #[arg(long)]
        xd: f64,
        /// Competition coefficient used for equilibrium quantities
        #[arg(long, default_value_t = 0.0005)]
        eta: f64,
    },
    /// Run one of the models from a TOML configuration file
    Run {
        #[command(subcommand)]
        model: Model,
    },
    /// Run the verification criteria and report pass/fail per criterion
    Verify {
        /// fast: analytic criteria only; full: all criteria including simulations
        #[arg(value_enum)]
        suite: Suite,
    },
}

#[derive(Subcommand)]
enum Model {
    /// Individual-based stochastic simulation
    Ibm(RunArgs),
    /// Age-structured density dynamics (deterministic; ignores --replicates)
    Pde(RunArgs),
    /// Trait substitution sequence jump process
    Tss(RunArgs),
    /// Limiting canonical flow, optionally with jump-path tube checks
    Inclusion(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Base seed (overrides the config; replicate i uses a seed derived from it)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config; default "out")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of independent replicates
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    /// Worker threads for replicates
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Fast,
    Full,
}

fn load_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))
}

fn run_model(model: &Model) -> Result<(), CliError> {
    let args = match model {
        Model::Ibm(a) | Model::Pde(a) | Model::Tss(a) | Model::Inclusion(a) => a,
    };
    if args.replicates == 0 {
        return Err(CliError::Config("--replicates must be at least 1".into()));
    }
    if args.threads == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let cfg = load_config(args)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let missing = |name: &str| {
        CliError::Config(format!(
            "{}: missing [{name}] section",
            args.config.display()
        ))
    };
    match model {
        Model::Ibm(_) => {
            let section = cfg.ibm.as_ref().ok_or_else(|| missing("ibm"))?;
            commands::run_ibm(section, seed, &out_dir, args.replicates, args.threads)
        }
        Model::Pde(_) => {
            let section = cfg.pde.as_ref().ok_or_else(|| missing("pde"))?;
            commands::run_pde(section, &out_dir)
        }
        Model::Tss(_) => {
            let section = cfg.tss.as_ref().ok_or_else(|| missing("tss"))?;
            commands::run_tss(section, seed, &out_dir, args.replicates, args.threads)
        }
        Model::Inclusion(_) => {
            let section = cfg.inclusion.as_ref().ok_or_else(|| missing("inclusion"))?;
            commands::run_inclusion(section, seed, &out_dir, args.replicates, args.threads)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Command::Demog { xb, xd, eta } => commands::demog(*xb, *xd, *eta),
        Command::Run { model } => run_model(model),
        Command::Verify { suite } => commands::verify(matches!(suite, Suite::Full)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
    }
}
