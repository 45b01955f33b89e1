use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use wpmfg_cli::bundle::{emit_bundle, unix_ms};
use wpmfg_cli::experiment::{
    compare, compare_tables, convergence_failure, figure, parse_policy_arg, simulate,
    simulation_tables, solve, solve_tables,
};
use wpmfg_cli::{load_config, CliError, ExperimentConfig, ResultBundle};

#[derive(Parser)]
#[command(
    name = "wpmfg",
    version,
    about = "Mean field game power control experiments"
)]
struct Cli {
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only report warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the equilibrium policy and mean field.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo run of a policy file or `fixed:<watts>`.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        policy: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Equilibrium versus fixed power, model and simulation.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Data behind one of the figures 3 to 8.
    Figure {
        #[arg(long, value_parser = clap::value_parser!(u8).range(3..=8))]
        id: u8,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn config_for(path: Option<&PathBuf>, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut config = match path {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

/// Writes the bundle and returns it together with any convergence failure.
fn run(cli: Cli) -> Result<(ResultBundle, Option<(usize, f64)>), CliError> {
    let started = unix_ms();
    match cli.command {
        Command::Solve { config, out } => {
            let config = config_for(Some(&config), cli.seed)?;
            let run = solve(&config)?;
            let failure = convergence_failure(&run.equilibrium);
            let bundle = emit_bundle(
                &solve_tables(&run),
                &out,
                &config,
                "solve",
                Some(failure.is_none()),
                started,
            )?;
            Ok((bundle, failure))
        }
        Command::Simulate {
            config,
            policy,
            out,
        } => {
            let config = config_for(Some(&config), cli.seed)?;
            let policy = parse_policy_arg(&policy, &config)?;
            let stats = simulate(&config, &policy)?;
            let bundle = emit_bundle(
                &simulation_tables(&config, &stats),
                &out,
                &config,
                "simulate",
                None,
                started,
            )?;
            Ok((bundle, None))
        }
        Command::Compare { config, out } => {
            let config = config_for(Some(&config), cli.seed)?;
            let run = compare(&config)?;
            let failure = convergence_failure(&run.solve.equilibrium);
            let bundle = emit_bundle(
                &compare_tables(&config, &run),
                &out,
                &config,
                "compare",
                Some(failure.is_none()),
                started,
            )?;
            Ok((bundle, failure))
        }
        Command::Figure { id, config, out } => {
            let config = config_for(config.as_ref(), cli.seed)?;
            let output = figure(id, &config)?;
            let failure = output.not_converged;
            let command = format!("figure {id}");
            let bundle = emit_bundle(
                &output.tables,
                &out,
                &config,
                &command,
                Some(failure.is_none()),
                started,
            )?;
            Ok((bundle, failure))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok((bundle, Some((iterations, residual)))) => {
            let e = CliError::NotConverged {
                iterations,
                residual,
            };
            error!("{e}; results written to {}", bundle.dir.display());
            ExitCode::from(e.exit_code() as u8)
        }
        Ok((_, None)) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
