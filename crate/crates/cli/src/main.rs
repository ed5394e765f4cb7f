use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cac_cli::commands::{compare_command, simulate_command, solve_command, verify_command, PolicySource};
use cac_cli::config::{load_config, ExperimentConfig};
use cac_cli::CliError;

/// Admission-control toolkit: solve cell policies, simulate a hexagonal
/// network under them, and compare against heuristics.
#[derive(Parser)]
#[command(name = "cac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the admission policy for each configured load point.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restrict to these offered loads (comma separated).
        #[arg(long, value_delimiter = ',')]
        loads: Option<Vec<f64>>,
    },
    /// Simulate one policy over the configured loads and replications.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Policy source: mdp:PATH, nag or accept-all.
        #[arg(long)]
        policy: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        loads: Option<Vec<f64>>,
        #[arg(long)]
        replications: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the policy per load and compare it against the heuristic on
    /// matched seeds.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        loads: Option<Vec<f64>>,
        #[arg(long)]
        replications: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the model/topology/heuristic invariant checks.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
}

fn apply_overrides(
    cfg: &mut ExperimentConfig,
    out: Option<PathBuf>,
    loads: Option<Vec<f64>>,
    replications: Option<u32>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    if let Some(loads) = loads {
        cfg.select_loads(&loads)?;
    }
    if let Some(replications) = replications {
        if replications < 1 {
            return Err(CliError::Config("--replications: must be >= 1".into()));
        }
        cfg.sim.replications = replications;
    }
    if let Some(seed) = seed {
        cfg.sim.base_seed = seed;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { config, out, loads } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, out, loads, None, None)?;
            let out_dir = cfg.output_dir.clone();
            let paths = solve_command(&cfg, &out_dir)?;
            for path in paths {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Simulate {
            config,
            policy,
            out,
            loads,
            replications,
            seed,
        } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, out, loads, replications, seed)?;
            let source = PolicySource::parse(&policy)?;
            let out_dir = cfg.output_dir.clone();
            let path = simulate_command(&cfg, &source, &out_dir)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Compare {
            config,
            out,
            loads,
            replications,
            seed,
        } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, out, loads, replications, seed)?;
            let out_dir = cfg.output_dir.clone();
            let (runs, compare) = compare_command(&cfg, &out_dir)?;
            println!("wrote {}", runs.display());
            println!("wrote {}", compare.display());
            Ok(())
        }
        Command::Verify { config } => {
            let cfg = load_config(&config)?;
            let outcome = verify_command(&cfg)?;
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.failures > 0 {
                return Err(CliError::Verification {
                    failures: outcome.failures,
                    total: outcome.total,
                });
            }
            println!("all {} checks passed", outcome.total);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            // Machine-readable error record on the last stderr line.
            let record = serde_json::json!({
                "error": { "kind": err.kind(), "message": err.to_string() }
            });
            eprintln!("{record}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
