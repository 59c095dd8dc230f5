use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use spikeplan_cli::{cmd_run, cmd_verify, Mode, Outcome, RunManifest};

#[derive(Parser)]
#[command(name = "spikeplan", version, about = "Spiking replay planner")]
struct Cli {
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shortest path from start to target.
    Plan {
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        start: String,
        #[arg(long)]
        target: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Least ambiguous nearby place and the path to it.
    Disambiguate {
        #[arg(long, num_args = 1.., required = true)]
        env: Vec<PathBuf>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        start: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-checks a manifest's run against the graph oracle.
    Verify { manifest: PathBuf },
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Plan {
            env,
            config,
            start,
            target,
            out,
        } => {
            let manifest = RunManifest {
                mode: Mode::Plan,
                config,
                environments: vec![env],
                start,
                target: Some(target),
                out: Some(out),
                oracle_mode: "nearest_reduced".into(),
            };
            cmd_run(&manifest, cli.seed, None)
        }
        Command::Disambiguate {
            env,
            config,
            start,
            out,
        } => {
            let manifest = RunManifest {
                mode: Mode::Disambiguate,
                config,
                environments: env,
                start,
                target: None,
                out: Some(out),
                oracle_mode: "nearest_reduced".into(),
            };
            cmd_run(&manifest, cli.seed, None)
        }
        Command::Verify { manifest } => cmd_verify(&RunManifest::load(&manifest)?, cli.seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Converged) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged(why)) => {
            eprintln!("not converged: {why}");
            ExitCode::from(3)
        }
        Ok(Outcome::Mismatch { planner, oracle }) => {
            eprintln!("mismatch: planner {planner}, oracle {oracle}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
