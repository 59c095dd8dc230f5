//! Experiment driver behind the `spikeplan` binary.

pub mod export;
pub mod manifest;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use spikeplan::{
    ambiguity_target, bfs_shortest_path, build_network, disambiguate, plan_path, symbol_graph,
    EnvironmentSet, Network, PlanResult, SimConfig, SymbolId,
};

pub use manifest::{load_config, load_environments, Mode, RunManifest};

/// A loaded, validated experiment ready to run.
pub struct Experiment {
    pub mode: Mode,
    pub envs: EnvironmentSet,
    pub config: SimConfig,
    pub network: Network,
    pub start: SymbolId,
    pub target: Option<SymbolId>,
    pub oracle_mode: String,
}

impl Experiment {
    pub fn prepare(manifest: &RunManifest, seed: Option<u64>) -> Result<Self> {
        manifest.check()?;
        let mut config = load_config(&manifest.config)?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        let envs = load_environments(&manifest.environments)?;
        let start = envs.symbol(&manifest.start)?;
        let target = manifest
            .target
            .as_deref()
            .map(|t| envs.symbol(t))
            .transpose()?;
        let network = build_network(&envs, &config)?;
        Ok(Self {
            mode: manifest.mode,
            envs,
            config,
            network,
            start,
            target,
            oracle_mode: manifest.oracle_mode.clone(),
        })
    }

    pub fn run(&self) -> Result<PlanResult> {
        let result = match self.mode {
            Mode::Plan => {
                let target = self.target.context("plan mode needs a target")?;
                plan_path(&self.network, self.start, target, &self.config).with_context(|| {
                    format!(
                        "planning {} -> {}",
                        self.envs.name(self.start),
                        self.envs.name(target)
                    )
                })?
            }
            Mode::Disambiguate => disambiguate(&self.network, self.start, &self.config)?,
        };
        Ok(result)
    }

    pub fn start_name(&self) -> &str {
        self.envs.name(self.start)
    }

    /// Writes `summary.txt`, `raster.csv` and `theta.csv` into `dir`.
    pub fn write_artifacts(&self, result: &PlanResult, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let files = [
            (
                "summary.txt",
                export::summary(&self.envs, self.start_name(), result)?,
            ),
            ("raster.csv", export::raster_csv(&self.envs, result)?),
            ("theta.csv", export::theta_csv(&self.envs, result)?),
        ];
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

/// How a command ended, beyond hard errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    NotConverged(String),
    Mismatch { planner: String, oracle: String },
}

fn outcome_of(result: &PlanResult) -> Outcome {
    if result.converged {
        Outcome::Converged
    } else {
        Outcome::NotConverged(
            result
                .diagnostic
                .clone()
                .unwrap_or_else(|| "did not converge".into()),
        )
    }
}

/// Runs an experiment, writes its artifacts if `out` is set and prints the summary.
pub fn cmd_run(manifest: &RunManifest, seed: Option<u64>, out: Option<&Path>) -> Result<Outcome> {
    let exp = Experiment::prepare(manifest, seed)?;
    let result = exp.run()?;
    print!("{}", export::summary(&exp.envs, exp.start_name(), &result)?);
    if let Some(dir) = out.map(PathBuf::from).or_else(|| manifest.out.clone()) {
        exp.write_artifacts(&result, &dir)?;
    }
    Ok(outcome_of(&result))
}

/// Runs the planner and the graph oracle on the same experiment and compares them.
pub fn cmd_verify(manifest: &RunManifest, seed: Option<u64>) -> Result<Outcome> {
    let exp = Experiment::prepare(manifest, seed)?;
    let result = exp.run()?;
    if !result.converged {
        return Ok(outcome_of(&result));
    }
    let names = |path: &[SymbolId]| {
        path.iter()
            .map(|&s| exp.envs.name(s))
            .collect::<Vec<_>>()
            .join(",")
    };
    let (planner, oracle) = match exp.mode {
        Mode::Plan => {
            let target = exp.target.context("plan mode needs a target")?;
            let bfs = bfs_shortest_path(&symbol_graph(&exp.envs), exp.start, target)?;
            (names(&result.path), names(&bfs))
        }
        Mode::Disambiguate => {
            let chosen = result.target.map_or("-", |t| exp.envs.name(t));
            let expected = ambiguity_target(&exp.envs, exp.start, &exp.oracle_mode)?;
            (chosen.to_string(), exp.envs.name(expected).to_string())
        }
    };
    if planner == oracle {
        println!("match: {planner}");
        Ok(Outcome::Converged)
    } else {
        Ok(Outcome::Mismatch { planner, oracle })
    }
}
