//! Run manifests and the files they point at.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use spikeplan::{EnvironmentSet, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Plan,
    Disambiguate,
}

/// Everything needed to reproduce one experiment. Relative paths are
/// resolved against the manifest's directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub mode: Mode,
    pub config: PathBuf,
    pub environments: Vec<PathBuf>,
    pub start: String,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Oracle target selector used by `verify` in disambiguation mode.
    #[serde(default = "default_oracle_mode")]
    pub oracle_mode: String,
}

fn default_oracle_mode() -> String {
    "nearest_reduced".to_string()
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let mut manifest: RunManifest = toml::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.config = base.join(&manifest.config);
        for env in &mut manifest.environments {
            *env = base.join(&*env);
        }
        manifest.out = manifest.out.map(|o| base.join(o));
        manifest.check()?;
        Ok(manifest)
    }

    pub fn check(&self) -> Result<()> {
        if self.environments.is_empty() {
            bail!("manifest lists no environment files");
        }
        if self.mode == Mode::Plan && self.target.is_none() {
            bail!("plan mode needs a target");
        }
        Ok(())
    }
}

/// Reads a config from TOML (by extension) or JSON.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let config: SimConfig = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
    } else {
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
    };
    config
        .validate()
        .with_context(|| format!("invalid config {}", path.display()))
}

/// Reads and merges environment files in the given order.
pub fn load_environments(paths: &[PathBuf]) -> Result<EnvironmentSet> {
    if paths.is_empty() {
        bail!("no environment files given");
    }
    let sets = paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading environments {}", p.display()))?;
            serde_json::from_str::<EnvironmentSet>(&text)
                .with_context(|| format!("parsing environments {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnvironmentSet::merge(&sets)?)
}
