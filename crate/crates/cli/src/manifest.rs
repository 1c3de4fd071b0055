use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use psvrt::trainer::{write_atomic, TrainConfig, TrialSeeds};
use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to repeat a run, written before any long computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    /// Resolved training configuration, for train and grid.
    pub config: Option<TrainConfig>,
    pub seed: u64,
    /// Per-trial seeds (train only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trial_seeds: Vec<TrialSeeds>,
    pub created_unix: u64,
    pub run_dir: PathBuf,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: Command, config: Option<TrainConfig>, seed: u64, run_dir: &Path, outputs: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            config,
            seed,
            trial_seeds: Vec::new(),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            run_dir: run_dir.to_path_buf(),
            outputs,
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Usage(format!("bad manifest {}: {e}", path.display())))
    }

    /// Writes the manifest to `path`. An existing manifest must describe the
    /// same computation (flags that only affect scheduling may differ).
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if path.is_file() {
            let old = Self::read(path)?;
            if fingerprint(&old.command) != fingerprint(&self.command) || old.config != self.config {
                return Err(CliError::Usage(format!(
                    "{} was created by a different configuration; use a fresh --run-dir",
                    path.display()
                )));
            }
        }
        let mut json = serde_json::to_vec_pretty(self).map_err(psvrt::Error::from)?;
        json.push(b'\n');
        write_atomic(path, &json)?;
        Ok(())
    }
}

/// The command with scheduling-only flags cleared.
fn fingerprint(command: &Command) -> Command {
    let mut c = command.clone();
    match &mut c {
        Command::Train(a) => {
            a.training.workers = 1;
            a.training.resume = false;
            a.run_dir = None;
        }
        Command::Grid(a) => {
            // Sweeps and models may be added to an existing grid directory.
            a.sweeps.clear();
            a.models.clear();
            a.training.workers = 1;
            a.training.resume = false;
            a.run_dir = None;
        }
        Command::Gen(a) => a.run_dir = None,
        Command::Probe(a) => a.run_dir = None,
        // Reports are cheap to rebuild for any subset of sweeps.
        Command::Report(a) => a.sweeps.clear(),
        Command::Replay(_) => {}
    }
    c
}
