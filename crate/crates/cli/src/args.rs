use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use psvrt::trainer::{GridPlan, Sweep, TrainConfig, DESK_IMAGE_BUDGET, FULL_SCALE_IMAGE_BUDGET};
use psvrt::{ImageParams, Task};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "psvrt", version, about = "PSVRT generation, training, probing and reports")]
pub struct Cli {
    /// Root under which default run directories are created.
    #[arg(long, env = "PSVRT_OUT", default_value = "runs", global = true)]
    pub out: PathBuf,

    /// Suppress per-sample progress on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Write a dataset file (and optional PBM images).
    Gen(GenArgs),
    /// Train one architecture on one condition.
    Train(TrainArgs),
    /// Run the n / m / k sweeps for the standard model set.
    Grid(GridArgs),
    /// Score the subtraction-template probe on generated SD data.
    Probe(ProbeArgs),
    /// Build per-sweep CSV tables from stored summaries.
    Report(ReportArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ImageArgs {
    /// Item side.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Image side.
    #[arg(long, default_value_t = 60)]
    pub n: usize,
    /// Items per image.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ImageArgs {
    pub fn params(&self) -> psvrt::Result<ImageParams> {
        ImageParams::new(self.m, self.n, self.k, self.seed)
    }

    pub fn tag(&self) -> String {
        format!("m{}_n{}_k{}_s{}", self.m, self.n, self.k, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainingArgs {
    /// Training images per trial [default: 500000].
    #[arg(long)]
    pub budget: Option<u64>,
    /// Use the 20M-image budget unless --budget is given.
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long, default_value_t = 50)]
    pub batch_size: usize,
    /// Batches between held-out evaluations.
    #[arg(long, default_value_t = 200)]
    pub eval_interval: usize,
    /// Held-out set size.
    #[arg(long, default_value_t = 2000)]
    pub eval_set: usize,
    /// Parallel trials; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Skip conditions already complete in the run directory.
    #[arg(long)]
    pub resume: bool,
}

impl TrainingArgs {
    pub fn config(&self, trials: usize, seed: u64) -> TrainConfig {
        let default = if self.full_scale { FULL_SCALE_IMAGE_BUDGET } else { DESK_IMAGE_BUDGET };
        TrainConfig {
            batch_size: self.batch_size,
            image_budget: self.budget.unwrap_or(default),
            eval_interval: self.eval_interval,
            eval_set_size: self.eval_set,
            trials,
            base_seed: seed,
            workers: self.workers.max(1),
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub image: ImageArgs,
    #[arg(long, default_value = "sd")]
    pub task: Task,
    /// Number of samples; must be even.
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// Also write the first N images as PBM files.
    #[arg(long, default_value_t = 0)]
    pub export_pbm: usize,
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long, default_value = psvrt::arch::BASELINE)]
    pub arch: String,
    #[arg(long, default_value = "sr")]
    pub task: Task,
    #[command(flatten)]
    pub image: ImageArgs,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GridArgs {
    /// Sweeps to run (n, m, k); repeatable [default: all].
    #[arg(long = "sweep")]
    pub sweeps: Vec<Sweep>,
    /// `ARCH:TASK` pairs to train; repeatable [default: baseline on sr and
    /// sd, wide and deep on sd].
    #[arg(long = "model")]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
}

impl GridArgs {
    pub fn sweeps(&self) -> Vec<Sweep> {
        if self.sweeps.is_empty() {
            Sweep::ALL.to_vec()
        } else {
            let mut s = self.sweeps.clone();
            s.sort();
            s.dedup();
            s
        }
    }

    pub fn models(&self) -> psvrt::Result<Vec<(String, Task)>> {
        if self.models.is_empty() {
            return Ok(GridPlan::standard_models());
        }
        self.models
            .iter()
            .map(|m| {
                let (arch, task) = m
                    .split_once(':')
                    .ok_or_else(|| psvrt::Error::InvalidConfig(format!("--model {m:?} is not ARCH:TASK")))?;
                psvrt::arch::by_name(arch, 60)?;
                Ok((arch.to_string(), task.parse()?))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub image: ImageArgs,
    /// Generated samples (even).
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
    /// Different images also checked with the literal window-pair scan.
    #[arg(long, default_value_t = 200)]
    pub pair_scan: usize,
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Run directory holding `summaries/`.
    #[arg(long)]
    pub run_dir: PathBuf,
    /// Sweeps to report; repeatable [default: all].
    #[arg(long = "sweep")]
    pub sweeps: Vec<Sweep>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    /// Manifest of the run to repeat.
    pub manifest: PathBuf,
    /// Fresh directory for the repeated run's outputs.
    #[arg(long)]
    pub run_dir: PathBuf,
}
