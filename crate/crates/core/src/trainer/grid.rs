use serde::{Deserialize, Serialize};

use crate::arch;
use crate::error::{Error, Result};
use crate::generator::{ImageParams, Task};

use super::condition::{condition_key, run_condition, ConditionSummary};
use super::config::TrainConfig;
use super::curve::CurvePoint;
use super::store::RunStore;

/// One of the three one-parameter sub-experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    /// Image side 30..=180 in steps of 30, m=4, k=2.
    N,
    /// Item side 3..=7, n=60, k=2.
    M,
    /// Item count 2..=6, n=60, m=4.
    K,
}

impl Sweep {
    pub const ALL: [Sweep; 3] = [Sweep::N, Sweep::M, Sweep::K];

    pub fn values(self) -> Vec<usize> {
        match self {
            Sweep::N => (30..=180).step_by(30).collect(),
            Sweep::M => (3..=7).collect(),
            Sweep::K => (2..=6).collect(),
        }
    }

    /// `(m, n, k)` for a swept value; the other two stay at 4 / 60 / 2.
    pub fn triple(self, value: usize) -> (usize, usize, usize) {
        match self {
            Sweep::N => (4, value, 2),
            Sweep::M => (value, 60, 2),
            Sweep::K => (4, 60, value),
        }
    }

    pub fn conditions(self, seed: u64) -> Result<Vec<ImageParams>> {
        self.values()
            .into_iter()
            .map(|v| {
                let (m, n, k) = self.triple(v);
                ImageParams::new(m, n, k, seed)
            })
            .collect()
    }

    /// Swept value of `params` when they lie on this sweep's axis.
    pub fn value_of(self, params: &ImageParams) -> Option<usize> {
        let v = match self {
            Sweep::N => params.n(),
            Sweep::M => params.m(),
            Sweep::K => params.k(),
        };
        (self.values().contains(&v) && self.triple(v) == (params.m(), params.n(), params.k())).then_some(v)
    }

    pub fn name(self) -> &'static str {
        match self {
            Sweep::N => "n",
            Sweep::M => "m",
            Sweep::K => "k",
        }
    }
}

impl std::str::FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(Sweep::N),
            "m" => Ok(Sweep::M),
            "k" => Ok(Sweep::K),
            _ => Err(Error::InvalidConfig(format!("unknown sweep {s:?} (expected n, m or k)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPlan {
    pub sweeps: Vec<Sweep>,
    /// `(architecture name, task)` pairs.
    pub models: Vec<(String, Task)>,
    /// Load completed conditions instead of refusing to touch them.
    pub resume: bool,
}

impl GridPlan {
    /// Baseline on both tasks plus the wide and deep controls on SD.
    pub fn standard_models() -> Vec<(String, Task)> {
        vec![
            (arch::BASELINE.to_string(), Task::Sr),
            (arch::BASELINE.to_string(), Task::Sd),
            (arch::WIDE.to_string(), Task::Sd),
            (arch::DEEP.to_string(), Task::Sd),
        ]
    }

    pub fn new(sweeps: Vec<Sweep>) -> Self {
        Self { sweeps, models: Self::standard_models(), resume: false }
    }

    /// `(arch, task, params)` in execution order, without duplicates across
    /// sweeps (the centre condition belongs to all three).
    pub fn conditions(&self, seed: u64) -> Result<Vec<(String, Task, ImageParams)>> {
        let mut out: Vec<(String, Task, ImageParams)> = Vec::new();
        for &sweep in &self.sweeps {
            for params in sweep.conditions(seed)? {
                for (name, task) in &self.models {
                    if !out.iter().any(|(a, t, p)| a == name && t == task && p == &params) {
                        out.push((name.clone(), *task, params));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Runs every planned condition, saving each summary as soon as it completes.
/// Completed conditions are loaded when resuming and are an error otherwise.
pub fn run_grid(
    plan: &GridPlan,
    config: &TrainConfig,
    store: &RunStore,
    observer: &(dyn Fn(&str, usize, &CurvePoint) + Sync),
) -> Result<Vec<ConditionSummary>> {
    config.validate()?;
    let conditions = plan.conditions(config.base_seed)?;
    for (name, _, params) in &conditions {
        arch::by_name(name, params.n())?.shapes()?;
    }
    let mut out = Vec::with_capacity(conditions.len());
    for (name, task, params) in conditions {
        let key = condition_key(&name, task, &params);
        if let Some(done) = store.load_summary(&key)? {
            if !plan.resume {
                return Err(Error::InvalidConfig(format!(
                    "condition {key} is already complete in {}; rerun with resume to continue",
                    store.root().display()
                )));
            }
            out.push(done);
            continue;
        }
        let spec = arch::by_name(&name, params.n())?;
        let summary = run_condition(&spec, &params, task, config, &|t, p| observer(&key, t, p))?;
        store.save(&summary)?;
        out.push(summary);
    }
    Ok(out)
}
