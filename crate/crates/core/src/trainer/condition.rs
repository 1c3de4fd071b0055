use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{ImageParams, Task};
use crate::nnkit::NetworkSpec;

use super::config::TrainConfig;
use super::curve::CurvePoint;
use super::trial::{train_trial_with, TrialResult};

/// Aggregate over the trials of one (architecture, task, image parameters)
/// condition. ALC statistics cover learned trials only and are absent when
/// no trial learned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub key: String,
    pub arch: String,
    pub task: Task,
    pub params: ImageParams,
    pub trials: usize,
    pub learned: usize,
    pub non_learned: usize,
    pub mean_alc: Option<f64>,
    pub min_alc: Option<f64>,
    pub max_alc: Option<f64>,
    pub results: Vec<TrialResult>,
}

pub fn condition_key(arch: &str, task: Task, params: &ImageParams) -> String {
    format!("{arch}_{task}_m{}_n{}_k{}", params.m(), params.n(), params.k())
}

/// Partitions trials by the learned flag and aggregates learned ALCs.
pub fn summarize(arch: &str, task: Task, params: &ImageParams, mut results: Vec<TrialResult>) -> ConditionSummary {
    results.sort_by_key(|r| r.trial);
    let learned: Vec<f64> = results.iter().filter(|r| r.learned).map(|r| r.alc).collect();
    let (mean, min, max) = if learned.is_empty() {
        (None, None, None)
    } else {
        (
            Some(learned.iter().sum::<f64>() / learned.len() as f64),
            learned.iter().copied().reduce(f64::min),
            learned.iter().copied().reduce(f64::max),
        )
    };
    ConditionSummary {
        key: condition_key(arch, task, params),
        arch: arch.to_string(),
        task,
        params: *params,
        trials: results.len(),
        learned: learned.len(),
        non_learned: results.len() - learned.len(),
        mean_alc: mean,
        min_alc: min,
        max_alc: max,
        results,
    }
}

/// Runs `config.trials` independent trials (on `config.workers` threads) and
/// summarises them.
pub fn run_condition(
    spec: &NetworkSpec,
    params: &ImageParams,
    task: Task,
    config: &TrainConfig,
    observer: &(dyn Fn(usize, &CurvePoint) + Sync),
) -> Result<ConditionSummary> {
    config.validate()?;
    let run = |t: usize| train_trial_with(spec, params, task, config, t, observer);
    let results: Result<Vec<TrialResult>> = if config.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
        pool.install(|| (0..config.trials).into_par_iter().map(run).collect())
    } else {
        (0..config.trials).map(run).collect()
    };
    Ok(summarize(&spec.name, task, params, results?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::curve::{alc, LearningCurve};
    use crate::trainer::trial::TrialSeeds;
    use std::time::Duration;

    fn result(trial: usize, acc: &[f64]) -> TrialResult {
        let curve = LearningCurve::from_points(
            acc.iter()
                .enumerate()
                .map(|(i, &a)| CurvePoint { images_seen: i as u64 + 1, train_acc: a, eval_acc: a })
                .collect(),
        )
        .unwrap();
        TrialResult {
            trial,
            seeds: TrialSeeds { init: 0, data: 0, eval: 0 },
            alc: alc(&curve).unwrap(),
            learned: curve.crosses(0.55),
            final_accuracy: *acc.last().unwrap(),
            curve,
            fault: None,
            wall_time: Duration::ZERO,
        }
    }

    fn params() -> ImageParams {
        ImageParams::new(4, 60, 2, 0).unwrap()
    }

    #[test]
    fn identical_learned_trials() {
        let rs = (0..3).map(|t| result(t, &[0.6, 0.9])).collect();
        let s = summarize("a", Task::Sr, &params(), rs);
        assert_eq!((s.learned, s.non_learned), (3, 0));
        assert_eq!(s.mean_alc, Some(0.75));
        assert_eq!(s.min_alc, s.max_alc);
        assert_eq!(s.key, "a_sr_m4_n60_k2");
    }

    #[test]
    fn nothing_learned() {
        let rs = (0..4).map(|t| result(t, &[0.5, 0.55, 0.52])).collect();
        let s = summarize("a", Task::Sd, &params(), rs);
        assert_eq!(s.non_learned, 4);
        assert_eq!(s.mean_alc, None);
    }

    #[test]
    fn mixed_partition_uses_learned_only() {
        let rs = vec![result(2, &[0.5, 0.5]), result(0, &[0.6, 1.0]), result(1, &[0.9, 0.9])];
        let s = summarize("a", Task::Sd, &params(), rs);
        assert_eq!(s.results.iter().map(|r| r.trial).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(s.learned + s.non_learned, s.trials);
        assert!((s.mean_alc.unwrap() - 0.85).abs() < 1e-12);
        assert_eq!((s.min_alc, s.max_alc), (Some(0.8), Some(0.9)));
    }
}
