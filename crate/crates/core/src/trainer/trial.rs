use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{generate_batch, ImageParams, Sample, Task};
use crate::nnkit::{AdamState, Network, NetworkSpec, Real, Tensor4};
use crate::rng::{derive_seed, stream_rng};

use super::config::TrainConfig;
use super::curve::{alc, CurvePoint, LearningCurve};

/// Seeds of one trial. Initialisation depends on the training base seed;
/// the data and held-out streams on the image-parameter seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub init: u64,
    pub data: u64,
    pub eval: u64,
}

impl TrialSeeds {
    pub fn new(config: &TrainConfig, params: &ImageParams, trial: usize) -> Self {
        Self {
            init: derive_seed(config.base_seed, "init", trial as u64),
            data: derive_seed(params.seed(), "data", trial as u64),
            eval: derive_seed(params.seed(), "eval", 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seeds: TrialSeeds,
    pub curve: LearningCurve,
    pub alc: f64,
    pub learned: bool,
    pub final_accuracy: f64,
    /// Set when a non-finite value aborted the run.
    pub fault: Option<String>,
    /// Not persisted, so stored results stay reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Stacks sample images into an `(N, 1, n, n)` tensor with task labels.
pub fn samples_to_tensor<T: Real>(samples: &[Sample], task: Task) -> Result<(Tensor4<T>, Vec<usize>)> {
    let n = samples.first().map_or(0, |s| s.image.side());
    let mut x = Tensor4::zeros([samples.len(), 1, n, n]);
    for (i, s) in samples.iter().enumerate() {
        if s.image.side() != n {
            return Err(Error::ShapeMismatch("samples of mixed image size".into()));
        }
        for (d, &p) in x.item_mut(i).iter_mut().zip(s.image.pixels()) {
            *d = if p == 1 { T::one() } else { T::zero() };
        }
    }
    Ok((x, samples.iter().map(|s| s.class(task)).collect()))
}

pub fn train_trial(
    spec: &NetworkSpec,
    params: &ImageParams,
    task: Task,
    config: &TrainConfig,
    trial: usize,
) -> Result<TrialResult> {
    train_trial_with(spec, params, task, config, trial, &|_, _| {})
}

/// [`train_trial`] with a callback invoked after every curve sample.
pub fn train_trial_with(
    spec: &NetworkSpec,
    params: &ImageParams,
    task: Task,
    config: &TrainConfig,
    trial: usize,
    observer: &(dyn Fn(usize, &CurvePoint) + Sync),
) -> Result<TrialResult> {
    config.validate()?;
    let started = Instant::now();
    let spec = spec.with_input_side(params.n());
    let seeds = TrialSeeds::new(config, params, trial);

    let eval = generate_batch(&mut stream_rng(seeds.eval, 0), params, task, config.eval_set_size)?;
    let (eval_x, eval_y) = samples_to_tensor::<f32>(&eval, task)?;
    drop(eval);

    let mut net = Network::<f32>::new(&spec, &mut stream_rng(seeds.init, 0))?;
    let mut adam = AdamState::new(config.adam, net.param_sizes());
    let mut curve = LearningCurve::new();
    let mut fault = None;
    let (mut window_correct, mut window_seen) = (0usize, 0usize);

    let batches = config.batches();
    for b in 0..batches {
        let batch = generate_batch(&mut stream_rng(seeds.data, b), params, task, config.batch_size)?;
        let (x, y) = samples_to_tensor::<f32>(&batch, task)?;
        let step = match net.train_step(&x, &y, &mut adam) {
            Ok(s) => s,
            Err(Error::NumericFault(what)) => {
                fault = Some(format!("non-finite {what} at batch {b}"));
                break;
            }
            Err(e) => return Err(e),
        };
        window_correct += step.correct;
        window_seen += y.len();

        let done = b + 1;
        if done % config.eval_interval as u64 == 0 || done == batches {
            let preds = match net.predict(&eval_x, 100) {
                Ok(p) => p,
                Err(Error::NumericFault(what)) => {
                    fault = Some(format!("non-finite {what} during evaluation at batch {b}"));
                    break;
                }
                Err(e) => return Err(e),
            };
            let hits = preds.iter().zip(&eval_y).filter(|(p, l)| p == l).count();
            let point = CurvePoint {
                images_seen: done * config.batch_size as u64,
                train_acc: window_correct as f64 / window_seen as f64,
                eval_acc: hits as f64 / eval_y.len() as f64,
            };
            curve.push(point)?;
            observer(trial, &point);
            window_correct = 0;
            window_seen = 0;
        }
    }

    let alc = if curve.is_empty() { 0.5 } else { alc(&curve)? };
    let learned = fault.is_none() && curve.crosses(config.learned_threshold);
    let final_accuracy = curve.points().last().map_or(0.5, |p| p.eval_acc);
    Ok(TrialResult {
        trial,
        seeds,
        curve,
        alc,
        learned,
        final_accuracy,
        fault,
        wall_time: started.elapsed(),
    })
}
