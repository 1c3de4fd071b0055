use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nnkit::AdamConfig;

pub const FULL_SCALE_IMAGE_BUDGET: u64 = 20_000_000;
pub const DESK_IMAGE_BUDGET: u64 = 500_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Training images per trial.
    pub image_budget: u64,
    /// Batches between curve samples.
    pub eval_interval: usize,
    /// Size of the fixed held-out set scored at every curve sample.
    pub eval_set_size: usize,
    /// A trial is learned once held-out accuracy exceeds this.
    pub learned_threshold: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub adam: AdamConfig,
    /// Trials run concurrently; results do not depend on it.
    #[serde(skip, default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 50,
            image_budget: DESK_IMAGE_BUDGET,
            eval_interval: 200,
            eval_set_size: 2_000,
            learned_threshold: 0.55,
            trials: 10,
            base_seed: 0,
            adam: AdamConfig::default(),
            workers: 1,
        }
    }
}

impl TrainConfig {
    /// The original protocol: 20M images per trial.
    pub fn full_scale() -> Self {
        Self { image_budget: FULL_SCALE_IMAGE_BUDGET, ..Self::default() }
    }

    pub fn batches(&self) -> u64 {
        self.image_budget / self.batch_size as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.batch_size == 0 || self.batch_size % 2 != 0 {
            return bad(format!("batch size {} must be positive and even", self.batch_size));
        }
        if self.image_budget == 0 || self.image_budget % self.batch_size as u64 != 0 {
            return bad(format!(
                "image budget {} must be a positive multiple of the batch size {}",
                self.image_budget, self.batch_size
            ));
        }
        if self.eval_interval == 0 {
            return bad("eval interval must be positive".into());
        }
        if self.eval_set_size == 0 || self.eval_set_size % 2 != 0 {
            return bad(format!("eval set size {} must be positive and even", self.eval_set_size));
        }
        if !(self.learned_threshold > 0.5 && self.learned_threshold < 1.0) {
            return bad(format!("learned threshold {} outside (0.5, 1)", self.learned_threshold));
        }
        if self.trials == 0 {
            return bad("at least one trial is required".into());
        }
        if self.adam.learning_rate.is_nan() || self.adam.learning_rate <= 0.0 {
            return bad("learning rate must be positive".into());
        }
        Ok(())
    }
}
