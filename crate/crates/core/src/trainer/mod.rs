//! Streaming training, learning curves, ALC and the multi-trial experiment grid.

mod condition;
mod config;
mod curve;
mod grid;
mod report;
mod store;
mod trial;

pub use condition::{condition_key, run_condition, summarize, ConditionSummary};
pub use config::{TrainConfig, DESK_IMAGE_BUDGET, FULL_SCALE_IMAGE_BUDGET};
pub use curve::{alc, CurvePoint, LearningCurve};
pub use grid::{run_grid, GridPlan, Sweep};
pub use report::{sweep_report, SweepRow, REPORT_HEADER};
pub use store::{curves_csv, write_atomic, RunStore, CURVES_HEADER};
pub use trial::{samples_to_tensor, train_trial, train_trial_with, TrialResult, TrialSeeds};
