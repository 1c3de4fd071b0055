//! PSVRT laboratory: a parametric same-different / spatial-relation image
//! generator, a small convolutional network engine with hand-written
//! backpropagation, the architecture builders used in the experiments, a
//! multi-trial training harness built around area-under-the-learning-curve,
//! and an analytic subtraction-template probe.

pub mod arch;
pub mod dataset;
pub mod error;
pub mod generator;
pub mod nnkit;
pub mod probe;
pub mod rng;
pub mod trainer;

pub use arch::{deep_control, param_count, psvrt_baseline, svrt_grid, wide_control};
pub use error::{Error, Result};
pub use generator::{
    generate_batch, generate_sample, BitPattern, ImageParams, Placement, Sample, SdLabel, SrLabel,
    Task,
};
pub use nnkit::{LayerSpec, Network, NetworkSpec, Tensor4};
pub use trainer::{alc, ConditionSummary, LearningCurve, TrainConfig, TrialResult};
