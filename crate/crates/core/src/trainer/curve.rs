use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub images_seen: u64,
    /// Accuracy over the training batches since the previous sample.
    pub train_acc: f64,
    /// Accuracy on the fixed held-out set.
    pub eval_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: Vec<CurvePoint>) -> Result<Self> {
        let mut c = Self::new();
        for p in points {
            c.push(p)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, p: CurvePoint) -> Result<()> {
        if let Some(last) = self.points.last() {
            if p.images_seen <= last.images_seen {
                return Err(Error::InvalidConfig(format!(
                    "curve sample at {} images does not follow {}",
                    p.images_seen, last.images_seen
                )));
            }
        }
        for acc in [p.train_acc, p.eval_acc] {
            if !(0.0..=1.0).contains(&acc) {
                return Err(Error::InvalidConfig(format!("accuracy {acc} outside [0, 1]")));
            }
        }
        self.points.push(p);
        Ok(())
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn eval_accuracies(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.eval_acc)
    }

    /// Whether any held-out sample strictly exceeds `threshold`.
    pub fn crosses(&self, threshold: f64) -> bool {
        self.eval_accuracies().any(|a| a > threshold)
    }
}

/// Area under the learning curve: the mean of the uniformly spaced held-out
/// accuracy samples, i.e. the area normalised by the run length.
pub fn alc(curve: &LearningCurve) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::EmptyCurve);
    }
    Ok(curve.eval_accuracies().sum::<f64>() / curve.len() as f64)
}
