//! Random linear scalarization of objective vectors.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PrimoError, Result};
use crate::pareto::ObjectiveVector;

/// Positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(PrimoError::domain("weight vector must be non-empty"));
        }
        if w.iter().any(|&x| !(x > 0.0)) {
            return Err(PrimoError::domain(format!("weights must be strictly positive: {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(PrimoError::domain(format!("weights must sum to 1, got {sum}")));
        }
        Ok(WeightVector(w))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Weighted sum of the objective values.
    pub fn scalarize(&self, y: &ObjectiveVector) -> Result<f64> {
        if y.len() != self.0.len() {
            return Err(PrimoError::domain(format!(
                "scalarization needs {} objectives, got {}",
                self.0.len(),
                y.len()
            )));
        }
        Ok(self.0.iter().zip(y.values()).map(|(w, v)| w * v).sum())
    }
}

/// Draws `n` Uniform(0,1) weights and normalizes them to sum to one.
pub fn sample_weights(n: usize, rng: &mut ChaCha20Rng) -> Result<WeightVector> {
    if n == 0 {
        return Err(PrimoError::domain("cannot sample a zero-length weight vector"));
    }
    loop {
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let sum: f64 = raw.iter().sum();
        if sum > 0.0 && raw.iter().all(|&x| x > 0.0) {
            return WeightVector::new(raw.iter().map(|x| x / sum).collect());
        }
        // A zero draw is re-sampled so every weight stays strictly positive.
    }
}
