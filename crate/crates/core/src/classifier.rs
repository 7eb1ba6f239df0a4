use serde::{Deserialize, Serialize};

use crate::dataset::DecisionLabel;
use crate::error::Result;
use crate::schema::FeatureVector;

/// A trained model over a fixed decision set, queried as a black box by the
/// attribution and question machinery.
pub trait Classifier: Send + Sync {
    fn labels(&self) -> &[DecisionLabel];

    /// Per-label scores summing to one. Fails on incomplete vectors.
    fn scores(&self, x: &FeatureVector) -> Result<Vec<f64>>;

    fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        let scores = self.scores(x)?;
        let idx = argmax_first(&scores);
        Ok(Prediction {
            label: self.labels()[idx].clone(),
            label_index: idx,
            scores,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: DecisionLabel,
    pub label_index: usize,
    pub scores: Vec<f64>,
}

/// Index of the largest entry; the lowest index wins ties.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
