//! Supervised mapping models: MLP regression, k-NN and Gaussian naive Bayes
//! classification, DTW template matching, and posterior-weighted preset
//! interpolation.

mod dtw;
mod interp;
mod knn;
mod mlp;
mod naive_bayes;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dtw::{dtw_classify, dtw_distance, GestureTemplate};
pub use interp::interpolate_presets;
pub use knn::knn_classify;
pub use mlp::{
    gradient_check, mlp_init, mlp_loss, mlp_predict, mlp_train, MlpModel, MLP_FORMAT_VERSION,
};
pub use naive_bayes::{nb_posterior, nb_train, NaiveBayesModel, VARIANCE_FLOOR};

/// Paired examples: input vectors with a target per input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet<T> {
    inputs: Vec<Vec<f64>>,
    targets: Vec<T>,
}

/// Inputs paired with real-valued target vectors.
pub type RegressionSet = TrainingSet<Vec<f64>>;

/// Inputs paired with class labels.
pub type LabeledSet = TrainingSet<String>;

impl<T> TrainingSet<T> {
    fn checked(inputs: Vec<Vec<f64>>, targets: Vec<T>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::insufficient("training set is empty"));
        }
        if inputs.len() != targets.len() {
            return Err(Error::Schema(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let d = inputs[0].len();
        if d == 0 {
            return Err(Error::Schema("inputs have zero dimensions".into()));
        }
        if let Some(i) = inputs.iter().position(|x| x.len() != d) {
            return Err(Error::Schema(format!(
                "input {i} has {} dims, expected {d}",
                inputs[i].len()
            )));
        }
        if inputs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite training input".into()));
        }
        Ok(TrainingSet { inputs, targets })
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], &T)> {
        self.inputs.iter().map(Vec::as_slice).zip(&self.targets)
    }
}

impl RegressionSet {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        let set = Self::checked(inputs, targets)?;
        let d = set.targets[0].len();
        if d == 0 {
            return Err(Error::Schema("targets have zero dimensions".into()));
        }
        if let Some(i) = set.targets.iter().position(|t| t.len() != d) {
            return Err(Error::Schema(format!(
                "target {i} has {} dims, expected {d}",
                set.targets[i].len()
            )));
        }
        if set.targets.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite training target".into()));
        }
        Ok(set)
    }

    pub fn output_dim(&self) -> usize {
        self.targets[0].len()
    }

    /// Appends one example, keeping dimensions consistent.
    pub fn push(&mut self, input: Vec<f64>, target: Vec<f64>) -> Result<()> {
        if input.len() != self.input_dim() || target.len() != self.output_dim() {
            return Err(Error::Schema(format!(
                "example is {}→{}, set is {}→{}",
                input.len(),
                target.len(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        self.inputs.push(input);
        self.targets.push(target);
        Ok(())
    }
}

impl LabeledSet {
    pub fn labeled(inputs: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        Self::checked(inputs, labels)
    }

    /// Distinct labels in lexicographic order.
    pub fn classes(&self) -> Vec<String> {
        let mut labels = self.targets.clone();
        labels.sort();
        labels.dedup();
        labels
    }
}

/// Normalized class probabilities in a stable label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPosterior {
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl ClassPosterior {
    /// Index of the most probable class; ties go to the earlier label.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probabilities.iter().enumerate() {
            if *p > self.probabilities[best] {
                best = i;
            }
        }
        best
    }

    pub fn probability(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.probabilities[i])
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
