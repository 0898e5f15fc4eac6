use serde::{Deserialize, Serialize};

use super::{ClassPosterior, LabeledSet};
use crate::error::{Error, Result};

/// Smallest per-dimension variance; keeps constant dimensions usable.
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ClassStats {
    label: String,
    mean: Vec<f64>,
    variance: Vec<f64>,
}

/// Gaussian naive Bayes with uniform class priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    classes: Vec<ClassStats>,
}

impl NaiveBayesModel {
    pub fn labels(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.label.clone()).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.classes[0].mean.len()
    }
}

pub fn nb_train(set: &LabeledSet) -> Result<NaiveBayesModel> {
    let d = set.input_dim();
    let classes = set
        .classes()
        .into_iter()
        .map(|label| {
            let rows: Vec<&[f64]> = set
                .iter()
                .filter(|(_, l)| **l == label)
                .map(|(x, _)| x)
                .collect();
            let n = rows.len() as f64;
            let mean: Vec<f64> = (0..d)
                .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n)
                .collect();
            let variance = (0..d)
                .map(|k| {
                    let v = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n;
                    v.max(VARIANCE_FLOOR)
                })
                .collect();
            ClassStats {
                label,
                mean,
                variance,
            }
        })
        .collect();
    Ok(NaiveBayesModel { classes })
}

/// Class posterior for `query`, normalized in the log domain.
pub fn nb_posterior(model: &NaiveBayesModel, query: &[f64]) -> Result<ClassPosterior> {
    if query.len() != model.input_dim() {
        return Err(Error::Schema(format!(
            "query has {} dims, model has {}",
            query.len(),
            model.input_dim()
        )));
    }
    if query.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite query".into()));
    }
    let log_l: Vec<f64> = model
        .classes
        .iter()
        .map(|c| {
            query
                .iter()
                .zip(c.mean.iter().zip(&c.variance))
                .map(|(x, (m, v))| {
                    -0.5 * ((x - m).powi(2) / v + (2.0 * std::f64::consts::PI * v).ln())
                })
                .sum()
        })
        .collect();
    let max = log_l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_l.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(ClassPosterior {
        labels: model.labels(),
        probabilities: w.iter().map(|v| v / total).collect(),
    })
}
