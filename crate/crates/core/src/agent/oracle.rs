use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::euclidean;

/// Non-improving proposals tolerated before the oracle asks for a zone jump.
pub const DEFAULT_PATIENCE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    Guiding(i8),
    Zone,
}

/// Mean over slots of the distance between matching points.
pub fn mean_distance(points: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(targets)
        .map(|(p, t)| euclidean(p, t))
        .sum::<f64>()
        / points.len().max(1) as f64
}

/// Scripted stand-in for the human: it knows hidden target points and
/// rewards proposals that get closer to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedOracle {
    targets: Vec<Vec<f64>>,
    /// Distances at or below this always count as an improvement.
    threshold: f64,
    patience: usize,
    previous: Option<f64>,
    failures: usize,
}

impl SimulatedOracle {
    pub fn new(targets: Vec<Vec<f64>>, threshold: f64) -> Result<Self> {
        if targets.is_empty()
            || targets
                .iter()
                .any(|t| t.is_empty() || t.len() != targets[0].len())
        {
            return Err(Error::Schema(
                "oracle targets must be non-empty points of equal dimension".into(),
            ));
        }
        if targets.iter().flatten().any(|v| !v.is_finite()) || !(threshold >= 0.0) {
            return Err(Error::param(
                "oracle targets must be finite and threshold ≥ 0",
            ));
        }
        Ok(SimulatedOracle {
            targets,
            threshold,
            patience: DEFAULT_PATIENCE,
            previous: None,
            failures: 0,
        })
    }

    pub fn with_patience(mut self, patience: usize) -> Self {
        self.patience = patience.max(1);
        self
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    pub fn distance(&self, points: &[Vec<f64>]) -> f64 {
        mean_distance(points, &self.targets)
    }

    /// Judges one proposal. The first proposal seen, and any proposal
    /// closer to the targets than the previous one, earns +1; otherwise
    /// −1, or a zone request once `patience` proposals in a row failed to
    /// improve. After a zone request the next proposal starts a fresh
    /// comparison.
    pub fn judge(&mut self, points: &[Vec<f64>]) -> Result<Feedback> {
        if points.len() != self.targets.len()
            || points.iter().any(|p| p.len() != self.targets[0].len())
        {
            return Err(Error::Schema(
                "proposal shape does not match the oracle targets".into(),
            ));
        }
        let d = self.distance(points);
        let improved = d <= self.threshold || self.previous.is_none_or(|p| d < p);
        self.previous = Some(d);
        if improved {
            self.failures = 0;
            return Ok(Feedback::Guiding(1));
        }
        self.failures += 1;
        if self.failures >= self.patience {
            self.failures = 0;
            self.previous = None;
            return Ok(Feedback::Zone);
        }
        Ok(Feedback::Guiding(-1))
    }
}
