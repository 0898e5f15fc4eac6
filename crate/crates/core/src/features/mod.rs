//! Motion and EMG descriptors computed over windows of frames.

mod emg;
mod geometry;
mod gesture;
mod kinematics;
mod pqom;
mod registry;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use emg::{bayes_amplitude, channel_samples, mav, rms, tkeo, zcr, BayesFilter, BayesParams};
pub use geometry::{bounding_box, contraction_index, convex_hull_volume, imu_contraction_estimate};
pub use gesture::{assemble_gesture_vector, GESTURE_VECTOR_LEN};
pub use kinematics::{derivative, fluidity_index, quantity_of_motion, DEFAULT_FI_EPSILON};
pub use pqom::{pqom, BandSpec};
pub use registry::{extract_features, extract_windows, feature_names, FeatureConfig, FEATURES};

/// Contiguous frames sampled at a uniform `rate` (Hz).
#[derive(Debug, Clone, Copy)]
pub struct Window<'a, F> {
    pub frames: &'a [F],
    pub rate: f64,
}

impl<'a, F> Window<'a, F> {
    pub fn new(frames: &'a [F], rate: f64) -> Self {
        Window { frames, rate }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub(crate) fn require(&self, min: usize, what: &str) -> Result<()> {
        if self.frames.len() < min {
            return Err(Error::insufficient(format!(
                "{what} needs at least {min} frames, window has {}",
                self.frames.len()
            )));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::param(format!(
                "{what}: window rate must be positive"
            )));
        }
        Ok(())
    }
}

/// Named, ordered gesture features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Schema(format!(
                "{} feature names for {} values",
                names.len(),
                values.len()
            )));
        }
        let mut sorted: Vec<&String> = names.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Schema(format!("duplicate feature name `{}`", w[0])));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("feature `{}` is not finite", names[i])));
        }
        Ok(FeatureVector { names, values })
    }

    /// Features named `prefix_0`, `prefix_1`, ...
    pub fn indexed(prefix: &str, values: Vec<f64>) -> Result<Self> {
        let names = (0..values.len()).map(|i| format!("{prefix}_{i}")).collect();
        FeatureVector::new(names, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    /// Appends `other`, rejecting name collisions.
    pub fn concat(mut self, other: FeatureVector) -> Result<Self> {
        self.names.extend(other.names);
        self.values.extend(other.values);
        FeatureVector::new(self.names, self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_nan() {
        assert!(FeatureVector::new(vec!["a".into(), "a".into()], vec![1.0, 2.0]).is_err());
        assert!(FeatureVector::new(vec!["a".into()], vec![f64::NAN]).is_err());
        assert!(FeatureVector::new(vec!["a".into()], vec![]).is_err());
    }

    #[test]
    fn concat_and_lookup() {
        let a = FeatureVector::indexed("x", vec![1.0, 2.0]).unwrap();
        let b = FeatureVector::new(vec!["y".into()], vec![3.0]).unwrap();
        let c = a.concat(b).unwrap();
        assert_eq!(c.names(), ["x_0", "x_1", "y"]);
        assert_eq!(c.get("y"), Some(3.0));
    }
}
