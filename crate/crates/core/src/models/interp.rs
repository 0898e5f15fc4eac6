use super::ClassPosterior;
use crate::error::{Error, Result};

/// Posterior-weighted blend `Σ pᵢ · presetᵢ`, presets given in the
/// posterior's label order.
pub fn interpolate_presets(posterior: &ClassPosterior, presets: &[Vec<f64>]) -> Result<Vec<f64>> {
    if presets.len() != posterior.probabilities.len() {
        return Err(Error::Schema(format!(
            "{} presets for {} classes",
            presets.len(),
            posterior.probabilities.len()
        )));
    }
    let Some(first) = presets.first() else {
        return Err(Error::EmptyInput("no presets to interpolate".into()));
    };
    let d = first.len();
    if presets.iter().any(|p| p.len() != d) {
        return Err(Error::Schema("presets have mixed dimensions".into()));
    }
    if posterior.probabilities.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Data("posterior has negative or NaN weights".into()));
    }
    let mut out = vec![0.0; d];
    for (p, preset) in posterior.probabilities.iter().zip(presets) {
        for (o, v) in out.iter_mut().zip(preset) {
            *o += p * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(p: &[f64]) -> ClassPosterior {
        ClassPosterior {
            labels: (0..p.len()).map(|i| format!("c{i}")).collect(),
            probabilities: p.to_vec(),
        }
    }

    fn presets() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 10.0],
            vec![1.0, 20.0],
            vec![2.0, 40.0],
            vec![5.0, 30.0],
        ]
    }

    #[test]
    fn one_hot_selects() {
        assert_eq!(
            interpolate_presets(&post(&[1.0, 0.0, 0.0, 0.0]), &presets()).unwrap(),
            vec![0.0, 10.0]
        );
    }

    #[test]
    fn uniform_is_mean() {
        assert_eq!(
            interpolate_presets(&post(&[0.25; 4]), &presets()).unwrap(),
            vec![2.0, 25.0]
        );
    }

    #[test]
    fn half_half_is_midpoint() {
        assert_eq!(
            interpolate_presets(&post(&[0.5, 0.5, 0.0, 0.0]), &presets()).unwrap(),
            vec![0.5, 15.0]
        );
    }

    #[test]
    fn count_mismatch() {
        assert!(matches!(
            interpolate_presets(&post(&[1.0]), &presets()),
            Err(Error::Schema(_))
        ));
    }
}
