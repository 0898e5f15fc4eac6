use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::kinematics::{gradient, marker_track};
use super::{FeatureVector, Window};
use crate::error::{Error, Result};
use crate::ingest::MarkerFrame;

/// Rhythmic filter bank layout.
///
/// Subdivisions are note durations in beats (quarter note = 1, eighth = 0.5,
/// sixteenth = 0.25), so each band is centred on `tempo_bpm / 60 / ratio` Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub tempo_bpm: f64,
    pub subdivisions: Vec<f64>,
    pub bandwidth_hz: f64,
}

impl BandSpec {
    pub fn center_frequencies(&self) -> Vec<f64> {
        self.subdivisions
            .iter()
            .map(|r| self.tempo_bpm / 60.0 / r)
            .collect()
    }

    fn validate(&self, rate: f64) -> Result<()> {
        if !(self.tempo_bpm > 0.0 && self.bandwidth_hz > 0.0) || self.subdivisions.is_empty() {
            return Err(Error::param(
                "band spec needs positive tempo, bandwidth and ≥1 subdivision",
            ));
        }
        if self.subdivisions.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::param("subdivision ratios must be positive"));
        }
        let nyquist = rate / 2.0;
        for f in self.center_frequencies() {
            if f >= nyquist {
                return Err(Error::param(format!(
                    "band at {f} Hz is not below Nyquist ({nyquist} Hz)"
                )));
            }
        }
        Ok(())
    }
}

/// Constant-peak-gain band-pass biquad (direct form I).
struct BandPass {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl BandPass {
    fn new(center_hz: f64, bandwidth_hz: f64, rate: f64) -> Self {
        let w0 = 2.0 * PI * center_hz / rate;
        let q = center_hz / bandwidth_hz;
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        BandPass {
            b0: alpha / a0,
            b2: -alpha / a0,
            a1: -2.0 * w0.cos() / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    fn mean_square(&self, input: impl Iterator<Item = f64>) -> f64 {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        let mut acc = 0.0;
        let mut n = 0usize;
        for x in input {
            let y = self.b0 * x + self.b2 * x2 - self.a1 * y1 - self.a2 * y2;
            x2 = x1;
            x1 = x;
            y2 = y1;
            y1 = y;
            acc += y * y;
            n += 1;
        }
        acc / n.max(1) as f64
    }
}

/// Periodic quantity of motion: energy of one marker's velocity in each
/// rhythmic band.
///
/// Each velocity component runs through a band-pass section centred on the
/// subdivision frequency; a band's energy is the mean square of the filtered
/// output summed over the three axes. Features are named `pqom_<ratio>`.
pub fn pqom(
    window: &Window<'_, MarkerFrame>,
    bands: &BandSpec,
    marker_index: usize,
) -> Result<FeatureVector> {
    window.require(3, "PQoM")?;
    bands.validate(window.rate)?;
    let centers = bands.center_frequencies();
    let lowest = centers.iter().cloned().fold(f64::INFINITY, f64::min);
    let duration = window.len() as f64 / window.rate;
    if duration < 2.0 / lowest {
        return Err(Error::insufficient(format!(
            "PQoM window of {duration:.3} s is shorter than two periods of the {lowest} Hz band"
        )));
    }
    let velocity = gradient(&marker_track(window, marker_index)?, 1.0 / window.rate);
    let values = centers
        .iter()
        .map(|&f| {
            let filter = BandPass::new(f, bands.bandwidth_hz, window.rate);
            (0..3)
                .map(|k| filter.mean_square(velocity.iter().map(|v| v[k])))
                .sum()
        })
        .collect();
    let names = bands
        .subdivisions
        .iter()
        .map(|r| format!("pqom_{r}"))
        .collect();
    FeatureVector::new(names, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Marker;

    fn sine_track(amplitude: f64, freq: f64, rate: f64, seconds: f64) -> Vec<MarkerFrame> {
        let n = (seconds * rate) as usize;
        (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                MarkerFrame {
                    t,
                    markers: vec![Marker {
                        label: "m".into(),
                        position: [amplitude * (2.0 * PI * freq * t).sin(), 0.0, 0.0],
                        mass: 1.0,
                    }],
                }
            })
            .collect()
    }

    fn bands() -> BandSpec {
        BandSpec {
            tempo_bpm: 120.0,
            subdivisions: vec![1.0, 0.5, 0.25],
            bandwidth_hz: 1.0,
        }
    }

    #[test]
    fn centers() {
        assert_eq!(bands().center_frequencies(), vec![2.0, 4.0, 8.0]);
    }

    #[test]
    fn still_marker_has_no_energy() {
        let frames = sine_track(0.0, 2.0, 100.0, 4.0);
        let v = pqom(&Window::new(&frames, 100.0), &bands(), 0).unwrap();
        assert!(v.values().iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn energy_is_quadratic_in_amplitude() {
        let a = sine_track(0.1, 2.0, 100.0, 4.0);
        let b = sine_track(0.2, 2.0, 100.0, 4.0);
        let ea = pqom(&Window::new(&a, 100.0), &bands(), 0).unwrap();
        let eb = pqom(&Window::new(&b, 100.0), &bands(), 0).unwrap();
        for (x, y) in ea.values().iter().zip(eb.values()) {
            assert!((y / x - 4.0).abs() < 0.04, "{x} {y}");
        }
    }

    #[test]
    fn band_above_nyquist_rejected() {
        let frames = sine_track(0.1, 2.0, 10.0, 4.0);
        assert!(matches!(
            pqom(&Window::new(&frames, 10.0), &bands(), 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn short_window_rejected() {
        let frames = sine_track(0.1, 2.0, 100.0, 0.5);
        assert!(matches!(
            pqom(&Window::new(&frames, 100.0), &bands(), 0),
            Err(Error::InsufficientData(_))
        ));
    }
}
