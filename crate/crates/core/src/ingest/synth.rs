use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{FrameStream, Frames, Marker, MarkerFrame, DEFAULT_MARKER_MASS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GestureShape {
    /// `radius·(cos 2πft, sin 2πft, 0)`
    Circle,
    /// `(radius·sin 2πft, 0, 0)`
    Sine,
    /// Marker at the origin.
    Still,
}

/// Parameters of a deterministic single-marker test trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureSpec {
    pub shape: GestureShape,
    pub rate_hz: f64,
    pub duration_s: f64,
    pub freq_hz: f64,
    pub radius_m: f64,
}

/// Generates `round(duration·rate) + 1` frames at `t = i / rate` for one
/// unit-mass marker labelled `m0`.
pub fn gen_synthetic_gesture(spec: &GestureSpec) -> Result<FrameStream> {
    if !(spec.rate_hz > 0.0 && spec.duration_s >= 0.0 && spec.radius_m.is_finite()) {
        return Err(Error::param(
            "rate must be positive and duration non-negative",
        ));
    }
    if spec.shape != GestureShape::Still && spec.rate_hz <= 2.0 * spec.freq_hz {
        return Err(Error::param(format!(
            "rate {} Hz aliases a {} Hz trajectory (needs rate > 2·freq)",
            spec.rate_hz, spec.freq_hz
        )));
    }
    let n = (spec.duration_s * spec.rate_hz).round() as usize + 1;
    let frames = (0..n)
        .map(|i| {
            let t = i as f64 / spec.rate_hz;
            let phase = TAU * spec.freq_hz * t;
            let position = match spec.shape {
                GestureShape::Circle => [
                    spec.radius_m * phase.cos(),
                    spec.radius_m * phase.sin(),
                    0.0,
                ],
                GestureShape::Sine => [spec.radius_m * phase.sin(), 0.0, 0.0],
                GestureShape::Still => [0.0; 3],
            };
            MarkerFrame {
                t,
                markers: vec![Marker {
                    label: "m0".into(),
                    position,
                    mass: DEFAULT_MARKER_MASS,
                }],
            }
        })
        .collect();
    FrameStream::with_rate(Frames::Marker(frames), spec.rate_hz)
}
