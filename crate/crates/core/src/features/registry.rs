//! Named descriptors selectable from configuration, each computed over a
//! window of frames of one stream kind.

use serde::{Deserialize, Serialize};

use super::{
    bayes_amplitude, bounding_box, channel_samples, contraction_index, convex_hull_volume,
    fluidity_index, mav, pqom, quantity_of_motion, rms, tkeo, zcr, BandSpec, BayesParams,
    FeatureVector, Window, DEFAULT_FI_EPSILON,
};
use crate::error::{Error, Result};
use crate::ingest::{EmgFrame, FrameStream, Frames, ImuFrame, MarkerFrame, StreamKind, Vec3};

/// Every selectable feature with the stream kind it reads.
pub const FEATURES: &[(&str, StreamKind)] = &[
    ("qom", StreamKind::Marker),
    ("ci", StreamKind::Marker),
    ("bbox", StreamKind::Marker),
    ("hull", StreamKind::Marker),
    ("fi", StreamKind::Marker),
    ("pqom", StreamKind::Marker),
    ("position", StreamKind::Marker),
    ("orientation", StreamKind::Imu),
    ("accel", StreamKind::Imu),
    ("gyro", StreamKind::Imu),
    ("mav", StreamKind::Emg),
    ("rms", StreamKind::Emg),
    ("zcr", StreamKind::Emg),
    ("tkeo", StreamKind::Emg),
    ("bayes", StreamKind::Emg),
];

pub fn feature_names() -> Vec<&'static str> {
    FEATURES.iter().map(|(n, _)| *n).collect()
}

/// Which features to compute and over what windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub features: Vec<String>,
    /// Window length in frames.
    pub window: usize,
    /// Hop between window starts in frames.
    pub hop: usize,
    /// Marker used by single-marker features (fi, pqom, position).
    pub marker: usize,
    pub fi_epsilon: f64,
    pub bands: BandSpec,
    pub bayes: BayesParams,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            features: vec!["qom".into(), "ci".into()],
            window: 50,
            hop: 25,
            marker: 0,
            fi_epsilon: DEFAULT_FI_EPSILON,
            bands: BandSpec {
                tempo_bpm: 120.0,
                subdivisions: vec![1.0, 0.5, 0.25],
                bandwidth_hz: 1.0,
            },
            bayes: BayesParams::default(),
        }
    }
}

impl FeatureConfig {
    pub fn with_features(names: &[&str]) -> Self {
        FeatureConfig {
            features: names.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    /// Checks names, window and hop. All features must read the same stream
    /// kind, which is returned.
    pub fn validate(&self) -> Result<StreamKind> {
        if self.features.is_empty() {
            return Err(Error::param("no features selected"));
        }
        if self.window == 0 || self.hop == 0 {
            return Err(Error::param("window and hop must be at least 1 frame"));
        }
        let mut kind = None;
        for name in &self.features {
            let Some((_, k)) = FEATURES.iter().find(|(n, _)| n == name) else {
                return Err(Error::param(format!(
                    "unknown feature `{name}`; valid features: {}",
                    feature_names().join(", ")
                )));
            };
            match kind {
                None => kind = Some(*k),
                Some(prev) if prev != *k => {
                    return Err(Error::param(format!(
                        "feature `{name}` reads {k} frames, others read {prev}"
                    )))
                }
                _ => {}
            }
        }
        if self
            .features
            .iter()
            .enumerate()
            .any(|(i, n)| self.features[..i].contains(n))
        {
            return Err(Error::param("feature list has duplicates"));
        }
        Ok(kind.expect("non-empty list"))
    }
}

fn mean3(values: impl Iterator<Item = Vec3>) -> Vec3 {
    let mut acc = [0.0; 3];
    let mut n = 0usize;
    for v in values {
        (0..3).for_each(|k| acc[k] += v[k]);
        n += 1;
    }
    acc.map(|a| a / n.max(1) as f64)
}

fn mean_of(frames: &[MarkerFrame], f: impl Fn(&MarkerFrame) -> Result<f64>) -> Result<f64> {
    let mut sum = 0.0;
    for fr in frames {
        sum += f(fr)?;
    }
    Ok(sum / frames.len() as f64)
}

fn marker_feature(
    name: &str,
    frames: &[MarkerFrame],
    rate: f64,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    let w = Window::new(frames, rate);
    match name {
        "qom" => FeatureVector::new(vec!["qom".into()], vec![quantity_of_motion(&w)?]),
        "ci" => FeatureVector::new(vec!["ci".into()], vec![mean_of(frames, contraction_index)?]),
        "hull" => FeatureVector::new(
            vec!["hull".into()],
            vec![mean_of(frames, convex_hull_volume)?],
        ),
        "fi" => FeatureVector::new(
            vec!["fi".into()],
            vec![fluidity_index(&w, cfg.marker, cfg.fi_epsilon)?],
        ),
        "pqom" => pqom(&w, &cfg.bands, cfg.marker),
        "bbox" => {
            let boxes = frames
                .iter()
                .map(bounding_box)
                .collect::<Result<Vec<_>>>()?;
            let m = mean3(boxes.into_iter());
            FeatureVector::new(
                vec!["bbox_w".into(), "bbox_h".into(), "bbox_d".into()],
                m.to_vec(),
            )
        }
        "position" => {
            let pts = frames
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    f.markers
                        .get(cfg.marker)
                        .map(|m| m.position)
                        .ok_or_else(|| {
                            Error::param(format!("frame {i} has no marker {}", cfg.marker))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            FeatureVector::new(
                vec!["pos_x".into(), "pos_y".into(), "pos_z".into()],
                mean3(pts.into_iter()).to_vec(),
            )
        }
        _ => unreachable!("validated feature name"),
    }
}

fn imu_feature(name: &str, frames: &[ImuFrame]) -> Result<FeatureVector> {
    match name {
        "orientation" => {
            let q = frames.last().expect("non-empty window").quat.to_array();
            FeatureVector::new(
                ["q_w", "q_x", "q_y", "q_z"].map(String::from).to_vec(),
                q.to_vec(),
            )
        }
        "accel" => FeatureVector::new(
            ["acc_x", "acc_y", "acc_z"].map(String::from).to_vec(),
            mean3(frames.iter().map(|f| f.accel)).to_vec(),
        ),
        "gyro" => FeatureVector::new(
            ["gyro_x", "gyro_y", "gyro_z"].map(String::from).to_vec(),
            mean3(frames.iter().map(|f| f.gyro)).to_vec(),
        ),
        _ => unreachable!("validated feature name"),
    }
}

fn emg_feature(name: &str, frames: &[EmgFrame], cfg: &FeatureConfig) -> Result<FeatureVector> {
    let channels = frames[0].channels.len();
    let mut values = Vec::with_capacity(channels);
    for c in 0..channels {
        let x = channel_samples(frames, c)?;
        values.push(match name {
            "mav" => mav(&x)?,
            "rms" => rms(&x)?,
            "zcr" => zcr(&x)? as f64,
            "tkeo" => {
                let psi = tkeo(&x)?;
                psi.iter().sum::<f64>() / psi.len() as f64
            }
            "bayes" => *bayes_amplitude(&x, cfg.bayes)?
                .last()
                .expect("non-empty window"),
            _ => unreachable!("validated feature name"),
        });
    }
    FeatureVector::indexed(name, values)
}

/// Features of one window: the whole of `stream`.
pub fn extract_features(cfg: &FeatureConfig, stream: &FrameStream) -> Result<FeatureVector> {
    let kind = cfg.validate()?;
    if stream.kind() != kind {
        return Err(Error::Schema(format!(
            "features need {kind} frames, got {}",
            stream.kind()
        )));
    }
    if stream.is_empty() {
        return Err(Error::EmptyInput("feature window has no frames".into()));
    }
    let mut out: Option<FeatureVector> = None;
    for name in &cfg.features {
        let fv = match &stream.frames {
            Frames::Marker(f) => marker_feature(name, f, stream.rate, cfg)?,
            Frames::Imu(f) => imu_feature(name, f)?,
            Frames::Emg(f) => emg_feature(name, f, cfg)?,
        };
        out = Some(match out {
            None => fv,
            Some(acc) => acc.concat(fv)?,
        });
    }
    Ok(out.expect("at least one feature"))
}

/// Features over sliding windows of `cfg.window` frames every `cfg.hop`
/// frames, each paired with its first frame's time.
pub fn extract_windows(
    cfg: &FeatureConfig,
    stream: &FrameStream,
) -> Result<Vec<(f64, FeatureVector)>> {
    cfg.validate()?;
    if stream.is_empty() {
        return Err(Error::EmptyInput("stream has no frames".into()));
    }
    if stream.len() < cfg.window {
        return Err(Error::insufficient(format!(
            "stream has {} frames, window needs {}",
            stream.len(),
            cfg.window
        )));
    }
    let times = stream.times();
    (0..=stream.len() - cfg.window)
        .step_by(cfg.hop)
        .map(|s| {
            Ok((
                times[s],
                extract_features(cfg, &stream.slice(s..s + cfg.window))?,
            ))
        })
        .collect()
}
