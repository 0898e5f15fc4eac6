//! Sensor data ingestion.
//!
//! Optical motion capture delivers labelled marker positions, inertial units
//! deliver acceleration, rotational velocity and orientation, and EMG delivers
//! raw noise-like muscle activity. Each arrives here as a [`FrameStream`] so the
//! feature extractors only ever see one representation.

mod csv;
mod jsonl;
mod resample;
mod synth;
mod wav;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::csv::{parse_dataset_csv, parse_mocap_csv, write_mocap_csv, Dataset};
pub(crate) use self::jsonl::parse_frame_line;
pub use self::jsonl::{parse_frames_jsonl, write_frames_jsonl};
pub use self::resample::resample_stream;
pub use self::synth::{gen_synthetic_gesture, GestureShape, GestureSpec};
pub use self::wav::{read_wav, write_wav};

/// Cartesian position or vector, meters unless stated otherwise.
pub type Vec3 = [f64; 3];

/// Default marker mass (kg) when the capture format carries none.
pub const DEFAULT_MARKER_MASS: f64 = 1.0;

/// Tolerance on `|q| = 1` for orientation quaternions.
pub const QUAT_NORM_TOLERANCE: f64 = 1e-6;

/// Orientation quaternion, scalar first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for Quat {
    fn from([w, x, y, z]: [f64; 4]) -> Self {
        Quat { w, x, y, z }
    }
}

impl From<Quat> for [f64; 4] {
    fn from(q: Quat) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Quat {
        let n = norm(axis);
        let (s, c) = (angle / 2.0).sin_cos();
        Quat {
            w: c,
            x: s * axis[0] / n,
            y: s * axis[1] / n,
            z: s * axis[2] / n,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        self.into()
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Quat {
        let n = self.norm();
        Quat {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }

    pub fn dot(&self, other: &Quat) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Rotates `v` by this (unit) quaternion.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        // v' = v + 2w(u × v) + 2 u × (u × v), u = vector part
        let u = [self.x, self.y, self.z];
        let uv = cross(u, v);
        let uuv = cross(u, uv);
        [
            v[0] + 2.0 * (self.w * uv[0] + uuv[0]),
            v[1] + 2.0 * (self.w * uv[1] + uuv[1]),
            v[2] + 2.0 * (self.w * uv[2] + uuv[2]),
        ]
    }
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn lerp(a: f64, b: f64, alpha: f64) -> f64 {
    a + (b - a) * alpha
}

fn lerp3(a: Vec3, b: Vec3, alpha: f64) -> Vec3 {
    [
        lerp(a[0], b[0], alpha),
        lerp(a[1], b[1], alpha),
        lerp(a[2], b[2], alpha),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub label: String,
    pub position: Vec3,
    pub mass: f64,
}

/// Positions of labelled optical markers at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerFrame {
    pub t: f64,
    pub markers: Vec<Marker>,
}

impl MarkerFrame {
    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.markers.iter().map(|m| m.position)
    }
}

/// One inertial sample: acceleration (m/s²), rotational velocity (rad/s),
/// normalized magnetometer reading and a unit orientation quaternion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImuFrame {
    pub t: f64,
    pub accel: Vec3,
    pub gyro: Vec3,
    pub mag: Vec3,
    pub quat: Quat,
}

/// Raw EMG amplitudes, one per electrode channel, in [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmgFrame {
    pub t: f64,
    pub channels: Vec<f64>,
}

/// Decoded PCM audio, one float array per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub sample_rate: u32,
    pub channels: Vec<Vec<f32>>,
}

impl AudioBuffer {
    pub fn mono(sample_rate: u32, samples: Vec<f32>) -> Self {
        AudioBuffer {
            sample_rate,
            channels: vec![samples],
        }
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    /// Channel average.
    pub fn to_mono(&self) -> Vec<f32> {
        match self.channels.len() {
            0 => Vec::new(),
            1 => self.channels[0].clone(),
            n => (0..self.len())
                .map(|i| self.channels.iter().map(|c| c[i]).sum::<f32>() / n as f32)
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::param("sample rate must be positive"));
        }
        let len = self.len();
        if self.channels.iter().any(|c| c.len() != len) {
            return Err(Error::Schema("audio channels differ in length".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamKind {
    Marker,
    Imu,
    Emg,
}

impl std::fmt::Display for StreamKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StreamKind::Marker => "marker",
            StreamKind::Imu => "imu",
            StreamKind::Emg => "emg",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Frames {
    Marker(Vec<MarkerFrame>),
    Imu(Vec<ImuFrame>),
    Emg(Vec<EmgFrame>),
}

/// A time-ordered sequence of frames of one kind.
///
/// `rate` is the nominal sample rate in Hz, estimated from the timestamps for
/// parsed streams and exact for generated or resampled ones. It is 0 for
/// single-frame streams.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStream {
    pub rate: f64,
    pub frames: Frames,
}

impl FrameStream {
    /// Builds a stream, checking timestamp order and per-kind invariants.
    pub fn new(frames: Frames) -> Result<Self> {
        let stream = FrameStream { rate: 0.0, frames };
        stream.validate()?;
        let times = stream.times();
        let rate = estimate_rate(&times);
        Ok(FrameStream { rate, ..stream })
    }

    pub fn with_rate(frames: Frames, rate: f64) -> Result<Self> {
        let stream = FrameStream { rate, frames };
        stream.validate()?;
        Ok(stream)
    }

    pub fn kind(&self) -> StreamKind {
        match self.frames {
            Frames::Marker(_) => StreamKind::Marker,
            Frames::Imu(_) => StreamKind::Imu,
            Frames::Emg(_) => StreamKind::Emg,
        }
    }

    pub fn len(&self) -> usize {
        match &self.frames {
            Frames::Marker(f) => f.len(),
            Frames::Imu(f) => f.len(),
            Frames::Emg(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn times(&self) -> Vec<f64> {
        match &self.frames {
            Frames::Marker(f) => f.iter().map(|x| x.t).collect(),
            Frames::Imu(f) => f.iter().map(|x| x.t).collect(),
            Frames::Emg(f) => f.iter().map(|x| x.t).collect(),
        }
    }

    /// Sub-stream over `range` (frame indices), keeping the nominal rate.
    pub fn slice(&self, range: std::ops::Range<usize>) -> FrameStream {
        let frames = match &self.frames {
            Frames::Marker(f) => Frames::Marker(f[range].to_vec()),
            Frames::Imu(f) => Frames::Imu(f[range].to_vec()),
            Frames::Emg(f) => Frames::Emg(f[range].to_vec()),
        };
        FrameStream {
            rate: self.rate,
            frames,
        }
    }

    pub fn as_markers(&self) -> Option<&[MarkerFrame]> {
        match &self.frames {
            Frames::Marker(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_imu(&self) -> Option<&[ImuFrame]> {
        match &self.frames {
            Frames::Imu(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_emg(&self) -> Option<&[EmgFrame]> {
        match &self.frames {
            Frames::Emg(f) => Some(f),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_times(&self.times())?;
        match &self.frames {
            Frames::Marker(frames) => validate_markers(frames),
            Frames::Imu(frames) => frames
                .iter()
                .enumerate()
                .try_for_each(|(i, f)| validate_imu(i, f)),
            Frames::Emg(frames) => validate_emg(frames),
        }
    }
}

fn estimate_rate(times: &[f64]) -> f64 {
    match times {
        [first, .., last] if last > first => (times.len() - 1) as f64 / (last - first),
        _ => 0.0,
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    for (i, t) in times.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::Data(format!("frame {i}: non-finite timestamp")));
        }
        if i > 0 && *t <= times[i - 1] {
            return Err(Error::Data(format!(
                "frame {i}: timestamp {t} does not increase (previous {})",
                times[i - 1]
            )));
        }
    }
    Ok(())
}

fn validate_markers(frames: &[MarkerFrame]) -> Result<()> {
    let Some(first) = frames.first() else {
        return Ok(());
    };
    let labels: Vec<&str> = first.markers.iter().map(|m| m.label.as_str()).collect();
    let mut sorted = labels.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Schema(
            "marker labels must be unique within a frame".into(),
        ));
    }
    for (i, frame) in frames.iter().enumerate() {
        if frame.markers.len() != labels.len()
            || frame
                .markers
                .iter()
                .zip(&labels)
                .any(|(m, l)| m.label != *l)
        {
            return Err(Error::Schema(format!(
                "frame {i}: marker set differs from first frame"
            )));
        }
        for m in &frame.markers {
            if !m.position.iter().all(|v| v.is_finite()) {
                return Err(Error::Data(format!(
                    "frame {i}: marker {} has non-finite position",
                    m.label
                )));
            }
            if !(m.mass.is_finite() && m.mass >= 0.0) {
                return Err(Error::Data(format!(
                    "frame {i}: marker {} has invalid mass {}",
                    m.label, m.mass
                )));
            }
        }
    }
    Ok(())
}

fn validate_imu(i: usize, f: &ImuFrame) -> Result<()> {
    let finite = f
        .accel
        .iter()
        .chain(&f.gyro)
        .chain(&f.mag)
        .all(|v| v.is_finite())
        && f.quat.is_finite();
    if !finite {
        return Err(Error::Data(format!("frame {i}: non-finite IMU value")));
    }
    if (f.quat.norm() - 1.0).abs() > QUAT_NORM_TOLERANCE {
        return Err(Error::Data(format!(
            "frame {i}: quaternion norm {} is not 1",
            f.quat.norm()
        )));
    }
    Ok(())
}

fn validate_emg(frames: &[EmgFrame]) -> Result<()> {
    let Some(first) = frames.first() else {
        return Ok(());
    };
    let n = first.channels.len();
    for (i, f) in frames.iter().enumerate() {
        if f.channels.len() != n {
            return Err(Error::Schema(format!(
                "frame {i}: {} EMG channels, stream has {n}",
                f.channels.len()
            )));
        }
        if !f.channels.iter().all(|v| v.is_finite()) {
            return Err(Error::Data(format!("frame {i}: non-finite EMG value")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quat_rotation_about_z() {
        let q = Quat::from_axis_angle([0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2);
        let v = q.rotate([1.0, 0.0, 0.0]);
        assert!((v[0]).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12 && v[2].abs() < 1e-12);
    }

    #[test]
    fn rejects_non_monotone_times() {
        let frames = vec![
            EmgFrame {
                t: 0.0,
                channels: vec![0.0],
            },
            EmgFrame {
                t: 0.0,
                channels: vec![0.0],
            },
        ];
        assert!(matches!(
            FrameStream::new(Frames::Emg(frames)),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn rejects_channel_count_change() {
        let frames = vec![
            EmgFrame {
                t: 0.0,
                channels: vec![0.0],
            },
            EmgFrame {
                t: 1.0,
                channels: vec![0.0, 1.0],
            },
        ];
        assert!(matches!(
            FrameStream::new(Frames::Emg(frames)),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn estimated_rate() {
        let frames = (0..11)
            .map(|i| EmgFrame {
                t: i as f64 * 0.01,
                channels: vec![0.0],
            })
            .collect();
        let s = FrameStream::new(Frames::Emg(frames)).unwrap();
        assert!((s.rate - 100.0).abs() < 1e-9);
    }
}
